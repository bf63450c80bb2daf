//! Minimal pulse-sequence engine producing Poisson readout counts.

use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed_indexed, seeded_rng};
use crate::scalar::{to_f64, Real};
use crate::spin::{odmr_contrast_at, rabi_point, SpinParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Laser,
    Microwave,
    Wait,
    Readout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    pub kind: SegmentKind,
    pub duration_ns: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mw_frequency_mhz: Option<T>,
}

impl<T: Real> Segment<T> {
    pub fn new(kind: SegmentKind, duration_ns: T) -> Self {
        Self { kind, duration_ns, mw_frequency_mhz: None }
    }

    pub fn microwave(duration_ns: T, mw_frequency_mhz: T) -> Self {
        Self {
            kind: SegmentKind::Microwave,
            duration_ns,
            mw_frequency_mhz: Some(mw_frequency_mhz),
        }
    }
}

/// One repetition of the experiment; serializes as a JSON list of segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PulseSequence<T> {
    pub segments: Vec<Segment<T>>,
}

impl<T: Real> PulseSequence<T> {
    /// Laser init, microwave drive, short wait, readout.
    pub fn rabi(init_ns: T, mw_ns: T, mw_frequency_mhz: T, wait_ns: T, readout_ns: T) -> Self {
        Self {
            segments: vec![
                Segment::new(SegmentKind::Laser, init_ns),
                Segment::microwave(mw_ns, mw_frequency_mhz),
                Segment::new(SegmentKind::Wait, wait_ns),
                Segment::new(SegmentKind::Readout, readout_ns),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.iter().any(|s| !(s.duration_ns > T::zero())) {
            return Err(Error::validation("segment durations must be positive"));
        }
        let readouts = self.segments.iter().filter(|s| s.kind == SegmentKind::Readout).count();
        if readouts != 1 {
            return Err(Error::validation(format!(
                "sequence needs exactly one readout segment, found {readouts}"
            )));
        }
        if self
            .segments
            .iter()
            .any(|s| s.kind == SegmentKind::Microwave && s.mw_frequency_mhz.is_none())
        {
            return Err(Error::validation("microwave segment without a frequency"));
        }
        Ok(())
    }

    pub fn readout_ns(&self) -> T {
        self.segments
            .iter()
            .find(|s| s.kind == SegmentKind::Readout)
            .map(|s| s.duration_ns)
            .unwrap_or_else(T::zero)
    }

    fn microwave(&self) -> Option<&Segment<T>> {
        self.segments.iter().find(|s| s.kind == SegmentKind::Microwave)
    }

    pub fn total_ns(&self) -> T {
        self.segments.iter().map(|s| s.duration_ns).fold(T::zero(), |a, b| a + b)
    }
}

/// Which microwave parameter is stepped across sweep points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep<T> {
    MwDuration(Vec<T>),
    MwFrequency(Vec<T>),
}

impl<T: Real> Sweep<T> {
    pub fn values(&self) -> &[T] {
        match self {
            Sweep::MwDuration(v) | Sweep::MwFrequency(v) => v,
        }
    }
}

/// Photon-budget and drive parameters for count generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel<T> {
    /// Bright-state detection rate during readout, counts per ns.
    pub bright_rate_per_ns: T,
    pub rabi_frequency_mhz: T,
    pub decay_time_ns: T,
    pub photon_fraction: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCounts<T> {
    pub sweep_values: Vec<T>,
    pub expected: Vec<T>,
    pub counts: Vec<u64>,
    /// Expected counts for an undriven repetition set (normalization reference).
    pub bright_reference: T,
}

impl<T: Real> SweepCounts<T> {
    /// Counts divided by the bright reference.
    pub fn normalized(&self) -> Vec<T> {
        self.counts
            .iter()
            .map(|&c| T::from_u64(c).expect("count fits scalar") / self.bright_reference)
            .collect()
    }
}

/// Generates summed readout counts for each sweep point. Each point draws from
/// its own `(seed, index)` stream, so points are evaluated in parallel without
/// affecting the result.
pub fn simulate_pulse_sequence<T: Real>(
    seq: &PulseSequence<T>,
    spin: &SpinParams<T>,
    readout: &ReadoutModel<T>,
    sweep: &Sweep<T>,
    repetitions: u64,
    seed: u64,
) -> Result<SweepCounts<T>> {
    seq.validate()?;
    spin.validate()?;
    if repetitions == 0 {
        return Err(Error::validation("repetitions must be positive"));
    }
    if !(readout.bright_rate_per_ns > T::zero()) {
        return Err(Error::validation("bright rate must be positive"));
    }
    let mw = *seq
        .microwave()
        .ok_or_else(|| Error::validation("sequence has no microwave segment to sweep"))?;
    if sweep.values().iter().any(|v| !(*v >= T::zero())) {
        return Err(Error::validation("sweep values must be nonnegative"));
    }
    let reps = T::from_u64(repetitions).expect("repetitions fit scalar");
    let bright = readout.bright_rate_per_ns * seq.readout_ns() * reps;

    let signals = sweep
        .values()
        .iter()
        .map(|&v| {
            let (dur, freq) = match sweep {
                Sweep::MwDuration(_) => (v, mw.mw_frequency_mhz.expect("validated")),
                Sweep::MwFrequency(_) => (mw.duration_ns, v),
            };
            let c = odmr_contrast_at(spin, readout.photon_fraction, freq)?;
            if !(readout.rabi_frequency_mhz > T::zero()) || !(readout.decay_time_ns > T::zero()) {
                return Err(Error::validation("Rabi frequency and decay time must be positive"));
            }
            Ok(rabi_point(readout.rabi_frequency_mhz, c, readout.decay_time_ns, dur))
        })
        .collect::<Result<Vec<T>>>()?;
    let expected: Vec<T> = signals.iter().map(|&s| bright * s).collect();

    let counts = expected
        .par_iter()
        .enumerate()
        .map(|(i, &mu)| {
            let mu = to_f64(mu);
            if mu <= 0.0 {
                return Ok(0);
            }
            let mut rng = seeded_rng(derive_seed_indexed(seed, "pulse-sequence", i as u64));
            let pois = Poisson::new(mu).map_err(|e| Error::validation(e.to_string()))?;
            Ok(pois.sample(&mut rng) as u64)
        })
        .collect::<Result<Vec<u64>>>()?;

    Ok(SweepCounts {
        sweep_values: sweep.values().to_vec(),
        expected,
        counts,
        bright_reference: bright,
    })
}
