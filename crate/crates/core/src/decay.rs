//! Synthetic time-resolved photoluminescence: single-exponential decay folded
//! into one laser repetition period, plus a flat background.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::emitter::{lifetime_on, EmitterParams};
use crate::error::{Error, Result, Warning};
use crate::io::Columns;
use crate::rng::seeded_rng;
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace<T> {
    /// `counts.len() + 1` uniformly spaced edges covering `[0, rep_period_ns]`.
    pub bin_edges_ns: Vec<T>,
    pub counts: Vec<u64>,
    pub rep_period_ns: T,
}

impl<T: Real> DecayTrace<T> {
    pub fn bin_centers_ns(&self) -> Vec<T> {
        let half = lit::<T>(0.5);
        self.bin_edges_ns.windows(2).map(|w| (w[0] + w[1]) * half).collect()
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_columns(&self) -> Columns {
        Columns::new(
            "time_ns",
            "counts",
            self.bin_centers_ns().into_iter().map(to_f64).collect(),
            self.counts.iter().map(|&c| c as f64).collect(),
        )
    }

    /// Rebuilds a trace from `(time_ns, counts)` bin centers on a uniform grid.
    pub fn from_columns(cols: &Columns) -> Result<Self> {
        let n = cols.x.len();
        if n == 0 {
            return Err(Error::validation("decay trace has no bins"));
        }
        let width = if n > 1 { cols.x[1] - cols.x[0] } else { 2.0 * cols.x[0] };
        if !(width > 0.0) {
            return Err(Error::validation("bin centers must increase"));
        }
        let start = cols.x[0] - width / 2.0;
        let edges: Vec<T> = (0..=n).map(|i| lit(start + width * i as f64)).collect();
        let counts = cols
            .y
            .iter()
            .map(|&c| {
                if c >= 0.0 && c.fract() == 0.0 {
                    Ok(c as u64)
                } else {
                    Err(Error::validation(format!("invalid count {c}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let period = edges[n];
        Ok(Self {
            bin_edges_ns: edges,
            counts,
            rep_period_ns: period,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySettings<T> {
    pub total_counts: u64,
    pub n_bins: usize,
    pub rep_period_ns: T,
    /// Fraction of detected photons that are uncorrelated with the laser pulse.
    pub background_fraction: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDecay<T> {
    pub trace: DecayTrace<T>,
    pub lifetime_ns: T,
    pub warnings: Vec<Warning>,
}

/// Histogram of `total_counts` photon arrival times modulo the repetition period.
pub fn simulate_decay_trace<T: Real>(
    p: &EmitterParams<T>,
    f: T,
    settings: &DecaySettings<T>,
    seed: u64,
) -> Result<SimulatedDecay<T>> {
    if settings.total_counts == 0 {
        return Err(Error::validation("total_counts must be positive"));
    }
    if settings.n_bins == 0 {
        return Err(Error::validation("n_bins must be positive"));
    }
    if !(settings.rep_period_ns > T::zero()) {
        return Err(Error::validation("repetition period must be positive"));
    }
    let bg = to_f64(settings.background_fraction);
    if !(0.0..=1.0).contains(&bg) {
        return Err(Error::validation("background fraction must lie in [0, 1]"));
    }
    let tau = lifetime_on(p, f)?;
    let mut warnings = Vec::new();
    if tau >= settings.rep_period_ns * lit(0.5) {
        warnings.push(Warning::PileUpRegime);
    }

    let period = to_f64(settings.rep_period_ns);
    let n = settings.n_bins;
    let exp = Exp::new(1.0 / to_f64(tau)).map_err(|e| Error::validation(e.to_string()))?;
    let mut rng = seeded_rng(seed);
    let mut counts = vec![0u64; n];
    for _ in 0..settings.total_counts {
        let t = if rng.random::<f64>() < bg {
            rng.random::<f64>() * period
        } else {
            exp.sample(&mut rng) % period
        };
        let idx = ((t / period) * n as f64) as usize;
        counts[idx.min(n - 1)] += 1;
    }
    let width = settings.rep_period_ns / T::from_usize(n).expect("bin count fits scalar");
    let edges = (0..=n)
        .map(|i| width * T::from_usize(i).expect("index fits scalar"))
        .collect();
    Ok(SimulatedDecay {
        trace: DecayTrace {
            bin_edges_ns: edges,
            counts,
            rep_period_ns: settings.rep_period_ns,
        },
        lifetime_ns: tau,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> EmitterParams<f64> {
        EmitterParams::from_off_lifetime(15.85, 0.031, 14.94).unwrap()
    }

    fn settings(n_bins: usize, bg: f64) -> DecaySettings<f64> {
        DecaySettings { total_counts: 20_000, n_bins, rep_period_ns: 100.0, background_fraction: bg }
    }

    #[test]
    fn single_bin_holds_everything() {
        let s = simulate_decay_trace(&params(), 0.0, &settings(1, 0.0), 3).unwrap();
        assert_eq!(s.trace.counts, vec![20_000]);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = simulate_decay_trace(&params(), 0.0, &settings(100, 0.3), 11).unwrap();
        let b = simulate_decay_trace(&params(), 0.0, &settings(100, 0.3), 11).unwrap();
        let c = simulate_decay_trace(&params(), 0.0, &settings(100, 0.3), 12).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_ne!(a.trace, c.trace);
        assert_eq!(a.trace.total_counts(), 20_000);
    }

    #[test]
    fn pile_up_flag() {
        let s = DecaySettings { rep_period_ns: 25.0, ..settings(10, 0.0) };
        let r = simulate_decay_trace(&params(), 0.0, &s, 1).unwrap();
        assert_eq!(r.warnings, vec![Warning::PileUpRegime]);
        let ok = simulate_decay_trace(&params(), 0.0, &settings(10, 0.0), 1).unwrap();
        assert!(ok.warnings.is_empty());
    }

    #[test]
    fn rejects_bad_settings() {
        let p = params();
        assert!(simulate_decay_trace(&p, 0.0, &DecaySettings { total_counts: 0, ..settings(10, 0.0) }, 1).is_err());
        assert!(simulate_decay_trace(&p, 0.0, &DecaySettings { rep_period_ns: 0.0, ..settings(10, 0.0) }, 1).is_err());
        assert!(simulate_decay_trace(&p, 0.0, &settings(10, 1.5), 1).is_err());
    }

    #[test]
    fn columns_round_trip() {
        let s = simulate_decay_trace(&params(), 0.0, &settings(50, 0.2), 5).unwrap();
        let cols = s.trace.to_columns();
        assert_eq!(cols.x_name, "time_ns");
        let back = DecayTrace::<f64>::from_columns(&cols).unwrap();
        assert_eq!(back.counts, s.trace.counts);
        assert!((back.rep_period_ns - 100.0).abs() < 1e-9);
    }
}
