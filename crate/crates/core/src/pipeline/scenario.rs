//! Scenario configuration: one JSON document describing every synthetic
//! experiment the pipeline runs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cavity::{Injection, RingGeometry};
use crate::decay::DecaySettings;
use crate::emitter::EmitterParams;
use crate::error::{Error, Result};
use crate::spin::{CollectionPath, PathFractions, SpinParams};

/// Inclusive `[start, stop]` grid with spacing `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        if !(self.step > 0.0) || !(self.stop > self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::validation(format!("{what}: grid needs start < stop and step > 0")));
        }
        if (self.stop - self.start) / self.step > 1e7 {
            return Err(Error::validation(format!("{what}: grid has too many points")));
        }
        Ok(())
    }

    /// Points computed as `start + i·step` (no accumulated rounding).
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    pub tau_off_ns: f64,
    pub xi_zpl: f64,
    pub tau_0_ns: f64,
}

impl EmitterConfig {
    pub fn params(&self) -> Result<EmitterParams<f64>> {
        EmitterParams::from_off_lifetime(self.tau_off_ns, self.xi_zpl, self.tau_0_ns)
    }
}

/// A ring whose multi-mode spectrum is simulated and fitted for its FSR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingConfig {
    pub label: String,
    pub diameter_um: f64,
    pub n_eff: f64,
    pub n_g: f64,
    pub reference_wavelength_nm: f64,
    pub q_factor: f64,
    pub band_nm: [f64; 2],
    pub grid_step_nm: f64,
    pub background: f64,
    pub noise_sigma: f64,
}

impl RingConfig {
    pub fn geometry(&self) -> Result<RingGeometry<f64>> {
        RingGeometry::new(self.diameter_um, self.n_eff, self.n_g, self.reference_wavelength_nm)
    }
}

/// A single resonance measured for its quality factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QModeConfig {
    pub label: String,
    pub center_nm: f64,
    pub q_factor: f64,
    /// Gaussian noise on a unit-height peak.
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QSpectrumConfig {
    /// Half-width of the window around each mode.
    pub half_span_nm: f64,
    pub step_nm: f64,
    /// Flat background relative to the unit peak height.
    pub background: f64,
}

/// `count` identical injections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionBlock {
    pub count: usize,
    pub pressure_pa: f64,
    pub volume_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningConfig {
    pub diameter_um: f64,
    pub n_eff: f64,
    pub n_g: f64,
    pub reference_wavelength_nm: f64,
    pub q_factor: f64,
    pub saturation_shift_nm: f64,
    /// nm per Pa·L. When absent, it is chosen so the mode reaches the ZPL
    /// exactly at `crossing_point`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity_nm_per_pa_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossing_point: Option<String>,
    pub schedule: Vec<InjectionBlock>,
    /// Labeled stages → step index (0 = before any injection).
    pub points: BTreeMap<String, usize>,
    pub map_grid_nm: Grid,
    pub zpl_linewidth_nm: f64,
    /// Peak height of the cavity-filtered sideband in the map.
    pub mode_amplitude: f64,
    /// Peak height of an uncoupled ZPL in the map.
    pub zpl_amplitude: f64,
}

impl TuningConfig {
    pub fn geometry(&self) -> Result<RingGeometry<f64>> {
        RingGeometry::new(self.diameter_um, self.n_eff, self.n_g, self.reference_wavelength_nm)
    }

    pub fn injections(&self) -> Vec<Injection<f64>> {
        self.schedule
            .iter()
            .flat_map(|b| {
                std::iter::repeat_n(Injection { pressure_pa: b.pressure_pa, volume_l: b.volume_l }, b.count)
            })
            .collect()
    }

    /// Number of map rows (the initial state plus one per injection).
    pub fn n_steps(&self) -> usize {
        self.schedule.iter().map(|b| b.count).sum::<usize>() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub total_counts: u64,
    pub n_bins: usize,
    pub rep_period_ns: f64,
    pub background_fraction: f64,
}

impl DecayConfig {
    pub fn settings(&self) -> DecaySettings<f64> {
        DecaySettings {
            total_counts: self.total_counts,
            n_bins: self.n_bins,
            rep_period_ns: self.rep_period_ns,
            background_fraction: self.background_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdmrConfig {
    pub grid_mhz: Grid,
    /// Gaussian noise on the contrast axis.
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiConfig {
    /// Collection path whose photon fraction sets the readout contrast.
    pub path: CollectionPath,
    pub rabi_frequency_mhz: f64,
    pub decay_time_ns: f64,
    pub duration_grid_ns: Grid,
    pub init_ns: f64,
    pub wait_ns: f64,
    pub readout_ns: f64,
    pub bright_rate_per_ns: f64,
    pub repetitions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub zpl_wavelength_nm: f64,
    pub emitter: EmitterConfig,
    pub purcell_f_max: f64,
    /// Purcell factor used for the headline output-enhancement figure;
    /// defaults to `purcell_f_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purcell_nominal: Option<f64>,
    pub eta_ratio: f64,
    pub rings: Vec<RingConfig>,
    pub q_spectrum: QSpectrumConfig,
    pub q_modes: Vec<QModeConfig>,
    pub tuning: TuningConfig,
    pub decay: DecayConfig,
    pub spin: SpinParams<f64>,
    pub path_fractions: PathFractions<f64>,
    pub odmr: OdmrConfig,
    pub rabi: RabiConfig,
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("{what} must be positive")))
    }
}

/// Labels end up in file names, so keep them to a safe alphabet.
fn check_label(label: &str) -> Result<()> {
    let ok = !label.is_empty()
        && label.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
        && !label.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(Error::validation(format!("label `{label}` must be nonempty ASCII alphanumerics, '.', '_' or '-'")))
    }
}

fn nonnegative(v: f64, what: &str) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("{what} must be nonnegative")))
    }
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s).map_err(|e| Error::validation(format!("config: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Canonical JSON (field order fixed by the struct definition).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn purcell_nominal(&self) -> f64 {
        self.purcell_nominal.unwrap_or(self.purcell_f_max)
    }

    pub fn validate(&self) -> Result<()> {
        positive(self.zpl_wavelength_nm, "zpl_wavelength_nm")?;
        self.emitter.params()?;
        nonnegative(self.purcell_f_max, "purcell_f_max")?;
        nonnegative(self.purcell_nominal(), "purcell_nominal")?;
        positive(self.eta_ratio, "eta_ratio")?;
        for r in &self.rings {
            check_label(&r.label)?;
            r.geometry()?;
            positive(r.q_factor, "ring q_factor")?;
            positive(r.grid_step_nm, "ring grid_step_nm")?;
            nonnegative(r.noise_sigma, "ring noise_sigma")?;
            Grid::new(r.band_nm[0], r.band_nm[1], r.grid_step_nm).validate(&r.label)?;
        }
        positive(self.q_spectrum.half_span_nm, "q_spectrum.half_span_nm")?;
        positive(self.q_spectrum.step_nm, "q_spectrum.step_nm")?;
        for q in &self.q_modes {
            check_label(&q.label)?;
            positive(q.center_nm, "q_mode center_nm")?;
            positive(q.q_factor, "q_mode q_factor")?;
            nonnegative(q.noise_sigma, "q_mode noise_sigma")?;
        }
        let t = &self.tuning;
        t.geometry()?;
        positive(t.q_factor, "tuning.q_factor")?;
        nonnegative(t.saturation_shift_nm, "tuning.saturation_shift_nm")?;
        if let Some(s) = t.sensitivity_nm_per_pa_l {
            nonnegative(s, "tuning.sensitivity_nm_per_pa_l")?;
        } else if t.crossing_point.is_none() {
            return Err(Error::validation("tuning needs sensitivity_nm_per_pa_l or crossing_point"));
        }
        if t.points.is_empty() {
            return Err(Error::validation("tuning.points must not be empty"));
        }
        for (label, &step) in &t.points {
            check_label(label)?;
            if step >= t.n_steps() {
                return Err(Error::validation(format!(
                    "tuning point `{label}` references step {step}, schedule has {} steps",
                    t.n_steps()
                )));
            }
        }
        if let Some(c) = &t.crossing_point {
            if !t.points.contains_key(c) {
                return Err(Error::validation(format!("crossing point `{c}` is not a labeled point")));
            }
        }
        t.map_grid_nm.validate("tuning.map_grid_nm")?;
        positive(t.zpl_linewidth_nm, "tuning.zpl_linewidth_nm")?;
        nonnegative(t.mode_amplitude, "tuning.mode_amplitude")?;
        nonnegative(t.zpl_amplitude, "tuning.zpl_amplitude")?;
        if self.decay.total_counts == 0 || self.decay.n_bins < 4 {
            return Err(Error::validation("decay needs counts and at least 4 bins"));
        }
        positive(self.decay.rep_period_ns, "decay.rep_period_ns")?;
        self.spin.validate()?;
        self.path_fractions.observed(self.spin.intrinsic_contrast)?;
        self.odmr.grid_mhz.validate("odmr.grid_mhz")?;
        nonnegative(self.odmr.noise_sigma, "odmr.noise_sigma")?;
        positive(self.rabi.rabi_frequency_mhz, "rabi.rabi_frequency_mhz")?;
        positive(self.rabi.decay_time_ns, "rabi.decay_time_ns")?;
        self.rabi.duration_grid_ns.validate("rabi.duration_grid_ns")?;
        positive(self.rabi.bright_rate_per_ns, "rabi.bright_rate_per_ns")?;
        if self.rabi.repetitions == 0 {
            return Err(Error::validation("rabi.repetitions must be positive"));
        }
        Ok(())
    }
}
