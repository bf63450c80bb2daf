//! Synthetic datasets for each experiment in a scenario. Every generator takes
//! its own seed so tasks can run in any order.

use rand_distr::{Distribution, Normal};

use super::scenario::{QModeConfig, QSpectrumConfig, RabiConfig, RingConfig, Scenario};
use crate::cavity::{resonance_wavelengths, CavityMode};
use crate::error::{Error, Result};
use crate::io::Columns;
use crate::pulse::{simulate_pulse_sequence, PulseSequence, ReadoutModel, Sweep};
use crate::rng::seeded_rng;
use crate::scalar::unit_lorentzian;
use crate::spin::{odmr_spectrum, zero_field_transitions, CollectionPath, OdmrDataset};

/// Adds i.i.d. Gaussian noise in place; `sigma = 0` leaves the data untouched.
pub fn add_gaussian_noise(y: &mut [f64], sigma: f64, seed: u64) -> Result<()> {
    if sigma == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::validation(e.to_string()))?;
    let mut rng = seeded_rng(seed);
    for v in y.iter_mut() {
        *v += normal.sample(&mut rng);
    }
    Ok(())
}

/// A spectrum on a wavelength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub wavelength_nm: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl Spectrum {
    pub fn to_columns(&self) -> Columns {
        Columns::new("wavelength_nm", "intensity", self.wavelength_nm.clone(), self.intensity.clone())
    }
}

/// Comb of unit-height ring resonances over the ring's band, on a flat
/// background, with additive Gaussian noise.
pub fn ring_spectrum(ring: &RingConfig, seed: u64) -> Result<(Vec<CavityMode<f64>>, Spectrum)> {
    let geom = ring.geometry()?;
    let [lo, hi] = ring.band_nm;
    let modes = resonance_wavelengths(&geom, (lo, hi), ring.q_factor)?;
    let grid = super::scenario::Grid::new(lo, hi, ring.grid_step_nm).points();
    let mut y: Vec<f64> = grid
        .iter()
        .map(|&l| {
            ring.background
                + modes
                    .iter()
                    .map(|m| unit_lorentzian(l, m.center_wavelength_nm, m.linewidth_nm()))
                    .sum::<f64>()
        })
        .collect();
    add_gaussian_noise(&mut y, ring.noise_sigma, seed)?;
    Ok((modes, Spectrum { wavelength_nm: grid, intensity: y }))
}

/// Single unit-height resonance in a window around its center.
pub fn q_mode_spectrum(window: &QSpectrumConfig, mode: &QModeConfig, seed: u64) -> Result<Spectrum> {
    let fwhm = mode.center_nm / mode.q_factor;
    let n = (window.half_span_nm / window.step_nm).round() as i64;
    let grid: Vec<f64> = (-n..=n).map(|i| mode.center_nm + i as f64 * window.step_nm).collect();
    let mut y: Vec<f64> = grid
        .iter()
        .map(|&l| window.background + unit_lorentzian(l, mode.center_nm, fwhm))
        .collect();
    add_gaussian_noise(&mut y, mode.noise_sigma, seed)?;
    Ok(Spectrum { wavelength_nm: grid, intensity: y })
}

/// Noisy positive-peak ODMR contrast spectrum for one collection path.
pub fn odmr_dataset(scenario: &Scenario, path: CollectionPath, seed: u64) -> Result<OdmrDataset<f64>> {
    let grid = scenario.odmr.grid_mhz.points();
    let mut ds = odmr_spectrum(&scenario.spin, scenario.path_fractions.get(path), &grid, path)?;
    add_gaussian_noise(&mut ds.contrast, scenario.odmr.noise_sigma, seed)?;
    Ok(ds)
}

/// Rabi sweep: normalized readout counts versus drive duration, driving the
/// upper zero-field transition.
pub fn rabi_dataset(scenario: &Scenario, seed: u64) -> Result<Columns> {
    let r: &RabiConfig = &scenario.rabi;
    let (_, upper) = zero_field_transitions(&scenario.spin);
    let durations = r.duration_grid_ns.points();
    // The template duration is replaced point by point by the sweep.
    let seq = PulseSequence::rabi(r.init_ns, r.duration_grid_ns.step, upper, r.wait_ns, r.readout_ns);
    let readout = ReadoutModel {
        bright_rate_per_ns: r.bright_rate_per_ns,
        rabi_frequency_mhz: r.rabi_frequency_mhz,
        decay_time_ns: r.decay_time_ns,
        photon_fraction: scenario.path_fractions.get(r.path),
    };
    let counts = simulate_pulse_sequence(
        &seq,
        &scenario.spin,
        &readout,
        &Sweep::MwDuration(durations.clone()),
        r.repetitions,
        seed,
    )?;
    Ok(Columns::new("duration_ns", "signal", durations, counts.normalized()))
}
