use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use crate::cavity::{apply_injection, detuning, mode_lineshape, resonance_wavelengths, CavityMode, TuningState};
use crate::emitter::{confocal_zpl_enhancement, grating_zpl_enhancement, lifetime_on, purcell_vs_detuning};
use crate::error::{Error, Result};
use crate::scalar::unit_lorentzian;

/// Intensity map over injection steps plus the per-step quantities behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningMap {
    pub wavelength_nm: Vec<f64>,
    /// `intensity[step][wavelength]`
    pub intensity: Vec<Vec<f64>>,
    pub mode_center_nm: Vec<f64>,
    pub detuning_nm: Vec<f64>,
    pub purcell: Vec<f64>,
    pub lifetime_ns: Vec<f64>,
    /// Grating-path ZPL peak height.
    pub zpl_intensity: Vec<f64>,
    /// Confocal-path ZPL peak height.
    pub confocal_zpl_intensity: Vec<f64>,
    pub sensitivity_nm_per_pa_l: f64,
}

impl TuningMap {
    pub fn n_steps(&self) -> usize {
        self.intensity.len()
    }

    /// Row containing the global maximum of the map (first on ties).
    pub fn argmax_step(&self) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, row) in self.intensity.iter().enumerate() {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if m > best.1 {
                best = (i, m);
            }
        }
        best.0
    }

    pub fn zpl_ratio(&self, off_step: usize, on_step: usize) -> f64 {
        self.zpl_intensity[on_step] / self.zpl_intensity[off_step]
    }

    pub fn confocal_ratio(&self, off_step: usize, on_step: usize) -> f64 {
        self.confocal_zpl_intensity[on_step] / self.confocal_zpl_intensity[off_step]
    }

    /// Long-format CSV: `step,wavelength_nm,intensity`.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["step", "wavelength_nm", "intensity"]).expect("in-memory write");
        for (s, row) in self.intensity.iter().enumerate() {
            for (l, v) in self.wavelength_nm.iter().zip(row) {
                w.write_record([s.to_string(), l.to_string(), v.to_string()])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// The closest resonance on the blue side of `target_nm`.
pub fn blue_side_mode(scenario: &Scenario) -> Result<CavityMode<f64>> {
    let t = &scenario.tuning;
    let geom = t.geometry()?;
    let zpl = scenario.zpl_wavelength_nm;
    let fsr = crate::cavity::free_spectral_range(&geom, zpl);
    let modes = resonance_wavelengths(&geom, (zpl - 1.5 * fsr, zpl), t.q_factor)?;
    modes
        .into_iter()
        .rev()
        .find(|m| m.center_wavelength_nm < zpl)
        .ok_or_else(|| Error::validation("no tuning-ring mode on the blue side of the ZPL"))
}

fn dose_before(scenario: &Scenario, step: usize) -> f64 {
    scenario
        .tuning
        .injections()
        .iter()
        .take(step)
        .map(|i| i.pressure_pa * i.volume_l)
        .sum()
}

/// Shift per dose: explicit, or chosen so the mode lands on the ZPL at the
/// crossing point.
pub fn tuning_sensitivity(scenario: &Scenario, mode: &CavityMode<f64>) -> Result<f64> {
    let t = &scenario.tuning;
    if let Some(s) = t.sensitivity_nm_per_pa_l {
        return Ok(s);
    }
    let label = t.crossing_point.as_ref().expect("validated");
    let step = t.points[label];
    let dose = dose_before(scenario, step);
    if !(dose > 0.0) {
        return Err(Error::validation(format!("no gas injected before crossing point `{label}`")));
    }
    let needed = scenario.zpl_wavelength_nm - mode.center_wavelength_nm;
    if needed > t.saturation_shift_nm {
        return Err(Error::validation(format!(
            "crossing needs {needed:.3} nm of shift, saturation allows {} nm",
            t.saturation_shift_nm
        )));
    }
    Ok(needed / dose)
}

pub fn generate_tuning_map(scenario: &Scenario) -> Result<TuningMap> {
    let t = &scenario.tuning;
    let params = scenario.emitter.params()?;
    let zpl = scenario.zpl_wavelength_nm;
    let mode0 = blue_side_mode(scenario)?;
    let sensitivity = tuning_sensitivity(scenario, &mode0)?;
    let grid = t.map_grid_nm.points();

    let mut state = TuningState::new(sensitivity, t.saturation_shift_nm)?;
    let mut mode = mode0;
    let injections = t.injections();
    let mut map = TuningMap {
        wavelength_nm: grid.clone(),
        intensity: Vec::with_capacity(injections.len() + 1),
        mode_center_nm: Vec::new(),
        detuning_nm: Vec::new(),
        purcell: Vec::new(),
        lifetime_ns: Vec::new(),
        zpl_intensity: Vec::new(),
        confocal_zpl_intensity: Vec::new(),
        sensitivity_nm_per_pa_l: sensitivity,
    };
    for step in 0..=injections.len() {
        if step > 0 {
            let inj = injections[step - 1];
            (state, mode) = apply_injection(&state, &mode, inj.pressure_pa, inj.volume_l)?;
        }
        let delta = detuning(&mode, zpl);
        let f = purcell_vs_detuning(scenario.purcell_f_max, &mode, delta);
        let zpl_height = t.zpl_amplitude * grating_zpl_enhancement(scenario.purcell_f_max, scenario.eta_ratio, &mode, delta)?;
        let sideband = mode_lineshape(&mode, &grid);
        let row = grid
            .iter()
            .zip(&sideband)
            .map(|(&l, &m)| t.mode_amplitude * m + zpl_height * unit_lorentzian(l, zpl, t.zpl_linewidth_nm))
            .collect();
        map.intensity.push(row);
        map.mode_center_nm.push(mode.tuned_center_nm());
        map.detuning_nm.push(delta);
        map.purcell.push(f);
        map.lifetime_ns.push(lifetime_on(&params, f)?);
        map.zpl_intensity.push(zpl_height);
        map.confocal_zpl_intensity
            .push(t.zpl_amplitude * confocal_zpl_enhancement(&mode, delta));
    }
    Ok(map)
}
