//! Scenario orchestration: generate every dataset, fit it, and judge the
//! recovered quantities against their targets.

use std::path::Path;

use rayon::prelude::*;

use super::report::{Provenance, Record, Report};
use super::scenario::Scenario;
use super::synth::{odmr_dataset, q_mode_spectrum, rabi_dataset, ring_spectrum};
use super::targets::{Target, TargetTable, Tolerance};
use super::tuning_map::{generate_tuning_map, TuningMap};
use crate::decay::simulate_decay_trace;
use crate::emitter::{
    lifetime_on, purcell_from_lifetime_ratio, purcell_from_reference_lifetime, zpl_output_enhancement,
};
use crate::error::{Error, Result};
use crate::fit::{
    extract_fsr, extract_lifetime, extract_odmr_peaks, extract_q, extract_rabi, fit_auto, ModelSpec, Weights,
};
use crate::rng::derive_seed;
use crate::spin::{d_e_from_transitions, odmr_contrast_at, zero_field_transitions, CollectionPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Fan independent tasks out over the rayon pool. Output is identical either way.
    pub parallel: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { parallel: true }
    }
}

/// Report plus every intermediate file, keyed by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: Report,
    pub artifacts: Vec<(String, String)>,
}

impl RunOutput {
    /// Writes all artifacts and `report.json` into `dir` (created if needed).
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.artifacts {
            std::fs::write(dir.join(name), body)?;
        }
        std::fs::write(dir.join("report.json"), self.report.to_json()?)?;
        Ok(())
    }
}

fn run_tasks<I, O, F>(parallel: bool, items: &[I], f: F) -> Result<Vec<O>>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> Result<O> + Sync + Send,
{
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

struct RingOutcome {
    label: String,
    fsr: (f64, f64),
    mean_center: f64,
    model_fsr: f64,
    diameter_um: f64,
    csv: String,
}

struct QOutcome {
    label: String,
    q: (f64, f64),
    truth: f64,
    csv: String,
}

struct DecayOutcome {
    label: String,
    tau: (f64, f64),
    truth: f64,
    csv: String,
}

struct OdmrOutcome {
    path: CollectionPath,
    f1: (f64, f64),
    f2: (f64, f64),
    contrast: (f64, f64),
    csv: String,
}

fn lookup(table: &TargetTable, key: &str, fallback: Target) -> Target {
    table.get(key).copied().unwrap_or(fallback)
}

fn stage<T>(name: impl Into<String>, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Propagated uncertainty of `a/b` for independent `a`, `b`.
fn ratio_sigma(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 / b.0).abs() * ((a.1 / a.0).powi(2) + (b.1 / b.0).powi(2)).sqrt()
}

pub fn run_scenario(scenario: &Scenario, options: &RunOptions) -> Result<RunOutput> {
    stage("config", scenario.validate())?;
    let seed = scenario.seed;
    let par = options.parallel;
    let targets = TargetTable::paper();
    let mut records = Vec::new();
    let mut artifacts = Vec::new();

    // Ring combs → FSR per diameter, then one group index for all rings.
    let rings = run_tasks(par, &scenario.rings, |ring| {
        let name = format!("ring:{}", ring.label);
        let (modes, spec) = stage(&name, ring_spectrum(ring, derive_seed(seed, &name)))?;
        if modes.len() < 3 {
            return Err(Error::InsufficientModes(modes.len()).in_stage(name));
        }
        let fit = stage(
            &name,
            fit_auto(ModelSpec::MultiLorentzian(modes.len()), &spec.wavelength_nm, &spec.intensity, &Weights::Unit),
        )?;
        let peaks = stage(&name, crate::fit::extract_peaks(&fit))?;
        let centers: Vec<f64> = peaks.iter().map(|p| p.center).collect();
        let fsr = stage(&name, extract_fsr(&centers))?;
        let mean_center = (centers[0] + centers[centers.len() - 1]) / 2.0;
        let geom = stage(&name, ring.geometry())?;
        Ok(RingOutcome {
            label: ring.label.clone(),
            fsr,
            mean_center,
            model_fsr: crate::cavity::free_spectral_range(&geom, mean_center),
            diameter_um: ring.diameter_um,
            csv: spec.to_columns().to_csv_string(),
        })
    })?;
    for r in &rings {
        let fallback = Target::config(r.model_fsr, Tolerance::Rel(0.05));
        let key = format!("fsr_{}", r.label);
        records.push(Record::new(&key, r.fsr.0, Some(r.fsr.1), &lookup(&targets, &key, fallback)));
        artifacts.push((format!("spectrum_{}.csv", r.label), r.csv.clone()));
    }
    if !rings.is_empty() {
        // Least squares for 1/n_g in FSR_i = k_i / n_g, k_i = λ_i² / (π d_i).
        let ks: Vec<f64> = rings
            .iter()
            .map(|r| r.mean_center.powi(2) / (std::f64::consts::PI * r.diameter_um * 1e3))
            .collect();
        let num: f64 = ks.iter().map(|k| k * k).sum();
        let den: f64 = ks.iter().zip(&rings).map(|(k, r)| k * r.fsr.0).sum();
        let n_g = num / den;
        let n_g_sigma = n_g
            * (ks.iter().zip(&rings).map(|(k, r)| (k * r.fsr.1).powi(2)).sum::<f64>()).sqrt()
            / den;
        let truth = scenario.rings.iter().map(|r| r.n_g).sum::<f64>() / scenario.rings.len() as f64;
        let t = lookup(&targets, "group_index", Target::config(truth, Tolerance::Rel(0.05)));
        records.push(Record::new("group_index", n_g, Some(n_g_sigma), &t));
    }

    // Isolated modes → Q.
    let qs = run_tasks(par, &scenario.q_modes, |qm| {
        let name = format!("q_mode:{}", qm.label);
        let spec = stage(&name, q_mode_spectrum(&scenario.q_spectrum, qm, derive_seed(seed, &name)))?;
        let fit = stage(&name, fit_auto(ModelSpec::Lorentzian, &spec.wavelength_nm, &spec.intensity, &Weights::Unit))?;
        Ok(QOutcome {
            label: qm.label.clone(),
            q: stage(&name, extract_q(&fit))?,
            truth: qm.q_factor,
            csv: spec.to_columns().to_csv_string(),
        })
    })?;
    for q in &qs {
        let key = format!("q_{}", q.label);
        let t = lookup(&targets, &key, Target::config(q.truth, Tolerance::Sigma(3.0)));
        records.push(Record::new(&key, q.q.0, Some(q.q.1), &t));
        artifacts.push((format!("q_mode_{}.csv", q.label), q.csv.clone()));
    }

    // Gas tuning map.
    let map: TuningMap = stage("tuning_map", generate_tuning_map(scenario))?;
    artifacts.push(("tuning_map.csv".into(), map.to_csv_string()));
    let points: Vec<(String, usize)> = scenario.tuning.points.iter().map(|(k, &v)| (k.clone(), v)).collect();
    let crossing_step = match &scenario.tuning.crossing_point {
        Some(label) => scenario.tuning.points[label],
        None => points
            .iter()
            .map(|(_, s)| *s)
            .min_by(|&a, &b| map.detuning_nm[a].abs().total_cmp(&map.detuning_nm[b].abs()))
            .expect("points validated nonempty"),
    };
    let off_step = points.iter().map(|(_, s)| *s).min().expect("points validated nonempty");

    // Lifetimes: a decoupled reference plus every labeled tuning point.
    let params = stage("decay", scenario.emitter.params())?;
    let mut decay_tasks = vec![("off".to_string(), 0.0)];
    decay_tasks.extend(points.iter().map(|(label, step)| (label.clone(), map.purcell[*step])));
    let decays = run_tasks(par, &decay_tasks, |(label, f)| {
        let name = format!("decay:{label}");
        let sim = stage(&name, simulate_decay_trace(&params, *f, &scenario.decay.settings(), derive_seed(seed, &name)))?;
        let x = sim.trace.bin_centers_ns();
        let y: Vec<f64> = sim.trace.counts.iter().map(|&c| c as f64).collect();
        let fit = stage(&name, fit_auto(ModelSpec::ExpDecay, &x, &y, &Weights::Poisson))?;
        Ok(DecayOutcome {
            label: label.clone(),
            tau: stage(&name, extract_lifetime(&fit))?,
            truth: sim.lifetime_ns,
            csv: sim.trace.to_columns().to_csv_string(),
        })
    })?;
    for d in &decays {
        artifacts.push((format!("decay_{}.csv", d.label), d.csv.clone()));
    }
    let tau_off = &decays[0];
    let crossing_label = &points.iter().find(|(_, s)| *s == crossing_step).expect("crossing is a labeled point").0;
    let tau_on = decays.iter().find(|d| &d.label == crossing_label).expect("decay per point");

    let t_off = lookup(&targets, "tau_off", Target::config(tau_off.truth, Tolerance::Sigma(3.0)));
    records.push(Record::new("tau_off", tau_off.tau.0, Some(tau_off.tau.1), &t_off));
    let t_on = lookup(&targets, "tau_on", Target::config(tau_on.truth, Tolerance::Sigma(3.0)));
    records.push(Record::new("tau_on", tau_on.tau.0, Some(tau_on.tau.1), &t_on));

    let xi = scenario.emitter.xi_zpl;
    let tau0 = scenario.emitter.tau_0_ns;
    let f_ratio = stage("purcell", purcell_from_lifetime_ratio(tau_off.tau.0, tau_on.tau.0, xi))?.f;
    let r = tau_off.tau.0 / tau_on.tau.0;
    let f_ratio_sigma = r / xi * ((tau_off.tau.1 / tau_off.tau.0).powi(2) + (tau_on.tau.1 / tau_on.tau.0).powi(2)).sqrt();
    let t = lookup(&targets, "purcell_lifetime_ratio", Target::config(scenario.purcell_f_max, Tolerance::Sigma(3.0)));
    records.push(Record::new("purcell_lifetime_ratio", f_ratio, Some(f_ratio_sigma), &t));

    let f_ref = stage("purcell", purcell_from_reference_lifetime(tau0, xi, tau_on.tau.0, tau_off.tau.0))?.f;
    let f_ref_sigma = tau0 / xi
        * ((tau_on.tau.1 / tau_on.tau.0.powi(2)).powi(2) + (tau_off.tau.1 / tau_off.tau.0.powi(2)).powi(2)).sqrt();
    let truth = tau0 / xi * (1.0 / tau_on.truth - 1.0 / tau_off.truth);
    let t = lookup(&targets, "purcell_reference_lifetime", Target::config(truth, Tolerance::Sigma(3.0)));
    records.push(Record::new("purcell_reference_lifetime", f_ref, Some(f_ref_sigma), &t));

    for (d, (_, step)) in decays[1..].iter().zip(&points) {
        let expected = stage("decay", lifetime_on(&params, map.purcell[*step]))?;
        records.push(Record::new(
            format!("lifetime_vs_tuning_{}", d.label),
            d.tau.0,
            Some(d.tau.1),
            &Target::config(expected, Tolerance::Sigma(3.0)),
        ));
    }
    let step_record = |name: &str, step: usize| {
        Record::new(name, step as f64, None, &Target::config(crossing_step as f64, Tolerance::Abs(0.0)))
    };
    let min_life_step = decays[1..]
        .iter()
        .zip(&points)
        .min_by(|a, b| a.0.tau.0.total_cmp(&b.0.tau.0))
        .map(|(_, (_, s))| *s)
        .expect("points validated nonempty");
    let max_zpl_step = (0..map.n_steps())
        .max_by(|&a, &b| map.zpl_intensity[a].total_cmp(&map.zpl_intensity[b]).then(b.cmp(&a)))
        .expect("map has rows");
    records.push(step_record("tuning_map_argmax_step", map.argmax_step()));
    records.push(step_record("lifetime_min_step", min_life_step));
    records.push(step_record("zpl_enhancement_max_step", max_zpl_step));

    let nominal = stage("enhancement", zpl_output_enhancement(scenario.purcell_nominal(), scenario.eta_ratio))?;
    let t = lookup(&targets, "zpl_enhancement", Target::config(nominal, Tolerance::Abs(0.0)));
    records.push(Record::new("zpl_enhancement", nominal, None, &t));
    let map_ratio = map.zpl_ratio(off_step, crossing_step);
    let t = lookup(&targets, "tuning_map_on_off_ratio", Target::config(map_ratio, Tolerance::Rel(0.05)));
    records.push(Record::new("tuning_map_on_off_ratio", map_ratio, None, &t));
    let conf = map.confocal_ratio(off_step, crossing_step);
    let t = lookup(&targets, "confocal_on_off_ratio", Target::config(1.0, Tolerance::Abs(0.0)));
    records.push(Record::new("confocal_on_off_ratio", conf, None, &t));

    // ODMR on each collection path.
    let odmr = run_tasks(par, &CollectionPath::ALL, |&path| {
        let name = format!("odmr:{}", path.label());
        let ds = stage(&name, odmr_dataset(scenario, path, derive_seed(seed, &name)))?;
        let fit = stage(&name, fit_auto(ModelSpec::MultiLorentzian(2), &ds.freq_mhz, &ds.contrast, &Weights::Unit))?;
        let peaks = stage(&name, extract_odmr_peaks(&fit))?;
        let (lo, hi) = (peaks.lower, peaks.upper);
        let contrast = (lo.height + hi.height) / 2.0;
        let contrast_sigma = (lo.height_sigma.powi(2) + hi.height_sigma.powi(2)).sqrt() / 2.0;
        Ok(OdmrOutcome {
            path,
            f1: (lo.center, lo.center_sigma),
            f2: (hi.center, hi.center_sigma),
            contrast: (contrast, contrast_sigma),
            csv: ds.to_columns().to_csv_string(),
        })
    })?;
    let (lower, upper) = zero_field_transitions(&scenario.spin);
    for o in &odmr {
        let p = o.path.label();
        let t1 = lookup(&targets, "odmr_f1", Target::config(lower, Tolerance::Sigma(3.0)));
        records.push(Record::new(format!("odmr_f1_{p}"), o.f1.0, Some(o.f1.1), &t1));
        let t2 = lookup(&targets, "odmr_f2", Target::config(upper, Tolerance::Sigma(3.0)));
        records.push(Record::new(format!("odmr_f2_{p}"), o.f2.0, Some(o.f2.1), &t2));
        let key = format!("odmr_contrast_{p}");
        let truth = scenario.spin.intrinsic_contrast * scenario.path_fractions.get(o.path);
        let tc = lookup(&targets, &key, Target::config(truth, Tolerance::Rel(0.1)));
        records.push(Record::new(&key, o.contrast.0, Some(o.contrast.1), &tc));
        artifacts.push((format!("odmr_{p}.csv"), o.csv.clone()));
    }
    let by_path = |path| odmr.iter().find(|o| o.path == path).expect("all paths run");
    let (on, conf) = (by_path(CollectionPath::GratingOn), by_path(CollectionPath::ConfocalOff));
    let ratio = on.contrast.0 / conf.contrast.0;
    let truth = scenario.path_fractions.grating_on / scenario.path_fractions.confocal_off;
    let t = lookup(&targets, "odmr_contrast_ratio", Target::config(truth, Tolerance::Rel(0.1)));
    records.push(Record::new("odmr_contrast_ratio", ratio, Some(ratio_sigma(on.contrast, conf.contrast)), &t));
    let split = stage("odmr", d_e_from_transitions(on.f1.0, on.f2.0))?;
    let half_sum = (on.f1.1.powi(2) + on.f2.1.powi(2)).sqrt() / 2.0;
    let t = lookup(&targets, "d_zfs", Target::config(scenario.spin.d_zfs_mhz, Tolerance::Sigma(3.0)));
    records.push(Record::new("d_zfs", split.d_mhz, Some(half_sum), &t));
    let t = lookup(&targets, "e_zfs", Target::config(scenario.spin.e_zfs_mhz, Tolerance::Sigma(3.0)));
    records.push(Record::new("e_zfs", split.e_mhz, Some(half_sum), &t));

    // Rabi oscillation on the upper transition.
    let rabi_cols = stage("rabi", rabi_dataset(scenario, derive_seed(seed, "rabi")))?;
    let fit = stage("rabi", fit_auto(ModelSpec::DampedCosine, &rabi_cols.x, &rabi_cols.y, &Weights::Unit))?;
    let rabi = stage("rabi", extract_rabi(&fit))?;
    let expected = stage("rabi", odmr_contrast_at(&scenario.spin, scenario.path_fractions.get(scenario.rabi.path), upper))?;
    records.push(Record::new(
        "rabi_contrast",
        rabi.contrast,
        Some(rabi.contrast_sigma),
        &Target::config(expected, Tolerance::Rel(0.1)),
    ));
    records.push(Record::new(
        "rabi_frequency_mhz",
        rabi.rabi_frequency_mhz,
        Some(rabi.rabi_frequency_sigma_mhz),
        &Target::config(scenario.rabi.rabi_frequency_mhz, Tolerance::Sigma(3.0)),
    ));
    artifacts.push(("rabi.csv".into(), rabi_cols.to_csv_string()));

    Ok(RunOutput {
        report: Report {
            records,
            provenance: Provenance {
                config_hash: scenario.config_hash(),
                seed,
                toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        },
        artifacts,
    })
}
