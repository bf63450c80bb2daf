use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ringqed::cavity::RingGeometry;
use ringqed::decay::{simulate_decay_trace, DecaySettings};
use ringqed::emitter::{purcell_from_lifetime_ratio, purcell_from_reference_lifetime, EmitterParams};
use ringqed::fit::{
    extract_lifetime, extract_peaks, extract_q, extract_rabi, fit_auto, FitResult, ModelSpec, Weights,
};
use ringqed::io::Columns;
use ringqed::pipeline::{
    add_gaussian_noise, generate_tuning_map, paper_scenario, ring_spectrum, run_scenario, Report, RingConfig,
    RunOptions, Scenario,
};
use ringqed::rng::derive_seed;
use ringqed::spin::{odmr_spectrum, rabi_trace, CollectionPath, SpinParams};
use ringqed::Error;
use serde_json::{json, Value};

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_COMPARISON: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "ringqed", version, about = "Ring-cavity emitter simulator and analysis chain")]
struct Cli {
    /// Seed for every stochastic step (overrides the config seed for `run`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Output format for generated data and results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Multi-mode ring spectrum with noise.
    SimulateSpectrum(SpectrumArgs),
    /// Intensity map over the gas-injection schedule of a scenario.
    TuneMap {
        /// Scenario JSON (defaults to the shipped scenario).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Time-resolved photoluminescence histogram.
    Decay(DecayArgs),
    /// Zero-field ODMR spectrum.
    Odmr(OdmrArgs),
    /// Rabi oscillation trace.
    Rabi(RabiArgs),
    /// Fit a model to a two-column CSV.
    Fit {
        /// lorentzian, multi_lorentzian:N, exp_decay or damped_cosine
        model: String,
        csv: PathBuf,
        /// Residual weights (default: poisson for exp_decay, unit otherwise).
        #[arg(long, value_enum)]
        weights: Option<WeightArg>,
    },
    /// Derived-quantity calculators.
    Analyze {
        #[command(subcommand)]
        what: Analyze,
    },
    /// Run a full scenario and write its report and intermediate data.
    Run {
        config: PathBuf,
        /// Run tasks one at a time instead of in parallel.
        #[arg(long)]
        serial: bool,
    },
    /// Inspect a report.
    Report {
        /// Re-check every record of this report; exit 3 on any failure.
        #[arg(long)]
        compare: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum WeightArg {
    Unit,
    Poisson,
}

#[derive(Subcommand, Debug)]
enum Analyze {
    /// Purcell factor from lifetimes: give --xi (lifetime ratio) or --tau0 and --dwf (reference lifetime).
    Purcell {
        #[arg(long)]
        tau_off: f64,
        #[arg(long)]
        tau_on: f64,
        #[arg(long, conflicts_with_all = ["tau0", "dwf"])]
        xi: Option<f64>,
        #[arg(long, requires = "dwf")]
        tau0: Option<f64>,
        #[arg(long, requires = "tau0")]
        dwf: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long, default_value_t = 8.1)]
    diameter_um: f64,
    #[arg(long, default_value_t = 2.3)]
    n_eff: f64,
    #[arg(long, default_value_t = 3.0)]
    n_g: f64,
    #[arg(long, default_value_t = 1100.0)]
    reference_nm: f64,
    #[arg(long, default_value_t = 1261.0)]
    q: f64,
    #[arg(long, default_value_t = 1060.0)]
    start_nm: f64,
    #[arg(long, default_value_t = 1140.0)]
    stop_nm: f64,
    #[arg(long, default_value_t = 0.02)]
    step_nm: f64,
    #[arg(long, default_value_t = 0.2)]
    background: f64,
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
}

#[derive(Args, Debug)]
struct DecayArgs {
    #[arg(long, default_value_t = 15.85)]
    tau_off: f64,
    #[arg(long, default_value_t = 0.031)]
    xi: f64,
    #[arg(long, default_value_t = 14.94)]
    tau0: f64,
    /// Purcell factor acting on the ZPL channel.
    #[arg(long, default_value_t = 0.0)]
    purcell: f64,
    #[arg(long, default_value_t = 1_000_000)]
    counts: u64,
    #[arg(long, default_value_t = 1000)]
    bins: usize,
    #[arg(long, default_value_t = 100.0)]
    period_ns: f64,
    #[arg(long, default_value_t = 0.7)]
    background: f64,
}

#[derive(Args, Debug)]
struct OdmrArgs {
    #[arg(long, default_value_t = 1333.75)]
    d_mhz: f64,
    #[arg(long, default_value_t = 18.65)]
    e_mhz: f64,
    #[arg(long, default_value_t = 0.1)]
    intrinsic_contrast: f64,
    #[arg(long, default_value_t = 10.0)]
    linewidth_mhz: f64,
    /// Share of collected photons that carry spin contrast.
    #[arg(long, default_value_t = 0.62)]
    fraction: f64,
    #[arg(long, default_value_t = 1280.0)]
    start_mhz: f64,
    #[arg(long, default_value_t = 1390.0)]
    stop_mhz: f64,
    #[arg(long, default_value_t = 0.5)]
    step_mhz: f64,
    #[arg(long, default_value_t = 0.001)]
    noise: f64,
}

#[derive(Args, Debug)]
struct RabiArgs {
    #[arg(long, default_value_t = 10.0)]
    rabi_mhz: f64,
    #[arg(long, default_value_t = 0.062)]
    contrast: f64,
    #[arg(long, default_value_t = 2000.0)]
    decay_ns: f64,
    #[arg(long, default_value_t = 0.0)]
    start_ns: f64,
    #[arg(long, default_value_t = 400.0)]
    stop_ns: f64,
    #[arg(long, default_value_t = 4.0)]
    step_ns: f64,
    #[arg(long, default_value_t = 0.001)]
    noise: f64,
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_validation() { EXIT_VALIDATION } else { EXIT_RUNTIME };
        Self { code, message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_VALIDATION, message: message.into() }
}

fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, Failure> {
    let g = ringqed::pipeline::Grid::new(start, stop, step);
    g.validate("grid")?;
    Ok(g.points())
}

struct Ctx {
    seed: u64,
    out_dir: PathBuf,
    format: Format,
}

impl Ctx {
    fn seed_for(&self, task: &str) -> u64 {
        derive_seed(self.seed, task)
    }

    /// Writes `<stem>.csv` or `<stem>.json` and returns the path.
    fn emit(&self, stem: &str, cols: &Columns) -> Result<PathBuf, Failure> {
        std::fs::create_dir_all(&self.out_dir).map_err(Error::from)?;
        let path = match self.format {
            Format::Csv => {
                let p = self.out_dir.join(format!("{stem}.csv"));
                cols.write_path(&p)?;
                p
            }
            Format::Json => {
                let p = self.out_dir.join(format!("{stem}.json"));
                let v = json!({ &cols.x_name: cols.x, &cols.y_name: cols.y });
                write_json(&p, &v)?;
                p
            }
        };
        println!("wrote {}", path.display());
        Ok(path)
    }
}

fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(Error::from)?;
    s.push('\n');
    std::fs::write(path, s).map_err(Error::from)?;
    Ok(())
}

fn fit_summary(spec: ModelSpec, fit: &FitResult<f64>) -> Result<Value, Failure> {
    let derived = match spec {
        ModelSpec::Lorentzian => {
            let (q, s) = extract_q(fit)?;
            json!({ "q": q, "q_sigma": s })
        }
        ModelSpec::MultiLorentzian(_) => json!({ "peaks": extract_peaks(fit)? }),
        ModelSpec::ExpDecay => {
            let (t, s) = extract_lifetime(fit)?;
            json!({ "lifetime_ns": t, "lifetime_sigma_ns": s })
        }
        ModelSpec::DampedCosine => json!(extract_rabi(fit)?),
    };
    Ok(json!({ "model": spec.to_string(), "fit": fit, "derived": derived }))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = Ctx { seed: cli.seed.unwrap_or(0), out_dir: cli.out_dir.clone(), format: cli.format };
    match cli.command {
        Command::SimulateSpectrum(a) => {
            let ring = RingConfig {
                label: "cli".into(),
                diameter_um: a.diameter_um,
                n_eff: a.n_eff,
                n_g: a.n_g,
                reference_wavelength_nm: a.reference_nm,
                q_factor: a.q,
                band_nm: [a.start_nm, a.stop_nm],
                grid_step_nm: a.step_nm,
                background: a.background,
                noise_sigma: a.noise,
            };
            ringqed::pipeline::Grid::new(a.start_nm, a.stop_nm, a.step_nm).validate("spectrum")?;
            RingGeometry::new(a.diameter_um, a.n_eff, a.n_g, a.reference_nm)?;
            let (modes, spec) = ring_spectrum(&ring, ctx.seed_for("simulate-spectrum"))?;
            ctx.emit("spectrum", &spec.to_columns())?;
            for m in &modes {
                println!("mode m={} center={:.4} nm", m.azimuthal_order, m.center_wavelength_nm);
            }
        }
        Command::TuneMap { config } => {
            let sc = match config {
                Some(p) => Scenario::from_path(p)?,
                None => paper_scenario(),
            };
            let map = generate_tuning_map(&sc)?;
            std::fs::create_dir_all(&ctx.out_dir).map_err(Error::from)?;
            let path = match ctx.format {
                Format::Csv => {
                    let p = ctx.out_dir.join("tuning_map.csv");
                    std::fs::write(&p, map.to_csv_string()).map_err(Error::from)?;
                    p
                }
                Format::Json => {
                    let p = ctx.out_dir.join("tuning_map.json");
                    write_json(&p, &serde_json::to_value(&map).map_err(Error::from)?)?;
                    p
                }
            };
            println!("wrote {}", path.display());
            println!("brightest step: {}", map.argmax_step());
        }
        Command::Decay(a) => {
            let p = EmitterParams::from_off_lifetime(a.tau_off, a.xi, a.tau0)?;
            let settings = DecaySettings {
                total_counts: a.counts,
                n_bins: a.bins,
                rep_period_ns: a.period_ns,
                background_fraction: a.background,
            };
            let sim = simulate_decay_trace(&p, a.purcell, &settings, ctx.seed_for("decay"))?;
            ctx.emit("decay", &sim.trace.to_columns())?;
            println!("lifetime: {:.4} ns", sim.lifetime_ns);
            for w in &sim.warnings {
                eprintln!("warning: {w:?}");
            }
        }
        Command::Odmr(a) => {
            let spin = SpinParams {
                d_zfs_mhz: a.d_mhz,
                e_zfs_mhz: a.e_mhz,
                intrinsic_contrast: a.intrinsic_contrast,
                odmr_linewidth_mhz: a.linewidth_mhz,
            };
            let g = grid(a.start_mhz, a.stop_mhz, a.step_mhz)?;
            let mut ds = odmr_spectrum(&spin, a.fraction, &g, CollectionPath::GratingOn)?;
            add_gaussian_noise(&mut ds.contrast, a.noise, ctx.seed_for("odmr"))?;
            ctx.emit("odmr", &ds.to_columns())?;
        }
        Command::Rabi(a) => {
            let g = grid(a.start_ns, a.stop_ns, a.step_ns)?;
            let mut y = rabi_trace(a.rabi_mhz, a.contrast, a.decay_ns, &g)?;
            add_gaussian_noise(&mut y, a.noise, ctx.seed_for("rabi"))?;
            ctx.emit("rabi", &Columns::new("duration_ns", "signal", g, y))?;
        }
        Command::Fit { model, csv, weights } => {
            let spec: ModelSpec = model.parse()?;
            let cols = Columns::read_path(&csv)?;
            let w = match weights.unwrap_or(if spec == ModelSpec::ExpDecay { WeightArg::Poisson } else { WeightArg::Unit }) {
                WeightArg::Unit => Weights::Unit,
                WeightArg::Poisson => Weights::Poisson,
            };
            let fit = fit_auto(spec, &cols.x, &cols.y, &w)?;
            match ctx.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&fit_summary(spec, &fit)?).map_err(Error::from)?),
                Format::Csv => {
                    println!("parameter,value,sigma");
                    for ((n, v), s) in fit.param_names.iter().zip(&fit.params).zip(&fit.sigmas) {
                        println!("{n},{v},{s}");
                    }
                    println!("reduced_chi2,{},", fit.reduced_chi2);
                }
            }
            if !fit.converged {
                return Err(Failure {
                    code: EXIT_RUNTIME,
                    message: format!("fit did not converge ({:?})", fit.termination_reason),
                });
            }
        }
        Command::Analyze { what: Analyze::Purcell { tau_off, tau_on, xi, tau0, dwf } } => {
            let r = match (xi, tau0, dwf) {
                (Some(xi), None, None) => purcell_from_lifetime_ratio(tau_off, tau_on, xi)?,
                (None, Some(t0), Some(d)) => purcell_from_reference_lifetime(t0, d, tau_on, tau_off)?,
                _ => return Err(invalid("give either --xi, or both --tau0 and --dwf")),
            };
            match ctx.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&r).map_err(Error::from)?),
                Format::Csv => println!("F = {:.2}", r.f),
            }
            for w in &r.warnings {
                eprintln!("warning: {w:?}");
            }
        }
        Command::Run { config, serial } => {
            let mut sc = Scenario::from_path(&config).map_err(|e| e.in_stage("config"))?;
            if let Some(seed) = cli.seed {
                sc.seed = seed;
            }
            let out = run_scenario(&sc, &RunOptions { parallel: !serial })?;
            out.write_to(&ctx.out_dir)?;
            let failed = out.report.failures();
            println!(
                "{} records, {} failed; report at {}",
                out.report.records.len(),
                failed.len(),
                ctx.out_dir.join("report.json").display()
            );
        }
        Command::Report { compare } => {
            let text = std::fs::read_to_string(&compare).map_err(Error::from)?;
            let report = Report::from_json(&text)?;
            let failed = report.failures();
            for r in &report.records {
                let verdict = if failed.contains(&r.name.as_str()) { "FAIL" } else { "PASS" };
                println!("{verdict} {} = {} (target {})", r.name, r.recovered, r.target);
            }
            if !failed.is_empty() {
                return Err(Failure {
                    code: EXIT_COMPARISON,
                    message: format!("{} record(s) failed: {}", failed.len(), failed.join(", ")),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_VALIDATION) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
