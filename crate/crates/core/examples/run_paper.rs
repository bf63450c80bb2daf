use ringqed::pipeline::{paper_scenario, run_scenario, RunOptions};

fn main() {
    let out = run_scenario(&paper_scenario(), &RunOptions::default()).expect("scenario runs");
    for r in &out.report.records {
        println!(
            "{:<5} {:<32} {:>14.6} ± {:<12.6} target {:>10.4} {:?}",
            if r.pass { "ok" } else { "FAIL" },
            r.name,
            r.recovered,
            r.uncertainty.unwrap_or(f64::NAN),
            r.target,
            r.tolerance
        );
    }
}
