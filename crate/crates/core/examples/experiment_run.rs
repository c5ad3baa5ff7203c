//! Drives the config-based runner from code: parses a config, prints the
//! assumption diagnostics, runs the sweep and shows the CSV.
//!
//! ```text
//! cargo run --release --example experiment_run -- [output_dir]
//! ```

use hybrid_uq::harness::{self, diagnose, ExperimentConfig};

const CONFIG: &str = "
# small sweep, fast enough for a laptop
m = 33
N_s = 3..4
levels = 0..2
w_corr = 1
methods = collocation, hybrid, mc
mc_samples = 200
reference = wref:3
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "experiment-out".into());
    let mut cfg = ExperimentConfig::parse(CONFIG)?;
    cfg.output = out.into();
    cfg.check()?;

    let diag = diagnose(&cfg)?;
    println!(
        "f_min {:.4}, mode_sum {:.4}",
        diag.report.f_min, diag.report.mode_sum
    );
    for w in &diag.warnings {
        println!("warning: {w}");
    }

    let outcome = harness::run(&cfg)?;
    println!("nominal QoI {:.10e}", outcome.nominal_qoi);
    print!("{}", outcome.csv(false));
    println!("written to {}", cfg.output.display());
    Ok(())
}
