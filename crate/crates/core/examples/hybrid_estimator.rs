//! Collocation in the leading parameters against the hybrid estimator, which
//! adds the first-order tail correction, for increasing grid levels.
//!
//! ```text
//! cargo run --release --example hybrid_estimator -- [m] [N_s] [max_level]
//! ```

use hybrid_uq::perturbation::{compute_gamma, run_collocation, run_hybrid};
use hybrid_uq::{DeformationSpec, FemModel, HybridOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let m = args.first().copied().unwrap_or(33);
    let n_large = args.get(1).copied().unwrap_or(4);
    let max_level = args.get(2).copied().unwrap_or(3);

    let spec = DeformationSpec::experiment(n_large)?;
    let model = FemModel::experiment(m, spec)?;
    let q0 = model.nominal_qoi()?;

    let gamma = compute_gamma(&model, &vec![0.0; n_large])?;
    println!("tail sensitivities at y_s = 0 (normalized):");
    for (n, g) in gamma.gamma.iter().enumerate() {
        println!("  gamma_{:<2} = {:+.4e}", n_large + n + 1, g / q0);
    }

    println!(
        "{:>3} {:>6} {:>14} {:>14} {:>14} {:>7}",
        "w", "knots", "colloc var", "hybrid var", "correction", "solves"
    );
    for w in 0..=max_level {
        let sc = run_collocation(&model, w, n_large)?.normalized(q0);
        let hy = run_hybrid(&model, HybridOptions::new(w))?.normalized(q0);
        println!(
            "{w:>3} {:>6} {:>14.6e} {:>14.6e} {:>14.6e} {:>7}",
            hy.knots, sc.variance, hy.variance, hy.correction_var, hy.pde_solves
        );
    }
    Ok(())
}
