//! Plain Monte Carlo over all parameters next to full-dimensional sparse-grid
//! collocation on a small problem.
//!
//! ```text
//! cargo run --release --example monte_carlo -- [samples] [seed]
//! ```

use hybrid_uq::oracle::{monte_carlo, McConfig};
use hybrid_uq::perturbation::run_collocation;
use hybrid_uq::{DeformationSpec, FemModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let samples = args.first().copied().unwrap_or(2000) as usize;
    let seed = args.get(1).copied().unwrap_or(1);

    let spec = DeformationSpec::new(1.0 / 15.0, 3.0, 0.5, 1.0, 3, 0)?;
    let model = FemModel::experiment(17, spec)?;
    let q0 = model.nominal_qoi()?;

    let sc = run_collocation(&model, 4, 3)?.normalized(q0);
    println!(
        "collocation w=4: mean {:.8} variance {:.6e} ({} knots)",
        sc.mean, sc.variance, sc.knots
    );

    let mut n = samples / 16;
    while n <= samples {
        let mc = monte_carlo(&model, &McConfig { samples: n, seed })?;
        println!(
            "MC {n:>6}: mean {:.8} ± {:.1e}  variance {:.6e} ± {:.1e}",
            mc.mean / q0,
            mc.stderr_mean / q0,
            mc.variance / (q0 * q0),
            mc.stderr_var / (q0 * q0)
        );
        n *= 2;
    }
    Ok(())
}
