//! One deterministic sample: assemble the pulled-back problem at a parameter
//! point, solve the primal and adjoint systems, and compare the two ways of
//! evaluating the quantity of interest.
//!
//! ```text
//! cargo run --example fem_solve -- [m]
//! ```

use std::time::Instant;

use hybrid_uq::{DeformationSpec, FemModel, ParamPoint};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = std::env::args().nth(1).map_or(Ok(65), |s| s.parse())?;
    let spec = DeformationSpec::experiment(4)?;
    let model = FemModel::experiment(m, spec.clone())?;
    println!("mesh {m}x{m}, {} unknowns", model.dof_count());

    let q0 = model.nominal_qoi()?;
    println!("nominal QoI {q0:.10e}");

    let y = ParamPoint::new(
        &spec,
        (0..spec.total_dims())
            .map(|n| if n % 2 == 0 { 1.2 } else { -0.7 })
            .collect(),
    )?;
    let start = Instant::now();
    let sys = model.assemble(&y)?;
    let assembled = start.elapsed();
    let u = model.solve_primal_with(&sys)?;
    let phi = model.solve_adjoint_with(&sys)?;
    let solved = start.elapsed();

    let direct = model.eval_qoi(&u.coeffs);
    let dual = sys.pair(&model.restrict(&u.coeffs), &model.restrict(&phi.coeffs));
    println!("Q(y) = {direct:.12e}  (normalized {:.8})", direct / q0);
    println!(
        "a(u, phi) = {dual:.12e}, relative gap {:.2e}",
        ((direct - dual) / direct).abs()
    );
    println!(
        "CG iterations: primal {}, adjoint {}",
        u.stats.iterations, phi.stats.iterations
    );
    println!("assembly {assembled:.1?}, assembly + two solves {solved:.1?}");
    Ok(())
}
