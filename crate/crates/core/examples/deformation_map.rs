//! The random deformation of the unit square: mode scales, the image of the
//! top edge for a few parameter draws, and the regularity diagnostics.
//!
//! ```text
//! cargo run --example deformation_map -- [amplitude]
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hybrid_uq::geometry::{eval_e, eval_jacobian, eval_map, validate_assumptions};
use hybrid_uq::{DeformationSpec, ParamPoint, SUPPORT_HALF_WIDTH};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let amplitude = std::env::args()
        .nth(1)
        .map_or(Ok(1.0 / 15.0), |s| s.parse())?;
    let spec = DeformationSpec {
        amplitude,
        ..DeformationSpec::experiment(4)?
    };
    println!(
        "N_s = {}, N_f = {}, c = {amplitude}, k = {}",
        spec.n_large, spec.n_small, spec.decay
    );
    for n in 1..=spec.total_dims() {
        println!("  sqrt(mu_{n:<2}) = {:.5}", spec.sqrt_mu(n));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let draw = |rng: &mut ChaCha8Rng| {
        let v = (0..spec.total_dims())
            .map(|_| rng.random_range(-SUPPORT_HALF_WIDTH..SUPPORT_HALF_WIDTH))
            .collect();
        ParamPoint::new(&spec, v)
    };

    println!("top edge heights F(x1, 1)_2 for three draws:");
    for _ in 0..3 {
        let y = draw(&mut rng)?;
        let row: Vec<String> = (0..=8)
            .map(|i| format!("{:.4}", eval_map(&spec, &y, [i as f64 / 8.0, 1.0])[1]))
            .collect();
        println!("  {}", row.join(" "));
    }

    let y = draw(&mut rng)?;
    let x = [0.3, 0.8];
    let jac = eval_jacobian(&spec, &y, x)?;
    println!(
        "at x = {x:?}: e = {:.6}, det = {:.6}, G = {:?}",
        eval_e(&spec, &y, x[0]),
        jac.det,
        jac.g.0
    );

    let mut samples = Vec::new();
    for i in 0..40 {
        for j in 0..40 {
            let x = [i as f64 / 39.0, j as f64 / 39.0];
            samples.push((x, draw(&mut rng)?));
        }
    }
    let report = validate_assumptions(&spec, &samples);
    println!(
        "singular values of dF in [{:.4}, {:.4}], mode sum {:.4}, violated: {}",
        report.f_min,
        report.f_max,
        report.mode_sum,
        report.violated()
    );
    Ok(())
}
