//! Smolyak grids on the uniform measure over `(-√3, √3)^d`: knot counts for
//! the three index rules, quadrature of a smooth function, and interpolation.
//!
//! ```text
//! cargo run --example sparse_grid_quadrature -- [dim] [max_level]
//! ```

use hybrid_uq::{IndexRule, SparseGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let dim = args.first().copied().unwrap_or(4);
    let max_level = args.get(1).copied().unwrap_or(5);

    // E[exp(Σ y_n / d)] factorizes: each factor is sinh(√3/d) / (√3/d)
    let a = 3f64.sqrt() / dim as f64;
    let exact = (a.sinh() / a).powi(dim as i32);
    let f = |y: &[f64]| (y.iter().sum::<f64>() / dim as f64).exp();

    println!("dim {dim}, E[f] = {exact:.15}");
    println!(
        "{:>5} {:>8} {:>8} {:>8} {:>12}",
        "w", "smolyak", "td", "hc", "quad err"
    );
    for w in 0..=max_level {
        let grid = SparseGrid::new(dim, w)?;
        let td = SparseGrid::with_rule(dim, w, IndexRule::TotalDegree, usize::MAX)?;
        let hc = SparseGrid::with_rule(dim, w, IndexRule::HyperbolicCross, usize::MAX)?;
        let samples: Vec<f64> = grid.physical_knots().iter().map(|y| f(y)).collect();
        let err = (grid.integrate(&samples)? - exact).abs();
        println!(
            "{w:>5} {:>8} {:>8} {:>8} {err:>12.3e}",
            grid.len(),
            td.len(),
            hc.len()
        );
    }

    let grid = SparseGrid::new(dim, max_level)?;
    let samples: Vec<f64> = grid.physical_knots().iter().map(|y| f(y)).collect();
    let y = vec![0.3; dim];
    println!(
        "interpolant at y = 0.3: {:.12} (f = {:.12})",
        grid.interpolate(&samples, &y)?,
        f(&y)
    );
    Ok(())
}
