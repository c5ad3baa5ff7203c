//! Computes (or reads back) full-dimensional collocation references for the
//! unit-square experiment and stores them in a cache directory.
//!
//! ```text
//! cargo run --release --example reference_cache -- <dir> [k] [m] [w_ref] [N] [rel_tol]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use hybrid_uq::oracle::{reference_cache_key, reference_statistics};
use hybrid_uq::{DeformationSpec, FemModel, PdeData, QoISpec, SolverOptions, TriMesh};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = PathBuf::from(args.first().map_or("reference-cache", String::as_str));
    let arg = |i: usize, default: f64| args.get(i).map_or(Ok(default), |s| s.parse::<f64>());
    let decay = arg(1, 3.0)?;
    let m = arg(2, 129.0)? as usize;
    let w_ref = arg(3, 5.0)? as usize;
    let total = arg(4, 15.0)? as usize;
    let rel_tol = arg(5, 1e-10)?;

    let spec = DeformationSpec {
        decay,
        n_small: total - 1,
        ..DeformationSpec::experiment(1)?
    };
    let solver = SolverOptions {
        rel_tol,
        cap_factor: 500.0,
        ..Default::default()
    };
    let model = FemModel::new(
        TriMesh::new(m)?,
        spec,
        PdeData::experiment(),
        &QoISpec::experiment(),
        solver,
    )?;
    let q0 = model.nominal_qoi()?;
    let start = Instant::now();
    let r = reference_statistics(&model, w_ref, Some(&dir))?;
    println!("{}", reference_cache_key(&model, w_ref));
    println!("mean      {:.10} (normalized {:.10})", r.mean, r.mean / q0);
    println!(
        "variance  {:.10e} (normalized {:.10e})",
        r.variance,
        r.variance / (q0 * q0)
    );
    println!("elapsed   {:.1?}", start.elapsed());
    Ok(())
}
