//! Finite-difference checks of the tail derivatives: the pulled-back
//! diffusion tensor, the Jacobian determinant and the QoI slope.
//!
//! ```text
//! cargo run --release --example derivative_checks -- [trials]
//! ```

use hybrid_uq::oracle::{fd_check, FdConfig, FdKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials: Option<usize> = std::env::args().nth(1).map(|s| s.parse()).transpose()?;
    for kind in [FdKind::Dg, FdKind::Ddet, FdKind::Dq] {
        let mut cfg = FdConfig::for_kind(kind);
        if let Some(t) = trials {
            cfg.trials = t;
        }
        let r = fd_check(kind, &cfg)?;
        println!(
            "{kind:?}: {} draws, max relative error {:.3e}, observed order {:.3}",
            r.trials, r.max_rel_error, r.observed_order
        );
    }
    Ok(())
}
