use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::geometry::{validate_assumptions, AssumptionReport, ParamPoint};
use crate::SUPPORT_HALF_WIDTH;

const LATTICE: usize = 50;
const RANDOM_DRAWS: usize = 16;

/// Assumption report for a config, with human-readable warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub report: AssumptionReport,
    pub warnings: Vec<String>,
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples   {}", self.report.samples)?;
        writeln!(f, "F_min     {:.6}", self.report.f_min)?;
        writeln!(f, "F_max     {:.6}", self.report.f_max)?;
        writeln!(f, "mode_sum  {:.6}", self.report.mode_sum)?;
        if self.warnings.is_empty() {
            writeln!(f, "no warnings")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Samples the map of `cfg` (all `N` parameters) on a 50×50 lattice of the
/// square. At each point the parameters take the two extreme sign patterns
/// that push the stretch `e` furthest from 1, plus `y = 0` and a few fixed
/// random draws.
pub fn diagnose(cfg: &ExperimentConfig) -> Result<Diagnostics> {
    let spec = cfg.spec_for(cfg.n_large.iter().copied().max().unwrap_or(1))?;
    let n = spec.total_dims();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let draws: Vec<ParamPoint> = (0..RANDOM_DRAWS)
        .map(|_| {
            let v = (0..n)
                .map(|_| rng.random_range(-SUPPORT_HALF_WIDTH..SUPPORT_HALF_WIDTH))
                .collect();
            ParamPoint::new(&spec, v)
        })
        .collect::<Result<_>>()?;

    let mut samples = Vec::new();
    for i in 0..LATTICE {
        for j in 0..LATTICE {
            let x = [
                i as f64 / (LATTICE - 1) as f64,
                j as f64 / (LATTICE - 1) as f64,
            ];
            let modes = spec.sample_modes(x[0]);
            for sign in [1.0, -1.0] {
                let v = modes
                    .value
                    .iter()
                    .map(|s| sign * SUPPORT_HALF_WIDTH * if *s < 0.0 { -1.0 } else { 1.0 })
                    .collect();
                samples.push((x, ParamPoint::new(&spec, v)?));
            }
            samples.push((x, ParamPoint::zeros(&spec)));
            samples.extend(draws.iter().map(|y| (x, y.clone())));
        }
    }
    let report = validate_assumptions(&spec, &samples);
    let mut warnings = Vec::new();
    if report.f_min <= 0.0 {
        warnings.push(format!(
            "the map folds (smallest singular value of ∂F is {:.4} ≤ 0)",
            report.f_min
        ));
    }
    if report.mode_sum >= 1.0 {
        warnings.push(format!(
            "mode gradient sum {:.4} ≥ 1: the perturbation expansion is not guaranteed to converge",
            report.mode_sum
        ));
    }
    Ok(Diagnostics { report, warnings })
}
