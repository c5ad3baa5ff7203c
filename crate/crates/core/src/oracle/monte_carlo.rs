use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, UqError};
use crate::fem::FemModel;
use crate::geometry::ParamPoint;
use crate::SUPPORT_HALF_WIDTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub variance: f64,
    pub stderr_mean: f64,
    pub stderr_var: f64,
    pub samples: usize,
}

/// Sample `index` of the stream `seed`: an independent ChaCha stream per
/// sample, so the draw does not depend on scheduling.
pub fn sample_point(seed: u64, index: u64, dims: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..dims)
        .map(|_| rng.random_range(-SUPPORT_HALF_WIDTH..SUPPORT_HALF_WIDTH))
        .collect()
}

/// Plain Monte Carlo over all `N` parameters of the model's map.
pub fn monte_carlo(model: &FemModel, cfg: &McConfig) -> Result<McEstimate> {
    if cfg.samples < 2 {
        return Err(UqError::InvalidArgument(
            "Monte Carlo needs at least 2 samples".into(),
        ));
    }
    let spec = model.spec();
    let dims = spec.total_dims();
    let values: Vec<Result<f64>> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let y = ParamPoint::new(spec, sample_point(cfg.seed, i, dims))?;
            model.qoi_at(&y)
        })
        .collect();
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    Ok(moments(&values))
}

/// Sample moments with standard errors, computed on data shifted by the
/// first sample.
pub(crate) fn moments(values: &[f64]) -> McEstimate {
    let m = values.len() as f64;
    let shift = values[0];
    let d: Vec<f64> = values.iter().map(|v| v - shift).collect();
    let dmean = d.iter().sum::<f64>() / m;
    let c: Vec<f64> = d.iter().map(|v| v - dmean).collect();
    let m2 = c.iter().map(|v| v * v).sum::<f64>() / m;
    let m4 = c.iter().map(|v| v.powi(4)).sum::<f64>() / m;
    let variance = m2 * m / (m - 1.0);
    let var_of_var = (m4 - variance * variance * (m - 3.0) / (m - 1.0)) / m;
    McEstimate {
        mean: shift + dmean,
        variance,
        stderr_mean: (variance / m).sqrt(),
        stderr_var: var_of_var.max(0.0).sqrt(),
        samples: values.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_in_support() {
        let a = sample_point(7, 3, 5);
        assert_eq!(a, sample_point(7, 3, 5));
        assert_ne!(a, sample_point(7, 4, 5));
        assert_ne!(a, sample_point(8, 3, 5));
        assert!(a.iter().all(|v| v.abs() < SUPPORT_HALF_WIDTH));
    }

    #[test]
    fn constant_data_has_zero_spread() {
        let e = moments(&[0.3; 10]);
        assert_eq!(e.mean, 0.3);
        assert_eq!(e.variance, 0.0);
        assert_eq!(e.stderr_mean, 0.0);
        assert_eq!(e.stderr_var, 0.0);
    }

    #[test]
    fn moments_of_small_sample() {
        let e = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert!((e.mean - 2.5).abs() < 1e-15);
        assert!((e.variance - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_moments() {
        let v: Vec<f64> = (0..20000).map(|i| sample_point(1, i, 1)[0]).collect();
        let e = moments(&v);
        assert!(e.mean.abs() < 3.0 * e.stderr_mean);
        assert!((e.variance - 1.0).abs() < 3.0 * e.stderr_var);
    }
}
