//! Finite-difference validation of the analytic derivative kernels.
//!
//! Two measurements per draw: the relative error of a central difference at
//! a small step against the analytic derivative, and the observed order of
//! the first-order Taylor remainder `‖f(s) - f(0) - s·f'(0)‖` over a
//! decreasing step sequence (2 when the derivative is right, 1 when not).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::str::FromStr;

use crate::error::{Result, UqError};
use crate::fem::FemModel;
use crate::geometry::{dg_along, jacobian_at, tail_direction, DeformationSpec, ParamPoint, Region};
use crate::mat2::{det_derivative, inverse_derivative, Mat2};
use crate::perturbation::compute_gamma;
use crate::SUPPORT_HALF_WIDTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdKind {
    /// `∂G/∂ỹ_n` and the matrix-inverse derivative identity.
    Dg,
    /// `∂det(∂F)/∂ỹ_n` and Jacobi's formula.
    Ddet,
    /// `∂Q_h/∂ỹ_n = γ_n` through full primal solves.
    Dq,
}

impl FromStr for FdKind {
    type Err = UqError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dg" => Ok(FdKind::Dg),
            "ddet" => Ok(FdKind::Ddet),
            "dq" => Ok(FdKind::Dq),
            other => Err(UqError::InvalidArgument(format!(
                "unknown fd-check kind '{other}' (expected dG, ddet or dQ)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdConfig {
    pub trials: usize,
    pub seed: u64,
    /// Decreasing steps (in the scaled variable) for the Taylor-remainder order.
    pub steps: Vec<f64>,
    /// Step of the central difference used for the error.
    pub fd_step: f64,
    /// Forces the map amplitude `c` in every draw.
    pub amplitude: Option<f64>,
    /// Mesh size for [`FdKind::Dq`].
    pub mesh_m: usize,
    /// Map for [`FdKind::Dq`].
    pub spec: DeformationSpec,
}

impl FdConfig {
    pub fn for_kind(kind: FdKind) -> Self {
        let (trials, fd_step) = match kind {
            FdKind::Dg | FdKind::Ddet => (100, 1e-5),
            FdKind::Dq => (10, 1e-3),
        };
        FdConfig {
            trials,
            seed: 20_240_601,
            steps: vec![1e-2, 5e-3, 2.5e-3],
            fd_step,
            amplitude: None,
            mesh_m: 65,
            spec: DeformationSpec::experiment(4).expect("valid experiment"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub kind: FdKind,
    pub trials: usize,
    /// Worst relative error of the central difference.
    pub max_rel_error: f64,
    /// Smallest observed Taylor-remainder order (NaN when every remainder
    /// was at round-off level).
    pub observed_order: f64,
}

fn rel_err(fd: f64, exact: f64) -> f64 {
    let scale = fd.abs().max(exact.abs());
    if scale == 0.0 {
        0.0
    } else {
        (fd - exact).abs() / scale
    }
}

fn rel_err_mat(fd: &Mat2, exact: &Mat2) -> f64 {
    let scale = fd.frobenius().max(exact.frobenius());
    if scale == 0.0 {
        0.0
    } else {
        (*fd - *exact).frobenius() / scale
    }
}

/// Least-squares slope of `log r` against `log s`, ignoring remainders at
/// round-off level relative to `scale`.
fn remainder_order(steps: &[f64], remainders: &[f64], scale: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .zip(remainders)
        .filter(|(_, r)| **r > 1e-13 * scale.max(1e-300))
        .map(|(s, r)| (s.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn random_matrix(rng: &mut ChaCha8Rng, diag: f64) -> Mat2 {
    let mut e = || rng.random_range(-1.0..1.0);
    Mat2::new(diag + e(), e(), e(), diag + e())
}

fn random_spec(rng: &mut ChaCha8Rng, amplitude: Option<f64>) -> DeformationSpec {
    DeformationSpec {
        amplitude: amplitude.unwrap_or_else(|| rng.random_range(0.01..0.15)),
        decay: rng.random_range(1.0..4.0),
        corr_len: rng.random_range(0.3..1.0),
        period: rng.random_range(0.5..2.0),
        n_large: rng.random_range(1..=4),
        n_small: rng.random_range(1..=6),
    }
}

struct Tally {
    max_err: f64,
    min_order: f64,
}

impl Tally {
    fn new() -> Self {
        Tally {
            max_err: 0.0,
            min_order: f64::NAN,
        }
    }
    fn error(&mut self, e: f64) {
        self.max_err = self.max_err.max(e);
    }
    fn order(&mut self, o: Option<f64>) {
        if let Some(o) = o {
            self.min_order = if self.min_order.is_nan() {
                o
            } else {
                self.min_order.min(o)
            };
        }
    }
}

/// Random matrix identities: Jacobi's formula (`ddet`) or the inverse
/// derivative (`dG`).
fn matrix_identity_trials(kind: FdKind, cfg: &FdConfig, rng: &mut ChaCha8Rng, tally: &mut Tally) {
    for _ in 0..cfg.trials {
        let a = random_matrix(rng, 2.5);
        let b = loop {
            let b = random_matrix(rng, 0.0);
            if b.det().abs() > 0.05 {
                break b;
            }
        };
        let a_inv = a.inverse().expect("diagonally dominant");
        let h = cfg.fd_step;
        match kind {
            FdKind::Ddet => {
                let f = |t: f64| (a + b.scale(t)).det();
                let exact = det_derivative(&a, &a_inv, &b);
                tally.error(rel_err((f(h) - f(-h)) / (2.0 * h), exact));
                let rem: Vec<f64> = cfg
                    .steps
                    .iter()
                    .map(|&s| (f(s) - f(0.0) - s * exact).abs())
                    .collect();
                tally.order(remainder_order(&cfg.steps, &rem, f(0.0).abs()));
            }
            _ => {
                let f = |t: f64| (a + b.scale(t)).inverse().expect("small step");
                let exact = inverse_derivative(&a_inv, &b);
                let fd = (f(h) - f(-h)).scale(1.0 / (2.0 * h));
                tally.error(rel_err_mat(&fd, &exact));
                let rem: Vec<f64> = cfg
                    .steps
                    .iter()
                    .map(|&s| (f(s) - f(0.0) - exact.scale(s)).frobenius())
                    .collect();
                tally.order(remainder_order(&cfg.steps, &rem, a_inv.frobenius()));
            }
        }
    }
}

/// Map-level derivatives at random `(spec, y, x, n)` on the deformed half.
fn map_trials(kind: FdKind, cfg: &FdConfig, rng: &mut ChaCha8Rng, tally: &mut Tally) -> Result<()> {
    for _ in 0..cfg.trials {
        let spec = random_spec(rng, cfg.amplitude);
        let y: Vec<f64> = (0..spec.total_dims())
            .map(|_| rng.random_range(-SUPPORT_HALF_WIDTH..SUPPORT_HALF_WIDTH))
            .collect();
        let x = [
            rng.random_range(0.0..=1.0),
            rng.random_range(0.5..1.0) + 1e-9,
        ];
        let n = rng.random_range(1..=spec.n_small);
        let j = spec.n_large + n - 1;
        let smu = spec.tail_sqrt_mu(n);
        let modes = spec.sample_modes(x[0]);
        // geometry with the scaled tail variable ỹ_n shifted by s
        let at = |s: f64| {
            let mut ys = y.clone();
            ys[j] += s / smu;
            jacobian_at(&modes, &ys, x, Region::Upper, 1.0)
        };
        let base = at(0.0)?;
        let b = tail_direction(&spec, &modes, x, Region::Upper, n);
        let h = cfg.fd_step;
        let (plus, minus) = (at(h)?, at(-h)?);
        match kind {
            FdKind::Ddet => {
                let exact = det_derivative(&base.df, &base.df_inv, &b);
                tally.error(rel_err((plus.det - minus.det) / (2.0 * h), exact));
            }
            _ => {
                let exact = dg_along(&base, &b, 1.0);
                let fd = (plus.g - minus.g).scale(1.0 / (2.0 * h));
                tally.error(rel_err_mat(&fd, &exact));
                let rem: Vec<f64> = cfg
                    .steps
                    .iter()
                    .map(|&s| at(s).map(|g| (g.g - base.g - exact.scale(s)).frobenius()))
                    .collect::<Result<_>>()?;
                tally.order(remainder_order(&cfg.steps, &rem, base.g.frobenius()));
            }
        }
    }
    Ok(())
}

/// QoI slope along tail coordinates through full primal solves.
fn qoi_trials(cfg: &FdConfig, rng: &mut ChaCha8Rng, tally: &mut Tally) -> Result<()> {
    let spec = DeformationSpec {
        amplitude: cfg.amplitude.unwrap_or(cfg.spec.amplitude),
        ..cfg.spec.clone()
    };
    if spec.n_small == 0 {
        return Err(UqError::InvalidArgument("dQ check needs N_f ≥ 1".into()));
    }
    let model = FemModel::new(
        crate::fem::TriMesh::new(cfg.mesh_m)?,
        spec.clone(),
        crate::fem::PdeData::experiment(),
        &crate::fem::QoISpec::experiment(),
        crate::fem::SolverOptions {
            rel_tol: 1e-13,
            cap_factor: 200.0,
            ..Default::default()
        },
    )?;
    for _ in 0..cfg.trials {
        let large: Vec<f64> = (0..spec.n_large)
            .map(|_| 0.9 * rng.random_range(-SUPPORT_HALF_WIDTH..SUPPORT_HALF_WIDTH))
            .collect();
        let n = rng.random_range(1..=spec.n_small);
        let gamma = compute_gamma(&model, &large)?.gamma[n - 1];
        let smu = spec.tail_sqrt_mu(n);
        let q = |s: f64| {
            let mut v = large.clone();
            v.resize(spec.total_dims(), 0.0);
            v[spec.n_large + n - 1] = s / smu;
            model.qoi_at(&ParamPoint::unchecked(&spec, v))
        };
        let q0 = q(0.0)?;
        let h = cfg.fd_step;
        let fd = (q(h)? - q(-h)?) / (2.0 * h);
        tally.error(rel_err(fd, gamma));
        let rem: Vec<f64> = cfg
            .steps
            .iter()
            .map(|&s| q(s).map(|v| (v - q0 - s * gamma).abs()))
            .collect::<Result<_>>()?;
        tally.order(remainder_order(&cfg.steps, &rem, q0.abs()));
    }
    Ok(())
}

/// Runs the finite-difference check of `kind`.
pub fn fd_check(kind: FdKind, cfg: &FdConfig) -> Result<FdReport> {
    if cfg.steps.len() < 2 || cfg.steps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(UqError::InvalidArgument(
            "steps must be a decreasing sequence of at least two values".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tally = Tally::new();
    match kind {
        FdKind::Dg | FdKind::Ddet => {
            matrix_identity_trials(kind, cfg, &mut rng, &mut tally);
            map_trials(kind, cfg, &mut rng, &mut tally)?;
        }
        FdKind::Dq => qoi_trials(cfg, &mut rng, &mut tally)?,
    }
    Ok(FdReport {
        kind,
        trials: cfg.trials,
        max_rel_error: tally.max_err,
        observed_order: tally.min_order,
    })
}
