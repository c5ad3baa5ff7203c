//! Hybrid collocation–perturbation estimators.
//!
//! At a collocation knot `y_s` (tail parameters at zero) the QoI is expanded
//! to first order in the scaled tail variables `ỹ_n = √μ_{f,n}·y_{f,n}`:
//!
//! ```text
//! Q(y_s, y_f) ≈ Q(y_s, 0) + Σ_n √μ_{f,n} y_{f,n} γ_n(y_s),     γ_n = ∫_U α̃_n
//! ```
//!
//! where `α̃_n` pairs the primal and adjoint gradients with the tail
//! derivatives of the pulled-back coefficients. For independent, symmetric
//! parameters the mean correction vanishes and the variance correction is
//! `Σ_n μ_{f,n}·E[γ_n²]`.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Result, UqError};
use crate::fem::{FemModel, FemSolution, QUAD_BASIS};
use crate::geometry::{dg_along, tail_direction, tail_displacement, DeformationSpec, ParamPoint};
use crate::mat2::{det_derivative, Mat2};
use crate::sparse_grid::SparseGrid;

/// `γ_n(y_s)` for `n = 1..=N_f` at one knot.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSensitivity {
    pub gamma: Vec<f64>,
}

/// The five contributions to `γ_n`, kept apart:
///
/// 0. `-∫ ∇ûᵀ ∂G ∇φ`
/// 1. `∫ ∂(f∘F) |∂F| φ`
/// 2. `∫ (f∘F) ∂|∂F| φ`
/// 3. `-∫ ∇(∂ŵ)ᵀ G ∇φ`
/// 4. `-∫ ∇ŵᵀ ∂G ∇φ`
pub type GammaTerms = [f64; 5];

#[inline]
fn grad(el: &crate::fem::Element, coeffs: &[f64]) -> [f64; 2] {
    let mut g = [0.0; 2];
    for a in 0..3 {
        let c = coeffs[el.nodes[a]];
        g[0] += c * el.grads[a][0];
        g[1] += c * el.grads[a][1];
    }
    g
}

#[inline]
fn at_qp(el: &crate::fem::Element, coeffs: &[f64], k: usize) -> f64 {
    (0..3).map(|a| QUAD_BASIS[k][a] * coeffs[el.nodes[a]]).sum()
}

/// Per-term tail sensitivities from solved primal `û_h` and adjoint `φ_h` at
/// `y`, using the element quadrature of the stiffness assembly.
pub fn gamma_terms(
    model: &FemModel,
    y: &ParamPoint,
    primal: &FemSolution,
    adjoint: &FemSolution,
) -> Result<Vec<GammaTerms>> {
    let spec = model.spec();
    let n_small = spec.n_small;
    let mut terms = vec![[0.0; 5]; n_small];
    if n_small == 0 {
        return Ok(terms);
    }
    let table = model.stretch_table(y)?;
    let lifting = model.lifting_coeffs();
    let lifting_rate: Vec<Vec<f64>> = (1..=n_small)
        .map(|n| lifting_tail_derivative(model, n))
        .collect();
    let forcing = model.data().forcing.as_ref();
    let u = &primal.coeffs;
    let phi = &adjoint.coeffs;

    for el in model.elements() {
        let w = el.area / 3.0;
        let gu = grad(el, u);
        let gw = grad(el, lifting);
        let gphi = grad(el, phi);
        for k in 0..3 {
            let jac = model.qp_geometry(el, k, &table)?;
            let modes = &model.modes()[el.qp_mode[k]];
            let phi_k = at_qp(el, phi, k);
            for n in 1..=n_small {
                let b = tail_direction(spec, modes, el.qp[k], el.region, n);
                let t = &mut terms[n - 1];
                if b != Mat2::ZERO {
                    let dg = dg_along(&jac, &b, el.diffusion[k]);
                    t[0] -= w * dg.bilinear(gu, gphi);
                    t[4] -= w * dg.bilinear(gw, gphi);
                }
                if let Some(f) = forcing {
                    let fv = (f.value)(jac.mapped);
                    let fg = (f.gradient)(jac.mapped);
                    let disp = tail_displacement(spec, modes, el.qp[k], el.region, n);
                    let dfo = fg[0] * disp[0] + fg[1] * disp[1];
                    let ddet = det_derivative(&jac.df, &jac.df_inv, &b);
                    t[1] += w * dfo * jac.det * phi_k;
                    t[2] += w * fv * ddet * phi_k;
                }
                let gdw = grad(el, &lifting_rate[n - 1]);
                t[3] -= w * jac.g.bilinear(gdw, gphi);
            }
        }
    }
    Ok(terms)
}

/// `∂ŵ/∂ỹ_n`. The Dirichlet data and its lifting do not depend on the
/// parameters, so this is identically zero.
pub fn lifting_tail_derivative(model: &FemModel, _n: usize) -> Vec<f64> {
    vec![0.0; model.mesh().node_count()]
}

/// `γ_n = -∫ (∇û + ∇ŵ)ᵀ ∂G ∇φ`, the form the five-term integrand takes
/// when `f ≡ 0` and `∂ŵ = 0`.
pub fn gamma_reduced(
    model: &FemModel,
    y: &ParamPoint,
    primal: &FemSolution,
    adjoint: &FemSolution,
) -> Result<Vec<f64>> {
    let spec = model.spec();
    let mut gamma = vec![0.0; spec.n_small];
    let table = model.stretch_table(y)?;
    let full = model.full_solution(primal);
    for el in model.elements() {
        let w = el.area / 3.0;
        let gu = grad(el, &full);
        let gphi = grad(el, &adjoint.coeffs);
        for k in 0..3 {
            let jac = model.qp_geometry(el, k, &table)?;
            let modes = &model.modes()[el.qp_mode[k]];
            for (n, g) in gamma.iter_mut().enumerate() {
                let b = tail_direction(spec, modes, el.qp[k], el.region, n + 1);
                *g -= w * dg_along(&jac, &b, el.diffusion[k]).bilinear(gu, gphi);
            }
        }
    }
    Ok(gamma)
}

/// Tail sensitivities from already computed solutions at `(y_s, 0)`.
pub fn gamma_from_solutions(
    model: &FemModel,
    y: &ParamPoint,
    primal: &FemSolution,
    adjoint: &FemSolution,
) -> Result<TailSensitivity> {
    let gamma = gamma_terms(model, y, primal, adjoint)?
        .iter()
        .map(|t| t.iter().sum())
        .collect();
    Ok(TailSensitivity { gamma })
}

/// Solves primal and adjoint at `(y_s, 0)` and returns `γ_1..γ_{N_f}`.
pub fn compute_gamma(model: &FemModel, large: &[f64]) -> Result<TailSensitivity> {
    let y = ParamPoint::from_large(model.spec(), large)?;
    let (u, phi) = model.solve_pair(&y)?;
    gamma_from_solutions(model, &y, &u, &phi)
}

/// Mean correction for independent, symmetric parameters: `E[y_{f,n}] = 0`
/// factors out of every term, so this is exactly zero.
pub fn mean_correction(_grid: &SparseGrid, _gammas: &[TailSensitivity]) -> f64 {
    0.0
}

/// `Σ_n μ_{f,n}·E_{y_s}[γ_n²]` with the expectation taken by the sparse grid.
pub fn variance_correction(
    grid: &SparseGrid,
    gammas: &[TailSensitivity],
    spec: &DeformationSpec,
) -> Result<f64> {
    if gammas.len() != grid.len() {
        return Err(UqError::DimensionMismatch {
            expected: grid.len(),
            got: gammas.len(),
        });
    }
    let mut total = 0.0;
    for n in 1..=spec.n_small {
        let squares: Vec<f64> = gammas
            .iter()
            .map(|g| g.gamma.get(n - 1).map(|v| v * v))
            .collect::<Option<_>>()
            .ok_or(UqError::DimensionMismatch {
                expected: spec.n_small,
                got: gammas.iter().map(|g| g.gamma.len()).min().unwrap_or(0),
            })?;
        let mu = spec.tail_sqrt_mu(n).powi(2);
        total += mu * grid.integrate(&squares)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Collocation,
    Hybrid,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Collocation => "collocation",
            Method::Hybrid => "hybrid",
            Method::MonteCarlo => "monte-carlo",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = UqError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "collocation" => Ok(Method::Collocation),
            "hybrid" => Ok(Method::Hybrid),
            "monte-carlo" | "mc" => Ok(Method::MonteCarlo),
            other => Err(UqError::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Statistics produced by one estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub method: Method,
    pub n_large: usize,
    pub n_small: usize,
    /// Sparse-grid level; `None` for Monte Carlo.
    pub level: Option<usize>,
    /// Knots (or samples) at which the primal problem was solved.
    pub knots: usize,
    pub pde_solves: usize,
    pub mean: f64,
    pub variance: f64,
    pub correction_mean: f64,
    pub correction_var: f64,
    pub wall_ms: f64,
    pub mesh_m: usize,
    pub amplitude: f64,
    pub decay: f64,
}

impl EstimatorReport {
    /// Divides the QoI by `q0`: means scale by `1/q0`, variances by `1/q0²`.
    pub fn normalized(&self, q0: f64) -> Self {
        EstimatorReport {
            mean: self.mean / q0,
            variance: self.variance / (q0 * q0),
            correction_mean: self.correction_mean / q0,
            correction_var: self.correction_var / (q0 * q0),
            ..self.clone()
        }
    }
}

/// Levels of the hybrid estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HybridOptions {
    /// Level `w` of the grid for `Q_h(y_s, 0)`.
    pub level: usize,
    /// Level of the grid for `E[γ_n²]`; defaults to `level`, must not exceed it.
    pub correction_level: Option<usize>,
}

impl HybridOptions {
    pub fn new(level: usize) -> Self {
        HybridOptions {
            level,
            correction_level: None,
        }
    }

    pub fn with_correction_level(mut self, w_corr: usize) -> Self {
        self.correction_level = Some(w_corr);
        self
    }
}

struct KnotResult {
    qoi: f64,
    gamma: Option<TailSensitivity>,
    solves: usize,
}

/// Solves at every grid knot in parallel; results come back in knot order.
fn solve_knots<F>(grid: &SparseGrid, task: F) -> Result<Vec<KnotResult>>
where
    F: Fn(usize, &[f64]) -> Result<KnotResult> + Sync,
{
    let knots = grid.physical_knots();
    let results: Vec<Result<KnotResult>> = knots
        .par_iter()
        .enumerate()
        .map(|(k, y)| task(k, y))
        .collect();
    results.into_iter().collect()
}

/// Mean and variance of the interpolant. Moments are taken about the first
/// knot value, so a constant response has exactly zero variance.
fn statistics(grid: &SparseGrid, values: &[f64]) -> Result<(f64, f64)> {
    let mean = grid.integrate(values)?;
    let shift = values.first().copied().unwrap_or(0.0);
    let (d, d2): (Vec<f64>, Vec<f64>) = values
        .iter()
        .map(|v| {
            let d = v - shift;
            (d, d * d)
        })
        .unzip();
    let m1 = grid.integrate(&d)?;
    Ok((mean, grid.integrate(&d2)? - m1 * m1))
}

/// Pure stochastic collocation over the first `dims` parameters, the others
/// held at zero. One primal solve per knot.
pub fn run_collocation(model: &FemModel, level: usize, dims: usize) -> Result<EstimatorReport> {
    let spec = model.spec();
    let total = spec.total_dims();
    if dims == 0 || dims > total {
        return Err(UqError::InvalidArgument(format!(
            "collocation dimension {dims} outside 1..={total}"
        )));
    }
    let start = Instant::now();
    let grid = SparseGrid::new(dims, level)?;
    let results = solve_knots(&grid, |_, knot| {
        let mut v = knot.to_vec();
        v.resize(total, 0.0);
        let y = ParamPoint::new(spec, v)?;
        Ok(KnotResult {
            qoi: model.qoi_at(&y)?,
            gamma: None,
            solves: 1,
        })
    })?;
    let values: Vec<f64> = results.iter().map(|r| r.qoi).collect();
    let (mean, variance) = statistics(&grid, &values)?;
    Ok(EstimatorReport {
        method: Method::Collocation,
        n_large: dims,
        n_small: total - dims,
        level: Some(level),
        knots: grid.len(),
        pde_solves: results.iter().map(|r| r.solves).sum(),
        mean,
        variance,
        correction_mean: 0.0,
        correction_var: 0.0,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        mesh_m: model.mesh().m,
        amplitude: spec.amplitude,
        decay: spec.decay,
    })
}

/// Collocation over the `N_s` large parameters plus the first-order tail
/// correction. Knots of the correction grid (nested in the main grid) get an
/// extra adjoint solve.
pub fn run_hybrid(model: &FemModel, opts: HybridOptions) -> Result<EstimatorReport> {
    let spec = model.spec();
    let w = opts.level;
    let w_corr = opts.correction_level.unwrap_or(w);
    if w_corr > w {
        return Err(UqError::InvalidArgument(format!(
            "correction level {w_corr} exceeds level {w}"
        )));
    }
    let start = Instant::now();
    let grid = SparseGrid::new(spec.n_large, w)?;
    let corr_grid = if spec.n_small > 0 {
        Some(SparseGrid::new(spec.n_large, w_corr)?)
    } else {
        None
    };
    // main-grid knot -> correction-grid knot
    let mut corr_of = vec![None; grid.len()];
    if let Some(cg) = &corr_grid {
        for j in 0..cg.len() {
            let k = grid
                .find_knot_of(cg, j)
                .expect("correction grid is nested in the main grid");
            corr_of[k] = Some(j);
        }
    }

    let results = solve_knots(&grid, |k, knot| {
        let y = ParamPoint::from_large(spec, knot)?;
        if corr_of[k].is_some() {
            let (u, phi) = model.solve_pair(&y)?;
            Ok(KnotResult {
                qoi: model.eval_qoi(&u.coeffs),
                gamma: Some(gamma_from_solutions(model, &y, &u, &phi)?),
                solves: 2,
            })
        } else {
            Ok(KnotResult {
                qoi: model.qoi_at(&y)?,
                gamma: None,
                solves: 1,
            })
        }
    })?;

    let values: Vec<f64> = results.iter().map(|r| r.qoi).collect();
    let (mean, variance) = statistics(&grid, &values)?;
    let (correction_mean, correction_var) = match &corr_grid {
        Some(cg) => {
            let mut gammas = vec![None; cg.len()];
            for (k, r) in results.iter().enumerate() {
                if let Some(j) = corr_of[k] {
                    gammas[j] = r.gamma.clone();
                }
            }
            let gammas: Vec<TailSensitivity> =
                gammas.into_iter().map(|g| g.expect("filled")).collect();
            (
                mean_correction(cg, &gammas),
                variance_correction(cg, &gammas, spec)?,
            )
        }
        None => (0.0, 0.0),
    };

    Ok(EstimatorReport {
        method: Method::Hybrid,
        n_large: spec.n_large,
        n_small: spec.n_small,
        level: Some(w),
        knots: grid.len(),
        pde_solves: results.iter().map(|r| r.solves).sum(),
        mean: mean + correction_mean,
        variance: variance + correction_var,
        correction_mean,
        correction_var,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        mesh_m: model.mesh().m,
        amplitude: spec.amplitude,
        decay: spec.decay,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(m: usize, c: f64, n_large: usize, n_small: usize) -> FemModel {
        let spec = DeformationSpec::new(c, 3.0, 0.5, 1.0, n_large, n_small).unwrap();
        FemModel::experiment(m, spec).unwrap()
    }

    #[test]
    fn zero_amplitude_gives_zero_gamma() {
        let fm = model(9, 0.0, 2, 3);
        let g = compute_gamma(&fm, &[0.5, -1.0]).unwrap();
        assert_eq!(g.gamma, vec![0.0; 3]);
    }

    #[test]
    fn empty_tail() {
        let fm = model(9, 0.1, 2, 0);
        assert!(compute_gamma(&fm, &[0.5, -1.0]).unwrap().gamma.is_empty());
    }

    #[test]
    fn five_terms_reduce_to_two() {
        let fm = model(17, 1.0 / 15.0, 2, 3);
        let y = ParamPoint::from_large(fm.spec(), &[0.9, -1.3]).unwrap();
        let (u, phi) = fm.solve_pair(&y).unwrap();
        let terms = gamma_terms(&fm, &y, &u, &phi).unwrap();
        let reduced = gamma_reduced(&fm, &y, &u, &phi).unwrap();
        for (t, r) in terms.iter().zip(&reduced) {
            assert_eq!(t[1], 0.0);
            assert_eq!(t[2], 0.0);
            assert_eq!(t[3], 0.0);
            let full: f64 = t.iter().sum();
            assert!(
                (full - r).abs() <= 1e-14 * r.abs().max(1e-300),
                "{full} vs {r}"
            );
        }
    }

    #[test]
    fn corrections_basic() {
        let spec = DeformationSpec::new(0.1, 3.0, 0.5, 1.0, 2, 1).unwrap();
        let grid = SparseGrid::new(2, 2).unwrap();
        let g = 0.37;
        let gammas = vec![TailSensitivity { gamma: vec![g] }; grid.len()];
        let v = variance_correction(&grid, &gammas, &spec).unwrap();
        let mu = spec.tail_sqrt_mu(1).powi(2);
        assert!((v - mu * g * g).abs() < 1e-15);
        assert_eq!(mean_correction(&grid, &gammas), 0.0);
        assert!(variance_correction(&grid, &gammas[1..], &spec).is_err());
    }

    #[test]
    fn zero_level_collocation_is_nominal() {
        let fm = model(9, 0.1, 2, 2);
        let r = run_collocation(&fm, 0, 2).unwrap();
        assert_eq!(r.knots, 1);
        assert_eq!(r.variance, 0.0);
        assert_eq!(r.mean, fm.nominal_qoi().unwrap());
    }

    #[test]
    fn correction_level_must_not_exceed_level() {
        let fm = model(9, 0.1, 2, 2);
        assert!(run_hybrid(&fm, HybridOptions::new(1).with_correction_level(2)).is_err());
    }

    #[test]
    fn hybrid_solve_counts() {
        let fm = model(9, 0.1, 2, 2);
        let r = run_hybrid(&fm, HybridOptions::new(2).with_correction_level(1)).unwrap();
        assert_eq!(r.knots, 13);
        assert_eq!(r.pde_solves, 13 + 5);
        assert!(r.correction_var >= 0.0);
        assert_eq!(r.variance, {
            let c = run_collocation(&fm, 2, 2).unwrap();
            c.variance + r.correction_var
        });
    }

    #[test]
    fn normalization_scales_moments() {
        let fm = model(9, 0.1, 2, 1);
        let r = run_hybrid(&fm, HybridOptions::new(1)).unwrap();
        let n = r.normalized(2.0);
        assert_eq!(n.mean, r.mean / 2.0);
        assert_eq!(n.variance, r.variance / 4.0);
        assert_eq!(n.correction_var, r.correction_var / 4.0);
    }
}
