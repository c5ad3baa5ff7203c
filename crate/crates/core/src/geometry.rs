//! The stochastic deformation map of the unit square.
//!
//! Only the upper half `x2 > 0.5` is deformed: it is stretched vertically by
//! the random factor `e(x1, y)`,
//!
//! ```text
//! F(x1, x2) = (x1, (x2 - 0.5)·e(x1, y) + 0.5)   if x2 > 0.5
//! F(x1, x2) = (x1, x2)                           otherwise
//! ```
//!
//! with `e = 1 + c·Σ_n s_n(x1)·y_n`. Mode 1 is a constant `(√π·L/2)^{1/2}`,
//! every other mode is `√μ_n·φ_n(x1)` with `√μ_n = (√π·L)^{1/2} / n^k`.
//! The first `N_s` modes are the large-deviation block, the remaining `N_f`
//! the tail.
//!
//! Tail derivatives are taken with respect to the scaled variables
//! `ỹ_n = √μ_{f,n}·y_{f,n}`, so the unit tail direction `B_{f,n}` carries no
//! `√μ` factor.

use std::f64::consts::PI;

use crate::error::{Result, UqError};
use crate::mat2::{det_derivative, inverse_derivative, Mat2};
use crate::SUPPORT_HALF_WIDTH;

/// Determinants at or below this value are treated as a folded map.
pub const DET_EPSILON: f64 = 1e-10;

/// Parameterization of the random map.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationSpec {
    /// Amplitude `c`.
    pub amplitude: f64,
    /// Decay exponent `k` of `√μ_n`.
    pub decay: f64,
    /// Correlation length `L`.
    pub corr_len: f64,
    /// Mode period parameter `L_p`.
    pub period: f64,
    /// `N_s`, handled by collocation.
    pub n_large: usize,
    /// `N_f`, handled by the perturbation correction.
    pub n_small: usize,
}

impl DeformationSpec {
    pub fn new(
        amplitude: f64,
        decay: f64,
        corr_len: f64,
        period: f64,
        n_large: usize,
        n_small: usize,
    ) -> Result<Self> {
        let spec = DeformationSpec {
            amplitude,
            decay,
            corr_len,
            period,
            n_large,
            n_small,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The unit-square experiment: `c = 1/15`, `k = 3`, `L = 1/2`, `L_p = 1`,
    /// `N = 15` split as `N_s = n_large`.
    pub fn experiment(n_large: usize) -> Result<Self> {
        if n_large > 15 {
            return Err(UqError::InvalidSpec(format!(
                "N_s = {n_large} exceeds N = 15"
            )));
        }
        Self::new(1.0 / 15.0, 3.0, 0.5, 1.0, n_large, 15 - n_large)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(UqError::InvalidSpec(msg.to_string()));
        if self.n_large < 1 {
            return bad("N_s must be at least 1");
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return bad("amplitude c must be finite and non-negative");
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return bad("decay k must be positive");
        }
        if !(self.corr_len > 0.0 && self.corr_len.is_finite()) {
            return bad("correlation length L must be positive");
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return bad("period L_p must be positive");
        }
        Ok(())
    }

    /// Same map with a different large/small split of the same `N` modes.
    pub fn with_split(&self, n_large: usize) -> Result<Self> {
        let total = self.total_dims();
        if n_large > total {
            return Err(UqError::InvalidSpec(format!(
                "N_s = {n_large} exceeds N = {total}"
            )));
        }
        Self::new(
            self.amplitude,
            self.decay,
            self.corr_len,
            self.period,
            n_large,
            total - n_large,
        )
    }

    #[inline]
    pub fn total_dims(&self) -> usize {
        self.n_large + self.n_small
    }

    /// `√μ_n` for the 1-based mode index `n`.
    pub fn sqrt_mu(&self, n: usize) -> f64 {
        (PI.sqrt() * self.corr_len).sqrt() / (n as f64).powf(self.decay)
    }

    /// `√μ_{f,n} = √μ_{n+N_s}` for the 1-based tail index `n`.
    pub fn tail_sqrt_mu(&self, n: usize) -> f64 {
        self.sqrt_mu(n + self.n_large)
    }

    /// Constant amplitude of the first mode.
    pub fn first_mode_scale(&self) -> f64 {
        (PI.sqrt() * self.corr_len / 2.0).sqrt()
    }

    /// Mode shape `φ_n(x1)` (1-based `n`).
    pub fn mode_shape(&self, n: usize, x1: f64) -> f64 {
        let nf = n as f64;
        let arg = nf * PI * x1 / (2.0 * self.period);
        (arg.sin() - arg.cos() + x1.cosh() + x1.sinh()) / nf
    }

    /// `dφ_n/dx1`.
    pub fn mode_shape_slope(&self, n: usize, x1: f64) -> f64 {
        let nf = n as f64;
        let freq = nf * PI / (2.0 * self.period);
        let arg = freq * x1;
        (freq * (arg.cos() + arg.sin()) + x1.sinh() + x1.cosh()) / nf
    }

    /// Coefficients of every `y_n` in `e(x1, ·)` and `∂_{x1} e(x1, ·)`.
    pub fn sample_modes(&self, x1: f64) -> ModeSample {
        let total = self.total_dims();
        let c = self.amplitude;
        let mut value = Vec::with_capacity(total);
        let mut slope = Vec::with_capacity(total);
        let mut unit_value = Vec::with_capacity(total);
        let mut unit_slope = Vec::with_capacity(total);
        for n in 1..=total {
            if n == 1 {
                let s = self.first_mode_scale();
                value.push(c * s);
                slope.push(0.0);
                unit_value.push(c);
                unit_slope.push(0.0);
            } else {
                let phi = self.mode_shape(n, x1);
                let dphi = self.mode_shape_slope(n, x1);
                let smu = self.sqrt_mu(n);
                value.push(c * smu * phi);
                slope.push(c * smu * dphi);
                unit_value.push(c * phi);
                unit_slope.push(c * dphi);
            }
        }
        ModeSample {
            x1,
            value,
            slope,
            unit_value,
            unit_slope,
        }
    }
}

/// Mode coefficients at a fixed `x1`, reused across all `y`.
#[derive(Debug, Clone)]
pub struct ModeSample {
    pub x1: f64,
    /// `c·s_n(x1)`: coefficient of `y_n` in `e`.
    pub value: Vec<f64>,
    /// `c·s_n'(x1)`.
    pub slope: Vec<f64>,
    /// Coefficient per unit of the scaled variable `√μ_n·y_n` (no `√μ`).
    pub unit_value: Vec<f64>,
    pub unit_slope: Vec<f64>,
}

impl ModeSample {
    /// `(e, ∂_{x1} e)` at parameters `y`.
    #[inline]
    pub fn stretch(&self, y: &[f64]) -> (f64, f64) {
        let mut e = 1.0;
        let mut de = 0.0;
        for ((v, s), yn) in self.value.iter().zip(&self.slope).zip(y) {
            e += v * yn;
            de += s * yn;
        }
        (e, de)
    }
}

/// A realization `y ∈ Γ = (-√3, √3)^N`, split into `y_s` (first `N_s`) and
/// `y_f` (last `N_f`).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    values: Vec<f64>,
    n_large: usize,
}

impl ParamPoint {
    pub fn new(spec: &DeformationSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.total_dims() {
            return Err(UqError::DimensionMismatch {
                expected: spec.total_dims(),
                got: values.len(),
            });
        }
        let bound = SUPPORT_HALF_WIDTH * (1.0 + 1e-12);
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.abs() <= bound)) {
            return Err(UqError::InvalidPoint(format!(
                "y_{} = {v} outside (-√3, √3)",
                i + 1
            )));
        }
        Ok(ParamPoint {
            values,
            n_large: spec.n_large,
        })
    }

    /// Point without the support check, for derivative probes that step
    /// far along a tail coordinate with a tiny `√μ`.
    pub(crate) fn unchecked(spec: &DeformationSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.total_dims());
        ParamPoint {
            values,
            n_large: spec.n_large,
        }
    }

    pub fn zeros(spec: &DeformationSpec) -> Self {
        ParamPoint {
            values: vec![0.0; spec.total_dims()],
            n_large: spec.n_large,
        }
    }

    /// Large block `y_s` with the tail set to zero.
    pub fn from_large(spec: &DeformationSpec, large: &[f64]) -> Result<Self> {
        Self::from_blocks(spec, large, &vec![0.0; spec.n_small])
    }

    pub fn from_blocks(spec: &DeformationSpec, large: &[f64], small: &[f64]) -> Result<Self> {
        if large.len() != spec.n_large {
            return Err(UqError::DimensionMismatch {
                expected: spec.n_large,
                got: large.len(),
            });
        }
        if small.len() != spec.n_small {
            return Err(UqError::DimensionMismatch {
                expected: spec.n_small,
                got: small.len(),
            });
        }
        let mut v = large.to_vec();
        v.extend_from_slice(small);
        Self::new(spec, v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn large(&self) -> &[f64] {
        &self.values[..self.n_large]
    }

    pub fn small(&self) -> &[f64] {
        &self.values[self.n_large..]
    }

    /// Scaled tail variables `ỹ_n = √μ_{f,n}·y_{f,n}`.
    pub fn scaled_tail(&self, spec: &DeformationSpec) -> Vec<f64> {
        self.small()
            .iter()
            .enumerate()
            .map(|(i, y)| spec.tail_sqrt_mu(i + 1) * y)
            .collect()
    }
}

/// Which branch of the piecewise map applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `x2 ≤ 0.5`: identity.
    Lower,
    /// `x2 > 0.5`: stretched.
    Upper,
}

impl Region {
    pub fn of(x: [f64; 2]) -> Region {
        if x[1] > 0.5 {
            Region::Upper
        } else {
            Region::Lower
        }
    }
}

/// Pointwise geometry: mapped point, `∂F`, `det ∂F`, `∂F⁻¹` and
/// `G = (a∘F)·det(∂F)·∂F⁻¹∂F⁻ᵀ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianData {
    pub mapped: [f64; 2],
    pub df: Mat2,
    pub det: f64,
    pub df_inv: Mat2,
    pub g: Mat2,
}

/// `e(x1, y)`.
pub fn eval_e(spec: &DeformationSpec, y: &ParamPoint, x1: f64) -> f64 {
    spec.sample_modes(x1).stretch(y.as_slice()).0
}

/// `F(x, y)`.
pub fn eval_map(spec: &DeformationSpec, y: &ParamPoint, x: [f64; 2]) -> [f64; 2] {
    match Region::of(x) {
        Region::Lower => x,
        Region::Upper => {
            let e = eval_e(spec, y, x[0]);
            [x[0], (x[1] - 0.5) * e + 0.5]
        }
    }
}

/// Geometry at `x` with unit diffusion.
pub fn eval_jacobian(spec: &DeformationSpec, y: &ParamPoint, x: [f64; 2]) -> Result<JacobianData> {
    let modes = spec.sample_modes(x[0]);
    jacobian_at(&modes, y.as_slice(), x, Region::of(x), 1.0)
}

/// Geometry from precomputed modes, with an explicit branch and the value of
/// `a∘F` at `x`. The branch is explicit so that points on `x2 = 0.5` can be
/// evaluated from the element they belong to.
#[inline]
pub fn jacobian_at(
    modes: &ModeSample,
    y: &[f64],
    x: [f64; 2],
    region: Region,
    diffusion: f64,
) -> Result<JacobianData> {
    let stretch = match region {
        Region::Lower => (1.0, 0.0),
        Region::Upper => modes.stretch(y),
    };
    jacobian_from_stretch(stretch, x, region, diffusion)
}

/// Geometry from a precomputed `(e, ∂_{x1} e)` at `x1`.
#[inline]
pub fn jacobian_from_stretch(
    (e, de): (f64, f64),
    x: [f64; 2],
    region: Region,
    diffusion: f64,
) -> Result<JacobianData> {
    let (df, mapped) = match region {
        Region::Lower => (Mat2::IDENTITY, x),
        Region::Upper => {
            let t = x[1] - 0.5;
            (Mat2::new(1.0, 0.0, t * de, e), [x[0], t * e + 0.5])
        }
    };
    let det = df.det();
    if !(det > DET_EPSILON) {
        return Err(UqError::NonInvertibleMap {
            x1: x[0],
            x2: x[1],
            det,
        });
    }
    let df_inv = df.inverse().ok_or(UqError::NonInvertibleMap {
        x1: x[0],
        x2: x[1],
        det,
    })?;
    let g = (df_inv * df_inv.transpose()).scale(diffusion * det);
    Ok(JacobianData {
        mapped,
        df,
        det,
        df_inv,
        g,
    })
}

/// `B_{f,n}(x) = ∂(∂F)/∂ỹ_n` for the 1-based tail index `n`.
#[inline]
pub fn tail_direction(
    spec: &DeformationSpec,
    modes: &ModeSample,
    x: [f64; 2],
    region: Region,
    n: usize,
) -> Mat2 {
    match region {
        Region::Lower => Mat2::ZERO,
        Region::Upper => {
            let j = spec.n_large + n - 1;
            Mat2::new(
                0.0,
                0.0,
                (x[1] - 0.5) * modes.unit_slope[j],
                modes.unit_value[j],
            )
        }
    }
}

/// `∂F/∂ỹ_n`, the displacement of the mapped point along a tail direction.
#[inline]
pub fn tail_displacement(
    spec: &DeformationSpec,
    modes: &ModeSample,
    x: [f64; 2],
    region: Region,
    n: usize,
) -> [f64; 2] {
    match region {
        Region::Lower => [0.0, 0.0],
        Region::Upper => [0.0, (x[1] - 0.5) * modes.unit_value[spec.n_large + n - 1]],
    }
}

/// `∂G/∂ỹ` along the Jacobian direction `b` by the product rule.
#[inline]
pub fn dg_along(jac: &JacobianData, b: &Mat2, diffusion: f64) -> Mat2 {
    let ddet = det_derivative(&jac.df, &jac.df_inv, b);
    let dinv = inverse_derivative(&jac.df_inv, b);
    let c = jac.df_inv * jac.df_inv.transpose();
    let dc = dinv * jac.df_inv.transpose() + jac.df_inv * dinv.transpose();
    (c.scale(ddet) + dc.scale(jac.det)).scale(diffusion)
}

fn check_tail_index(spec: &DeformationSpec, n: usize) -> Result<()> {
    if n == 0 || n > spec.n_small {
        return Err(UqError::IndexOutOfRange {
            index: n,
            max: spec.n_small,
        });
    }
    Ok(())
}

/// `∂G/∂ỹ_n` at `x` (unit diffusion).
pub fn eval_dg_tail(spec: &DeformationSpec, y: &ParamPoint, x: [f64; 2], n: usize) -> Result<Mat2> {
    check_tail_index(spec, n)?;
    let modes = spec.sample_modes(x[0]);
    let region = Region::of(x);
    let jac = jacobian_at(&modes, y.as_slice(), x, region, 1.0)?;
    let b = tail_direction(spec, &modes, x, region, n);
    Ok(dg_along(&jac, &b, 1.0))
}

/// `∂det(∂F)/∂ỹ_n` at `x`, by Jacobi's formula.
pub fn eval_ddet_tail(
    spec: &DeformationSpec,
    y: &ParamPoint,
    x: [f64; 2],
    n: usize,
) -> Result<f64> {
    check_tail_index(spec, n)?;
    let modes = spec.sample_modes(x[0]);
    let region = Region::of(x);
    let jac = jacobian_at(&modes, y.as_slice(), x, region, 1.0)?;
    let b = tail_direction(spec, &modes, x, region, n);
    Ok(det_derivative(&jac.df, &jac.df_inv, &b))
}

/// Empirical check of the map's regularity assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// Smallest singular value of `∂F` over the samples.
    pub f_min: f64,
    /// Largest singular value of `∂F` over the samples.
    pub f_max: f64,
    /// `sup_x Σ_l ‖B_l(x)‖₂ √μ_l` over the sampled `x`.
    pub mode_sum: f64,
    pub samples: usize,
}

impl AssumptionReport {
    pub fn violated(&self) -> bool {
        self.f_min <= 0.0 || self.mode_sum >= 1.0
    }
}

/// Singular values of `∂F` and the mode-gradient sum over `(x, y)` samples.
/// Folded maps are reported, not rejected.
pub fn validate_assumptions(
    spec: &DeformationSpec,
    samples: &[([f64; 2], ParamPoint)],
) -> AssumptionReport {
    let mut f_min = f64::INFINITY;
    let mut f_max = f64::NEG_INFINITY;
    let mut mode_sum: f64 = 0.0;
    for (x, y) in samples {
        let modes = spec.sample_modes(x[0]);
        let df = match Region::of(*x) {
            Region::Lower => Mat2::IDENTITY,
            Region::Upper => {
                let (e, de) = modes.stretch(y.as_slice());
                Mat2::new(1.0, 0.0, (x[1] - 0.5) * de, e)
            }
        };
        let (lo, hi) = df.singular_values();
        // a reflected map has det < 0: count it as a non-positive singular value
        let lo = if df.det() <= 0.0 { -lo } else { lo };
        f_min = f_min.min(lo);
        f_max = f_max.max(hi);
        if Region::of(*x) == Region::Upper {
            let t = x[1] - 0.5;
            let s: f64 = modes
                .value
                .iter()
                .zip(&modes.slope)
                .map(|(v, d)| Mat2::new(0.0, 0.0, t * d, *v).singular_values().1)
                .sum();
            mode_sum = mode_sum.max(s);
        }
    }
    AssumptionReport {
        f_min,
        f_max,
        mode_sum,
        samples: samples.len(),
    }
}
