//! Fixed-size 2×2 matrices for the pointwise geometry kernels.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        Mat2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    /// Inverse by the adjugate formula. `None` when the determinant is zero.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 {
            return None;
        }
        let [[a, b], [c, e]] = self.0;
        Some(Mat2([[e / d, -b / d], [-c / d, a / d]]))
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Self {
        Mat2([
            [self.0[0][0] * s, self.0[0][1] * s],
            [self.0[1][0] * s, self.0[1][1] * s],
        ])
    }

    #[inline]
    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// `uᵀ M v`.
    #[inline]
    pub fn bilinear(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        let mv = self.mul_vec(v);
        u[0] * mv[0] + u[1] * mv[1]
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Singular values `(σ_min, σ_max)` from the closed form for 2×2 matrices.
    pub fn singular_values(&self) -> (f64, f64) {
        let t = self.0.iter().flatten().map(|x| x * x).sum::<f64>();
        let d = self.det();
        let disc = (t * t - 4.0 * d * d).max(0.0).sqrt();
        let smax = ((t + disc) / 2.0).sqrt();
        // σ_min·σ_max = |det| is better conditioned than the difference
        let smin = if smax > 0.0 { d.abs() / smax } else { 0.0 };
        (smin, smax)
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn sym_eigenvalues(&self) -> (f64, f64) {
        let a = self.0[0][0];
        let b = 0.5 * (self.0[0][1] + self.0[1][0]);
        let d = self.0[1][1];
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean - r, mean + r)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2([
            [self.0[0][0] + o.0[0][0], self.0[0][1] + o.0[0][1]],
            [self.0[1][0] + o.0[1][0], self.0[1][1] + o.0[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Derivative of `A⁻¹` along the direction `B`: `-A⁻¹ B A⁻¹`.
pub fn inverse_derivative(a_inv: &Mat2, b: &Mat2) -> Mat2 {
    -(*a_inv * *b * *a_inv)
}

/// Jacobi's formula: derivative of `det A` along `B` is `det(A)·tr(A⁻¹B)`.
pub fn det_derivative(a: &Mat2, a_inv: &Mat2, b: &Mat2) -> f64 {
    a.det() * (*a_inv * *b).trace()
}
