//! Compressed sparse row storage and preconditioned conjugate gradients.

use crate::error::{Result, UqError};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given (sorted, deduplicated) column lists per row.
    pub fn from_pattern(rows: &[Vec<usize>]) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for cols in rows {
            col_idx.extend_from_slice(cols);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    /// Storage slot of entry `(i, j)`, if it is in the pattern.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| range.start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.values[s])
    }

    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *o = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .all(|k| self.get(self.col_idx[k], i) == self.values[k])
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target `‖b - Ax‖ / ‖b‖`.
    pub rel_tol: f64,
    /// Iteration cap is `cap_factor·√n`.
    pub cap_factor: f64,
    /// Start primal/adjoint solves from the nominal (`y = 0`) solutions.
    pub warm_start: bool,
    pub preconditioner: Preconditioner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    /// Diagonal scaling.
    Jacobi,
    /// V-cycle on the nested meshes, falling back to Jacobi when the mesh
    /// does not coarsen (`m - 1` not a power of two times a small size).
    #[default]
    Multigrid,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tol: 1e-10,
            cap_factor: 50.0,
            warm_start: true,
            preconditioner: Preconditioner::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for SPD `A` with Jacobi preconditioning, starting from
/// `x` (overwritten).
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    opts: &SolverOptions,
) -> Result<CgStats> {
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    preconditioned_cg(a, b, x, opts, |r, z| {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&inv_diag) {
            *zi = ri * d;
        }
    })
}

/// Conjugate gradients with a symmetric positive definite preconditioner
/// `precond(r, z)` writing `z ≈ A⁻¹ r`.
pub fn preconditioned_cg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    opts: &SolverOptions,
    mut precond: impl FnMut(&[f64], &mut [f64]),
) -> Result<CgStats> {
    let n = a.n;
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats {
            iterations: 0,
            rel_residual: 0.0,
        });
    }
    let cap = ((opts.cap_factor * (n as f64).sqrt()).ceil() as usize).max(1);

    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut res = dot(&r, &r).sqrt() / bnorm;
    if res <= opts.rel_tol {
        return Ok(CgStats {
            iterations: 0,
            rel_residual: res,
        });
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=cap {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(UqError::SolverDivergence {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        let mut rr = 0.0;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            rr += r[i] * r[i];
        }
        res = rr.sqrt() / bnorm;
        if res <= opts.rel_tol {
            return Ok(CgStats {
                iterations: it,
                rel_residual: res,
            });
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(UqError::SolverDivergence {
        iterations: cap,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let rows: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(n - 1);
                (lo..=hi).collect()
            })
            .collect();
        let mut a = CsrMatrix::from_pattern(&rows);
        for i in 0..n {
            for j in rows[i].iter().copied() {
                let s = a.slot(i, j).unwrap();
                a.values[s] = if i == j { 2.0 } else { -1.0 };
            }
        }
        a
    }

    #[test]
    fn solves_tridiagonal() {
        let n = 50;
        let a = laplace_1d(n);
        let exact: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let b = a.mul_vec(&exact);
        let mut x = vec![0.0; n];
        let stats = conjugate_gradient(&a, &b, &mut x, &SolverOptions::default()).unwrap();
        assert!(stats.rel_residual <= 1e-10);
        for (xi, ei) in x.iter().zip(&exact) {
            assert!((xi - ei).abs() < 1e-8);
        }
        assert!(a.is_symmetric());
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplace_1d(5);
        let mut x = vec![1.0; 5];
        let s = conjugate_gradient(&a, &[0.0; 5], &mut x, &SolverOptions::default()).unwrap();
        assert_eq!(s.iterations, 0);
        assert_eq!(x, vec![0.0; 5]);
    }

    #[test]
    fn iteration_cap_reports_divergence() {
        let a = laplace_1d(400);
        let b = vec![1.0; 400];
        let mut x = vec![0.0; 400];
        let opts = SolverOptions {
            cap_factor: 0.1,
            ..SolverOptions::default()
        };
        assert!(matches!(
            conjugate_gradient(&a, &b, &mut x, &opts),
            Err(UqError::SolverDivergence { .. })
        ));
    }
}
