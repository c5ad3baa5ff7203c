//! Geometric V-cycle preconditioner on the nested uniform meshes.
//!
//! Coarse operators are Galerkin products `Pᵀ A P` of a fixed fine matrix
//! (the nominal stiffness), built once. The finest level smooths with the
//! matrix actually being solved, so one hierarchy serves every parameter
//! point. Symmetric Gauss–Seidel (forward before, backward after the coarse
//! correction) keeps the preconditioner symmetric.

use super::solver::CsrMatrix;
use crate::error::{Result, UqError};

/// Largest coarsest-level system factored densely.
const MAX_COARSE_DOFS: usize = 600;

#[derive(Debug, Clone)]
struct Level {
    /// Galerkin operator on this level (unused on the finest).
    a: CsrMatrix,
    diag: Vec<f64>,
    /// Prolongation from the next coarser level into this one.
    p: CsrMatrix,
}

#[derive(Debug, Clone)]
pub struct Multigrid {
    levels: Vec<Level>,
    coarse_chol: Vec<f64>,
    coarse_n: usize,
}

/// Interior degrees of freedom of an `m × m` mesh, numbered row by row as in
/// the finite element model.
fn dof(m: usize, i: usize, j: usize) -> Option<usize> {
    (i > 0 && i < m - 1 && j > 0 && j < m - 1).then(|| (j - 1) * (m - 2) + i - 1)
}

/// P1 interpolation from the `(m+1)/2` mesh into the `m` mesh.
fn prolongation(m: usize) -> CsrMatrix {
    let mc = m.div_ceil(2);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity((m - 2) * (m - 2));
    for j in 1..m - 1 {
        for i in 1..m - 1 {
            let parents: Vec<(usize, usize)> = match (i % 2, j % 2) {
                (0, 0) => vec![(i / 2, j / 2)],
                (1, 0) => vec![(i / 2, j / 2), (i / 2 + 1, j / 2)],
                (0, 1) => vec![(i / 2, j / 2), (i / 2, j / 2 + 1)],
                // midpoint of the cell diagonal
                _ => vec![(i / 2, j / 2), (i / 2 + 1, j / 2 + 1)],
            };
            let w = 1.0 / parents.len() as f64;
            let mut row: Vec<(usize, f64)> = parents
                .into_iter()
                .filter_map(|(ci, cj)| dof(mc, ci, cj).map(|d| (d, w)))
                .collect();
            row.sort_unstable_by_key(|e| e.0);
            rows.push(row);
        }
    }
    csr_from_entries((mc - 2) * (mc - 2), rows)
}

fn csr_from_entries(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> CsrMatrix {
    let cols: Vec<Vec<usize>> = rows
        .iter()
        .map(|r| r.iter().map(|e| e.0).collect())
        .collect();
    let mut out = CsrMatrix::from_pattern(&cols);
    out.values = rows.into_iter().flatten().map(|e| e.1).collect();
    debug_assert!(out.col_idx.iter().all(|&c| c < ncols));
    out
}

/// `Pᵀ A P`.
fn galerkin(a: &CsrMatrix, p: &CsrMatrix, nc: usize) -> CsrMatrix {
    // A·P row by row with a dense scatter buffer
    let mut buf = vec![0.0; nc];
    let mut touched: Vec<usize> = Vec::new();
    let mut ap: Vec<Vec<(usize, f64)>> = Vec::with_capacity(a.n);
    for i in 0..a.n {
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let r = a.col_idx[k];
            for q in p.row_ptr[r]..p.row_ptr[r + 1] {
                let c = p.col_idx[q];
                if buf[c] == 0.0 {
                    touched.push(c);
                }
                buf[c] += a.values[k] * p.values[q];
            }
        }
        touched.sort_unstable();
        touched.dedup();
        ap.push(
            touched
                .iter()
                .map(|&c| (c, std::mem::take(&mut buf[c])))
                .collect(),
        );
        touched.clear();
    }
    let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); nc];
    for (i, row) in ap.iter().enumerate() {
        for q in p.row_ptr[i]..p.row_ptr[i + 1] {
            let (c1, w) = (p.col_idx[q], p.values[q]);
            for &(c2, v) in row {
                *rows[c1].entry(c2).or_insert(0.0) += w * v;
            }
        }
    }
    csr_from_entries(
        nc,
        rows.into_iter().map(|r| r.into_iter().collect()).collect(),
    )
}

fn cholesky(a: &CsrMatrix) -> Result<Vec<f64>> {
    let n = a.n;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            l[i * n + a.col_idx[k]] = a.values[k];
        }
    }
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Err(UqError::InvalidMesh(
                "coarse operator is not positive definite".into(),
            ));
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(l)
}

fn sgs_sweep(a: &CsrMatrix, diag: &[f64], b: &[f64], x: &mut [f64], forward: bool) {
    let mut step = |i: usize| {
        let mut s = b[i];
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            s -= a.values[k] * x[a.col_idx[k]];
        }
        x[i] += s / diag[i];
    };
    if forward {
        (0..a.n).for_each(&mut step);
    } else {
        (0..a.n).rev().for_each(&mut step);
    }
}

fn transpose_mul(p: &CsrMatrix, r: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..p.n {
        for q in p.row_ptr[i]..p.row_ptr[i + 1] {
            out[p.col_idx[q]] += p.values[q] * r[i];
        }
    }
}

impl Multigrid {
    /// Hierarchy for an `m × m` mesh from the fine matrix `a`. Returns `None`
    /// when the mesh cannot be coarsened down to a small enough system.
    pub fn new(m: usize, a: &CsrMatrix) -> Result<Option<Self>> {
        if m < 3 || a.n != (m - 2) * (m - 2) {
            return Ok(None);
        }
        let mut levels = Vec::new();
        let mut current = a.clone();
        let mut mf = m;
        while current.n > MAX_COARSE_DOFS {
            if !(mf - 1).is_multiple_of(2) || mf < 5 {
                return Ok(None);
            }
            let p = prolongation(mf);
            let mc = mf.div_ceil(2);
            let coarse = galerkin(&current, &p, (mc - 2) * (mc - 2));
            levels.push(Level {
                diag: current.diagonal(),
                a: current,
                p,
            });
            current = coarse;
            mf = mc;
        }
        let coarse_n = current.n;
        let coarse_chol = cholesky(&current)?;
        if levels.is_empty() {
            // a single level: the dense factor is an exact solve
            levels.push(Level {
                diag: Vec::new(),
                a: current,
                p: CsrMatrix::from_pattern(&[]),
            });
        }
        Ok(Some(Multigrid {
            levels,
            coarse_chol,
            coarse_n,
        }))
    }

    pub fn depth(&self) -> usize {
        self.levels.len() + 1
    }

    fn coarse_solve(&self, b: &[f64], x: &mut [f64]) {
        let (n, l) = (self.coarse_n, &self.coarse_chol);
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i * n + k] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
    }

    fn cycle(&self, depth: usize, a: &CsrMatrix, diag: &[f64], r: &[f64], z: &mut [f64]) {
        let level = &self.levels[depth];
        z.iter_mut().for_each(|v| *v = 0.0);
        sgs_sweep(a, diag, r, z, true);
        let mut res = a.mul_vec(z);
        for (ri, bi) in res.iter_mut().zip(r) {
            *ri = bi - *ri;
        }
        let nc = match self.levels.get(depth + 1) {
            Some(next) => next.a.n,
            None => self.coarse_n,
        };
        let mut rc = vec![0.0; nc];
        transpose_mul(&level.p, &res, &mut rc);
        let mut zc = vec![0.0; nc];
        if depth + 1 < self.levels.len() {
            let next = &self.levels[depth + 1];
            self.cycle(depth + 1, &next.a, &next.diag, &rc, &mut zc);
        } else {
            self.coarse_solve(&rc, &mut zc);
        }
        let corr = level.p.mul_vec(&zc);
        for (zi, ci) in z.iter_mut().zip(&corr) {
            *zi += ci;
        }
        sgs_sweep(a, diag, r, z, false);
    }

    /// One V-cycle for `a z = r`, with `a` on the finest level.
    pub fn apply(&self, a: &CsrMatrix, diag: &[f64], r: &[f64], z: &mut [f64]) {
        if self.levels.len() == 1 && self.levels[0].p.n == 0 {
            self.coarse_solve(r, z);
            return;
        }
        self.cycle(0, a, diag, r, z);
    }
}
