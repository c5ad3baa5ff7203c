//! Isotropic sparse grids on nested Clenshaw–Curtis abscissas, evaluated by
//! the combination technique
//!
//! ```text
//! S_w[f] = Σ_{g(i) ≤ w} c(i) · (I^{m(i_1)} ⊗ … ⊗ I^{m(i_N)})[f],
//! c(i)   = Σ_{j ∈ {0,1}^N, g(i+j) ≤ w} (-1)^{|j|}
//! ```
//!
//! All interpolation and quadrature happens on `[-1, 1]^N` against the
//! uniform probability density; knots are exposed on the physical support
//! `(-√3, √3)^N` through one affine map per dimension.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Result, UqError};
use crate::SUPPORT_HALF_WIDTH;

/// Finest 1-D level whose node positions fit the integer knot keys.
pub const MAX_LEVEL: usize = 30;

/// Default cap on the number of unique knots.
pub const DEFAULT_KNOT_CAP: usize = 4_000_000;

/// Number of Clenshaw–Curtis nodes at level `i`: 1, 3, 5, 9, 17, …
pub fn m_rule(i: usize) -> Result<usize> {
    match i {
        0 => Err(UqError::InvalidArgument("levels start at 1".into())),
        1 => Ok(1),
        i if i <= MAX_LEVEL => Ok((1 << (i - 1)) + 1),
        i => Err(UqError::InvalidArgument(format!(
            "level {i} above the supported maximum {MAX_LEVEL}"
        ))),
    }
}

/// Smallest level with at least `count` nodes (the inverse of [`m_rule`]).
pub fn level_for_count(count: usize) -> usize {
    let mut i = 1;
    while m_rule(i).is_ok_and(|m| m < count) {
        i += 1;
    }
    i
}

/// Integer position of node `j` of level `i` on the finest level.
fn node_key(i: usize, j: usize) -> u32 {
    let m = m_rule(i).expect("level checked by caller");
    let finest = 1u64 << (MAX_LEVEL - 1);
    if m == 1 {
        (finest / 2) as u32
    } else {
        (j as u64 * finest / (m as u64 - 1)) as u32
    }
}

/// Node coordinate from its finest-level key. Every level computes a shared
/// node from the same key, so nested nodes are bit-identical.
fn key_coord(key: u32) -> f64 {
    let n = 1u64 << (MAX_LEVEL - 1);
    // -cos(π k/n) written as sin(π (2k - n) / (2n)) to keep exact odd symmetry
    let num = 2.0 * key as f64 - n as f64;
    (PI * num / (2.0 * n as f64)).sin()
}

/// Clenshaw–Curtis nodes of level `i`, ascending in `[-1, 1]`.
pub fn cc_nodes(i: usize) -> Result<Vec<f64>> {
    let m = m_rule(i)?;
    Ok((0..m).map(|j| key_coord(node_key(i, j))).collect())
}

/// Quadrature weights of level `i` for the uniform density `1/2` on
/// `[-1, 1]`: exact integrals of the Lagrange basis on the CC nodes.
pub fn cc_weights(i: usize) -> Result<Vec<f64>> {
    let m = m_rule(i)?;
    if m == 1 {
        return Ok(vec![1.0]);
    }
    let n = m - 1;
    let w = (0..m)
        .map(|j| {
            let theta = PI * j as f64 / n as f64;
            let mut s = 0.0;
            for k in 1..=n / 2 {
                let b = if 2 * k == n { 1.0 } else { 2.0 };
                s += b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * k as f64 * theta).cos();
            }
            let c = if j == 0 || j == n { 1.0 } else { 2.0 };
            0.5 * c / n as f64 * (1.0 - s)
        })
        .collect();
    Ok(w)
}

/// Lagrange basis values on `nodes` at `t`.
fn lagrange_basis(nodes: &[f64], t: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            nodes
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, xk)| (t - xk) / (nodes[j] - xk))
                .product()
        })
        .collect()
}

/// Admissibility predicate `g(i) ≤ w` on multi-indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum IndexRule {
    /// `Σ (i_n - 1) ≤ w`.
    #[default]
    Smolyak,
    /// Total polynomial degree `Σ (m(i_n) - 1) ≤ w`.
    TotalDegree,
    /// Hyperbolic cross `Π m(i_n) ≤ w + 1`.
    HyperbolicCross,
}

impl IndexRule {
    pub fn admits(&self, index: &[usize], w: usize) -> bool {
        let m = |i: usize| m_rule(i).unwrap_or(usize::MAX);
        match self {
            IndexRule::Smolyak => index.iter().map(|i| i - 1).sum::<usize>() <= w,
            IndexRule::TotalDegree => {
                index.iter().map(|&i| m(i).saturating_sub(1)).sum::<usize>() <= w
            }
            IndexRule::HyperbolicCross => {
                let mut p: usize = 1;
                for &i in index {
                    p = p.saturating_mul(m(i));
                }
                p <= w + 1
            }
        }
    }
}

/// Admissible multi-index with its combination coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndex {
    pub levels: Vec<usize>,
    pub coefficient: i64,
}

fn binomial(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let mut r: i64 = 1;
    for j in 0..k {
        r = r * (n - j) as i64 / (j + 1) as i64;
    }
    r
}

/// Enumerates `{i : rule admits i}` in lexicographic order.
fn enumerate_indices(dim: usize, w: usize, rule: IndexRule) -> Vec<Vec<usize>> {
    fn rec(
        prefix: &mut Vec<usize>,
        dim: usize,
        w: usize,
        rule: IndexRule,
        out: &mut Vec<Vec<usize>>,
    ) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        let mut i = 1;
        loop {
            prefix.push(i);
            // pad with ones: every rule is monotone in each component
            let mut probe = prefix.clone();
            probe.resize(dim, 1);
            if !rule.admits(&probe, w) || i > MAX_LEVEL {
                prefix.pop();
                break;
            }
            rec(prefix, dim, w, rule, out);
            prefix.pop();
            i += 1;
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(dim), dim, w, rule, &mut out);
    out
}

fn combination_coefficient(index: &[usize], w: usize, rule: IndexRule) -> i64 {
    match rule {
        IndexRule::Smolyak => {
            // group the {0,1}^N sum by |j|
            let used: usize = index.iter().map(|i| i - 1).sum();
            let slack = w - used;
            (0..=slack.min(index.len()))
                .map(|k| if k % 2 == 0 { 1 } else { -1 } * binomial(index.len(), k))
                .sum()
        }
        _ => subset_coefficient(index, w, rule),
    }
}

/// `c(i)` by the explicit sum over `j ∈ {0,1}^N`, valid for any
/// downward-closed rule.
fn subset_coefficient(index: &[usize], w: usize, rule: IndexRule) -> i64 {
    // only directions that stay admissible can appear in j
    let grow: Vec<usize> = (0..index.len())
        .filter(|&n| {
            let mut p = index.to_vec();
            p[n] += 1;
            rule.admits(&p, w)
        })
        .collect();
    let mut c = 0;
    for mask in 0u64..(1u64 << grow.len()) {
        let mut p = index.to_vec();
        for (b, &n) in grow.iter().enumerate() {
            if mask >> b & 1 == 1 {
                p[n] += 1;
            }
        }
        if rule.admits(&p, w) {
            c += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        }
    }
    c
}

/// A built sparse grid: the index set with coefficients, the unique knots
/// and their quadrature weights for the uniform density.
#[derive(Debug, Clone)]
pub struct SparseGrid {
    dim: usize,
    level: usize,
    rule: IndexRule,
    indices: Vec<MultiIndex>,
    /// Knot ids of each index's tensor grid, row-major (last dim fastest).
    index_knots: Vec<Vec<usize>>,
    keys: Vec<Vec<u32>>,
    knots: Vec<Vec<f64>>,
    weights: Vec<f64>,
    lookup: HashMap<Vec<u32>, usize>,
    half_width: f64,
}

impl SparseGrid {
    /// Smolyak grid of `dim` dimensions and level `w` on `(-√3, √3)^dim`.
    pub fn new(dim: usize, w: usize) -> Result<Self> {
        Self::with_rule(dim, w, IndexRule::Smolyak, DEFAULT_KNOT_CAP)
    }

    pub fn with_rule(dim: usize, w: usize, rule: IndexRule, knot_cap: usize) -> Result<Self> {
        if dim == 0 {
            return Err(UqError::InvalidArgument("sparse grid needs dim ≥ 1".into()));
        }
        let all = enumerate_indices(dim, w, rule);
        let mut indices = Vec::new();
        for levels in all {
            let coefficient = combination_coefficient(&levels, w, rule);
            if coefficient != 0 {
                indices.push(MultiIndex {
                    levels,
                    coefficient,
                });
            }
        }

        let max_level = indices
            .iter()
            .flat_map(|ix| ix.levels.iter().copied())
            .max()
            .unwrap_or(1);
        let nodes_1d: Vec<Vec<f64>> = (1..=max_level).map(cc_nodes).collect::<Result<_>>()?;
        let weights_1d: Vec<Vec<f64>> = (1..=max_level).map(cc_weights).collect::<Result<_>>()?;
        let keys_1d: Vec<Vec<u32>> = (1..=max_level)
            .map(|i| (0..nodes_1d[i - 1].len()).map(|j| node_key(i, j)).collect())
            .collect();

        let mut lookup: HashMap<Vec<u32>, usize> = HashMap::new();
        let mut keys: Vec<Vec<u32>> = Vec::new();
        let mut knots: Vec<Vec<f64>> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut index_knots = Vec::with_capacity(indices.len());
        for ix in &indices {
            let sizes: Vec<usize> = ix.levels.iter().map(|&i| nodes_1d[i - 1].len()).collect();
            let total: usize = sizes.iter().product();
            let mut ids = Vec::with_capacity(total);
            let mut pos = vec![0usize; dim];
            for _ in 0..total {
                let key: Vec<u32> = (0..dim)
                    .map(|n| keys_1d[ix.levels[n] - 1][pos[n]])
                    .collect();
                let w: f64 = (0..dim)
                    .map(|n| weights_1d[ix.levels[n] - 1][pos[n]])
                    .product::<f64>()
                    * ix.coefficient as f64;
                let id = match lookup.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = knots.len();
                        if id >= knot_cap {
                            return Err(UqError::Capacity {
                                knots: id + 1,
                                cap: knot_cap,
                            });
                        }
                        knots.push(
                            (0..dim)
                                .map(|n| nodes_1d[ix.levels[n] - 1][pos[n]])
                                .collect(),
                        );
                        keys.push(key.clone());
                        weights.push(0.0);
                        lookup.insert(key, id);
                        id
                    }
                };
                weights[id] += w;
                ids.push(id);
                // odometer, last dimension fastest
                for n in (0..dim).rev() {
                    pos[n] += 1;
                    if pos[n] < sizes[n] {
                        break;
                    }
                    pos[n] = 0;
                }
            }
            index_knots.push(ids);
        }

        Ok(SparseGrid {
            dim,
            level: w,
            rule,
            indices,
            index_knots,
            keys,
            knots,
            weights,
            lookup,
            half_width: SUPPORT_HALF_WIDTH,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn rule(&self) -> IndexRule {
        self.rule
    }

    /// Indices with non-zero combination coefficient.
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Knot `k` on `[-1, 1]^N`.
    pub fn reference_knot(&self, k: usize) -> &[f64] {
        &self.knots[k]
    }

    /// Knot `k` on the physical support.
    pub fn physical_knot(&self, k: usize) -> Vec<f64> {
        self.knots[k].iter().map(|t| t * self.half_width).collect()
    }

    pub fn physical_knots(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.physical_knot(k)).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Position of knot `k` of `other` in this grid, if present. Knots are
    /// matched by their nested integer keys.
    pub fn find_knot_of(&self, other: &SparseGrid, k: usize) -> Option<usize> {
        if other.dim != self.dim {
            return None;
        }
        self.lookup.get(&other.keys[k]).copied()
    }

    fn check_samples(&self, samples: &[f64]) -> Result<()> {
        if samples.len() != self.len() {
            return Err(UqError::DimensionMismatch {
                expected: self.len(),
                got: samples.len(),
            });
        }
        Ok(())
    }

    /// `Σ_k weight_k·samples_k`: the expectation of the sparse interpolant
    /// under the uniform density.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        self.check_samples(samples)?;
        Ok(self.weights.iter().zip(samples).map(|(w, s)| w * s).sum())
    }

    /// Sparse interpolant of `samples` at the physical point `y`.
    pub fn interpolate(&self, samples: &[f64], y: &[f64]) -> Result<f64> {
        self.check_samples(samples)?;
        if y.len() != self.dim {
            return Err(UqError::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        let t: Vec<f64> = y.iter().map(|v| v / self.half_width).collect();
        let max_level = self
            .indices
            .iter()
            .flat_map(|ix| ix.levels.iter().copied())
            .max()
            .unwrap_or(1);
        // basis[level-1][n] = 1-D Lagrange values in dimension n
        let mut basis: Vec<Vec<Vec<f64>>> = Vec::with_capacity(max_level);
        for i in 1..=max_level {
            let nodes = cc_nodes(i)?;
            basis.push(t.iter().map(|&tn| lagrange_basis(&nodes, tn)).collect());
        }
        let mut total = 0.0;
        let mut pos = vec![0usize; self.dim];
        for (ix, ids) in self.indices.iter().zip(&self.index_knots) {
            let sizes: Vec<usize> = ix.levels.iter().map(|&i| basis[i - 1][0].len()).collect();
            pos.iter_mut().for_each(|p| *p = 0);
            let mut acc = 0.0;
            for &id in ids {
                let mut prod = samples[id];
                for n in 0..self.dim {
                    prod *= basis[ix.levels[n] - 1][n][pos[n]];
                }
                acc += prod;
                for n in (0..self.dim).rev() {
                    pos[n] += 1;
                    if pos[n] < sizes[n] {
                        break;
                    }
                    pos[n] = 0;
                }
            }
            total += ix.coefficient as f64 * acc;
        }
        Ok(total)
    }

    /// Knot table as CSV: `knot_id,y_1,…,y_N,weight` in physical coordinates.
    pub fn write_knot_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = String::from("knot_id");
        for n in 1..=self.dim {
            header.push_str(&format!(",y_{n}"));
        }
        header.push_str(",weight\n");
        out.write_all(header.as_bytes())?;
        for k in 0..self.len() {
            let mut line = k.to_string();
            for v in self.physical_knot(k) {
                line.push_str(&format!(",{v:?}"));
            }
            line.push_str(&format!(",{:?}\n", self.weights[k]));
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}
