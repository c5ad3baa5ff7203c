use crate::error::{Result, UqError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interior,
    Bottom,
    Top,
    Left,
    Right,
}

/// Uniform right-triangle mesh of the unit square with `m × m` nodes.
///
/// Node `(i, j)` (column `i` along `x1`, row `j` along `x2`) has index
/// `j·m + i`. Every cell is split along its `(+1, +1)` diagonal into two
/// counterclockwise triangles. Corner nodes take the first matching tag in
/// the order top, bottom, left, right.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub m: usize,
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub tags: Vec<BoundaryTag>,
}

impl TriMesh {
    pub fn new(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(UqError::InvalidMesh(format!(
                "need at least 3 nodes per side, got {m}"
            )));
        }
        let last = (m - 1) as f64;
        let coord = |i: usize| i as f64 / last;
        let mut nodes = Vec::with_capacity(m * m);
        let mut tags = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                nodes.push([coord(i), coord(j)]);
                let tag = if j == m - 1 {
                    BoundaryTag::Top
                } else if j == 0 {
                    BoundaryTag::Bottom
                } else if i == 0 {
                    BoundaryTag::Left
                } else if i == m - 1 {
                    BoundaryTag::Right
                } else {
                    BoundaryTag::Interior
                };
                tags.push(tag);
            }
        }
        let mut triangles = Vec::with_capacity(2 * (m - 1) * (m - 1));
        for j in 0..m - 1 {
            for i in 0..m - 1 {
                let a = j * m + i;
                let b = a + 1;
                let c = a + m + 1;
                let d = a + m;
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        Ok(TriMesh {
            m,
            nodes,
            triangles,
            tags,
        })
    }

    /// Node spacing.
    pub fn h(&self) -> f64 {
        1.0 / (self.m - 1) as f64
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_dirichlet(&self, node: usize) -> bool {
        self.tags[node] != BoundaryTag::Interior
    }

    /// Signed area of triangle `t` (positive for counterclockwise order).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }
}
