use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::mesh::TriMesh;
use super::multigrid::Multigrid;
use super::qoi::{bump, QoISpec};
use super::solver::{
    conjugate_gradient, preconditioned_cg, CgStats, CsrMatrix, Preconditioner, SolverOptions,
};
use crate::error::{Result, UqError};
use crate::geometry::{
    jacobian_from_stretch, DeformationSpec, JacobianData, ModeSample, ParamPoint, Region,
};

/// Value of local basis function `a` at edge-midpoint quadrature point `k`:
/// `QUAD_BASIS[k][a]`. Point `k` is the midpoint of local edge `(k, k+1)`.
pub const QUAD_BASIS: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

const NO_DOF: usize = usize::MAX;

type ScalarField = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
type VectorField = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Volume source `f` on the physical domain, with its gradient (needed for
/// the tail sensitivity of `f∘F`).
#[derive(Clone)]
pub struct Forcing {
    pub value: ScalarField,
    pub gradient: VectorField,
}

impl Forcing {
    pub fn new(
        value: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        Forcing {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }
}

/// Deterministic data of the elliptic problem.
#[derive(Clone)]
pub struct PdeData {
    /// `a∘F` as a function on the reference square.
    pub diffusion: ScalarField,
    /// `None` means `f ≡ 0`.
    pub forcing: Option<Forcing>,
    /// Dirichlet data on the top edge as a function of `x1`; zero elsewhere.
    pub top_value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl PdeData {
    /// `a ≡ 1`, `f ≡ 0`, `ϑ(x1)` on the top edge.
    pub fn experiment() -> Self {
        PdeData {
            diffusion: Arc::new(|_| 1.0),
            forcing: None,
            top_value: Arc::new(bump),
        }
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn with_top_value(mut self, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.top_value = Arc::new(g);
        self
    }

    pub fn with_diffusion(mut self, a: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        self.diffusion = Arc::new(a);
        self
    }
}

impl Default for PdeData {
    fn default() -> Self {
        Self::experiment()
    }
}

impl fmt::Debug for PdeData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeData")
            .field("forcing", &self.forcing.is_some())
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    Primal,
    Adjoint,
    Lifting,
}

/// Nodal coefficients on every mesh node (Dirichlet nodes included).
#[derive(Debug, Clone, PartialEq)]
pub struct FemSolution {
    pub coeffs: Vec<f64>,
    pub kind: SolutionKind,
    pub stats: CgStats,
}

/// Precomputed per-triangle data.
#[derive(Debug, Clone)]
pub struct Element {
    pub nodes: [usize; 3],
    /// Constant gradients of the three hat functions.
    pub grads: [[f64; 2]; 3],
    pub area: f64,
    /// Which branch of the map applies, decided by the centroid.
    pub region: Region,
    pub qp: [[f64; 2]; 3],
    /// Index of each quadrature point's `x1` in the mode table.
    pub qp_mode: [usize; 3],
    /// `a∘F` at the quadrature points.
    pub diffusion: [f64; 3],
    /// CSR slot of local entry `(a, b)`, or `usize::MAX` if either node is
    /// a Dirichlet node.
    slots: [[usize; 3]; 3],
}

impl Element {
    /// `∇φ_aᵀ M ∇φ_b` for all local pairs.
    #[inline]
    pub fn local_matrix(&self, m: &crate::mat2::Mat2) -> [[f64; 3]; 3] {
        let mut k = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                k[a][b] = m.bilinear(self.grads[a], self.grads[b]);
            }
        }
        k
    }
}

/// Stiffness on interior nodes and the matching load vector.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    /// Discrete bilinear form `uᵀ K v` on interior coefficient vectors.
    pub fn pair(&self, u: &[f64], v: &[f64]) -> f64 {
        let kv = self.matrix.mul_vec(v);
        u.iter().zip(&kv).map(|(a, b)| a * b).sum()
    }
}

/// Mesh, map and problem data with everything that does not depend on `y`
/// precomputed. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct FemModel {
    mesh: TriMesh,
    spec: DeformationSpec,
    data: PdeData,
    solver: SolverOptions,
    dof_of: Vec<usize>,
    dof_nodes: Vec<usize>,
    pattern: CsrMatrix,
    elements: Vec<Element>,
    modes: Vec<ModeSample>,
    qoi_vec: Vec<f64>,
    lifting: Vec<f64>,
    lifting_elements: Vec<usize>,
    nominal: Option<(Vec<f64>, Vec<f64>)>,
    multigrid: Option<Multigrid>,
}

impl FemModel {
    pub fn new(
        mesh: TriMesh,
        spec: DeformationSpec,
        data: PdeData,
        qoi: &QoISpec,
        solver: SolverOptions,
    ) -> Result<Self> {
        spec.validate()?;
        let n_nodes = mesh.node_count();
        let mut dof_of = vec![NO_DOF; n_nodes];
        let mut dof_nodes = Vec::new();
        for node in 0..n_nodes {
            if !mesh.is_dirichlet(node) {
                dof_of[node] = dof_nodes.len();
                dof_nodes.push(node);
            }
        }

        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); dof_nodes.len()];
        for tri in &mesh.triangles {
            for &a in tri {
                for &b in tri {
                    if dof_of[a] != NO_DOF && dof_of[b] != NO_DOF {
                        rows[dof_of[a]].push(dof_of[b]);
                    }
                }
            }
        }
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
        }
        let pattern = CsrMatrix::from_pattern(&rows);

        let mut mode_index: HashMap<u64, usize> = HashMap::new();
        let mut modes = Vec::new();
        let mut elements = Vec::with_capacity(mesh.triangles.len());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let p = tri.map(|n| mesh.nodes[n]);
            let area = mesh.signed_area(t);
            if !(area > 0.0) {
                return Err(UqError::InvalidMesh(format!(
                    "triangle {t} has area {area}"
                )));
            }
            // ∇φ_a = rot(p_{a+2} - p_{a+1}) / (2·area)
            let mut grads = [[0.0; 2]; 3];
            for a in 0..3 {
                let (pb, pc) = (p[(a + 1) % 3], p[(a + 2) % 3]);
                grads[a] = [
                    (pb[1] - pc[1]) / (2.0 * area),
                    (pc[0] - pb[0]) / (2.0 * area),
                ];
            }
            let centroid = [
                (p[0][0] + p[1][0] + p[2][0]) / 3.0,
                (p[0][1] + p[1][1] + p[2][1]) / 3.0,
            ];
            let region = Region::of(centroid);
            let mut qp = [[0.0; 2]; 3];
            let mut qp_mode = [0; 3];
            let mut diffusion = [0.0; 3];
            for k in 0..3 {
                let (pa, pb) = (p[k], p[(k + 1) % 3]);
                qp[k] = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                let next = modes.len();
                qp_mode[k] = *mode_index.entry(qp[k][0].to_bits()).or_insert(next);
                if qp_mode[k] == next {
                    modes.push(spec.sample_modes(qp[k][0]));
                }
                diffusion[k] = (data.diffusion)(qp[k]);
            }
            let mut slots = [[NO_DOF; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    let (da, db) = (dof_of[tri[a]], dof_of[tri[b]]);
                    if da != NO_DOF && db != NO_DOF {
                        slots[a][b] = pattern.slot(da, db).expect("pattern covers element");
                    }
                }
            }
            elements.push(Element {
                nodes: *tri,
                grads,
                area,
                region,
                qp,
                qp_mode,
                diffusion,
                slots,
            });
        }

        let mut qoi_vec = vec![0.0; n_nodes];
        for el in &elements {
            for k in 0..3 {
                let wq = el.area / 3.0 * qoi.weight(el.qp[k]);
                for a in 0..3 {
                    qoi_vec[el.nodes[a]] += wq * QUAD_BASIS[k][a];
                }
            }
        }

        let lifting: Vec<f64> = mesh
            .nodes
            .iter()
            .zip(&mesh.tags)
            .map(|(p, tag)| match tag {
                super::BoundaryTag::Top => (data.top_value)(p[0]),
                _ => 0.0,
            })
            .collect();
        let lifting_elements = elements
            .iter()
            .enumerate()
            .filter(|(_, el)| el.nodes.iter().any(|&n| lifting[n] != 0.0))
            .map(|(i, _)| i)
            .collect();

        let mut model = FemModel {
            mesh,
            spec,
            data,
            solver,
            dof_of,
            dof_nodes,
            pattern,
            elements,
            modes,
            qoi_vec,
            lifting,
            lifting_elements,
            nominal: None,
            multigrid: None,
        };
        if solver.preconditioner == Preconditioner::Multigrid {
            let nominal = model.assemble(&ParamPoint::zeros(&model.spec))?;
            model.multigrid = Multigrid::new(model.mesh.m, &nominal.matrix)?;
        }
        if solver.warm_start {
            let y0 = ParamPoint::zeros(&model.spec);
            let (u, phi) = model.solve_pair(&y0)?;
            model.nominal = Some((model.restrict(&u.coeffs), model.restrict(&phi.coeffs)));
        }
        Ok(model)
    }

    /// The unit-square experiment on an `m × m` mesh.
    pub fn experiment(m: usize, spec: DeformationSpec) -> Result<Self> {
        Self::new(
            TriMesh::new(m)?,
            spec,
            PdeData::experiment(),
            &QoISpec::experiment(),
            SolverOptions::default(),
        )
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn spec(&self) -> &DeformationSpec {
        &self.spec
    }

    pub fn data(&self) -> &PdeData {
        &self.data
    }

    pub fn solver_options(&self) -> &SolverOptions {
        &self.solver
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn modes(&self) -> &[ModeSample] {
        &self.modes
    }

    pub fn dof_count(&self) -> usize {
        self.dof_nodes.len()
    }

    /// Nodal weights `Q_i = ∫ q·φ_i` on every node.
    pub fn qoi_load(&self) -> &[f64] {
        &self.qoi_vec
    }

    /// Interior entries of a full nodal vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.dof_nodes.iter().map(|&n| full[n]).collect()
    }

    /// Full nodal vector with zeros on Dirichlet nodes.
    pub fn extend(&self, dofs: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.mesh.node_count()];
        for (&n, v) in self.dof_nodes.iter().zip(dofs) {
            full[n] = *v;
        }
        full
    }

    /// Lifting `ŵ` of the Dirichlet data: `ϑ(x1)` on top nodes, zero elsewhere.
    pub fn lifting(&self) -> FemSolution {
        FemSolution {
            coeffs: self.lifting.clone(),
            kind: SolutionKind::Lifting,
            stats: CgStats {
                iterations: 0,
                rel_residual: 0.0,
            },
        }
    }

    pub(crate) fn lifting_coeffs(&self) -> &[f64] {
        &self.lifting
    }

    /// `(e, ∂_{x1} e)` for every entry of the mode table.
    pub fn stretch_table(&self, y: &ParamPoint) -> Result<Vec<(f64, f64)>> {
        if y.as_slice().len() != self.spec.total_dims() {
            return Err(UqError::DimensionMismatch {
                expected: self.spec.total_dims(),
                got: y.as_slice().len(),
            });
        }
        Ok(self.modes.iter().map(|m| m.stretch(y.as_slice())).collect())
    }

    /// Geometry at quadrature point `k` of `el`.
    #[inline]
    pub fn qp_geometry(
        &self,
        el: &Element,
        k: usize,
        table: &[(f64, f64)],
    ) -> Result<JacobianData> {
        jacobian_from_stretch(table[el.qp_mode[k]], el.qp[k], el.region, el.diffusion[k])
    }

    /// Stiffness on interior nodes and load `∫(f∘F)|∂F|v - ∫∇ŵᵀG∇v`.
    pub fn assemble(&self, y: &ParamPoint) -> Result<LinearSystem> {
        let table = self.stretch_table(y)?;
        let mut matrix = self.pattern.clone();
        let mut rhs = vec![0.0; self.dof_count()];
        let mut lifting_flags = vec![false; self.elements.len()];
        for &i in &self.lifting_elements {
            lifting_flags[i] = true;
        }
        for (ei, el) in self.elements.iter().enumerate() {
            let w = el.area / 3.0;
            let mut gsum = crate::mat2::Mat2::ZERO;
            let mut jacs = [None; 3];
            for k in 0..3 {
                let jac = self.qp_geometry(el, k, &table)?;
                gsum = gsum + jac.g.scale(w);
                jacs[k] = Some(jac);
            }
            let kloc = el.local_matrix(&gsum);
            for a in 0..3 {
                for b in 0..3 {
                    let s = el.slots[a][b];
                    if s != NO_DOF {
                        matrix.values[s] += kloc[a][b];
                    }
                }
            }
            if let Some(forcing) = &self.data.forcing {
                for (k, jac) in jacs.iter().enumerate() {
                    let jac = jac.as_ref().expect("filled above");
                    let fw = w * (forcing.value)(jac.mapped) * jac.det;
                    for a in 0..3 {
                        let d = self.dof_of[el.nodes[a]];
                        if d != NO_DOF {
                            rhs[d] += fw * QUAD_BASIS[k][a];
                        }
                    }
                }
            }
            if lifting_flags[ei] {
                for a in 0..3 {
                    let d = self.dof_of[el.nodes[a]];
                    if d == NO_DOF {
                        continue;
                    }
                    for b in 0..3 {
                        rhs[d] -= kloc[a][b] * self.lifting[el.nodes[b]];
                    }
                }
            }
        }
        Ok(LinearSystem { matrix, rhs })
    }

    fn solve_dofs(
        &self,
        sys: &LinearSystem,
        rhs: &[f64],
        start: Option<&[f64]>,
    ) -> Result<(Vec<f64>, CgStats)> {
        let mut x = match start {
            Some(s) if self.solver.warm_start => s.to_vec(),
            _ => vec![0.0; self.dof_count()],
        };
        let stats = match &self.multigrid {
            Some(mg) => {
                let diag = sys.matrix.diagonal();
                preconditioned_cg(&sys.matrix, rhs, &mut x, &self.solver, |r, z| {
                    mg.apply(&sys.matrix, &diag, r, z)
                })?
            }
            None => conjugate_gradient(&sys.matrix, rhs, &mut x, &self.solver)?,
        };
        Ok((x, stats))
    }

    /// Primal solve from an already assembled system.
    pub fn solve_primal_with(&self, sys: &LinearSystem) -> Result<FemSolution> {
        let start = self.nominal.as_ref().map(|n| n.0.as_slice());
        let (x, stats) = self.solve_dofs(sys, &sys.rhs, start)?;
        Ok(FemSolution {
            coeffs: self.extend(&x),
            kind: SolutionKind::Primal,
            stats,
        })
    }

    /// Adjoint solve from an already assembled system (`G` is symmetric, so
    /// the stiffness matrix is shared with the primal).
    pub fn solve_adjoint_with(&self, sys: &LinearSystem) -> Result<FemSolution> {
        let rhs = self.restrict(&self.qoi_vec);
        let start = self.nominal.as_ref().map(|n| n.1.as_slice());
        let (x, stats) = self.solve_dofs(sys, &rhs, start)?;
        Ok(FemSolution {
            coeffs: self.extend(&x),
            kind: SolutionKind::Adjoint,
            stats,
        })
    }

    /// `û_h` at `y`.
    pub fn solve_primal(&self, y: &ParamPoint) -> Result<FemSolution> {
        let sys = self.assemble(y)?;
        self.solve_primal_with(&sys)
    }

    /// Influence function `φ_h` at `y`.
    pub fn solve_adjoint(&self, y: &ParamPoint) -> Result<FemSolution> {
        let sys = self.assemble(y)?;
        self.solve_adjoint_with(&sys)
    }

    /// Primal and adjoint from a single assembly.
    pub fn solve_pair(&self, y: &ParamPoint) -> Result<(FemSolution, FemSolution)> {
        let sys = self.assemble(y)?;
        Ok((
            self.solve_primal_with(&sys)?,
            self.solve_adjoint_with(&sys)?,
        ))
    }

    /// `Q(u_h)` for a full nodal vector.
    pub fn eval_qoi(&self, coeffs: &[f64]) -> f64 {
        coeffs.iter().zip(&self.qoi_vec).map(|(u, q)| u * q).sum()
    }

    /// `Q_h(y)`, one primal solve.
    pub fn qoi_at(&self, y: &ParamPoint) -> Result<f64> {
        Ok(self.eval_qoi(&self.solve_primal(y)?.coeffs))
    }

    /// QoI of the undeformed problem (`y = 0`).
    pub fn nominal_qoi(&self) -> Result<f64> {
        self.qoi_at(&ParamPoint::zeros(&self.spec))
    }

    /// `u_h = û_h + ŵ`.
    pub fn full_solution(&self, primal: &FemSolution) -> Vec<f64> {
        primal
            .coeffs
            .iter()
            .zip(&self.lifting)
            .map(|(u, w)| u + w)
            .collect()
    }
}
