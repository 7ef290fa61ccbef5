//! Global sparse assembly of the per-step linear systems and their direct
//! solution.
//!
//! Unknown ordering: cell velocities (2 per cell), interior-face velocities
//! (2 per interior face), cell pressures, then a single Lagrange multiplier
//! enforcing the zero pressure mean. Boundary-face velocity unknowns are
//! eliminated at assembly: they are zero in the homogeneous setting and
//! carried to the right-hand side when Dirichlet data is prescribed.
//!
//! The divergence constraint rows are assembled with a negative sign so the
//! saddle matrix is symmetric whenever only mass, viscous, and stabilization
//! terms contribute; the convection block breaks symmetry.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::mesh::Mesh;
use crate::operators::LocalOperators;
use crate::sparse::SparseMatrix;
use crate::spaces::{CellField, HybridVelocity};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("factorization failed ({0})")]
    Factorization(String),
    #[error("solve residual {achieved:.3e} exceeds the contract {required:.3e}")]
    Residual { achieved: f64, required: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Unknown layout of the velocity-pressure saddle system.
#[derive(Clone, Debug)]
pub struct DofLayout {
    pub n_cells: usize,
    pub n_interior_faces: usize,
    interior_index: Vec<Option<usize>>,
}

impl DofLayout {
    pub fn new(mesh: &Mesh) -> Self {
        Self {
            n_cells: mesh.n_cells(),
            n_interior_faces: mesh.n_interior_faces(),
            interior_index: (0..mesh.n_faces()).map(|f| mesh.interior_face_index(f)).collect(),
        }
    }

    pub fn n_velocity(&self) -> usize {
        2 * (self.n_cells + self.n_interior_faces)
    }

    pub fn n_total(&self) -> usize {
        self.n_velocity() + self.n_cells + 1
    }

    pub fn u_cell(&self, t: usize) -> [usize; 2] {
        [2 * t, 2 * t + 1]
    }

    /// Velocity unknowns of face `f`, or `None` for boundary faces.
    pub fn u_face(&self, f: usize) -> Option<[usize; 2]> {
        self.interior_index[f].map(|k| {
            let base = 2 * self.n_cells + 2 * k;
            [base, base + 1]
        })
    }

    pub fn pressure(&self, t: usize) -> usize {
        self.n_velocity() + t
    }

    pub fn multiplier(&self) -> usize {
        self.n_velocity() + self.n_cells
    }
}

/// What kind of system a [`SparseSystem`] holds.
#[derive(Clone, Debug)]
pub enum SystemKind {
    /// Velocity-pressure saddle problem over the layout.
    Saddle,
    /// Implicit upwind density transport (one unknown per cell).
    Transport,
    /// Anything else (tests, toy systems).
    Generic,
}

/// An assembled linear system in triplet form.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub n: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    pub kind: SystemKind,
}

impl SparseSystem {
    pub fn matrix(&self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.n, self.n, &self.triplets)
    }
}

/// Dirichlet data for one time level: velocity face means on boundary faces
/// and the inflow density face means (both indexed by face, interior entries
/// unused).
#[derive(Clone, Debug)]
pub struct BoundaryData {
    pub velocity: Vec<Vec2>,
    pub density: Vec<f64>,
}

impl BoundaryData {
    pub fn sample(
        mesh: &Mesh,
        velocity: impl Fn(Vec2) -> Vec2,
        density: impl Fn(Vec2) -> f64,
    ) -> Self {
        let mut vel = vec![Vec2::zeros(); mesh.n_faces()];
        let mut den = vec![0.0; mesh.n_faces()];
        for f in 0..mesh.n_faces() {
            if mesh.is_boundary_face(f) {
                vel[f] = mesh.face_mean_vec(f, &velocity);
                den[f] = mesh.face_mean(f, &density);
            }
        }
        Self {
            velocity: vel,
            density: den,
        }
    }
}

/// Boundary treatment of one assembled step.
#[derive(Clone, Copy, Debug)]
pub enum StepBoundary<'a> {
    /// Velocity and test space vanish on the boundary; no boundary fluxes.
    Homogeneous,
    /// Boundary velocity unknowns pinned to data; upwind inflow density.
    Dirichlet(&'a BoundaryData),
}

impl StepBoundary<'_> {
    fn velocity(&self, f: usize) -> Vec2 {
        match self {
            StepBoundary::Homogeneous => Vec2::zeros(),
            StepBoundary::Dirichlet(d) => d.velocity[f],
        }
    }
}

/// Assembles the saddle-point system of one momentum step: find
/// `(u, p, lambda)` with, for all homogeneous test velocities `v` and all
/// cell pressures `q`,
///
/// ```text
/// (1/dt) [ int rho_new u . v - int sigma_new sigma_old u_old . v
///          + rho_min j_h(u - u_old, v) ]
///   + mu a_h(u, v) + c_h((rho_new u_old)_upwind, u, v) - int p D_h v
///   = int f . v,
/// -int q D_h u = <boundary flux>,    int p = 0.
/// ```
///
/// `dt = f64::INFINITY` drops the unsteady terms (steady Stokes/Oseen limit).
///
/// The transporting field of the convection term is `w_conv` (equal to
/// `u_old` for the plain semi-implicit step; Picard iterations pass updated
/// candidates).
#[allow(clippy::too_many_arguments)]
pub fn assemble_saddle(
    mesh: &Mesh,
    ops: &[LocalOperators],
    layout: &DofLayout,
    rho_new: &CellField,
    sigma_new: &CellField,
    sigma_old: &CellField,
    u_old: &HybridVelocity,
    w_conv: &HybridVelocity,
    force: impl Fn(Vec2) -> Vec2,
    dt: f64,
    mu: f64,
    rho_min: f64,
    bc: StepBoundary,
) -> SparseSystem {
    let n = layout.n_total();
    let inv_dt = if dt.is_finite() { 1.0 / dt } else { 0.0 };
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs = vec![0.0; n];

    // Local velocity dof -> global column, or None for boundary faces.
    let local_to_global = |t: usize, i: usize| -> Option<usize> {
        if i < 2 {
            Some(layout.u_cell(t)[i])
        } else {
            let l = (i - 2) / 2;
            let f = mesh.cell_faces(t)[l];
            layout.u_face(f).map(|d| d[i % 2])
        }
    };
    // Known value of a local dof that is not an unknown (boundary faces).
    let local_known = |t: usize, i: usize| -> f64 {
        let l = (i - 2) / 2;
        let f = mesh.cell_faces(t)[l];
        let g = bc.velocity(f);
        if i % 2 == 0 {
            g.x
        } else {
            g.y
        }
    };

    for t in 0..mesh.n_cells() {
        let area = mesh.cell_measure(t);
        let op = &ops[t];
        let n_local = op.n_local();

        // Unsteady cell mass: (rho_new |T| / dt) I on the cell block.
        for c in 0..2 {
            let d = layout.u_cell(t)[c];
            triplets.push((d, d, inv_dt * rho_new[t] * area));
        }
        // RHS: (1/dt) sigma_new sigma_old u_old + force means.
        let mass_rhs = inv_dt * sigma_new[t] * sigma_old[t] * area;
        let f_int = mesh.integrate_cell_vec(t, &force);
        let cell_dofs = layout.u_cell(t);
        rhs[cell_dofs[0]] += mass_rhs * u_old.cell(t).x + f_int.x;
        rhs[cell_dofs[1]] += mass_rhs * u_old.cell(t).y + f_int.y;

        // Viscous + stabilization (mu a_T) and unsteady jump penalty
        // ((rho_min/dt) j_T, with the j_T u_old part on the RHS).
        let u_old_local = crate::operators::local_dofs(mesh, t, u_old);
        for i in 0..n_local {
            let Some(row) = local_to_global(t, i) else {
                continue;
            };
            for j in 0..n_local {
                let coef = mu * op.a[(i, j)] + inv_dt * rho_min * op.j[(i, j)];
                match local_to_global(t, j) {
                    Some(col) => triplets.push((row, col, coef)),
                    None => rhs[row] -= coef * local_known(t, j),
                }
                rhs[row] += inv_dt * rho_min * op.j[(i, j)] * u_old_local[j];
            }
        }
    }

    // Convection: mass flux m_F = eta_F(rho_new; w_conv) w_conv_F frozen,
    // the transported velocity implicit. Per (T, F): 1/2 |F| (m_F . n_TF)
    // (u_F . v_T - u_T . v_F).
    for t in 0..mesh.n_cells() {
        for (f, len, n_tf, _) in mesh.cell_face_geometry(t) {
            let face = mesh.face(f);
            let s = w_conv.face(f).dot(&mesh.face_normal(f));
            let rho_f = match (face.neighbor, &bc) {
                (Some(neigh), _) => {
                    if s >= 0.0 {
                        rho_new[face.owner]
                    } else {
                        rho_new[neigh]
                    }
                }
                (None, StepBoundary::Homogeneous) => rho_new[face.owner],
                (None, StepBoundary::Dirichlet(d)) => {
                    if s >= 0.0 {
                        rho_new[face.owner]
                    } else {
                        d.density[f]
                    }
                }
            };
            let coef = 0.5 * len * (rho_f * w_conv.face(f)).dot(&n_tf);
            if coef == 0.0 && face.is_boundary() {
                continue;
            }
            let vt = layout.u_cell(t);
            match layout.u_face(f) {
                Some(uf) => {
                    for c in 0..2 {
                        triplets.push((vt[c], uf[c], coef));
                        triplets.push((uf[c], vt[c], -coef));
                    }
                }
                None => {
                    // u_F known (zero or Dirichlet); v_F rows do not exist.
                    let g = bc.velocity(f);
                    rhs[vt[0]] -= coef * g.x;
                    rhs[vt[1]] -= coef * g.y;
                }
            }
        }
    }

    // Pressure coupling and (negated) divergence constraint:
    // momentum: -int p D_h v; constraint: -int q D_h u = boundary flux.
    for t in 0..mesh.n_cells() {
        let p_col = layout.pressure(t);
        for (f, len, n_tf, _) in mesh.cell_face_geometry(t) {
            match layout.u_face(f) {
                Some(uf) => {
                    for c in 0..2 {
                        let coef = -len * n_tf[c];
                        triplets.push((uf[c], p_col, coef));
                        triplets.push((p_col, uf[c], coef));
                    }
                }
                None => {
                    let g = bc.velocity(f);
                    rhs[p_col] += len * n_tf.dot(&g);
                }
            }
        }
        // zero-mean pressure multiplier
        let lam = layout.multiplier();
        triplets.push((p_col, lam, mesh.cell_measure(t)));
        triplets.push((lam, p_col, mesh.cell_measure(t)));
    }

    SparseSystem {
        n,
        triplets,
        rhs,
        kind: SystemKind::Saddle,
    }
}

/// Assembles the implicit upwind transport step: per cell,
///
/// ```text
/// (|T|/dt)(rho_T - rho_old_T)
///   + sum_F [ (q_TF)^+ rho_T - (q_TF)^- rho_T' ] = 0,
/// ```
///
/// with `q_TF = |F| u_F . n_TF`. On boundary faces the upstream value for
/// inflow comes from the Dirichlet data (no boundary flux at all in the
/// homogeneous setting, where `u_F = 0`).
pub fn assemble_density_transport(
    mesh: &Mesh,
    u: &HybridVelocity,
    rho_old: &CellField,
    dt: f64,
    bc: StepBoundary,
) -> SparseSystem {
    assert!(dt.is_finite() && dt > 0.0);
    let n = mesh.n_cells();
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n];
    for t in 0..n {
        let mut diag = mesh.cell_measure(t) / dt;
        rhs[t] += mesh.cell_measure(t) / dt * rho_old[t];
        for (f, len, n_tf, _) in mesh.cell_face_geometry(t) {
            let q = len * u.face(f).dot(&n_tf);
            let plus = 0.5 * (q.abs() + q);
            let minus = 0.5 * (q.abs() - q);
            diag += plus;
            match mesh.face(f).other(t) {
                Some(tp) => triplets.push((t, tp, -minus)),
                None => match bc {
                    StepBoundary::Homogeneous => {
                        debug_assert!(q.abs() == 0.0, "boundary flux in homogeneous mode");
                    }
                    StepBoundary::Dirichlet(d) => rhs[t] += minus * d.density[f],
                },
            }
        }
        triplets.push((t, t, diag));
    }
    SparseSystem {
        n,
        triplets,
        rhs,
        kind: SystemKind::Transport,
    }
}

/// Sparse direct solver with a cached symbolic factorization. Successive
/// systems with the identical sparsity pattern (each time step) reuse the
/// analysis; only the numeric factorization is redone.
pub struct DirectSolver {
    symbolic: Option<(usize, SymbolicLu<usize>)>,
}

impl Default for DirectSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl DirectSolver {
    pub fn new() -> Self {
        // Keep factorization sequential: run-to-run determinism matters more
        // than solve speed at these sizes.
        faer::set_global_parallelism(faer::Par::Seq);
        Self { symbolic: None }
    }

    pub fn solve(&mut self, system: &SparseSystem) -> Result<Vec<f64>, SolveError> {
        let n = system.n;
        if system.rhs.len() != n {
            return Err(SolveError::Dimension(format!(
                "rhs length {} vs system dimension {n}",
                system.rhs.len()
            )));
        }
        let entries: Vec<Triplet<usize, usize, f64>> = system
            .triplets
            .iter()
            .map(|&(r, c, v)| Triplet::new(r, c, v))
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &entries)
            .map_err(|e| SolveError::Factorization(format!("matrix creation: {e:?}")))?;

        if self.symbolic.as_ref().map(|(dim, _)| *dim) != Some(n) {
            self.symbolic = None;
        }
        if self.symbolic.is_none() {
            let sym = SymbolicLu::try_new(mat.symbolic())
                .map_err(|e| SolveError::Factorization(format!("symbolic analysis: {e:?}")))?;
            self.symbolic = Some((n, sym));
        }
        let sym = self.symbolic.as_ref().unwrap().1.clone();
        // faer reports structural singularity as an error but panics on an
        // exactly zero pivot; map both onto SolveError.
        let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            Lu::try_new_with_symbolic(sym, mat.as_ref())
        }))
        .map_err(|_| {
            SolveError::Factorization(format!("zero pivot ({})", diagnose(system, "singular")))
        })?
        .map_err(|e| {
            SolveError::Factorization(format!("numeric factorization ({})", diagnose(system, e)))
        })?;

        let mut x = faer::Mat::<f64>::from_fn(n, 1, |i, _| system.rhs[i]);
        lu.solve_in_place(x.as_mut());
        let mut sol: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();

        // Residual contract, with one step of iterative refinement in
        // reserve.
        let norm_a = mat.val().iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm_b = norm2(&system.rhs);
        let required = |xs: &[f64]| 1e-10 * (norm_b + norm_a * norm2(xs));
        let mut res = residual(system, &sol);
        if norm2(&res) > required(&sol) {
            let mut r = faer::Mat::<f64>::from_fn(n, 1, |i, _| res[i]);
            lu.solve_in_place(r.as_mut());
            for i in 0..n {
                sol[i] += r[(i, 0)];
            }
            res = residual(system, &sol);
            let achieved = norm2(&res);
            if achieved > required(&sol) {
                return Err(SolveError::Residual {
                    achieved,
                    required: required(&sol),
                });
            }
        }
        Ok(sol)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `b - A x` straight from the triplets (duplicates sum naturally).
fn residual(system: &SparseSystem, x: &[f64]) -> Vec<f64> {
    let mut r = system.rhs.clone();
    for &(i, j, v) in &system.triplets {
        r[i] -= v * x[j];
    }
    r
}

fn diagnose(system: &SparseSystem, err: impl std::fmt::Debug) -> String {
    let n = system.n;
    let mut row_seen = vec![false; n];
    let mut col_seen = vec![false; n];
    for &(r, c, v) in &system.triplets {
        if v != 0.0 {
            row_seen[r] = true;
            col_seen[c] = true;
        }
    }
    let empty_row = row_seen.iter().position(|&s| !s);
    let empty_col = col_seen.iter().position(|&s| !s);
    format!(
        "{err:?}; dimension {n}, first structurally empty row {empty_row:?}, column {empty_col:?}"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convection::c_h;
    use crate::geometry::Rect;
    use crate::operators::{ah, build_all_local_operators};
    use crate::spaces::{interpolate_velocity, jh};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_basis(mesh: &Mesh, layout: &DofLayout, dof: usize) -> HybridVelocity {
        let mut v = HybridVelocity::zeros(mesh, true);
        if dof < 2 * layout.n_cells {
            let t = dof / 2;
            let mut c = Vec2::zeros();
            c[dof % 2] = 1.0;
            v.set_cell(t, c);
        } else {
            let k = (dof - 2 * layout.n_cells) / 2;
            let f = mesh
                .interior_faces()
                .nth(k)
                .expect("interior face for dof");
            let mut c = Vec2::zeros();
            c[dof % 2] = 1.0;
            v.set_face(f, c);
        }
        v
    }

    #[test]
    fn solve_identity_and_toy_saddle() {
        let mut solver = DirectSolver::new();
        let eye = SparseSystem {
            n: 3,
            triplets: vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)],
            rhs: vec![4.0, -1.0, 0.5],
            kind: SystemKind::Generic,
        };
        assert_eq!(solver.solve(&eye).unwrap(), vec![4.0, -1.0, 0.5]);

        let mut solver = DirectSolver::new();
        let toy = SparseSystem {
            n: 2,
            triplets: vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0)],
            rhs: vec![3.0, 1.0],
            kind: SystemKind::Generic,
        };
        let x = solver.solve(&toy).unwrap();
        assert!((x[0] - 1.0).abs() <= 1e-12 && (x[1] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn solve_random_spd_meets_residual_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let n = 50;
        let m = nalgebra::DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let spd = &m * m.transpose() + nalgebra::DMatrix::identity(n, n);
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                triplets.push((i, j, spd[(i, j)]));
            }
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let system = SparseSystem {
            n,
            triplets,
            rhs,
            kind: SystemKind::Generic,
        };
        let x = solver_solve(&system);
        let r = residual(&system, &x);
        let norm_a = system.matrix().frobenius_norm();
        assert!(norm2(&r) <= 1e-10 * (norm2(&system.rhs) + norm_a * norm2(&x)));
    }

    fn solver_solve(system: &SparseSystem) -> Vec<f64> {
        DirectSolver::new().solve(system).unwrap()
    }

    #[test]
    fn singular_system_reports_factorization_error() {
        let sys = SparseSystem {
            n: 2,
            triplets: vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)],
            rhs: vec![1.0, 2.0],
            kind: SystemKind::Generic,
        };
        // Singular (rank 1): either the factorization fails or the residual
        // contract cannot be met.
        assert!(DirectSolver::new().solve(&sys).is_err());
    }

    #[test]
    fn saddle_zero_data_gives_zero_solution() {
        let mesh = Mesh::build_cartesian(3, 3, Rect::unit());
        let ops = build_all_local_operators(&mesh);
        let layout = DofLayout::new(&mesh);
        let rho = CellField::constant(&mesh, 1.0);
        let sigma = rho.sqrt();
        let u_old = HybridVelocity::zeros(&mesh, true);
        let system = assemble_saddle(
            &mesh,
            &ops,
            &layout,
            &rho,
            &sigma,
            &sigma,
            &u_old,
            &u_old,
            |_| Vec2::zeros(),
            1e-2,
            1.0,
            1.0,
            StepBoundary::Homogeneous,
        );
        let x = DirectSolver::new().solve(&system).unwrap();
        assert!(x.iter().all(|&v| v.abs() <= 1e-13));
    }

    #[test]
    fn stokes_limit_is_symmetric() {
        // dt -> infinity drops the mass terms; u_old = 0 kills convection.
        let mesh = Mesh::build_triangular(2);
        let ops = build_all_local_operators(&mesh);
        let layout = DofLayout::new(&mesh);
        let rho = CellField::constant(&mesh, 1.0);
        let sigma = rho.sqrt();
        let u_old = HybridVelocity::zeros(&mesh, true);
        let system = assemble_saddle(
            &mesh,
            &ops,
            &layout,
            &rho,
            &sigma,
            &sigma,
            &u_old,
            &u_old,
            |_| Vec2::zeros(),
            f64::INFINITY,
            1.0,
            1.0,
            StepBoundary::Homogeneous,
        );
        let m = system.matrix();
        assert!(m.asymmetry() <= 1e-13 * m.frobenius_norm());
    }

    #[test]
    fn saddle_with_mass_no_convection_is_symmetric() {
        let mesh = Mesh::build_triangular(2);
        let ops = build_all_local_operators(&mesh);
        let layout = DofLayout::new(&mesh);
        let rho = CellField::project(&mesh, |p| 2.0 + p.x);
        let sigma = rho.sqrt();
        let u_old = HybridVelocity::zeros(&mesh, true);
        let system = assemble_saddle(
            &mesh,
            &ops,
            &layout,
            &rho,
            &sigma,
            &sigma,
            &u_old,
            &u_old,
            |_| Vec2::zeros(),
            1e-3,
            0.7,
            2.0,
            StepBoundary::Homogeneous,
        );
        let m = system.matrix();
        assert!(m.asymmetry() <= 1e-13 * m.frobenius_norm());
    }

    #[test]
    fn saddle_matches_dense_bilinear_form_oracle() {
        // Independent route: evaluate every matrix entry as the bilinear
        // form on unit basis fields through the public form evaluations.
        let mesh = Mesh::build_cartesian(2, 2, Rect::unit());
        let ops = build_all_local_operators(&mesh);
        let layout = DofLayout::new(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let rho_new = CellField::from_values(
            (0..mesh.n_cells()).map(|_| rng.gen_range(1.0..3.0)).collect(),
        );
        let rho_old = CellField::from_values(
            (0..mesh.n_cells()).map(|_| rng.gen_range(1.0..3.0)).collect(),
        );
        let sigma_new = rho_new.sqrt();
        let sigma_old = rho_old.sqrt();
        let mut u_old = HybridVelocity::zeros(&mesh, true);
        for t in 0..mesh.n_cells() {
            u_old.set_cell(t, Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        for f in mesh.interior_faces().collect::<Vec<_>>() {
            u_old.set_face(f, Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        let force = |p: Vec2| Vec2::new(0.3 - p.y, p.x * 0.5);
        let (dt, mu, rho_min) = (0.01, 0.7, 1.0);

        let system = assemble_saddle(
            &mesh,
            &ops,
            &layout,
            &rho_new,
            &sigma_new,
            &sigma_old,
            &u_old,
            &u_old,
            force,
            dt,
            mu,
            rho_min,
            StepBoundary::Homogeneous,
        );
        let dense = system.matrix().to_dense();

        let nv = layout.n_velocity();
        let basis: Vec<HybridVelocity> =
            (0..nv).map(|d| unit_basis(&mesh, &layout, d)).collect();

        // velocity-velocity block
        for i in 0..nv {
            for j in 0..nv {
                let mass: f64 = (0..mesh.n_cells())
                    .map(|t| {
                        rho_new[t] * mesh.cell_measure(t)
                            * basis[j].cell(t).dot(&basis[i].cell(t))
                    })
                    .sum();
                let expect = mass / dt
                    + rho_min / dt * jh(&mesh, &basis[j], &basis[i])
                    + mu * ah(&mesh, &basis[j], &basis[i])
                    + c_h(&mesh, &rho_new, &u_old, &basis[j], &basis[i]);
                assert_relative_eq!(dense[(i, j)], expect, max_relative = 1e-11, epsilon = 1e-12);
            }
        }
        // velocity-pressure coupling: -int p D_h v against unit pressures
        for i in 0..nv {
            for t in 0..mesh.n_cells() {
                let d_v = crate::operators::div_t(&mesh, t, &basis[i]) * mesh.cell_measure(t);
                assert_relative_eq!(
                    dense[(i, layout.pressure(t))],
                    -d_v,
                    max_relative = 1e-12,
                    epsilon = 1e-13
                );
                assert_relative_eq!(
                    dense[(layout.pressure(t), i)],
                    -d_v,
                    max_relative = 1e-12,
                    epsilon = 1e-13
                );
            }
        }
        // rhs: mass history + forcing + jump history
        for i in 0..nv {
            let mut expect: f64 = (0..mesh.n_cells())
                .map(|t| {
                    sigma_new[t] * sigma_old[t] * mesh.cell_measure(t)
                        * u_old.cell(t).dot(&basis[i].cell(t))
                })
                .sum::<f64>()
                / dt
                + rho_min / dt * jh(&mesh, &u_old, &basis[i]);
            for t in 0..mesh.n_cells() {
                expect += mesh.integrate_cell_vec(t, force).dot(&basis[i].cell(t));
            }
            assert_relative_eq!(system.rhs[i], expect, max_relative = 1e-11, epsilon = 1e-12);
        }
    }

    #[test]
    fn transport_zero_velocity_is_identity() {
        let mesh = Mesh::build_triangular(2);
        let u = HybridVelocity::zeros(&mesh, true);
        let rho = CellField::project(&mesh, |p| 2.0 + p.x);
        let system =
            assemble_density_transport(&mesh, &u, &rho, 1e-3, StepBoundary::Homogeneous);
        let x = DirectSolver::new().solve(&system).unwrap();
        for (t, &v) in x.iter().enumerate() {
            assert_relative_eq!(v, rho[t], max_relative = 1e-12);
        }
    }

    #[test]
    fn transport_preserves_constants() {
        let mesh = Mesh::bundled_hexagonal(0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let u = random_divfree(&mesh, &mut rng);
        let rho = CellField::constant(&mesh, 2.5);
        let system =
            assemble_density_transport(&mesh, &u, &rho, 1e-2, StepBoundary::Homogeneous);
        let x = DirectSolver::new().solve(&system).unwrap();
        for &v in &x {
            assert_relative_eq!(v, 2.5, max_relative = 1e-11);
        }
    }

    #[test]
    fn transport_matrix_is_m_matrix_on_divfree_velocities() {
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        for mesh in [Mesh::build_triangular(3), Mesh::bundled_hexagonal(0).unwrap()] {
            for &dt in &[1e-3, 0.1, 10.0] {
                let u = random_divfree(&mesh, &mut rng);
                let system =
                    assemble_density_transport(&mesh, &u, &CellField::constant(&mesh, 1.0), dt, StepBoundary::Homogeneous);
                let m = system.matrix();
                for (r, c, v) in m.entries() {
                    if r != c {
                        assert!(v <= 1e-14, "positive off-diagonal {v} at ({r},{c})");
                    }
                }
                for t in 0..mesh.n_cells() {
                    let diag = m.get(t, t);
                    let off: f64 = (0..mesh.n_cells())
                        .filter(|&c| c != t)
                        .map(|c| m.get(t, c).abs())
                        .sum();
                    assert!(diag >= off - 1e-12 * diag.abs());
                    // flux closure: row sum = |T| / dt
                    assert_relative_eq!(
                        diag - off,
                        mesh.cell_measure(t) / dt,
                        max_relative = 1e-9
                    );
                }
            }
        }
    }

    fn random_divfree(mesh: &Mesh, rng: &mut impl Rng) -> HybridVelocity {
        let c: [f64; 6] = core::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let field = move |p: Vec2| {
            let (x, y) = (p.x, p.y);
            let b = x * (1.0 - x) * y * (1.0 - y);
            let bx = (1.0 - 2.0 * x) * y * (1.0 - y);
            let by = x * (1.0 - x) * (1.0 - 2.0 * y);
            let q = c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y;
            let qx = c[1] + 2.0 * c[3] * x + c[4] * y;
            let qy = c[2] + c[4] * x + 2.0 * c[5] * y;
            Vec2::new(by * q + b * qy, -(bx * q + b * qx))
        };
        interpolate_velocity(mesh, field, true)
    }
}
