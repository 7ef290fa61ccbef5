//! Local gradient and divergence reconstructions, the affine cell
//! reconstruction, the face stabilization, and the viscous bilinear form.
//!
//! At lowest order the gradient reconstruction has the closed form
//! `G_T v = |T|^-1 sum_F |F| (v_F - v_T) n_TF^T`, so no local solve is
//! required. The stabilization penalizes the face-mean mismatch of the
//! affine reconstruction; for affine reconstructions the face mean is the
//! midpoint value, which keeps all local integrals exact.

use nalgebra::DMatrix;

use crate::geometry::{Mat2, Vec2};
use crate::mesh::Mesh;
use crate::spaces::HybridVelocity;

/// Gradient reconstruction `G_T v` on cell `t` (rows: velocity component,
/// columns: derivative direction).
pub fn grad_t(mesh: &Mesh, t: usize, v: &HybridVelocity) -> Mat2 {
    let vt = v.cell(t);
    let mut g = Mat2::zeros();
    for (f, len, n_tf, _) in mesh.cell_face_geometry(t) {
        g += len * (v.face(f) - vt) * n_tf.transpose();
    }
    g / mesh.cell_measure(t)
}

/// Discrete divergence `D_T v = |T|^-1 sum_F |F| v_F . n_TF`; equals
/// `tr(G_T v)` by the closure identity.
pub fn div_t(mesh: &Mesh, t: usize, v: &HybridVelocity) -> f64 {
    let mut acc = 0.0;
    for (f, len, n_tf, _) in mesh.cell_face_geometry(t) {
        acc += len * v.face(f).dot(&n_tf);
    }
    acc / mesh.cell_measure(t)
}

/// The affine reconstruction `r_T v(x) = v_T + G_T v (x - xbar_T)`.
#[derive(Clone, Copy, Debug)]
pub struct AffineReconstruction {
    pub value_at_centroid: Vec2,
    pub grad: Mat2,
    pub centroid: Vec2,
}

impl AffineReconstruction {
    pub fn eval(&self, x: Vec2) -> Vec2 {
        self.value_at_centroid + self.grad * (x - self.centroid)
    }
}

pub fn reconstruct_rt(mesh: &Mesh, t: usize, v: &HybridVelocity) -> AffineReconstruction {
    AffineReconstruction {
        value_at_centroid: v.cell(t),
        grad: grad_t(mesh, t, v),
        centroid: mesh.cell_centroid(t),
    }
}

/// Stabilization `s_T(w, v) = h_T^-1 sum_F |F| delta_F(w) . delta_F(v)` with
/// `delta_F(v) = r_T v(x_F) - v_F` (the face mean of an affine function is
/// its midpoint value).
pub fn stab_st(mesh: &Mesh, t: usize, w: &HybridVelocity, v: &HybridVelocity) -> f64 {
    let rw = reconstruct_rt(mesh, t, w);
    let rv = reconstruct_rt(mesh, t, v);
    let mut acc = 0.0;
    for (f, len, _, x_f) in mesh.cell_face_geometry(t) {
        let dw = rw.eval(x_f) - w.face(f);
        let dv = rv.eval(x_f) - v.face(f);
        acc += len * dw.dot(&dv);
    }
    acc / mesh.cell_diameter(t)
}

/// Local viscous form `a_T(w, v) = |T| G_T w : G_T v + s_T(w, v)`.
pub fn at(mesh: &Mesh, t: usize, w: &HybridVelocity, v: &HybridVelocity) -> f64 {
    let gw = grad_t(mesh, t, w);
    let gv = grad_t(mesh, t, v);
    mesh.cell_measure(t) * gw.dot(&gv) + stab_st(mesh, t, w, v)
}

/// Global viscous form `a_h(w, v) = sum_T a_T(w, v)`.
pub fn ah(mesh: &Mesh, w: &HybridVelocity, v: &HybridVelocity) -> f64 {
    (0..mesh.n_cells()).map(|t| at(mesh, t, w, v)).sum()
}

pub fn norm_ah(mesh: &Mesh, v: &HybridVelocity) -> f64 {
    ah(mesh, v, v).max(0.0).sqrt()
}

/// Discrete space-time norm `( sum_n dt * ||v^n||_ah^2 )^(1/2)` (rectangle
/// rule in time).
pub fn spacetime_norm(mesh: &Mesh, series: &[HybridVelocity], dt: f64) -> f64 {
    series
        .iter()
        .map(|v| dt * ah(mesh, v, v))
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}

/// Per-cell dense blocks of the viscous, stabilization, and L2-jump forms on
/// the local unknowns `[v_T, (v_F)_{F in F_T}]` (x/y interleaved), plus the
/// gradient and divergence of each local basis vector.
#[derive(Clone, Debug)]
pub struct LocalOperators {
    pub cell: usize,
    /// `a_T` matrix; symmetric positive semidefinite with kernel = constants.
    pub a: DMatrix<f64>,
    /// `s_T` matrix.
    pub stab: DMatrix<f64>,
    /// `j_T` matrix (interior faces only).
    pub j: DMatrix<f64>,
    /// Gradient of each local basis vector.
    pub grad_basis: Vec<Mat2>,
    /// Divergence of each local basis vector (`tr` of the gradient).
    pub div_basis: Vec<f64>,
}

impl LocalOperators {
    pub fn n_local(&self) -> usize {
        self.grad_basis.len()
    }
}

/// Builds the per-cell operator blocks for cell `t`.
pub fn build_local_operators(mesh: &Mesh, t: usize) -> LocalOperators {
    let faces: Vec<(usize, f64, Vec2, Vec2)> = mesh.cell_face_geometry(t).collect();
    let k = faces.len();
    let n_local = 2 * (1 + k);
    let area = mesh.cell_measure(t);
    let ht = mesh.cell_diameter(t);
    let centroid = mesh.cell_centroid(t);

    let basis_cell = |i: usize| -> Vec2 {
        match i {
            0 => Vec2::new(1.0, 0.0),
            1 => Vec2::new(0.0, 1.0),
            _ => Vec2::zeros(),
        }
    };
    let basis_face = |i: usize, l: usize| -> Vec2 {
        if i >= 2 && (i - 2) / 2 == l {
            if i % 2 == 0 {
                Vec2::new(1.0, 0.0)
            } else {
                Vec2::new(0.0, 1.0)
            }
        } else {
            Vec2::zeros()
        }
    };

    let mut grad_basis = Vec::with_capacity(n_local);
    for i in 0..n_local {
        let vt = basis_cell(i);
        let mut g = Mat2::zeros();
        for (l, &(_, len, n_tf, _)) in faces.iter().enumerate() {
            g += len * (basis_face(i, l) - vt) * n_tf.transpose();
        }
        grad_basis.push(g / area);
    }
    let div_basis: Vec<f64> = grad_basis.iter().map(Mat2::trace).collect();

    // delta_F(basis_i) = basis_cell(i) + G_i (x_F - xbar) - basis_face(i, F)
    let mut deltas = vec![vec![Vec2::zeros(); k]; n_local];
    for i in 0..n_local {
        for (l, &(_, _, _, x_f)) in faces.iter().enumerate() {
            deltas[i][l] = basis_cell(i) + grad_basis[i] * (x_f - centroid) - basis_face(i, l);
        }
    }

    let mut a = DMatrix::zeros(n_local, n_local);
    let mut stab = DMatrix::zeros(n_local, n_local);
    let mut j = DMatrix::zeros(n_local, n_local);
    for i in 0..n_local {
        for jdx in 0..n_local {
            let mut s = 0.0;
            let mut jj = 0.0;
            for (l, &(f, len, _, _)) in faces.iter().enumerate() {
                s += len * deltas[i][l].dot(&deltas[jdx][l]);
                if !mesh.is_boundary_face(f) {
                    let di = basis_face(i, l) - basis_cell(i);
                    let dj = basis_face(jdx, l) - basis_cell(jdx);
                    jj += len * di.dot(&dj);
                }
            }
            stab[(i, jdx)] = s / ht;
            j[(i, jdx)] = ht * jj;
            a[(i, jdx)] = area * grad_basis[i].dot(&grad_basis[jdx]) + stab[(i, jdx)];
        }
    }

    LocalOperators {
        cell: t,
        a,
        stab,
        j,
        grad_basis,
        div_basis,
    }
}

pub fn build_all_local_operators(mesh: &Mesh) -> Vec<LocalOperators> {
    (0..mesh.n_cells()).map(|t| build_local_operators(mesh, t)).collect()
}

/// Assembles the global `a_h` matrix over the homogeneous velocity unknowns
/// (cell and interior-face DOFs) by scattering the local blocks.
pub fn assemble_ah(
    mesh: &Mesh,
    ops: &[LocalOperators],
    layout: &crate::assembly::DofLayout,
) -> crate::sparse::SparseMatrix {
    let n = layout.n_velocity();
    let mut triplets = Vec::new();
    for t in 0..mesh.n_cells() {
        let op = &ops[t];
        let global = |i: usize| -> Option<usize> {
            if i < 2 {
                Some(layout.u_cell(t)[i])
            } else {
                let f = mesh.cell_faces(t)[(i - 2) / 2];
                layout.u_face(f).map(|d| d[i % 2])
            }
        };
        for i in 0..op.n_local() {
            let Some(row) = global(i) else { continue };
            for j in 0..op.n_local() {
                let Some(col) = global(j) else { continue };
                triplets.push((row, col, op.a[(i, j)]));
            }
        }
    }
    crate::sparse::SparseMatrix::from_triplets(n, n, &triplets)
}

/// Local DOF values of a hybrid field on cell `t`, matching the
/// `LocalOperators` ordering.
pub fn local_dofs(mesh: &Mesh, t: usize, v: &HybridVelocity) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * (1 + mesh.cell_faces(t).len()));
    out.push(v.cell(t).x);
    out.push(v.cell(t).y);
    for &f in mesh.cell_faces(t) {
        out.push(v.face(f).x);
        out.push(v.face(f).y);
    }
    out
}
