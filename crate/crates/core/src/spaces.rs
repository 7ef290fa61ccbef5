//! Hybrid velocity and piecewise-constant scalar unknowns, their
//! interpolators, and the discrete L2/H1-like norms.
//!
//! A hybrid velocity carries one constant 2-vector per cell and one per face.
//! With the `homogeneous` flag set, boundary face values are pinned to zero
//! and the field lives in the homogeneous space used for the momentum
//! unknowns and test functions.

use crate::geometry::Vec2;
use crate::mesh::Mesh;

#[derive(Clone, Debug)]
pub struct HybridVelocity {
    cell: Vec<Vec2>,
    face: Vec<Vec2>,
    homogeneous: bool,
}

impl HybridVelocity {
    pub fn zeros(mesh: &Mesh, homogeneous: bool) -> Self {
        Self {
            cell: vec![Vec2::zeros(); mesh.n_cells()],
            face: vec![Vec2::zeros(); mesh.n_faces()],
            homogeneous,
        }
    }

    /// Interpolates an analytic field: cell means and face means. With
    /// `homogeneous` set, boundary face values are zeroed.
    pub fn interpolate(mesh: &Mesh, field: impl Fn(Vec2) -> Vec2, homogeneous: bool) -> Self {
        let cell = (0..mesh.n_cells())
            .map(|t| mesh.cell_mean_vec(t, &field))
            .collect();
        let face = (0..mesh.n_faces())
            .map(|f| {
                if homogeneous && mesh.is_boundary_face(f) {
                    Vec2::zeros()
                } else {
                    mesh.face_mean_vec(f, &field)
                }
            })
            .collect();
        Self {
            cell,
            face,
            homogeneous,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.cell.len()
    }

    pub fn n_faces(&self) -> usize {
        self.face.len()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn cell(&self, t: usize) -> Vec2 {
        self.cell[t]
    }

    pub fn face(&self, f: usize) -> Vec2 {
        self.face[f]
    }

    pub fn set_cell(&mut self, t: usize, v: Vec2) {
        self.cell[t] = v;
    }

    pub fn set_face(&mut self, f: usize, v: Vec2) {
        self.face[f] = v;
    }

    pub fn cells(&self) -> &[Vec2] {
        &self.cell
    }

    pub fn faces(&self) -> &[Vec2] {
        &self.face
    }

    /// True if all boundary face values vanish.
    pub fn boundary_is_zero(&self, mesh: &Mesh) -> bool {
        (0..mesh.n_faces())
            .filter(|&f| mesh.is_boundary_face(f))
            .all(|f| self.face[f] == Vec2::zeros())
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.cell {
            *v *= s;
        }
        for v in &mut self.face {
            *v *= s;
        }
    }

    /// `self - other`, componentwise. The result is homogeneous only if both
    /// operands agree on boundary faces; the flag is kept conservative.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.cell.len(), other.cell.len());
        assert_eq!(self.face.len(), other.face.len());
        Self {
            cell: self
                .cell
                .iter()
                .zip(&other.cell)
                .map(|(a, b)| a - b)
                .collect(),
            face: self
                .face
                .iter()
                .zip(&other.face)
                .map(|(a, b)| a - b)
                .collect(),
            homogeneous: self.homogeneous && other.homogeneous,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CellField {
    values: Vec<f64>,
}

impl CellField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            values: vec![0.0; mesh.n_cells()],
        }
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self {
            values: vec![c; mesh.n_cells()],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// L2-orthogonal projection of an analytic field: cell means.
    pub fn project(mesh: &Mesh, field: impl Fn(Vec2) -> f64) -> Self {
        Self {
            values: (0..mesh.n_cells())
                .map(|t| mesh.cell_mean(t, &field))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Elementwise square root.
    pub fn sqrt(&self) -> Self {
        Self {
            values: self.values.iter().map(|&v| v.sqrt()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// `sum_T |T| rho_T`.
    pub fn mass(&self, mesh: &Mesh) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(t, &v)| mesh.cell_measure(t) * v)
            .sum()
    }

    pub fn l2_norm(&self, mesh: &Mesh) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(t, &v)| mesh.cell_measure(t) * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn l1_norm(&self, mesh: &Mesh) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(t, &v)| mesh.cell_measure(t) * v.abs())
            .sum()
    }
}

impl std::ops::Index<usize> for CellField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for CellField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

/// Interpolates an analytic velocity field (cell and face means).
pub fn interpolate_velocity(
    mesh: &Mesh,
    field: impl Fn(Vec2) -> Vec2,
    homogeneous: bool,
) -> HybridVelocity {
    HybridVelocity::interpolate(mesh, field, homogeneous)
}

/// Projects an analytic scalar field onto cellwise constants.
pub fn project_cell(mesh: &Mesh, field: impl Fn(Vec2) -> f64) -> CellField {
    CellField::project(mesh, field)
}

/// `( sum_T h_T^-1 sum_{F in F_T} |F| |v_F - v_T|^2 )^(1/2)`.
///
/// A norm on the homogeneous space; a seminorm otherwise.
pub fn norm_1h(mesh: &Mesh, v: &HybridVelocity) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_cells() {
        let inv_ht = 1.0 / mesh.cell_diameter(t);
        for (f, len, _, _) in mesh.cell_face_geometry(t) {
            acc += inv_ht * len * (v.face(f) - v.cell(t)).norm_squared();
        }
    }
    acc.sqrt()
}

/// Stabilization `j_h`: `sum_T h_T sum_{F in F_T, F interior} |F|
/// (w_F - w_T) . (v_F - v_T)`. Boundary faces do not contribute.
pub fn jh(mesh: &Mesh, w: &HybridVelocity, v: &HybridVelocity) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_cells() {
        let ht = mesh.cell_diameter(t);
        for (f, len, _, _) in mesh.cell_face_geometry(t) {
            if mesh.is_boundary_face(f) {
                continue;
            }
            acc += ht * len * (w.face(f) - w.cell(t)).dot(&(v.face(f) - v.cell(t)));
        }
    }
    acc
}

/// Discrete L2 inner product: `sum_T |T| w_T . v_T + j_h(w, v)`.
pub fn inner_0h(mesh: &Mesh, w: &HybridVelocity, v: &HybridVelocity) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_cells() {
        acc += mesh.cell_measure(t) * w.cell(t).dot(&v.cell(t));
    }
    acc + jh(mesh, w, v)
}

pub fn norm_0h(mesh: &Mesh, v: &HybridVelocity) -> f64 {
    inner_0h(mesh, v, v).sqrt()
}

/// `L^2` norm of the broken cell part alone.
pub fn l2_norm_cells(mesh: &Mesh, v: &HybridVelocity) -> f64 {
    (0..mesh.n_cells())
        .map(|t| mesh.cell_measure(t) * v.cell(t).norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// Left-hand side of the discrete Sobolev inequality:
/// `( ||v_h||_Lp^p + sum_T h_T ||v_T||^p_Lp(dT) + sum_T sum_F h_T
/// ||v_F||^p_Lp(F) )^(1/p)`, to be compared against `norm_1h`.
pub fn sobolev_lhs(mesh: &Mesh, v: &HybridVelocity, p: f64) -> f64 {
    assert!(p >= 1.0 && p.is_finite());
    let mut acc = 0.0;
    for t in 0..mesh.n_cells() {
        let ht = mesh.cell_diameter(t);
        acc += mesh.cell_measure(t) * v.cell(t).norm().powf(p);
        for (f, len, _, _) in mesh.cell_face_geometry(t) {
            acc += ht * len * v.cell(t).norm().powf(p);
            acc += ht * len * v.face(f).norm().powf(p);
        }
    }
    acc.powf(1.0 / p)
}
