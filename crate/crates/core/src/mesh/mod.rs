//! Polygonal mesh representation and geometric precomputation.
//!
//! A mesh stores vertices, counter-clockwise cell loops, and derived faces.
//! Faces are straight segments shared by at most two cells; they are ordered
//! lexicographically by their sorted vertex pair, which fixes the face normal
//! orientation once and for all. The unit normal `n_F` of a face points out
//! of its owner cell (the incident cell with the lowest index); on boundary
//! faces it therefore points out of the domain.
//!
//! Construction validates, for every cell `T`:
//! - counter-clockwise orientation (positive signed area),
//! - star-shapedness with respect to the centroid (required by the fan
//!   quadrature),
//! - the closure identity `sum_F |F| n_TF = 0`,
//! - the gradient-exactness identity
//!   `sum_F |F| n_TF (x_F - xbar_T)^T = |T| I`.

mod format;
mod generate;

use std::collections::HashMap;

use thiserror::Error;

use crate::geometry::{integrate_segment, integrate_triangle, Mat2, Vec2};

pub use format::parse_text;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error reading mesh: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("cell {cell} is not counter-clockwise (signed area {area:.3e})")]
    Orientation { cell: usize, area: f64 },
}

/// A mesh face: the segment from vertex `a` to vertex `b`, traversed in the
/// owner cell's counter-clockwise order. `n_F` points out of the owner.
#[derive(Clone, Copy, Debug)]
pub struct Face {
    pub a: usize,
    pub b: usize,
    pub owner: usize,
    pub neighbor: Option<usize>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }

    /// The cell on the other side of the face from `cell`.
    pub fn other(&self, cell: usize) -> Option<usize> {
        if cell == self.owner {
            self.neighbor
        } else {
            Some(self.owner)
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Vec2>,
    cells: Vec<Vec<usize>>,
    faces: Vec<Face>,
    cell_faces: Vec<Vec<usize>>,
    cell_face_sign: Vec<Vec<f64>>,
    cell_measure: Vec<f64>,
    cell_centroid: Vec<Vec2>,
    cell_diameter: Vec<f64>,
    face_measure: Vec<f64>,
    face_midpoint: Vec<Vec2>,
    face_normal: Vec<Vec2>,
    interior_index: Vec<Option<usize>>,
    n_interior: usize,
    h: f64,
    domain_area: f64,
}

/// Per-cell shape-regularity data; the key ratio `h_T |F| / |T|` is the one
/// hidden in the discrete trace inequality.
#[derive(Clone, Debug)]
pub struct RegularityReport {
    /// Per cell: max over its faces of `h_T |F| / |T|`.
    pub per_cell_ratio: Vec<f64>,
    pub max_ratio: f64,
    pub min_diameter: f64,
    pub max_diameter: f64,
    /// (number of faces, number of cells with that many faces), sorted.
    pub face_count_histogram: Vec<(usize, usize)>,
}

impl Mesh {
    /// Builds a mesh from vertices and counter-clockwise cell loops,
    /// deriving faces and all geometric quantities.
    pub fn from_cells(vertices: Vec<Vec2>, cells: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        if cells.is_empty() {
            return Err(MeshError::Topology("mesh has no cells".into()));
        }
        for (t, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(MeshError::Topology(format!(
                    "cell {t} has fewer than 3 vertices"
                )));
            }
            for &v in cell {
                if v >= vertices.len() {
                    return Err(MeshError::Topology(format!(
                        "cell {t} references vertex {v} but only {} vertices exist",
                        vertices.len()
                    )));
                }
            }
            let mut sorted = cell.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != cell.len() {
                return Err(MeshError::Topology(format!(
                    "cell {t} repeats a vertex"
                )));
            }
        }

        // Orientation.
        for (t, cell) in cells.iter().enumerate() {
            let area = signed_area(&vertices, cell);
            if area <= 0.0 {
                return Err(MeshError::Orientation { cell: t, area });
            }
        }

        // Gather faces; key = sorted vertex pair.
        struct Rec {
            a: usize,
            b: usize,
            owner: usize,
            neighbor: Option<usize>,
        }
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut recs: Vec<Rec> = Vec::new();
        for (t, cell) in cells.iter().enumerate() {
            for k in 0..cell.len() {
                let a = cell[k];
                let b = cell[(k + 1) % cell.len()];
                let key = (a.min(b), a.max(b));
                match index.get(&key) {
                    None => {
                        index.insert(key, recs.len());
                        recs.push(Rec {
                            a,
                            b,
                            owner: t,
                            neighbor: None,
                        });
                    }
                    Some(&i) => {
                        let rec = &mut recs[i];
                        if rec.neighbor.is_some() {
                            return Err(MeshError::Topology(format!(
                                "face ({},{}) is shared by more than two cells",
                                key.0, key.1
                            )));
                        }
                        if rec.owner == t {
                            return Err(MeshError::Topology(format!(
                                "cell {t} traverses face ({},{}) twice",
                                key.0, key.1
                            )));
                        }
                        if (rec.a, rec.b) != (b, a) {
                            return Err(MeshError::Topology(format!(
                                "cells {} and {} traverse face ({},{}) in the same direction",
                                rec.owner, t, key.0, key.1
                            )));
                        }
                        rec.neighbor = Some(t);
                    }
                }
            }
        }

        // Deterministic face ordering: lexicographic by sorted vertex pair.
        let mut order: Vec<usize> = (0..recs.len()).collect();
        order.sort_unstable_by_key(|&i| (recs[i].a.min(recs[i].b), recs[i].a.max(recs[i].b)));
        let mut rank = vec![0usize; recs.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        let faces: Vec<Face> = order
            .iter()
            .map(|&i| Face {
                a: recs[i].a,
                b: recs[i].b,
                owner: recs[i].owner,
                neighbor: recs[i].neighbor,
            })
            .collect();

        // Per-cell face lists in loop order, with the sign of n_TF vs n_F.
        let mut cell_faces = vec![Vec::new(); cells.len()];
        let mut cell_face_sign = vec![Vec::new(); cells.len()];
        for (t, cell) in cells.iter().enumerate() {
            for k in 0..cell.len() {
                let a = cell[k];
                let b = cell[(k + 1) % cell.len()];
                let key = (a.min(b), a.max(b));
                let f = rank[index[&key]];
                cell_faces[t].push(f);
                cell_face_sign[t].push(if faces[f].owner == t { 1.0 } else { -1.0 });
            }
        }

        // Geometry.
        let mut cell_measure = Vec::with_capacity(cells.len());
        let mut cell_centroid = Vec::with_capacity(cells.len());
        let mut cell_diameter = Vec::with_capacity(cells.len());
        for cell in &cells {
            let area = signed_area(&vertices, cell);
            cell_measure.push(area);
            cell_centroid.push(polygon_centroid(&vertices, cell, area));
            let mut d: f64 = 0.0;
            for i in 0..cell.len() {
                for j in (i + 1)..cell.len() {
                    d = d.max((vertices[cell[i]] - vertices[cell[j]]).norm());
                }
            }
            cell_diameter.push(d);
        }
        let mut face_measure = Vec::with_capacity(faces.len());
        let mut face_midpoint = Vec::with_capacity(faces.len());
        let mut face_normal = Vec::with_capacity(faces.len());
        for f in &faces {
            let pa = vertices[f.a];
            let pb = vertices[f.b];
            let t = pb - pa;
            let len = t.norm();
            if len == 0.0 {
                return Err(MeshError::Topology(format!(
                    "face ({},{}) has zero length",
                    f.a, f.b
                )));
            }
            face_measure.push(len);
            face_midpoint.push((pa + pb) * 0.5);
            // Outward normal of a CCW loop: tangent rotated clockwise.
            face_normal.push(Vec2::new(t.y, -t.x) / len);
        }

        let mut interior_index = vec![None; faces.len()];
        let mut n_interior = 0;
        for (f, face) in faces.iter().enumerate() {
            if face.neighbor.is_some() {
                interior_index[f] = Some(n_interior);
                n_interior += 1;
            }
        }

        let h = cell_diameter.iter().cloned().fold(0.0, f64::max);
        let domain_area: f64 = cell_measure.iter().sum();

        let mesh = Mesh {
            vertices,
            cells,
            faces,
            cell_faces,
            cell_face_sign,
            cell_measure,
            cell_centroid,
            cell_diameter,
            face_measure,
            face_midpoint,
            face_normal,
            interior_index,
            n_interior,
            h,
            domain_area,
        };
        mesh.validate_geometry()?;
        Ok(mesh)
    }

    fn validate_geometry(&self) -> Result<(), MeshError> {
        for t in 0..self.n_cells() {
            // Star-shapedness with respect to the centroid: the fan quadrature
            // needs every fan triangle positively oriented.
            let c = self.cell_centroid[t];
            let cell = &self.cells[t];
            for k in 0..cell.len() {
                let a = self.vertices[cell[k]] - c;
                let b = self.vertices[cell[(k + 1) % cell.len()]] - c;
                if a.perp(&b) <= 0.0 {
                    return Err(MeshError::Topology(format!(
                        "cell {t} is not star-shaped with respect to its centroid"
                    )));
                }
            }
            // Closure: sum_F |F| n_TF = 0.
            let mut closure = Vec2::zeros();
            let mut perimeter = 0.0;
            for (&f, &s) in self.cell_faces[t].iter().zip(&self.cell_face_sign[t]) {
                closure += self.face_normal[f] * (s * self.face_measure[f]);
                perimeter += self.face_measure[f];
            }
            if closure.norm() > 1e-13 * perimeter {
                return Err(MeshError::Topology(format!(
                    "cell {t} violates the closure identity (residual {:.3e})",
                    closure.norm()
                )));
            }
            // sum_F |F| n_TF (x_F - xbar_T)^T = |T| I.
            let mut m = Mat2::zeros();
            for (&f, &s) in self.cell_faces[t].iter().zip(&self.cell_face_sign[t]) {
                let n_tf = self.face_normal[f] * s;
                let d = self.face_midpoint[f] - c;
                m += self.face_measure[f] * n_tf * d.transpose();
            }
            m -= Mat2::identity() * self.cell_measure[t];
            if m.norm() > 1e-12 * self.cell_measure[t] {
                return Err(MeshError::Topology(format!(
                    "cell {t} violates the gradient identity (residual {:.3e})",
                    m.norm()
                )));
            }
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_interior_faces(&self) -> usize {
        self.n_interior
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex(&self, v: usize) -> Vec2 {
        self.vertices[v]
    }

    pub fn cell_vertices(&self, t: usize) -> &[usize] {
        &self.cells[t]
    }

    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.faces[f].is_boundary()
    }

    /// Index of `f` in the enumeration of interior faces, if interior.
    pub fn interior_face_index(&self, f: usize) -> Option<usize> {
        self.interior_index[f]
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.faces.len()).filter(|&f| self.faces[f].neighbor.is_some())
    }

    /// Face indices of cell `t`, in loop order.
    pub fn cell_faces(&self, t: usize) -> &[usize] {
        &self.cell_faces[t]
    }

    /// Signs such that `n_TF = sign * n_F` for the faces of cell `t`.
    pub fn cell_face_signs(&self, t: usize) -> &[f64] {
        &self.cell_face_sign[t]
    }

    /// Iterates `(face index, |F|, n_TF, x_F)` over the faces of cell `t`.
    pub fn cell_face_geometry(&self, t: usize) -> impl Iterator<Item = (usize, f64, Vec2, Vec2)> + '_ {
        self.cell_faces[t]
            .iter()
            .zip(&self.cell_face_sign[t])
            .map(move |(&f, &s)| {
                (
                    f,
                    self.face_measure[f],
                    self.face_normal[f] * s,
                    self.face_midpoint[f],
                )
            })
    }

    pub fn cell_measure(&self, t: usize) -> f64 {
        self.cell_measure[t]
    }

    pub fn cell_centroid(&self, t: usize) -> Vec2 {
        self.cell_centroid[t]
    }

    pub fn cell_diameter(&self, t: usize) -> f64 {
        self.cell_diameter[t]
    }

    pub fn face_measure(&self, f: usize) -> f64 {
        self.face_measure[f]
    }

    pub fn face_midpoint(&self, f: usize) -> Vec2 {
        self.face_midpoint[f]
    }

    /// Unit normal `n_F` (outward from the owner cell).
    pub fn face_normal(&self, f: usize) -> Vec2 {
        self.face_normal[f]
    }

    /// `n_TF`: unit normal of face `f` pointing out of cell `t`.
    pub fn outward_normal(&self, t: usize, f: usize) -> Vec2 {
        if self.faces[f].owner == t {
            self.face_normal[f]
        } else {
            debug_assert_eq!(self.faces[f].neighbor, Some(t));
            -self.face_normal[f]
        }
    }

    /// Global mesh size: max over cells of the cell diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn domain_area(&self) -> f64 {
        self.domain_area
    }

    /// Integrates `f` over cell `t` by fan-triangulating from the centroid
    /// (degree-4 rule on each triangle).
    pub fn integrate_cell(&self, t: usize, mut f: impl FnMut(Vec2) -> f64) -> f64 {
        let c = self.cell_centroid[t];
        let cell = &self.cells[t];
        let mut acc = 0.0;
        for k in 0..cell.len() {
            let a = self.vertices[cell[k]];
            let b = self.vertices[cell[(k + 1) % cell.len()]];
            acc += integrate_triangle(c, a, b, &mut f);
        }
        acc
    }

    pub fn integrate_cell_vec(&self, t: usize, f: impl Fn(Vec2) -> Vec2) -> Vec2 {
        Vec2::new(
            self.integrate_cell(t, |p| f(p).x),
            self.integrate_cell(t, |p| f(p).y),
        )
    }

    pub fn cell_mean(&self, t: usize, f: impl FnMut(Vec2) -> f64) -> f64 {
        self.integrate_cell(t, f) / self.cell_measure[t]
    }

    pub fn cell_mean_vec(&self, t: usize, f: impl Fn(Vec2) -> Vec2) -> Vec2 {
        self.integrate_cell_vec(t, f) / self.cell_measure[t]
    }

    /// Integrates `f` over face `f_idx` (5-point Gauss rule).
    pub fn integrate_face(&self, f_idx: usize, f: impl FnMut(Vec2) -> f64) -> f64 {
        let face = &self.faces[f_idx];
        integrate_segment(self.vertices[face.a], self.vertices[face.b], f)
    }

    pub fn integrate_face_vec(&self, f_idx: usize, f: impl Fn(Vec2) -> Vec2) -> Vec2 {
        Vec2::new(
            self.integrate_face(f_idx, |p| f(p).x),
            self.integrate_face(f_idx, |p| f(p).y),
        )
    }

    pub fn face_mean(&self, f_idx: usize, f: impl FnMut(Vec2) -> f64) -> f64 {
        self.integrate_face(f_idx, f) / self.face_measure[f_idx]
    }

    pub fn face_mean_vec(&self, f_idx: usize, f: impl Fn(Vec2) -> Vec2) -> Vec2 {
        self.integrate_face_vec(f_idx, f) / self.face_measure[f_idx]
    }

    pub fn regularity_report(&self) -> RegularityReport {
        let mut per_cell_ratio = Vec::with_capacity(self.n_cells());
        for t in 0..self.n_cells() {
            let ht = self.cell_diameter[t];
            let ratio = self.cell_faces[t]
                .iter()
                .map(|&f| ht * self.face_measure[f] / self.cell_measure[t])
                .fold(0.0, f64::max);
            per_cell_ratio.push(ratio);
        }
        let max_ratio = per_cell_ratio.iter().cloned().fold(0.0, f64::max);
        let min_diameter = self.cell_diameter.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_diameter = self.cell_diameter.iter().cloned().fold(0.0, f64::max);
        let mut hist: HashMap<usize, usize> = HashMap::new();
        for cell in &self.cells {
            *hist.entry(cell.len()).or_insert(0) += 1;
        }
        let mut face_count_histogram: Vec<(usize, usize)> = hist.into_iter().collect();
        face_count_histogram.sort_unstable();
        RegularityReport {
            per_cell_ratio,
            max_ratio,
            min_diameter,
            max_diameter,
            face_count_histogram,
        }
    }
}

// Shoelace formulas evaluated in cell-local coordinates: with absolute
// coordinates the cancellation error floor is eps * |x|^2, which drowns the
// geometric identities on fine meshes far from the origin.
fn signed_area(vertices: &[Vec2], cell: &[usize]) -> f64 {
    let base = vertices[cell[0]];
    let mut acc = 0.0;
    for k in 0..cell.len() {
        let p = vertices[cell[k]] - base;
        let q = vertices[cell[(k + 1) % cell.len()]] - base;
        acc += p.perp(&q);
    }
    0.5 * acc
}

fn polygon_centroid(vertices: &[Vec2], cell: &[usize], area: f64) -> Vec2 {
    let base = vertices[cell[0]];
    let mut acc = Vec2::zeros();
    for k in 0..cell.len() {
        let p = vertices[cell[k]] - base;
        let q = vertices[cell[(k + 1) % cell.len()]] - base;
        acc += (p + q) * p.perp(&q);
    }
    base + acc / (6.0 * area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use approx::assert_relative_eq;

    #[test]
    fn cartesian_5x5_counts_and_h() {
        let m = Mesh::build_cartesian(5, 5, Rect::unit());
        assert_eq!(m.n_cells(), 25);
        assert_eq!(m.n_faces(), 60);
        assert_relative_eq!(m.h(), 2.0_f64.sqrt() * 0.2, max_relative = 1e-14);
        assert_relative_eq!(m.domain_area(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn cartesian_single_cell() {
        let m = Mesh::build_cartesian(1, 1, Rect::unit());
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.n_faces(), 4);
        assert_eq!(m.n_interior_faces(), 0);
        assert!(m.faces().iter().all(Face::is_boundary));
    }

    #[test]
    fn cartesian_2x1_interior_face() {
        let m = Mesh::build_cartesian(2, 1, Rect::unit());
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.n_faces(), 7);
        assert_eq!(m.n_interior_faces(), 1);
        let f = m.interior_faces().next().unwrap();
        let n = m.face_normal(f);
        assert_relative_eq!(n.x.abs(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(n.y.abs(), 0.0, epsilon = 1e-14);
        // Owner is the left cell, so n_F = +e1.
        assert_relative_eq!(n.x, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn triangular_counts() {
        let m = Mesh::build_triangular(1);
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.n_faces(), 5);
        assert_eq!(m.n_interior_faces(), 1);

        let m2 = Mesh::build_triangular(2);
        assert_eq!(m2.n_cells(), 8);
        assert_relative_eq!(m2.domain_area(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn triangular_level0_mesh_size() {
        // The level-0 family is labeled by its edge length 0.25; the cell
        // diameter is the hypotenuse.
        let m = Mesh::build_triangular(4);
        assert_relative_eq!(m.h(), 2.0_f64.sqrt() * 0.25, max_relative = 1e-14);
    }

    #[test]
    fn outward_normals_flip_across_interior_faces() {
        let m = Mesh::build_triangular(3);
        for f in m.interior_faces() {
            let face = m.face(f);
            let t = face.owner;
            let t2 = face.neighbor.unwrap();
            let diff = (m.outward_normal(t, f) + m.outward_normal(t2, f)).norm();
            assert!(diff <= 1e-15);
        }
    }

    #[test]
    fn closure_and_gradient_identities() {
        for m in [
            Mesh::build_cartesian(3, 2, Rect::new(Vec2::new(-1.0, 0.5), Vec2::new(2.0, 3.5))),
            Mesh::build_triangular(3),
            Mesh::bundled_hexagonal(0).unwrap(),
        ] {
            for t in 0..m.n_cells() {
                let mut closure = Vec2::zeros();
                let mut magic = Mat2::zeros();
                let mut perim = 0.0;
                for (_, len, n_tf, x_f) in m.cell_face_geometry(t) {
                    closure += n_tf * len;
                    magic += len * n_tf * (x_f - m.cell_centroid(t)).transpose();
                    perim += len;
                }
                assert!(closure.norm() <= 1e-13 * perim);
                assert!(
                    (magic - Mat2::identity() * m.cell_measure(t)).norm()
                        <= 1e-12 * m.cell_measure(t)
                );
            }
        }
    }

    #[test]
    fn quadrature_means_on_cells_and_faces() {
        let m = Mesh::build_cartesian(1, 1, Rect::unit());
        // mean of 2 + x over the unit square = 2.5
        assert_relative_eq!(m.cell_mean(0, |p| 2.0 + p.x), 2.5, max_relative = 1e-14);
        // mean of x over [0, 0.5] x [0, 1] = 0.25
        let m2 = Mesh::build_cartesian(2, 1, Rect::unit());
        assert_relative_eq!(m2.cell_mean(0, |p| p.x), 0.25, max_relative = 1e-13);
    }

    #[test]
    fn regularity_unit_square_and_sliver() {
        let m = Mesh::build_cartesian(1, 1, Rect::unit());
        let r = m.regularity_report();
        assert_relative_eq!(r.max_ratio, 2.0_f64.sqrt(), max_relative = 1e-13);

        let sliver = Mesh::build_cartesian(1, 1, Rect::new(Vec2::zeros(), Vec2::new(1.0, 0.01)));
        let r = sliver.regularity_report();
        assert_relative_eq!(
            r.max_ratio,
            100.0 * (1.0 + 1e-4_f64).sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn regularity_stable_under_refinement() {
        let r0 = Mesh::build_cartesian(5, 5, Rect::unit()).regularity_report().max_ratio;
        let r1 = Mesh::build_cartesian(10, 10, Rect::unit()).regularity_report().max_ratio;
        let r2 = Mesh::build_cartesian(20, 20, Rect::unit()).regularity_report().max_ratio;
        assert!((r1 - r0).abs() <= 0.05 * r0);
        assert!((r2 - r1).abs() <= 0.05 * r1);
    }

    #[test]
    fn clockwise_cell_rejected() {
        let verts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let err = Mesh::from_cells(verts, vec![vec![0, 3, 2, 1]]).unwrap_err();
        assert!(matches!(err, MeshError::Orientation { cell: 0, .. }));
    }

    #[test]
    fn overshared_face_rejected() {
        // Three triangles all using edge (0,1).
        let verts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.5, 1.0),
            Vec2::new(0.5, -1.0),
            Vec2::new(1.5, 1.0),
        ];
        let cells = vec![vec![0, 1, 2], vec![0, 3, 1], vec![0, 1, 4]];
        let err = Mesh::from_cells(verts, cells).unwrap_err();
        assert!(matches!(err, MeshError::Topology(_)));
    }

    #[test]
    fn centroid_matches_mean_of_position() {
        let m = Mesh::bundled_hexagonal(0).unwrap();
        for t in (0..m.n_cells()).step_by(7) {
            let c = m.cell_centroid(t);
            let mean = m.cell_mean_vec(t, |p| p);
            assert!((c - mean).norm() <= 1e-13 * (1.0 + c.norm()));
        }
    }
}
