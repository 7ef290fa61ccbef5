//! Generated mesh families: Cartesian and structured-triangular grids, and
//! the honeycomb generator behind the bundled hexagonal data files.

use crate::geometry::{Rect, Vec2};

use super::Mesh;

impl Mesh {
    /// Regular `nx x ny` grid of rectangles over `domain`.
    ///
    /// The family is labeled by its edge length: `nx = ny = 5` on the unit
    /// square is the level-0 Cartesian mesh with edge 0.2.
    pub fn build_cartesian(nx: usize, ny: usize, domain: Rect) -> Mesh {
        assert!(nx >= 1 && ny >= 1);
        let dx = domain.width() / nx as f64;
        let dy = domain.height() / ny as f64;
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Vec2::new(
                    domain.min.x + i as f64 * dx,
                    domain.min.y + j as f64 * dy,
                ));
            }
        }
        let mut cells = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                cells.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            }
        }
        Mesh::from_cells(vertices, cells).expect("generated Cartesian mesh is valid")
    }

    /// Structured triangulation of the unit square: `n x n` squares, each
    /// split along its main diagonal. `n = 4` gives the level-0 family with
    /// edge length 0.25.
    pub fn build_triangular(n: usize) -> Mesh {
        assert!(n >= 1);
        let step = 1.0 / n as f64;
        let vid = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Vec2::new(i as f64 * step, j as f64 * step));
            }
        }
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                cells.push(vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)]);
                cells.push(vec![vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            }
        }
        Mesh::from_cells(vertices, cells).expect("generated triangular mesh is valid")
    }
}

/// Honeycomb covering of the unit square behind the bundled hexagonal files.
///
/// Built on the integer lattice (x in units of `1/(2m)`, y in units of
/// `1/(3n)` with `n = 11 * 2^level`, `m = 10 * 2^level`): hexagon rows are cut
/// exactly in half at the four boundary edges, so every clipped vertex is a
/// lattice point and the mesh is conforming by construction. Interior cells
/// are near-regular pointy-top hexagons of diameter `4/(3n)`, which halves
/// with each level (0.1212 at level 0).
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn generate_hexagonal(level: u32) -> Mesh {
    let m = 10usize << level;
    let n = 11usize << level;
    let width_units = 2 * m as i64;
    let height_units = 3 * n as i64;

    let mut cells_lattice: Vec<Vec<(i64, i64)>> = Vec::new();
    for k in 0..=n {
        let cy = 3 * k as i64;
        let centers: Vec<i64> = if k % 2 == 0 {
            (0..m).map(|i| 2 * i as i64 + 1).collect()
        } else {
            (0..=m).map(|i| 2 * i as i64).collect()
        };
        for cx in centers {
            // Pointy-top hexagon, counter-clockwise from the bottom vertex.
            let hex = vec![
                (cx, cy - 2),
                (cx + 1, cy - 1),
                (cx + 1, cy + 1),
                (cx, cy + 2),
                (cx - 1, cy + 1),
                (cx - 1, cy - 1),
            ];
            let clipped = clip_lattice_polygon(hex, width_units, height_units);
            if clipped.len() >= 3 {
                cells_lattice.push(clipped);
            }
        }
    }

    let mut vertex_ids = std::collections::HashMap::new();
    let mut vertices = Vec::new();
    let mut cells = Vec::with_capacity(cells_lattice.len());
    for lattice_cell in cells_lattice {
        let mut cell = Vec::with_capacity(lattice_cell.len());
        for p in lattice_cell {
            let id = *vertex_ids.entry(p).or_insert_with(|| {
                vertices.push(Vec2::new(
                    p.0 as f64 / width_units as f64,
                    p.1 as f64 / height_units as f64,
                ));
                vertices.len() - 1
            });
            cell.push(id);
        }
        cells.push(cell);
    }
    Mesh::from_cells(vertices, cells).expect("generated hexagonal mesh is valid")
}

/// Sutherland-Hodgman clip of a lattice polygon against
/// `[0, w] x [0, h]`. The hexagon family is constructed so that every edge
/// crossing of a clip line happens at an exact lattice point.
fn clip_lattice_polygon(mut poly: Vec<(i64, i64)>, w: i64, h: i64) -> Vec<(i64, i64)> {
    // (axis, bound, keep_sign): keep points with sign * coord >= sign * bound.
    let planes = [(0usize, 0i64, 1i64), (0, w, -1), (1, 0, 1), (1, h, -1)];
    for &(axis, bound, keep) in &planes {
        let coord = |p: (i64, i64)| if axis == 0 { p.0 } else { p.1 };
        let inside = |p: (i64, i64)| keep * (coord(p) - bound) >= 0;
        let mut out: Vec<(i64, i64)> = Vec::with_capacity(poly.len() + 2);
        for i in 0..poly.len() {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            let (ip, iq) = (inside(p), inside(q));
            if ip {
                out.push(p);
            }
            if ip != iq {
                let dp = coord(q) - coord(p);
                let num = bound - coord(p);
                debug_assert!(dp != 0);
                let other_p = if axis == 0 { p.1 } else { p.0 };
                let other_q = if axis == 0 { q.1 } else { q.0 };
                debug_assert_eq!(
                    (num * (other_q - other_p)) % dp,
                    0,
                    "hexagon clip crossing off the lattice"
                );
                let other = other_p + num * (other_q - other_p) / dp;
                let cut = if axis == 0 { (bound, other) } else { (other, bound) };
                out.push(cut);
            }
        }
        out.dedup();
        while out.len() > 1 && out.first() == out.last() {
            out.pop();
        }
        poly = out;
        if poly.len() < 3 {
            return Vec::new();
        }
    }
    poly
}
