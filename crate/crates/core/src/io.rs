//! Output writers: legacy ASCII VTK unstructured grids with cell data,
//! Matrix Market dumps of assembled systems, and the diagnostics CSV.
//!
//! All floating-point output uses a fixed scientific format so that reruns
//! of the same computation produce byte-identical files.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::mesh::Mesh;
use crate::sparse::SparseMatrix;
use crate::spaces::{CellField, HybridVelocity};
use crate::timestepper::EnergyLedger;

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

/// Legacy ASCII VTK unstructured grid with the piecewise-constant fields as
/// CELL_DATA (density, pressure scalars; cell velocity vector).
pub fn vtk_string(
    mesh: &Mesh,
    density: &CellField,
    velocity: &HybridVelocity,
    pressure: &CellField,
    title: &str,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(out, "POINTS {} double", mesh.n_vertices());
    for v in 0..mesh.n_vertices() {
        let p = mesh.vertex(v);
        let _ = writeln!(out, "{} {} 0", fmt(p.x), fmt(p.y));
    }
    let total: usize = (0..mesh.n_cells())
        .map(|t| mesh.cell_vertices(t).len() + 1)
        .sum();
    let _ = writeln!(out, "CELLS {} {}", mesh.n_cells(), total);
    for t in 0..mesh.n_cells() {
        let cell = mesh.cell_vertices(t);
        let _ = write!(out, "{}", cell.len());
        for &v in cell {
            let _ = write!(out, " {v}");
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out, "CELL_TYPES {}", mesh.n_cells());
    for _ in 0..mesh.n_cells() {
        let _ = writeln!(out, "7"); // VTK_POLYGON
    }
    let _ = writeln!(out, "CELL_DATA {}", mesh.n_cells());
    let _ = writeln!(out, "SCALARS density double 1");
    let _ = writeln!(out, "LOOKUP_TABLE default");
    for &v in density.values() {
        let _ = writeln!(out, "{}", fmt(v));
    }
    let _ = writeln!(out, "SCALARS pressure double 1");
    let _ = writeln!(out, "LOOKUP_TABLE default");
    for &v in pressure.values() {
        let _ = writeln!(out, "{}", fmt(v));
    }
    let _ = writeln!(out, "VECTORS velocity double");
    for t in 0..mesh.n_cells() {
        let u = velocity.cell(t);
        let _ = writeln!(out, "{} {} 0", fmt(u.x), fmt(u.y));
    }
    out
}

pub fn write_vtk(
    path: impl AsRef<Path>,
    mesh: &Mesh,
    density: &CellField,
    velocity: &HybridVelocity,
    pressure: &CellField,
    title: &str,
) -> io::Result<()> {
    std::fs::write(path, vtk_string(mesh, density, velocity, pressure, title))
}

/// Matrix Market coordinate format (1-based, duplicates merged,
/// row-major order).
pub fn matrix_market_string(matrix: &SparseMatrix, comment: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "%%MatrixMarket matrix coordinate real general");
    if !comment.is_empty() {
        let _ = writeln!(out, "% {comment}");
    }
    let _ = writeln!(
        out,
        "{} {} {}",
        matrix.n_rows(),
        matrix.n_cols(),
        matrix.nnz()
    );
    for (r, c, v) in matrix.entries() {
        let _ = writeln!(out, "{} {} {}", r + 1, c + 1, fmt(v));
    }
    out
}

pub fn write_matrix_market(
    path: impl AsRef<Path>,
    matrix: &SparseMatrix,
    comment: &str,
) -> io::Result<()> {
    std::fs::write(path, matrix_market_string(matrix, comment))
}

/// Per-step diagnostics CSV with the fixed schema
/// `step,t,rho_min,rho_max,mass,l2_rho,kinetic,dissipation,div_norm`.
pub fn diagnostics_csv(ledger: &EnergyLedger) -> String {
    let mut out = String::from("step,t,rho_min,rho_max,mass,l2_rho,kinetic,dissipation,div_norm\n");
    for row in &ledger.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.step,
            fmt(row.t),
            fmt(row.rho_min),
            fmt(row.rho_max),
            fmt(row.mass),
            fmt(row.l2_rho),
            fmt(row.kinetic),
            fmt(row.dissipation),
            fmt(row.div_norm)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use crate::timestepper::EnergyRow;

    #[test]
    fn vtk_has_legacy_layout_and_cell_data() {
        let mesh = Mesh::build_cartesian(2, 1, Rect::unit());
        let rho = CellField::constant(&mesh, 2.0);
        let p = CellField::zeros(&mesh);
        let u = HybridVelocity::zeros(&mesh, true);
        let s = vtk_string(&mesh, &rho, &u, &p, "fields");
        assert!(s.starts_with("# vtk DataFile Version 3.0"));
        assert!(s.contains("DATASET UNSTRUCTURED_GRID"));
        assert!(s.contains("POINTS 6 double"));
        assert!(s.contains("CELLS 2 10"));
        assert!(s.contains("CELL_TYPES 2"));
        assert!(s.contains("CELL_DATA 2"));
        assert!(s.contains("SCALARS density double 1"));
        assert!(s.contains("VECTORS velocity double"));
    }

    #[test]
    fn matrix_market_round_trip() {
        let m = SparseMatrix::from_triplets(3, 2, &[(0, 1, 2.5), (2, 0, -1.0), (2, 0, 0.5)]);
        let s = matrix_market_string(&m, "test dump");
        let mut lines = s.lines();
        assert_eq!(
            lines.next().unwrap(),
            "%%MatrixMarket matrix coordinate real general"
        );
        // parse back with a minimal reader
        let mut dims = None;
        let mut entries = Vec::new();
        for line in s.lines().filter(|l| !l.starts_with('%')) {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if dims.is_none() {
                dims = Some((
                    toks[0].parse::<usize>().unwrap(),
                    toks[1].parse::<usize>().unwrap(),
                    toks[2].parse::<usize>().unwrap(),
                ));
            } else {
                entries.push((
                    toks[0].parse::<usize>().unwrap() - 1,
                    toks[1].parse::<usize>().unwrap() - 1,
                    toks[2].parse::<f64>().unwrap(),
                ));
            }
        }
        let (nr, nc, nnz) = dims.unwrap();
        assert_eq!((nr, nc, nnz), (3, 2, 2));
        let again = SparseMatrix::from_triplets(nr, nc, &entries);
        assert_eq!(again.get(0, 1), 2.5);
        assert_eq!(again.get(2, 0), -0.5);
    }

    #[test]
    fn diagnostics_csv_schema() {
        let ledger = EnergyLedger {
            rows: vec![EnergyRow {
                step: 3,
                t: 0.3,
                rho_min: 1.0,
                rho_max: 2.0,
                mass: 1.5,
                l2_rho: 1.2,
                kinetic: 0.5,
                dissipation: 0.1,
                forcing_work: 0.0,
                upwind_accum: 0.0,
                div_norm: 1e-12,
            }],
        };
        let s = diagnostics_csv(&ledger);
        assert!(s.starts_with(
            "step,t,rho_min,rho_max,mass,l2_rho,kinetic,dissipation,div_norm\n"
        ));
        assert!(s.lines().nth(1).unwrap().starts_with("3,"));
        // byte-determinism: formatting is pure
        assert_eq!(s, diagnostics_csv(&ledger));
    }
}
