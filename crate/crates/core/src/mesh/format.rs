//! Text mesh format and the bundled hexagonal family.
//!
//! Format (one item per line, `#` starts a comment):
//!
//! ```text
//! VERTICES n
//! x y            # n lines
//! CELLS m
//! k i1 ... ik    # m lines, counter-clockwise 0-based vertex indices
//! ```
//!
//! Faces and all geometry are derived, never stored.

use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::Vec2;

use super::{Mesh, MeshError};

/// The bundled hexagonal refinement family (levels 0..=3, `h` halving from
/// 0.1212). Shipped as data files; see `assets/meshes/`.
const HEXAGONAL: [&str; 4] = [
    include_str!("../../assets/meshes/hexagonal_0.txt"),
    include_str!("../../assets/meshes/hexagonal_1.txt"),
    include_str!("../../assets/meshes/hexagonal_2.txt"),
    include_str!("../../assets/meshes/hexagonal_3.txt"),
];

impl Mesh {
    /// Loads a mesh from a text file in the format above.
    pub fn load(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
        let text = std::fs::read_to_string(path)?;
        parse_text(&text)
    }

    /// One of the bundled hexagonal meshes (levels 0..=3).
    pub fn bundled_hexagonal(level: usize) -> Result<Mesh, MeshError> {
        let text = HEXAGONAL.get(level).ok_or_else(|| {
            MeshError::Topology(format!(
                "no bundled hexagonal mesh at level {level} (levels 0..=3)"
            ))
        })?;
        parse_text(text)
    }

    pub fn bundled_hexagonal_levels() -> usize {
        HEXAGONAL.len()
    }

    /// Serializes to the text format; inverse of [`parse_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "VERTICES {}", self.n_vertices());
        for v in 0..self.n_vertices() {
            let p = self.vertex(v);
            let _ = writeln!(out, "{} {}", p.x, p.y);
        }
        let _ = writeln!(out, "CELLS {}", self.n_cells());
        for t in 0..self.n_cells() {
            let cell = self.cell_vertices(t);
            let _ = write!(out, "{}", cell.len());
            for &v in cell {
                let _ = write!(out, " {v}");
            }
            let _ = writeln!(out);
        }
        out
    }
}

/// Parses the text mesh format. Errors carry 1-based line numbers.
pub fn parse_text(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| MeshError::Parse {
                line: text.lines().count() + 1,
                msg: format!("unexpected end of file, expected {what}"),
            })
    };

    let (line, header) = next("VERTICES header")?;
    let n_vertices = parse_count(line, header, "VERTICES")?;
    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (line, body) = next("vertex coordinates")?;
        let mut it = body.split_whitespace();
        let x = parse_f64(line, it.next(), "x coordinate")?;
        let y = parse_f64(line, it.next(), "y coordinate")?;
        if it.next().is_some() {
            return Err(MeshError::Parse {
                line,
                msg: "expected exactly two coordinates".into(),
            });
        }
        vertices.push(Vec2::new(x, y));
    }

    let (line, header) = next("CELLS header")?;
    let n_cells = parse_count(line, header, "CELLS")?;
    let mut cells = Vec::with_capacity(n_cells);
    for _ in 0..n_cells {
        let (line, body) = next("cell vertex list")?;
        let mut it = body.split_whitespace();
        let k = parse_usize(line, it.next(), "vertex count")?;
        if k < 3 {
            return Err(MeshError::Parse {
                line,
                msg: format!("cell must have at least 3 vertices, got {k}"),
            });
        }
        let mut cell = Vec::with_capacity(k);
        for _ in 0..k {
            let v = parse_usize(line, it.next(), "vertex index")?;
            if v >= n_vertices {
                return Err(MeshError::Parse {
                    line,
                    msg: format!("vertex index {v} out of range (have {n_vertices} vertices)"),
                });
            }
            cell.push(v);
        }
        if it.next().is_some() {
            return Err(MeshError::Parse {
                line,
                msg: "more vertex indices than declared".into(),
            });
        }
        cells.push(cell);
    }
    if let Some((line, _)) = lines.next() {
        return Err(MeshError::Parse {
            line,
            msg: "unexpected content after cell list".into(),
        });
    }

    Mesh::from_cells(vertices, cells)
}

fn parse_count(line: usize, text: &str, keyword: &str) -> Result<usize, MeshError> {
    let mut it = text.split_whitespace();
    match it.next() {
        Some(k) if k == keyword => {}
        other => {
            return Err(MeshError::Parse {
                line,
                msg: format!("expected `{keyword} <count>`, got `{}`", other.unwrap_or("")),
            })
        }
    }
    let n = parse_usize(line, it.next(), "count")?;
    if it.next().is_some() {
        return Err(MeshError::Parse {
            line,
            msg: format!("unexpected tokens after `{keyword} <count>`"),
        });
    }
    Ok(n)
}

fn parse_usize(line: usize, tok: Option<&str>, what: &str) -> Result<usize, MeshError> {
    let tok = tok.ok_or_else(|| MeshError::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| MeshError::Parse {
        line,
        msg: format!("invalid {what} `{tok}`"),
    })
}

fn parse_f64(line: usize, tok: Option<&str>, what: &str) -> Result<f64, MeshError> {
    let tok = tok.ok_or_else(|| MeshError::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    let v: f64 = tok.parse().map_err(|_| MeshError::Parse {
        line,
        msg: format!("invalid {what} `{tok}`"),
    })?;
    if !v.is_finite() {
        return Err(MeshError::Parse {
            line,
            msg: format!("non-finite {what} `{tok}`"),
        });
    }
    Ok(v)
}
