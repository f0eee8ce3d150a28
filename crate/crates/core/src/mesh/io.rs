//! Plain-text mesh format:
//!
//! ```text
//! polymesh 2d 1
//! <nv> <nc>
//! x y                 (nv lines)
//! k i1 i2 ... ik      (nc lines, 0-based CCW vertex indices)
//! points              (optional)
//! xK yK               (nc lines)
//! ```
//!
//! `#` starts a comment; blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::Mesh;
use crate::{Error, Result, Vec2};

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let last_line = text.lines().count().max(1);

    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    if header.split_whitespace().collect::<Vec<_>>() != ["polymesh", "2d", "1"] {
        return Err(perr(ln, format!("bad header `{header}`, expected `polymesh 2d 1`")));
    }
    let (ln, counts) = lines.next().ok_or_else(|| perr(last_line, "missing counts line"))?;
    let counts = parse_usizes(ln, counts)?;
    let [nv, nc] = counts[..] else {
        return Err(perr(ln, "counts line must be `<nv> <nc>`"));
    };
    if nc == 0 {
        return Err(perr(ln, "no cells"));
    }

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| perr(last_line, "unexpected end of file in vertex list"))?;
        vertices.push(parse_point(ln, l)?);
    }

    let mut polygons = Vec::with_capacity(nc);
    let mut cell_lines = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, l) = lines.next().ok_or_else(|| perr(last_line, "unexpected end of file in cell list"))?;
        let ids = parse_usizes(ln, l)?;
        let Some((&k, rest)) = ids.split_first() else {
            return Err(perr(ln, "empty cell line"));
        };
        if k != rest.len() {
            return Err(perr(ln, format!("cell declares {k} vertices but lists {}", rest.len())));
        }
        if let Some(&bad) = rest.iter().find(|&&i| i >= nv) {
            return Err(perr(ln, format!("vertex index {bad} out of range ({nv} vertices)")));
        }
        polygons.push(rest.to_vec());
        cell_lines.push(ln);
    }

    let mut points = None;
    if let Some((ln, l)) = lines.next() {
        if l != "points" {
            return Err(perr(ln, format!("unexpected content `{l}` after cell list")));
        }
        let mut p = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (ln, l) = lines.next().ok_or_else(|| perr(last_line, "unexpected end of file in points list"))?;
            p.push(parse_point(ln, l)?);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(perr(ln, "trailing content after points list"));
        }
        points = Some(p);
    }

    Mesh::build(vertices, polygons, points).map_err(|e| match e.cell {
        Some(c) => perr(cell_lines[c], e.msg),
        None => perr(1, e.msg),
    })
}

fn parse_usizes(line: usize, l: &str) -> Result<Vec<usize>> {
    l.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| perr(line, format!("expected a non-negative integer, got `{t}`"))))
        .collect()
}

fn parse_point(line: usize, l: &str) -> Result<Vec2> {
    let v: Vec<f64> = l
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| perr(line, format!("expected a number, got `{t}`"))))
        .collect::<Result<_>>()?;
    match v[..] {
        [x, y] if x.is_finite() && y.is_finite() => Ok(Vec2::new(x, y)),
        _ => Err(perr(line, "expected two finite coordinates")),
    }
}

/// Serialize with 17 significant digits so that reading back reproduces the
/// coordinates exactly. The `points` block is written only when some cell
/// point differs from its centroid.
pub fn format_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "polymesh 2d 1").unwrap();
    writeln!(s, "{} {}", mesh.vertices().len(), mesh.num_cells()).unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{:.16e} {:.16e}", v.x, v.y).unwrap();
    }
    for c in mesh.cells() {
        write!(s, "{}", c.vertex_ids.len()).unwrap();
        for i in &c.vertex_ids {
            write!(s, " {i}").unwrap();
        }
        s.push('\n');
    }
    if mesh.cells().iter().any(|c| c.point != c.centroid) {
        writeln!(s, "points").unwrap();
        for c in mesh.cells() {
            writeln!(s, "{:.16e} {:.16e}", c.point.x, c.point.y).unwrap();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cartesian, build_perturbed_quads, Domain};

    #[test]
    fn round_trip_unit_square() {
        let m = build_cartesian(1, 1, Domain::unit()).unwrap();
        let back = parse_mesh(&format_mesh(&m)).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn round_trip_perturbed_with_points() {
        let m = build_perturbed_quads(5, 4, Domain::new(0.0, 1.0, 0.0, 0.7), 0.25, 9).unwrap();
        let pts: Vec<Vec2> = m.cells().iter().map(|c| c.centroid * 0.9 + c.vertices[0] * 0.1).collect();
        let m = m.with_points(&pts).unwrap();
        let back = parse_mesh(&format_mesh(&m)).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn out_of_range_vertex_reports_line() {
        let text = "polymesh 2d 1\n4 1\n0 0\n1 0\n1 1\n0 1\n4 0 1 2 99\n";
        match parse_mesh(text) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 7);
                assert!(msg.contains("99"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_cell_list_rejected() {
        match parse_mesh("polymesh 2d 1\n3 0\n0 0\n1 0\n0 1\n") {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains("no cells")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_header_rejected() {
        assert!(matches!(parse_mesh("polymesh 3d 1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn non_simple_polygon_reports_cell_line() {
        let text = "polymesh 2d 1\n# bow tie\n4 1\n0 0\n1 1\n1 0\n0 1\n4 0 1 2 3\n";
        assert!(matches!(parse_mesh(text), Err(Error::Parse { line: 8, .. })));
    }

    #[test]
    fn comments_and_points_block() {
        let text = "polymesh 2d 1 # header\n4 1\n0 0\n1 0\n1 1\n0 1\n4 0 1 2 3\npoints\n0.25 0.5\n";
        let m = parse_mesh(text).unwrap();
        assert_eq!(m.cell(0).point, Vec2::new(0.25, 0.5));
    }
}
