//! Polygonal meshes and the geometric quantities the schemes need.
//!
//! A [`Cell`] owns a copy of its vertex coordinates and one [`Face`] per edge
//! (in CCW order), so all per-cell operators work from a `&Cell` alone.
//! Cells can also be built standalone with [`Cell::from_polygon`].

mod generate;
mod io;

pub use generate::{build_cartesian, build_perturbed_quads, Domain};
pub use io::{format_mesh, parse_mesh, read_mesh, write_mesh};

use std::collections::HashMap;

use crate::{Error, Result, Vec2};

/// One edge of a cell, seen from that cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Global edge index (the local index for standalone cells).
    pub edge: usize,
    pub length: f64,
    /// Center of gravity of the segment.
    pub midpoint: Vec2,
    /// Unit normal pointing out of the cell.
    pub normal: Vec2,
    /// Orthogonal distance from the cell point to the edge line.
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub vertex_ids: Vec<usize>,
    /// Vertex coordinates, CCW. Face `i` joins vertex `i` to vertex `i + 1`.
    pub vertices: Vec<Vec2>,
    pub faces: Vec<Face>,
    pub area: f64,
    pub centroid: Vec2,
    /// The cell point `x_K` the schemes are built around.
    pub point: Vec2,
    pub diameter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeSide {
    pub cell: usize,
    /// Position of the edge in the cell's face list.
    pub local: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub endpoints: [usize; 2],
    pub length: f64,
    pub midpoint: Vec2,
    /// One side for boundary edges, two for interior edges.
    pub sides: Vec<EdgeSide>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.sides.len() == 1
    }

    /// The cell on the other side of `cell`, if any.
    pub fn neighbor(&self, cell: usize) -> Option<EdgeSide> {
        self.sides.iter().copied().find(|s| s.cell != cell)
    }
}

impl Cell {
    /// Build a standalone cell from CCW vertices. The cell point defaults to
    /// the centroid; any supplied point must see every edge from strictly
    /// inside (`d_{K,σ} > 0`).
    pub fn from_polygon(vertices: Vec<Vec2>, point: Option<Vec2>) -> Result<Cell> {
        let ids = (0..vertices.len()).collect();
        Cell::build(ids, vertices, point).map_err(Error::InvalidGeometry)
    }

    fn build(vertex_ids: Vec<usize>, vertices: Vec<Vec2>, point: Option<Vec2>) -> std::result::Result<Cell, String> {
        let k = vertices.len();
        if k < 3 {
            return Err(format!("polygon has {k} vertices, need at least 3"));
        }
        let mut twice_area = 0.0;
        let mut moment = Vec2::zeros();
        for i in 0..k {
            let a = vertices[i];
            let b = vertices[(i + 1) % k];
            let cross = a.perp(&b);
            twice_area += cross;
            moment += (a + b) * cross;
        }
        let area = 0.5 * twice_area;
        let diameter = (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .map(|(i, j)| (vertices[i] - vertices[j]).norm())
            .fold(0.0, f64::max);
        if !(area > 1e-14 * diameter * diameter) {
            return Err(format!("polygon area {area:e} is not positive (vertices must be CCW)"));
        }
        let centroid = moment / (6.0 * area);
        for i in 0..k {
            if (vertices[(i + 1) % k] - vertices[i]).norm() <= 1e-14 * diameter {
                return Err(format!("edge {i} has zero length"));
            }
        }
        if !is_simple(&vertices) {
            return Err("polygon is not simple".into());
        }
        let point = point.unwrap_or(centroid);
        let mut faces = Vec::with_capacity(k);
        for i in 0..k {
            let a = vertices[i];
            let b = vertices[(i + 1) % k];
            let length = (b - a).norm();
            let t = (b - a) / length;
            let normal = Vec2::new(t.y, -t.x);
            let midpoint = (a + b) * 0.5;
            let dist = normal.dot(&(midpoint - point));
            if !(dist > 1e-12 * diameter) {
                return Err(format!(
                    "cell point ({}, {}) does not see edge {i} from inside (d = {dist:e})",
                    point.x, point.y
                ));
            }
            faces.push(Face { edge: i, length, midpoint, normal, dist });
        }
        Ok(Cell { vertex_ids, vertices, faces, area, centroid, point, diameter })
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// The same polygon with another cell point.
    pub fn with_point(&self, point: Vec2) -> Result<Cell> {
        let mut c = Cell::build(self.vertex_ids.clone(), self.vertices.clone(), Some(point))
            .map_err(Error::InvalidGeometry)?;
        for (f, old) in c.faces.iter_mut().zip(&self.faces) {
            f.edge = old.edge;
        }
        Ok(c)
    }

    /// Cone `△_{K,σ}` of face `i`: apex `x_K`, base the edge.
    pub fn cone(&self, i: usize) -> [Vec2; 3] {
        let k = self.vertices.len();
        [self.point, self.vertices[i], self.vertices[(i + 1) % k]]
    }

    /// Index of the cone containing `x` (closed, with `tol` slack relative to
    /// the diameter).
    pub fn locate(&self, x: Vec2, tol: f64) -> Option<usize> {
        let eps = tol * self.diameter * self.diameter;
        (0..self.num_faces()).find(|&i| {
            let [a, b, c] = self.cone(i);
            (b - a).perp(&(x - a)) >= -eps && (c - b).perp(&(x - b)) >= -eps && (a - c).perp(&(x - c)) >= -eps
        })
    }
}

fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (p2 - p1).perp(&(q1 - p1));
    let d2 = (p2 - p1).perp(&(q2 - p1));
    let d3 = (q2 - q1).perp(&(p1 - q1));
    let d4 = (q2 - q1).perp(&(p2 - q1));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Vec2, b: Vec2, p: Vec2, d: f64| {
        d == 0.0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    };
    on(p1, p2, q1, d1) || on(p1, p2, q2, d2) || on(q1, q2, p1, d3) || on(q1, q2, p2, d4)
}

fn is_simple(v: &[Vec2]) -> bool {
    let k = v.len();
    for i in 0..k {
        for j in (i + 1)..k {
            let adjacent = j == i + 1 || (i == 0 && j == k - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % k], v[j], v[(j + 1) % k]) {
                return false;
            }
        }
    }
    true
}

/// An immutable polygonal mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec2>,
    cells: Vec<Cell>,
    edges: Vec<Edge>,
    boundary_edges: Vec<usize>,
}

/// Failure while building a mesh, with the offending cell when known.
#[derive(Debug)]
pub(crate) struct BuildError {
    pub cell: Option<usize>,
    pub msg: String,
}

impl From<BuildError> for Error {
    fn from(e: BuildError) -> Error {
        match e.cell {
            Some(c) => Error::InvalidGeometry(format!("cell {c}: {}", e.msg)),
            None => Error::InvalidGeometry(e.msg),
        }
    }
}

impl Mesh {
    /// Build a mesh from vertex coordinates and CCW cell vertex loops.
    /// `points` overrides the default (centroid) cell points.
    pub fn new(vertices: Vec<Vec2>, polygons: Vec<Vec<usize>>, points: Option<Vec<Vec2>>) -> Result<Mesh> {
        Ok(Mesh::build(vertices, polygons, points)?)
    }

    pub(crate) fn build(
        vertices: Vec<Vec2>,
        polygons: Vec<Vec<usize>>,
        points: Option<Vec<Vec2>>,
    ) -> std::result::Result<Mesh, BuildError> {
        if polygons.is_empty() {
            return Err(BuildError { cell: None, msg: "no cells".into() });
        }
        if let Some(p) = &points {
            if p.len() != polygons.len() {
                return Err(BuildError {
                    cell: None,
                    msg: format!("{} cell points for {} cells", p.len(), polygons.len()),
                });
            }
        }
        let mut cells = Vec::with_capacity(polygons.len());
        let mut edges: Vec<Edge> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        for (c, ids) in polygons.into_iter().enumerate() {
            if let Some(&bad) = ids.iter().find(|&&i| i >= vertices.len()) {
                return Err(BuildError {
                    cell: Some(c),
                    msg: format!("vertex index {bad} out of range ({} vertices)", vertices.len()),
                });
            }
            let coords: Vec<Vec2> = ids.iter().map(|&i| vertices[i]).collect();
            let point = points.as_ref().map(|p| p[c]);
            let mut cell = Cell::build(ids, coords, point).map_err(|msg| BuildError { cell: Some(c), msg })?;
            let k = cell.vertex_ids.len();
            for local in 0..k {
                let a = cell.vertex_ids[local];
                let b = cell.vertex_ids[(local + 1) % k];
                let key = (a.min(b), a.max(b));
                let side = EdgeSide { cell: c, local };
                let id = match lookup.get(&key) {
                    Some(&id) => {
                        let e = &mut edges[id];
                        if e.sides.len() >= 2 {
                            return Err(BuildError {
                                cell: Some(c),
                                msg: format!("edge ({a}, {b}) shared by more than two cells"),
                            });
                        }
                        if e.endpoints != [b, a] {
                            return Err(BuildError {
                                cell: Some(c),
                                msg: format!("edge ({a}, {b}) has the same orientation in two cells"),
                            });
                        }
                        e.sides.push(side);
                        id
                    }
                    None => {
                        let id = edges.len();
                        lookup.insert(key, id);
                        let f = &cell.faces[local];
                        edges.push(Edge { endpoints: [a, b], length: f.length, midpoint: f.midpoint, sides: vec![side] });
                        id
                    }
                };
                cell.faces[local].edge = id;
            }
            cells.push(cell);
        }
        let boundary_edges = edges.iter().enumerate().filter(|(_, e)| e.is_boundary()).map(|(i, _)| i).collect();
        Ok(Mesh { vertices, cells, edges, boundary_edges })
    }

    /// The same mesh with other cell points.
    pub fn with_points(&self, points: &[Vec2]) -> Result<Mesh> {
        if points.len() != self.cells.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} cell points for {} cells",
                points.len(),
                self.cells.len()
            )));
        }
        let cells = self
            .cells
            .iter()
            .zip(points)
            .enumerate()
            .map(|(c, (cell, &p))| {
                cell.with_point(p)
                    .map_err(|e| Error::InvalidGeometry(format!("cell {c}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Mesh { cells, ..self.clone() })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &Cell {
        &self.cells[i]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().enumerate().filter(|(_, e)| !e.is_boundary()).map(|(i, _)| i)
    }

    pub fn points(&self) -> Vec<Vec2> {
        self.cells.iter().map(|c| c.point).collect()
    }

    /// Largest cell diameter.
    pub fn size(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    /// Mesh regularity: the largest of `d_{K,σ}/d_{L,σ}` over interior edges
    /// and `diam(K)/d_{K,σ}` over all cell faces.
    pub fn regularity(&self) -> f64 {
        let shape = self
            .cells
            .iter()
            .flat_map(|c| c.faces.iter().map(move |f| c.diameter / f.dist))
            .fold(0.0, f64::max);
        let ratio = self
            .edges
            .iter()
            .filter(|e| e.sides.len() == 2)
            .map(|e| {
                let d0 = self.cells[e.sides[0].cell].faces[e.sides[0].local].dist;
                let d1 = self.cells[e.sides[1].cell].faces[e.sides[1].local].dist;
                (d0 / d1).max(d1 / d0)
            })
            .fold(0.0, f64::max);
        shape.max(ratio)
    }
}
