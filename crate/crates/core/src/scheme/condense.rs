use crate::mesh::Mesh;
use crate::{Error, Result, Vec2};

/// Barycentric expression of an edge value in terms of cell values:
/// `p_σ = Σ β_L p_L` with `Σ β_L = 1` and `Σ β_L x_L = x̄_σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Condensation {
    pub cells: Vec<usize>,
    pub weights: Vec<f64>,
}

const NEAREST: usize = 8;

/// Chooses the cells and weights used to eliminate interior edge `edge`.
///
/// The two neighbors are used when `x̄_σ` lies on the segment joining their
/// points; otherwise a third cell is taken among the nearest cell points
/// (by distance, then index) so that the triangle contains `x̄_σ`.
pub fn barycentric_weights(mesh: &Mesh, edge: usize) -> Result<Condensation> {
    let e = mesh.edge(edge);
    let fail = |msg: &str| Error::Condensation { edge, msg: msg.into() };
    if e.is_boundary() {
        return Err(fail("boundary edges are not condensed"));
    }
    let x = e.midpoint;
    let (k, l) = (e.sides[0].cell, e.sides[1].cell);
    let (xk, xl) = (mesh.cell(k).point, mesh.cell(l).point);
    let scale = mesh.cell(k).diameter.max(mesh.cell(l).diameter);
    for (c, xc) in [(k, xk), (l, xl)] {
        if (x - xc).norm() <= 1e-12 * scale {
            return Ok(Condensation { cells: vec![c], weights: vec![1.0] });
        }
    }
    let d = xl - xk;
    let len2 = d.norm_squared();
    if d.perp(&(x - xk)).abs() <= 1e-12 * len2 {
        let t = d.dot(&(x - xk)) / len2;
        if (-1e-12..=1.0 + 1e-12).contains(&t) {
            return Ok(Condensation { cells: vec![k, l], weights: vec![1.0 - t, t] });
        }
    }

    let mut candidates: Vec<(f64, usize)> = mesh
        .cells()
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != k && c != l)
        .map(|(c, cell)| ((cell.point - x).norm(), c))
        .collect();
    let take = NEAREST.min(candidates.len());
    if take == 0 {
        return Err(fail("no third cell available"));
    }
    candidates.select_nth_unstable_by(take - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    candidates.truncate(take);
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for &(_, m) in &candidates {
        if let Some(w) = triangle_weights(xk, xl, mesh.cell(m).point, x) {
            if w.iter().all(|&v| v >= -1e-12) {
                return Ok(Condensation { cells: vec![k, l, m], weights: w.to_vec() });
            }
        }
    }
    Err(fail("no triangle of nearby cell points contains the edge midpoint"))
}

fn triangle_weights(a: Vec2, b: Vec2, c: Vec2, x: Vec2) -> Option<[f64; 3]> {
    let det = (b - a).perp(&(c - a));
    let scale = (b - a).norm_squared().max((c - a).norm_squared());
    if det.abs() <= 1e-12 * scale {
        return None;
    }
    let wb = (x - a).perp(&(c - a)) / det;
    let wc = (b - a).perp(&(x - a)) / det;
    Some([1.0 - wb - wc, wb, wc])
}
