use crate::mesh::{Cell, Mesh};
use crate::{Tensor, Vec2};

/// A cell point whose offsets to the edge midpoints are all normal to the
/// edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperAdmissible {
    pub point: Vec2,
    /// `(Σ_σ |(I - nnᵀ)(x̄_σ - x)|²)^{1/2}`.
    pub residual: f64,
}

/// Least-squares point minimizing the tangential offsets to the edge
/// midpoints; `None` unless the residual is at most `1e-10 diam(K)` and the
/// point lies strictly inside the cell.
pub fn super_admissible_point(cell: &Cell) -> Option<SuperAdmissible> {
    let mut a = Tensor::zeros();
    let mut b = Vec2::zeros();
    for f in &cell.faces {
        let p = Tensor::identity() - f.normal * f.normal.transpose();
        a += p;
        b += p * f.midpoint;
    }
    let x = a.try_inverse()? * b;
    let residual = cell
        .faces
        .iter()
        .map(|f| {
            let y = f.midpoint - x;
            (y - f.normal * y.dot(&f.normal)).norm_squared()
        })
        .sum::<f64>()
        .sqrt();
    if residual > 1e-10 * cell.diameter || cell.with_point(x).is_err() {
        return None;
    }
    Some(SuperAdmissible { point: x, residual })
}

pub fn super_admissible_points(mesh: &Mesh) -> Vec<Option<SuperAdmissible>> {
    mesh.cells().iter().map(super_admissible_point).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(v: &[(f64, f64)]) -> Cell {
        Cell::from_polygon(v.iter().map(|&(x, y)| Vec2::new(x, y)).collect(), None).unwrap()
    }

    #[test]
    fn rectangle_center() {
        let s = super_admissible_point(&cell(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)])).unwrap();
        assert!((s.point - Vec2::new(1.0, 0.5)).norm() < 1e-14);
        assert!(s.residual < 1e-14);
    }

    #[test]
    fn acute_triangle_circumcenter() {
        let (a, b, c) = (Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0), Vec2::new(1.5, 3.0));
        let s = super_admissible_point(&cell(&[(a.x, a.y), (b.x, b.y), (c.x, c.y)])).unwrap();
        // Intersection of the perpendicular bisectors.
        let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
        let ux = (a.norm_squared() * (b.y - c.y) + b.norm_squared() * (c.y - a.y) + c.norm_squared() * (a.y - b.y)) / d;
        let uy = (a.norm_squared() * (c.x - b.x) + b.norm_squared() * (a.x - c.x) + c.norm_squared() * (b.x - a.x)) / d;
        assert!((s.point - Vec2::new(ux, uy)).norm() < 1e-13);
    }

    #[test]
    fn sheared_parallelogram_has_none() {
        assert!(super_admissible_point(&cell(&[(0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (1.0, 1.0)])).is_none());
    }

    #[test]
    fn obtuse_triangle_has_none() {
        // The circumcenter falls outside.
        assert!(super_admissible_point(&cell(&[(0.0, 0.0), (4.0, 0.0), (2.0, 0.5)])).is_none());
    }
}
