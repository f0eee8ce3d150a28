use crate::mesh::Cell;
use crate::quadrature::{integrate_fan, TriangleRule};
use crate::{Tensor, Vec2};

/// Affine weight `w(x) = c0 + ξ·(x - x̄_K)` with `∫_K w = |K|` and
/// `∫_K x w = |K| x_K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFunction {
    pub c0: f64,
    pub xi: Vec2,
    /// The centroid `x̄_K`.
    pub center: Vec2,
}

impl WeightFunction {
    pub fn eval(&self, x: Vec2) -> f64 {
        self.c0 + self.xi.dot(&(x - self.center))
    }
}

/// Second moments `∫_K (x - x̄)(x - x̄)ᵀ`, exact by the degree-2 rule.
fn second_moments(cell: &Cell) -> Tensor {
    let mut j = Tensor::zeros();
    for a in 0..2 {
        for b in a..2 {
            let v = integrate_fan(cell.point, &cell.vertices, TriangleRule::Degree2, |x| {
                let y = x - cell.centroid;
                y[a] * y[b]
            });
            j[(a, b)] = v;
            j[(b, a)] = v;
        }
    }
    j
}

pub fn weight_function(cell: &Cell) -> WeightFunction {
    let j = second_moments(cell);
    let rhs = (cell.point - cell.centroid) * cell.area;
    // J is SPD for any polygon of positive area.
    let xi = j.try_inverse().map(|inv| inv * rhs).unwrap_or_else(Vec2::zeros);
    WeightFunction { c0: 1.0, xi, center: cell.centroid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_cell, random_interior_point};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_square(point: Option<Vec2>) -> Cell {
        let v = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)];
        Cell::from_polygon(v, point).unwrap()
    }

    #[test]
    fn centered_point_gives_unit_weight() {
        let w = weight_function(&unit_square(None));
        assert_eq!(w.xi, Vec2::zeros());
        assert_eq!(w.eval(Vec2::new(0.3, 0.9)), 1.0);
    }

    #[test]
    fn shifted_point_on_unit_square() {
        let c = unit_square(Some(Vec2::new(0.6, 0.5)));
        let j = second_moments(&c);
        assert_relative_eq!(j, Tensor::identity() / 12.0, epsilon = 1e-15);
        assert_relative_eq!(weight_function(&c).xi, Vec2::new(1.2, 0.0), epsilon = 1e-14);
    }

    #[test]
    fn moment_conditions_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let c = random_cell(&mut rng, 3, 10);
            let p = random_interior_point(&mut rng, &c);
            let c = c.with_point(p).unwrap();
            let w = weight_function(&c);
            let m0 = integrate_fan(c.point, &c.vertices, TriangleRule::Degree2, |x| w.eval(x));
            let mx = integrate_fan(c.point, &c.vertices, TriangleRule::Degree2, |x| x.x * w.eval(x));
            let my = integrate_fan(c.point, &c.vertices, TriangleRule::Degree2, |x| x.y * w.eval(x));
            assert!((m0 - c.area).abs() <= 1e-12 * c.area);
            let scale = c.area * (1.0 + c.point.norm());
            assert!((mx - c.area * c.point.x).abs() <= 1e-12 * scale);
            assert!((my - c.area * c.point.y).abs() <= 1e-12 * scale);
        }
    }
}
