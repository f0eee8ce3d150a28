//! Triangle and segment quadrature.
//!
//! Polygons are integrated on the fan of triangles `(x_K, v_i, v_{i+1})`,
//! which for a cell star-shaped with respect to `x_K` is exactly the cone
//! decomposition used by the lifting and broken-gradient reconstructions.

use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleRule {
    /// 3 interior points, exact for quadratics.
    Degree2,
    /// 7-point Radon rule, exact for quintics.
    Degree5,
}

impl TriangleRule {
    /// Barycentric coordinates `(l1, l2)` (third is `1 - l1 - l2`) and
    /// weights normalized to sum to one.
    fn points(self) -> &'static [(f64, f64, f64)] {
        const D2: [(f64, f64, f64); 3] = [
            (1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0),
            (2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0),
            (1.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0),
        ];
        // (6 ∓ √15)/21 and their complements, weights (155 ∓ √15)/1200.
        const A1: f64 = 0.101_286_507_323_456_34;
        const B1: f64 = 0.797_426_985_353_087_3;
        const A2: f64 = 0.470_142_064_105_115_1;
        const B2: f64 = 0.059_715_871_789_769_82;
        const W1: f64 = 0.125_939_180_544_827_15;
        const W2: f64 = 0.132_394_152_788_506_2;
        const D5: [(f64, f64, f64); 7] = [
            (1.0 / 3.0, 1.0 / 3.0, 0.225),
            (A1, A1, W1),
            (B1, A1, W1),
            (A1, B1, W1),
            (A2, A2, W2),
            (B2, A2, W2),
            (A2, B2, W2),
        ];
        match self {
            TriangleRule::Degree2 => &D2,
            TriangleRule::Degree5 => &D5,
        }
    }
}

pub fn triangle_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    0.5 * ((b - a).perp(&(c - a)))
}

/// `∫_T f` over the triangle `(a, b, c)`; negative orientation yields a
/// negative result.
pub fn integrate_triangle<F>(a: Vec2, b: Vec2, c: Vec2, rule: TriangleRule, f: F) -> f64
where
    F: Fn(Vec2) -> f64,
{
    let area = triangle_area(a, b, c);
    let s: f64 = rule
        .points()
        .iter()
        .map(|&(l1, l2, w)| w * f(a * (1.0 - l1 - l2) + b * l1 + c * l2))
        .sum();
    area * s
}

/// Vector-valued variant of [`integrate_triangle`].
pub fn integrate_triangle_vec<F>(a: Vec2, b: Vec2, c: Vec2, rule: TriangleRule, f: F) -> Vec2
where
    F: Fn(Vec2) -> Vec2,
{
    let area = triangle_area(a, b, c);
    let s = rule
        .points()
        .iter()
        .fold(Vec2::zeros(), |acc, &(l1, l2, w)| {
            acc + f(a * (1.0 - l1 - l2) + b * l1 + c * l2) * w
        });
    s * area
}

/// `∫_P f` for the polygon with CCW `vertices`, fanned from `apex`.
pub fn integrate_fan<F>(apex: Vec2, vertices: &[Vec2], rule: TriangleRule, f: F) -> f64
where
    F: Fn(Vec2) -> f64,
{
    let n = vertices.len();
    (0..n)
        .map(|i| integrate_triangle(apex, vertices[i], vertices[(i + 1) % n], rule, &f))
        .sum()
}

/// Two-point Gauss-Legendre nodes on the segment `[a, b]`, with weights
/// summing to the segment length. Exact for cubics.
pub fn segment_gauss2(a: Vec2, b: Vec2) -> [(Vec2, f64); 2] {
    let len = (b - a).norm();
    let t = 0.5 / 3f64.sqrt();
    let mid = (a + b) * 0.5;
    let d = b - a;
    [(mid - d * t, 0.5 * len), (mid + d * t, 0.5 * len)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tri() -> (Vec2, Vec2, Vec2) {
        (Vec2::new(0.1, -0.2), Vec2::new(1.3, 0.1), Vec2::new(0.4, 0.9))
    }

    // Monomials integrated on the unit triangle via the closed form
    // ∫ x^a y^b = a! b! / (a + b + 2)!.
    fn unit_moment(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn degree5_rule_is_exact_on_unit_triangle_monomials() {
        let o = Vec2::zeros();
        let ex = Vec2::new(1.0, 0.0);
        let ey = Vec2::new(0.0, 1.0);
        for a in 0..=5 {
            for b in 0..=(5 - a) {
                let q = integrate_triangle(o, ex, ey, TriangleRule::Degree5, |x| {
                    x.x.powi(a as i32) * x.y.powi(b as i32)
                });
                assert_relative_eq!(q, unit_moment(a, b), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn degree2_rule_is_exact_on_quadratics() {
        let (a, b, c) = tri();
        let f = |x: Vec2| 1.0 + 2.0 * x.x - x.y + 3.0 * x.x * x.y - x.y * x.y;
        let q2 = integrate_triangle(a, b, c, TriangleRule::Degree2, f);
        let q5 = integrate_triangle(a, b, c, TriangleRule::Degree5, f);
        assert_relative_eq!(q2, q5, max_relative = 1e-14);
    }

    #[test]
    fn fan_integral_of_one_is_polygon_area() {
        let sq = [
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let a = integrate_fan(Vec2::new(0.3, 0.6), &sq, TriangleRule::Degree2, |_| 1.0);
        assert_relative_eq!(a, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn segment_rule_is_exact_for_cubics() {
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(2.0, 0.0);
        let q: f64 = segment_gauss2(a, b)
            .iter()
            .map(|(x, w)| w * x.x.powi(3))
            .sum();
        assert_relative_eq!(q, 4.0, max_relative = 1e-14);
    }
}
