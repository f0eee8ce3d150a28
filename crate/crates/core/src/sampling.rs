//! Random inputs for tests, benches and the `random(seed)` stabilization.

use rand::Rng;

use crate::dense::{symmetrize, Mat};
use crate::mesh::Cell;
use crate::{Tensor, Vec2};

/// SPD matrix `Q diag(μ) Qᵀ` with a random orthogonal `Q` and eigenvalues
/// uniform in `[lo, hi]`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Mat {
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let g = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = g.qr().q();
    let mu = crate::dense::Vector::from_fn(n, |_, _| rng.gen_range(lo..=hi));
    symmetrize(&(&q * Mat::from_diagonal(&mu) * q.transpose()))
}

/// Anisotropic SPD tensor with eigenvalues in `[0.5, 5]` and random axes.
pub fn random_tensor<R: Rng>(rng: &mut R) -> Tensor {
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (s, c) = theta.sin_cos();
    let rot = Tensor::new(c, -s, s, c);
    let d = Tensor::new(rng.gen_range(0.5..5.0), 0.0, 0.0, rng.gen_range(0.5..5.0));
    let t = rot * d * rot.transpose();
    (t + t.transpose()) * 0.5
}

/// Convex polygon with `kmin..=kmax` vertices on a random ellipse.
pub fn random_cell<R: Rng>(rng: &mut R, kmin: usize, kmax: usize) -> Cell {
    let k = rng.gen_range(kmin..=kmax);
    let tau = std::f64::consts::TAU;
    let min_gap = 0.3 * tau / k as f64;
    let mut gaps: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = gaps.iter().sum();
    for g in gaps.iter_mut() {
        *g = min_gap + (tau - min_gap * k as f64) * *g / total;
    }
    let a: f64 = rng.gen_range(0.5..2.0);
    let b: f64 = rng.gen_range(0.5..2.0);
    let phi: f64 = rng.gen_range(0.0..tau);
    let (s, c) = phi.sin_cos();
    let center = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    let mut angle: f64 = rng.gen_range(0.0..tau);
    let vertices = gaps
        .iter()
        .map(|g| {
            let p = Vec2::new(a * angle.cos(), b * angle.sin());
            angle += g;
            center + Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y)
        })
        .collect();
    Cell::from_polygon(vertices, None).expect("ellipse polygons are convex")
}

/// Point strictly inside a convex cell, away from its boundary.
pub fn random_interior_point<R: Rng>(rng: &mut R, cell: &Cell) -> Vec2 {
    let i = rng.gen_range(0..cell.vertices.len());
    let t: f64 = rng.gen_range(0.0..0.6);
    let u: f64 = rng.gen_range(0.0..1.0);
    let j = (i + 1) % cell.vertices.len();
    let target = cell.vertices[i] * (1.0 - u) + cell.vertices[j] * u;
    cell.centroid + (target - cell.centroid) * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::is_spd;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let c = random_cell(&mut rng, 3, 12);
            assert!((3..=12).contains(&c.num_faces()));
            let p = random_interior_point(&mut rng, &c);
            assert!(c.with_point(p).is_ok());
            assert!(is_spd(&random_spd(&mut rng, 4, 0.1, 2.0)));
            let t = random_tensor(&mut rng);
            assert!(t.symmetric_eigenvalues().min() >= 0.5 - 1e-12);
        }
    }
}
