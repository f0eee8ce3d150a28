use crate::dense::{jacobi_eigen, Mat};
use crate::mesh::Cell;

/// Extreme eigenvalues of a scaled local inner product matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityBounds {
    pub min: f64,
    pub max: f64,
}

fn bounds(m: &Mat) -> StabilityBounds {
    let (values, _) = jacobi_eigen(m, 1e-10);
    StabilityBounds { min: values[0], max: values[values.len() - 1] }
}

/// Extreme eigenvalues of `I⁻¹ M I⁻¹` with `I = diag(√(|σ| d_{K,σ}))`.
pub fn stability_bounds(cell: &Cell, m: &Mat) -> StabilityBounds {
    let s: Vec<f64> = cell.faces.iter().map(|f| 1.0 / (f.length * f.dist).sqrt()).collect();
    bounds(&Mat::from_fn(m.nrows(), m.ncols(), |i, j| s[i] * m[(i, j)] * s[j]))
}

/// Extreme eigenvalues of `M / |K|`, the cell-measure scaling.
pub fn stability_bounds_area(cell: &Cell, m: &Mat) -> StabilityBounds {
    bounds(&(m / cell.area))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::spd_inverse;
    use crate::local::matrix_m;
    use crate::sampling::{random_cell, random_spd, random_tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scaled_identity_has_unit_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let c = random_cell(&mut rng, 4, 8);
        let m = Mat::from_diagonal(&crate::dense::Vector::from_iterator(
            c.num_faces(),
            c.faces.iter().map(|f| f.length * f.dist),
        ));
        let b = stability_bounds(&c, &m);
        assert!((b.min - 1.0).abs() < 1e-12 && (b.max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_are_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let c = random_cell(&mut rng, 4, 9);
        let lam = random_tensor(&mut rng);
        let u = random_spd(&mut rng, c.num_faces() - 2, 0.5, 2.0);
        let h = 0.01;
        let small = crate::mesh::Cell::from_polygon(c.vertices.iter().map(|v| v * h).collect(), Some(c.point * h)).unwrap();
        // M scales like h² for a fixed U (|σ|² / |K| ~ 1 and U is scaled with it).
        let b1 = stability_bounds(&c, &matrix_m(&c, &lam, &u).unwrap());
        let b2 = stability_bounds(&small, &matrix_m(&small, &lam, &(u.clone() * (h * h))).unwrap());
        assert!((b1.min - b2.min).abs() < 1e-9 * b1.min);
        assert!((b1.max - b2.max).abs() < 1e-9 * b1.max);
    }

    #[test]
    fn inverse_bounds_are_reciprocal() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let c = random_cell(&mut rng, 3, 9);
        let lam = random_tensor(&mut rng);
        let u = random_spd(&mut rng, c.num_faces() - 2, 0.5, 2.0);
        let m = matrix_m(&c, &lam, &u).unwrap();
        let w = spd_inverse(&m).unwrap();
        let s: Vec<f64> = c.faces.iter().map(|f| (f.length * f.dist).sqrt()).collect();
        let iwi = Mat::from_fn(w.nrows(), w.ncols(), |i, j| s[i] * w[(i, j)] * s[j]);
        let (ev, _) = jacobi_eigen(&iwi, 1e-12);
        let b = stability_bounds(&c, &m);
        assert!((ev[0] - 1.0 / b.max).abs() < 1e-8 * ev[0]);
        assert!((ev[ev.len() - 1] - 1.0 / b.min).abs() < 1e-8 * ev[ev.len() - 1]);
    }
}
