use super::matrices::{assemble_m, consistency_m, consistency_w, inverse, matrix_c, matrix_d};
use super::operators::{l_matrix, t_matrix};
use super::tensor_inverse;
use crate::dense::{is_spd, jacobi_eigen, max_abs, numerical_rank, symmetrize, Mat, RANK_TOL};
use crate::mesh::Cell;
use crate::quadrature::{integrate_triangle, TriangleRule};
use crate::{Error, Result, Tensor};

/// The three matrix parameterizations of a stabilization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `U`, `(k-2)×(k-2)`, acting on `Im(C)`.
    MimeticU,
    /// `B^H`, `k×k`, acting on the hybrid residuals `S_{K,σ}`.
    HybridB,
    /// `B^M`, `k×k`, acting on the flux corrections `T_{K,σ}`.
    MixedB,
}

/// Stabilization of one cell.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalStabilization {
    MimeticU(Mat),
    HybridB(Mat),
    MixedB(Mat),
    /// The original mixed penalty `ν diam(K) F_σ`. Not convertible.
    MixedStrong { nu: f64 },
}

impl LocalStabilization {
    pub fn variant(&self) -> Option<Variant> {
        match self {
            LocalStabilization::MimeticU(_) => Some(Variant::MimeticU),
            LocalStabilization::HybridB(_) => Some(Variant::HybridB),
            LocalStabilization::MixedB(_) => Some(Variant::MixedB),
            LocalStabilization::MixedStrong { .. } => None,
        }
    }

    pub fn matrix(&self) -> Option<&Mat> {
        match self {
            LocalStabilization::MimeticU(m) | LocalStabilization::HybridB(m) | LocalStabilization::MixedB(m) => Some(m),
            LocalStabilization::MixedStrong { .. } => None,
        }
    }

    pub fn from_matrix(variant: Variant, m: Mat) -> LocalStabilization {
        match variant {
            Variant::MimeticU => LocalStabilization::MimeticU(m),
            Variant::HybridB => LocalStabilization::HybridB(m),
            Variant::MixedB => LocalStabilization::MixedB(m),
        }
    }

    /// Shape and SPD checks for a cell with `k` faces.
    pub fn validate(&self, k: usize) -> Result<()> {
        let (m, n, name) = match self {
            LocalStabilization::MimeticU(m) => (m, k - 2, "U"),
            LocalStabilization::HybridB(m) => (m, k, "B^H"),
            LocalStabilization::MixedB(m) => (m, k, "B^M"),
            LocalStabilization::MixedStrong { nu } => {
                return if *nu >= 0.0 && nu.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("mixed-strong needs ν >= 0, got {nu}")))
                };
            }
        };
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Parameter(format!("{name} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())));
        }
        if !is_spd(m) {
            return Err(Error::Parameter(format!("{name} is not symmetric positive definite")));
        }
        Ok(())
    }
}

/// Coefficient of the diagonal hybrid stabilization `α|σ|/d_{K,σ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Constant(f64),
    /// `λ_K = tr(Λ_K)/2`, the value for an isotropic tensor.
    TensorMean,
}

/// Named stabilizations, resolved cell by cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `B^H = diag(α|σ|/d_{K,σ})`.
    HybridDiagonal(Alpha),
    MixedStrong(f64),
    /// Nonconforming P1 interpretation: `B^H = diag(β²|σ| Λn·n / (2 d_{K,σ}))`.
    Ncfe(f64),
    /// Mixed finite element interpretation: `B^M = diag(γ_σ)` with
    /// `γ_σ = ∫_cone Λ⁻¹(x - x_K)·(x - x_K) / d_{K,σ}²`.
    Mfe,
    /// `hybrid-diagonal(λ_K)`; gives two-point fluxes on super-admissible
    /// cells with isotropic tensors.
    TwoPoint,
}

impl Preset {
    pub fn local(&self, cell: &Cell, lambda: &Tensor) -> Result<LocalStabilization> {
        let trace_mean = 0.5 * lambda.trace();
        let diag = |f: &dyn Fn(usize) -> f64| Mat::from_diagonal(&crate::dense::Vector::from_fn(cell.num_faces(), |i, _| f(i)));
        let stab = match *self {
            Preset::HybridDiagonal(alpha) => {
                let a = match alpha {
                    Alpha::Constant(a) => a,
                    Alpha::TensorMean => trace_mean,
                };
                if !(a > 0.0) || !a.is_finite() {
                    return Err(Error::Parameter(format!("hybrid-diagonal needs α > 0, got {a}")));
                }
                LocalStabilization::HybridB(diag(&|i| a * cell.faces[i].length / cell.faces[i].dist))
            }
            Preset::TwoPoint => {
                LocalStabilization::HybridB(diag(&|i| trace_mean * cell.faces[i].length / cell.faces[i].dist))
            }
            Preset::MixedStrong(nu) => LocalStabilization::MixedStrong { nu },
            Preset::Ncfe(beta) => {
                if !(beta > 0.0) || !beta.is_finite() {
                    return Err(Error::Parameter(format!("ncfe needs β > 0, got {beta}")));
                }
                LocalStabilization::HybridB(diag(&|i| {
                    let f = &cell.faces[i];
                    beta * beta * f.length * (lambda * f.normal).dot(&f.normal) / (2.0 * f.dist)
                }))
            }
            Preset::Mfe => {
                let inv = tensor_inverse(lambda)?;
                LocalStabilization::MixedB(diag(&|i| {
                    let [a, b, c] = cell.cone(i);
                    let d = cell.faces[i].dist;
                    integrate_triangle(a, b, c, TriangleRule::Degree2, |x| {
                        let y = x - cell.point;
                        (inv * y).dot(&y)
                    }) / (d * d)
                }))
            }
        };
        stab.validate(cell.num_faces())?;
        Ok(stab)
    }
}

/// Pulls the inner product `p` back through `a` and pushes it forward
/// through `b`, where `a` and `b` share their kernel.
///
/// Returns the unique form `q` on `Im(b)` with `(bx)ᵀ q (by) = (ax)ᵀ p (ay)`
/// for all `x, y`, extended by the identity on `Im(b)^⊥`.
pub fn pullback_inner_product(a: &Mat, p: &Mat, b: &Mat) -> Result<Mat> {
    let k = b.ncols();
    if a.ncols() != k || p.nrows() != a.nrows() || p.ncols() != a.nrows() {
        return Err(Error::InternalConsistency("operator shapes do not match".into()));
    }
    let rank = numerical_rank(b, RANK_TOL);
    if numerical_rank(a, RANK_TOL) != rank {
        return Err(Error::InternalConsistency(format!(
            "operators have different ranks ({} vs {rank})",
            numerical_rank(a, RANK_TOL)
        )));
    }
    // Eigenvectors of bᵀb: the top `rank` span ker(b)^⊥, the others ker(b).
    let (_, vecs) = jacobi_eigen(&(b.transpose() * b), 1e-15);
    let g = vecs.columns(k - rank, rank).into_owned();
    if rank < k {
        let ker = vecs.columns(0, k - rank).into_owned();
        if max_abs(&(a * ker)) > 1e-10 * max_abs(a).max(f64::MIN_POSITIVE) {
            return Err(Error::InternalConsistency("operators do not share their kernel".into()));
        }
    }

    let ag = a * &g;
    let s = ag.transpose() * p * &ag;
    let bg = b * &g;
    let qr = bg.qr();
    let q = qr.q();
    let r = qr.r();
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| Error::InternalConsistency("image factor is singular".into()))?;
    let on_image = r_inv.transpose() * s * r_inv;
    let n = b.nrows();
    let proj = &q * q.transpose();
    let out = &q * on_image * q.transpose() + (Mat::identity(n, n) - proj);
    Ok(symmetrize(&out))
}

/// `Ũ = Dᵀ(M⁻¹ - NΛ⁻¹Nᵀ/|K|)D` for the `M` built from `U`.
pub fn dual_mimetic_parameter(cell: &Cell, lambda: &Tensor, u: &Mat) -> Result<Mat> {
    let m = assemble_m(cell, lambda, u)?;
    let w = inverse(&m, "M")?;
    let d = matrix_d(cell)?;
    Ok(symmetrize(&(d.transpose() * (w - consistency_w(cell, lambda)?) * d)))
}

fn to_mimetic(cell: &Cell, lambda: &Tensor, stab: &LocalStabilization) -> Result<Mat> {
    match stab {
        LocalStabilization::MimeticU(u) => Ok(u.clone()),
        LocalStabilization::MixedB(b) => {
            let c = matrix_c(cell, lambda)?;
            pullback_inner_product(&t_matrix(cell, lambda)?, b, &c.transpose())
        }
        LocalStabilization::HybridB(b) => {
            let d = matrix_d(cell)?;
            let u_dual = pullback_inner_product(&l_matrix(cell), b, &d.transpose())?;
            let w = consistency_w(cell, lambda)? + &d * u_dual * d.transpose();
            let m = inverse(&w, "W")?;
            let c = matrix_c(cell, lambda)?;
            Ok(symmetrize(&(c.transpose() * (m - consistency_m(cell, lambda)?) * c)))
        }
        LocalStabilization::MixedStrong { .. } => Err(Error::Parameter(
            "mixed-strong stabilization is outside the equivalence family and cannot be converted".into(),
        )),
    }
}

fn from_mimetic(cell: &Cell, lambda: &Tensor, u: &Mat, target: Variant) -> Result<Mat> {
    match target {
        Variant::MimeticU => Ok(u.clone()),
        Variant::MixedB => {
            let c = matrix_c(cell, lambda)?;
            pullback_inner_product(&c.transpose(), u, &t_matrix(cell, lambda)?)
        }
        Variant::HybridB => {
            let u_dual = dual_mimetic_parameter(cell, lambda, u)?;
            let d = matrix_d(cell)?;
            pullback_inner_product(&d.transpose(), &u_dual, &l_matrix(cell))
        }
    }
}

/// Converts `stab` to the `target` parameterization inducing the same
/// local scheme.
pub fn convert_stabilization(
    cell: &Cell,
    lambda: &Tensor,
    stab: &LocalStabilization,
    target: Variant,
) -> Result<LocalStabilization> {
    stab.validate(cell.num_faces())?;
    if stab.variant() == Some(target) {
        return Ok(stab.clone());
    }
    let u = to_mimetic(cell, lambda, stab)?;
    if !is_spd(&u) {
        return Err(Error::InternalConsistency("converted U is not positive definite".into()));
    }
    Ok(LocalStabilization::from_matrix(target, from_mimetic(cell, lambda, &u, target)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::Vector;
    use crate::local::{l_operator, matrix_m, t_operator};
    use crate::sampling::{random_cell, random_spd, random_tensor};
    use crate::Vec2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vector {
        Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn round_trip_through_mixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let cell = random_cell(&mut rng, 3, 10);
            let lam = random_tensor(&mut rng);
            let u = random_spd(&mut rng, cell.num_faces() - 2, 0.3, 2.0);
            let bm = convert_stabilization(&cell, &lam, &LocalStabilization::MimeticU(u.clone()), Variant::MixedB).unwrap();
            let back = convert_stabilization(&cell, &lam, &bm, Variant::MimeticU).unwrap();
            let c = matrix_c(&cell, &lam).unwrap();
            let diff = &c * (&u - back.matrix().unwrap()) * c.transpose();
            assert!(max_abs(&diff) <= 1e-11 * max_abs(&u));
        }
    }

    #[test]
    fn mixed_form_equality() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let cell = random_cell(&mut rng, 3, 10);
            let lam = random_tensor(&mut rng);
            let k = cell.num_faces();
            let u = random_spd(&mut rng, k - 2, 0.3, 2.0);
            let bm = convert_stabilization(&cell, &lam, &LocalStabilization::MimeticU(u.clone()), Variant::MixedB).unwrap();
            let bm = bm.matrix().unwrap();
            let c = matrix_c(&cell, &lam).unwrap();
            for _ in 0..5 {
                let f = random_vec(&mut rng, k);
                let g = random_vec(&mut rng, k);
                let lhs = (g.transpose() * &c * &u * c.transpose() * &f)[0];
                let tf = Vector::from_vec(t_operator(&cell, &lam, f.as_slice()).unwrap());
                let tg = Vector::from_vec(t_operator(&cell, &lam, g.as_slice()).unwrap());
                let rhs = (tg.transpose() * bm * tf)[0];
                assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn hybrid_form_equality() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let cell = random_cell(&mut rng, 3, 10);
            let lam = random_tensor(&mut rng);
            let k = cell.num_faces();
            let u = random_spd(&mut rng, k - 2, 0.3, 2.0);
            let bh = convert_stabilization(&cell, &lam, &LocalStabilization::MimeticU(u.clone()), Variant::HybridB).unwrap();
            let bh = bh.matrix().unwrap();
            let u_dual = dual_mimetic_parameter(&cell, &lam, &u).unwrap();
            let d = matrix_d(&cell).unwrap();
            for _ in 0..5 {
                let v = random_vec(&mut rng, k);
                let w = random_vec(&mut rng, k);
                let lhs = (v.transpose() * &d * &u_dual * d.transpose() * &w)[0];
                let lv = Vector::from_vec(l_operator(&cell, v.as_slice()));
                let lw = Vector::from_vec(l_operator(&cell, w.as_slice()));
                let rhs = (lv.transpose() * bh * lw)[0];
                assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
            }
            let back = convert_stabilization(&cell, &lam, &LocalStabilization::HybridB(bh.clone()), Variant::MimeticU).unwrap();
            let c = matrix_c(&cell, &lam).unwrap();
            let diff = &c * (&u - back.matrix().unwrap()) * c.transpose();
            assert!(max_abs(&diff) <= 1e-10 * max_abs(&u));
        }
    }

    #[test]
    fn hybrid_to_mixed_goes_through_mimetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let cell = random_cell(&mut rng, 5, 7);
        let lam = random_tensor(&mut rng);
        let bh = LocalStabilization::HybridB(random_spd(&mut rng, cell.num_faces(), 0.5, 2.0));
        let bm = convert_stabilization(&cell, &lam, &bh, Variant::MixedB).unwrap();
        let u1 = convert_stabilization(&cell, &lam, &bh, Variant::MimeticU).unwrap();
        let u2 = convert_stabilization(&cell, &lam, &bm, Variant::MimeticU).unwrap();
        assert!(max_abs(&(u1.matrix().unwrap() - u2.matrix().unwrap())) < 1e-10 * max_abs(u1.matrix().unwrap()));
        assert!(is_spd(bm.matrix().unwrap()));
        assert!(matrix_m(&cell, &lam, u1.matrix().unwrap()).is_ok());
    }

    #[test]
    fn strong_variant_is_not_convertible() {
        let cell = Cell::from_polygon(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)], None).unwrap();
        let err = convert_stabilization(&cell, &Tensor::identity(), &LocalStabilization::MixedStrong { nu: 0.1 }, Variant::MimeticU);
        assert!(matches!(err, Err(Error::Parameter(_))));
    }

    #[test]
    fn pullback_detects_kernel_mismatch() {
        let a = Mat::from_row_slice(1, 2, &[1.0, 0.0]);
        let b = Mat::from_row_slice(1, 2, &[0.0, 1.0]);
        let p = Mat::identity(1, 1);
        assert!(matches!(pullback_inner_product(&a, &p, &b), Err(Error::InternalConsistency(_))));
        assert!(pullback_inner_product(&a, &p, &(a.clone() * 2.0)).is_ok());
    }

    #[test]
    fn ncfe_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let cell = random_cell(&mut rng, 4, 8);
        let lam = random_tensor(&mut rng);
        let b = Preset::Ncfe(1.5).local(&cell, &lam).unwrap();
        let b = b.matrix().unwrap();
        for (i, f) in cell.faces.iter().enumerate() {
            let expect = f.length * 2.25 / (2.0 * f.dist) * (lam * f.normal).dot(&f.normal);
            assert!((b[(i, i)] - expect).abs() < 1e-14 * expect);
        }
        let mut off = b.clone();
        off.fill_diagonal(0.0);
        assert_eq!(off, Mat::zeros(cell.num_faces(), cell.num_faces()));
    }

    #[test]
    fn mfe_weights_on_unit_square() {
        // Each cone has area 1/4 and ∫|x - x_K|² = 1/24 (edge-midpoint rule),
        // with d = 1/2, so γ = 1/6.
        let cell = Cell::from_polygon(
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)],
            None,
        )
        .unwrap();
        let b = Preset::Mfe.local(&cell, &Tensor::identity()).unwrap();
        let b = b.matrix().unwrap();
        for i in 0..4 {
            assert!((b[(i, i)] - 1.0 / 6.0).abs() < 1e-14);
        }
    }

    #[test]
    fn preset_parameter_checks() {
        let cell = Cell::from_polygon(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)], None).unwrap();
        assert!(Preset::HybridDiagonal(Alpha::Constant(0.0)).local(&cell, &Tensor::identity()).is_err());
        assert!(Preset::Ncfe(-1.0).local(&cell, &Tensor::identity()).is_err());
        assert!(Preset::MixedStrong(-0.1).local(&cell, &Tensor::identity()).is_err());
        let two = Preset::TwoPoint.local(&cell, &(Tensor::identity() * 3.0)).unwrap();
        let hd = Preset::HybridDiagonal(Alpha::Constant(3.0)).local(&cell, &(Tensor::identity() * 3.0)).unwrap();
        assert_eq!(two, hd);
    }
}
