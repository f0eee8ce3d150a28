use super::operators::{matrix_n, matrix_r};
use super::tensor_inverse;
use crate::dense::{complement_basis, is_spd, max_abs, spd_inverse, Mat};
use crate::mesh::Cell;
use crate::{Error, Result, Tensor};

fn as_mat(t: &Tensor) -> Mat {
    Mat::from_fn(2, 2, |i, j| t[(i, j)])
}

fn ill_conditioned(msg: String) -> Error {
    Error::IllConditionedCell { cell: 0, msg }
}

/// Orthonormal basis of `Im(N)^⊥`, `k×(k-2)`.
pub fn matrix_c(cell: &Cell, lambda: &Tensor) -> Result<Mat> {
    complement_basis(&matrix_n(cell, lambda)).ok_or_else(|| ill_conditioned("N is numerically rank deficient".into()))
}

/// Orthonormal basis of `Im(R)^⊥`, `k×(k-2)`.
pub fn matrix_d(cell: &Cell) -> Result<Mat> {
    complement_basis(&matrix_r(cell)).ok_or_else(|| ill_conditioned("R is numerically rank deficient".into()))
}

/// Consistent part `RΛ⁻¹Rᵀ/|K|` of the mimetic matrix.
pub fn consistency_m(cell: &Cell, lambda: &Tensor) -> Result<Mat> {
    let inv = as_mat(&tensor_inverse(lambda)?);
    let r = matrix_r(cell);
    Ok(&r * inv * r.transpose() / cell.area)
}

/// Consistent part `NΛ⁻¹Nᵀ/|K|` of the inverse mimetic matrix.
pub fn consistency_w(cell: &Cell, lambda: &Tensor) -> Result<Mat> {
    let inv = as_mat(&tensor_inverse(lambda)?);
    let n = matrix_n(cell, lambda);
    Ok(&n * inv * n.transpose() / cell.area)
}

fn check_size(u: &Mat, k: usize, what: &str) -> Result<()> {
    if u.nrows() != k - 2 || u.ncols() != k - 2 {
        return Err(Error::Parameter(format!(
            "{what} is {}x{}, expected {}x{}",
            u.nrows(),
            u.ncols(),
            k - 2,
            k - 2
        )));
    }
    Ok(())
}

/// `M = RΛ⁻¹Rᵀ/|K| + C U Cᵀ` for an SPD `U` of size `k-2`.
pub fn matrix_m(cell: &Cell, lambda: &Tensor, u: &Mat) -> Result<Mat> {
    check_size(u, cell.num_faces(), "U")?;
    if !is_spd(u) {
        return Err(Error::Parameter("U is not symmetric positive definite".into()));
    }
    assemble_m(cell, lambda, u)
}

pub(crate) fn assemble_m(cell: &Cell, lambda: &Tensor, u: &Mat) -> Result<Mat> {
    let c = matrix_c(cell, lambda)?;
    Ok(consistency_m(cell, lambda)? + &c * u * c.transpose())
}

/// `W = NΛ⁻¹Nᵀ/|K| + D Ũ Dᵀ` for the dual parameter `Ũ`; `W = M⁻¹` when
/// `Ũ` is the dual of the `U` defining `M`.
pub fn matrix_w(cell: &Cell, lambda: &Tensor, u_dual: &Mat) -> Result<Mat> {
    check_size(u_dual, cell.num_faces(), "dual U")?;
    if !is_spd(u_dual) {
        return Err(Error::Parameter("dual U is not symmetric positive definite".into()));
    }
    let d = matrix_d(cell)?;
    Ok(consistency_w(cell, lambda)? + &d * u_dual * d.transpose())
}

/// Checks that `basis` has orthonormal columns orthogonal to `Im(a)` and
/// spanning the whole complement.
pub fn verify_complement(a: &Mat, basis: &Mat) -> Result<()> {
    let n = a.nrows();
    if basis.nrows() != n || basis.ncols() + a.ncols() != n {
        return Err(Error::InternalConsistency(format!(
            "complement has shape {}x{}, expected {}x{}",
            basis.nrows(),
            basis.ncols(),
            n,
            n - a.ncols()
        )));
    }
    let gram = basis.transpose() * basis - Mat::identity(basis.ncols(), basis.ncols());
    if max_abs(&gram) > 1e-12 {
        return Err(Error::InternalConsistency("complement columns are not orthonormal".into()));
    }
    let cross = basis.transpose() * a;
    if max_abs(&cross) > 1e-12 * max_abs(a).max(f64::MIN_POSITIVE) {
        return Err(Error::InternalConsistency("complement is not orthogonal to the image".into()));
    }
    Ok(())
}

pub(crate) fn inverse(m: &Mat, what: &str) -> Result<Mat> {
    spd_inverse(m).ok_or_else(|| Error::NotSpd(format!("{what} is not positive definite")))
}
