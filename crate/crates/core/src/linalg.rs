//! Dense linear-algebra helpers shared by the channel, optimizer and
//! decoupling code: guarded inversion, symmetric PSD matrix roots and
//! Hermitian log-determinants.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::{CMatrix, Complex64, Error, RMatrix, Result};

/// Inversions whose 1-norm condition number exceeds this are rejected.
pub const CONDITION_LIMIT: f64 = 1e14;

/// Relative eigenvalue floor for PSD pseudo-inverse roots. Eigenvalues below
/// `PSD_FLOOR_REL * lambda_max` are treated as zero.
pub const PSD_FLOOR_REL: f64 = 1e-12;

/// Negative eigenvalues down to `-PSD_NEGATIVE_TOL * lambda_max` are treated
/// as symmetric roundoff and clamped to zero.
pub const PSD_NEGATIVE_TOL: f64 = 1e-10;

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of `a` together with its 1-norm condition number.
///
/// Fails with [`Error::NumericallySingular`] when LU breaks down or the
/// condition number exceeds [`CONDITION_LIMIT`].
pub fn inverse_checked(a: &CMatrix) -> Result<(CMatrix, f64)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "cannot invert a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let inv = a.clone().try_inverse().ok_or(Error::NumericallySingular {
        condition: f64::INFINITY,
    })?;
    let condition = norm1(a) * norm1(&inv);
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(Error::NumericallySingular { condition });
    }
    Ok((inv, condition))
}

/// Largest entrywise deviation of `a` from its transpose.
pub fn asymmetry<T>(a: &nalgebra::DMatrix<T>) -> f64
where
    T: nalgebra::ComplexField<RealField = f64>,
{
    let mut worst = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..j {
            worst = worst.max((a[(i, j)].clone() - a[(j, i)].clone()).modulus());
        }
    }
    worst
}

/// Symmetric PSD root together with the number of eigenvalues that were
/// floored to zero while forming it.
#[derive(Debug, Clone)]
pub struct PsdRoot {
    pub matrix: RMatrix,
    pub floored: usize,
}

fn symmetric_eigen(s: &RMatrix) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let scale = s.amax().max(f64::MIN_POSITIVE);
    let asym = asymmetry(s);
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let eig = SymmetricEigen::new(s.clone());
    let lambda_max = eig.eigenvalues.max().max(0.0);
    let lambda_min = eig.eigenvalues.min();
    if lambda_min < -PSD_NEGATIVE_TOL * lambda_max.max(scale) {
        return Err(Error::NotPsd {
            min_eigenvalue: lambda_min,
        });
    }
    Ok(eig)
}

fn spectral_map(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> RMatrix {
    let v = &eig.eigenvectors;
    let mapped = eig.eigenvalues.map(f);
    let scaled = RMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * mapped[j]);
    let out = scaled * v.transpose();
    // Symmetrize to remove the last bit of roundoff asymmetry.
    (&out + out.transpose()) * 0.5
}

/// Unique symmetric PSD square root of `s`.
pub fn psd_sqrt(s: &RMatrix) -> Result<RMatrix> {
    let eig = symmetric_eigen(s)?;
    Ok(spectral_map(&eig, |l| l.max(0.0).sqrt()))
}

/// Pseudo-inverse square root `S^{-1/2}`; eigenvalues below
/// `PSD_FLOOR_REL * lambda_max` are mapped to zero.
pub fn psd_inv_sqrt(s: &RMatrix) -> Result<PsdRoot> {
    psd_power(s, -0.5)
}

/// Pseudo-inverse `S^{-1}` with the same eigenvalue floor as
/// [`psd_inv_sqrt`], so `psd_inverse(s) == psd_inv_sqrt(s)^2`.
pub fn psd_inverse(s: &RMatrix) -> Result<PsdRoot> {
    psd_power(s, -1.0)
}

fn psd_power(s: &RMatrix, power: f64) -> Result<PsdRoot> {
    let eig = symmetric_eigen(s)?;
    let lambda_max = eig.eigenvalues.max().max(0.0);
    let floor = PSD_FLOOR_REL * lambda_max;
    let floored = eig.eigenvalues.iter().filter(|&&l| l <= floor).count();
    let matrix = spectral_map(&eig, |l| if l <= floor { 0.0 } else { l.powf(power) });
    Ok(PsdRoot { matrix, floored })
}

/// `log2 det(a)` for Hermitian positive definite `a`.
pub fn log2_det_hpd(a: &CMatrix) -> Result<f64> {
    let chol = Cholesky::new(a.clone()).ok_or(Error::NotPsd {
        min_eigenvalue: f64::NAN,
    })?;
    let l = chol.l_dirty();
    Ok((0..a.nrows()).map(|i| 2.0 * l[(i, i)].re.log2()).sum())
}

/// Lift a real matrix to the complex field.
pub fn to_complex(a: &RMatrix) -> CMatrix {
    a.map(|v| Complex64::new(v, 0.0))
}
