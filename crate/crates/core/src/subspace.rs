//! Signature estimation, alignment metric, rank selection and the orthogonal
//! projector.

use crate::covariance::{hermitian_defect, hermitian_part, LaggedScm};
use crate::{CMatrix, CVector, Error, Result};
use nalgebra::linalg::{Cholesky, SymmetricEigen, SVD};

/// Default eigenvalue threshold multiplier for [`rfi_subspace_rank`].
pub const DEFAULT_KAPPA: f64 = 3.0;

/// Largest accepted condition number of `V^H V` in [`orthogonal_projector`].
pub const MAX_BASIS_CONDITION: f64 = 1e8;

/// Orthonormal basis of an estimated interference subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceEstimate {
    /// `M x d`, orthonormal columns.
    pub basis: CMatrix,
    /// Eigenvalues (lag 0) or singular values (lag > 0), descending. Holds the
    /// full spectrum; the first `d` belong to the basis columns.
    pub values: Vec<f64>,
    pub source_lag: usize,
}

impl SubspaceEstimate {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Dominant signature estimate (first basis column).
    pub fn dominant(&self) -> CVector {
        self.basis.column(0).into_owned()
    }
}

fn check_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("covariance matrix"))
    }
}

/// Rotates each column so that its first non-negligible entry is real and
/// positive.
fn normalize_phases(vectors: &mut CMatrix) {
    for mut col in vectors.column_iter_mut() {
        let tol = 1e-12 * col.norm();
        if let Some(z) = col.iter().find(|z| z.norm() > tol).copied() {
            let rot = z.conj() / z.norm();
            for v in col.iter_mut() {
                *v *= rot;
            }
        }
    }
}

fn sort_descending(values: Vec<f64>, vectors: CMatrix) -> (Vec<f64>, CMatrix) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors =
        CMatrix::from_fn(vectors.nrows(), order.len(), |r, c| vectors[(r, order[c])]);
    (sorted_values, sorted_vectors)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
///
/// Only the Hermitian part of the input is used. Eigenvectors follow the
/// phase convention of the crate (first significant entry real positive).
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_finite(a)?;
    let eig = SymmetricEigen::new(hermitian_part(a));
    let (values, mut vectors) =
        sort_descending(eig.eigenvalues.iter().copied().collect(), eig.eigenvectors);
    normalize_phases(&mut vectors);
    Ok((values, vectors))
}

/// Singular values (descending) and left singular vectors of a square matrix.
pub fn left_singular(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_finite(a)?;
    let svd = SVD::new(a.clone(), true, false);
    let u = svd
        .u
        .ok_or(Error::NonFinite("singular value decomposition"))?;
    let (values, mut vectors) = sort_descending(svd.singular_values.iter().copied().collect(), u);
    normalize_phases(&mut vectors);
    Ok((values, vectors))
}

/// Estimates the `d` dominant directions of an SCM: eigenvectors for lag 0,
/// left singular vectors otherwise (a lagged SCM is not Hermitian).
pub fn estimate_rfi_subspace(scm: &LaggedScm, d: usize) -> Result<SubspaceEstimate> {
    let m = scm.dim();
    if d > m {
        return Err(Error::DimensionMismatch {
            context: "subspace rank",
            expected: m,
            got: d,
        });
    }
    let (values, vectors) = if scm.lag == 0 {
        hermitian_eigen(&scm.matrix)?
    } else {
        left_singular(&scm.matrix)?
    };
    Ok(SubspaceEstimate {
        basis: vectors.columns(0, d).into_owned(),
        values,
        source_lag: scm.lag,
    })
}

/// Dominant-vector estimate of the interferer signature.
pub fn estimate_rfi_ssv(scm: &LaggedScm) -> Result<SubspaceEstimate> {
    estimate_rfi_subspace(scm, 1)
}

/// `|a^H b| / (|a| |b|)`, in `[0, 1]`.
pub fn alignment_gamma(a_true: &CVector, a_est: &CVector) -> Result<f64> {
    if a_true.len() != a_est.len() {
        return Err(Error::DimensionMismatch {
            context: "alignment",
            expected: a_true.len(),
            got: a_est.len(),
        });
    }
    let (na, nb) = (a_true.norm(), a_est.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Domain(
            "alignment of a zero vector is undefined".into(),
        ));
    }
    Ok((a_true.dotc(a_est).norm() / (na * nb)).min(1.0))
}

/// Median of a spectrum; the default noise-power estimate for rank selection.
pub fn median_noise_power(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => 0.0,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Number of eigenvalues above `kappa * noise_power`, capped at `M - 1`.
/// Zero means no detectable interference.
pub fn rfi_subspace_rank(values: &[f64], noise_power: f64, kappa: f64) -> usize {
    let count = values.iter().filter(|&&v| v > kappa * noise_power).count();
    count.min(values.len().saturating_sub(1))
}

/// `P = I - V (V^H V)^{-1} V^H`, the projector onto the orthogonal
/// complement of the column span of `basis`.
pub fn orthogonal_projector(basis: &CMatrix) -> Result<CMatrix> {
    let m = basis.nrows();
    let d = basis.ncols();
    if d == 0 {
        return Ok(CMatrix::identity(m, m));
    }
    if d >= m {
        return Err(Error::DimensionMismatch {
            context: "projector basis columns",
            expected: m - 1,
            got: d,
        });
    }
    check_finite(basis)?;
    let gram = basis.adjoint() * basis;
    let (values, _) = hermitian_eigen(&gram)?;
    let (largest, smallest) = (values[0], values[d - 1]);
    let condition = if smallest > 0.0 {
        largest / smallest
    } else {
        f64::INFINITY
    };
    if condition.is_nan() || condition >= MAX_BASIS_CONDITION {
        return Err(Error::IllConditionedBasis(condition));
    }
    let chol = Cholesky::new(gram).ok_or(Error::IllConditionedBasis(condition))?;
    let coeffs = chol.solve(&basis.adjoint());
    let mut p = CMatrix::identity(m, m) - basis * coeffs;
    p = hermitian_part(&p);
    debug_assert!(hermitian_defect(&p) == 0.0);
    Ok(p)
}

/// `v` rotated by the global phase that makes its first significant entry
/// real and positive.
pub fn canonical_phase(v: &CVector) -> CVector {
    let mut m = CMatrix::from_column_slice(v.len(), 1, v.as_slice());
    normalize_phases(&mut m);
    m.column(0).into_owned()
}
