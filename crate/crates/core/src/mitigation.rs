//! Covariance corrections: projecting the interference subspace out, and
//! subtracting a scaled lagged covariance.

use num_complex::Complex64;

use crate::covariance::{hermitian_part, LaggedScm};
use crate::scenario::SnapshotMatrix;
use crate::subspace::{
    estimate_rfi_subspace, median_noise_power, orthogonal_projector, rfi_subspace_rank,
};
use crate::{CMatrix, Error, Result};

/// `tr(R_tau^H R_tau)` below this is treated as carrying no structure.
const DEGENERATE_ENERGY: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Projection,
    Subtraction,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Projection => "projection",
            Method::Subtraction => "subtraction",
        }
    }
}

/// Corrected covariance plus diagnostics.
#[derive(Debug, Clone)]
pub struct MitigationResult {
    /// Hermitian corrected covariance.
    pub corrected: CMatrix,
    pub method: Method,
    /// Subtraction gain (subtraction only).
    pub xi0: Option<Complex64>,
    /// Number of removed dimensions (projection only).
    pub rank_removed: Option<usize>,
    pub mse_vs_reference: Option<f64>,
}

impl MitigationResult {
    /// Fills in [`MitigationResult::mse_vs_reference`] against an
    /// interference-free covariance.
    pub fn with_reference(mut self, reference: &CMatrix) -> Result<Self> {
        self.mse_vs_reference = Some(covariance_mse(&self.corrected, reference)?);
        Ok(self)
    }
}

fn check_square(context: &'static str, expected: usize, a: &CMatrix) -> Result<()> {
    if a.nrows() != expected || a.ncols() != expected {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got: if a.nrows() != expected {
                a.nrows()
            } else {
                a.ncols()
            },
        });
    }
    Ok(())
}

/// `P R P^H`.
pub fn project_covariance(r: &CMatrix, p: &CMatrix) -> Result<CMatrix> {
    check_square("projector", r.nrows(), p)?;
    check_square("covariance", p.nrows(), r)?;
    Ok(p * r * p.adjoint())
}

/// Applies `P` to every snapshot column.
pub fn project_snapshots(x: &SnapshotMatrix, p: &CMatrix) -> Result<SnapshotMatrix> {
    check_square("projector", x.n_elements(), p)?;
    Ok(SnapshotMatrix::new(p * x.data()))
}

/// Objective `||R_0 - xi R_tau||_F^2`.
pub fn subtraction_objective(r0: &CMatrix, rtau: &CMatrix, xi: Complex64) -> f64 {
    r0.iter()
        .zip(rtau.iter())
        .map(|(a, b)| (a - xi * b).norm_sqr())
        .sum()
}

/// Frobenius-optimal complex gain `tr(R_tau^H R_0) / tr(R_tau^H R_tau)`.
///
/// The gain is complex so that it can absorb the carrier phase `e^{i omega
/// tau}` carried by the lagged covariance.
pub fn optimal_gain(r0: &CMatrix, rtau: &CMatrix) -> Result<Complex64> {
    check_square("lagged covariance", r0.nrows(), rtau)?;
    let energy = rtau.norm_squared();
    if energy.is_nan() || energy < DEGENERATE_ENERGY {
        return Err(Error::DegenerateLag(energy));
    }
    let cross: Complex64 = rtau.iter().zip(r0.iter()).map(|(b, a)| b.conj() * a).sum();
    Ok(cross / energy)
}

fn check_lags(r0: &LaggedScm, rtau: &LaggedScm) -> Result<()> {
    if r0.lag != 0 {
        return Err(Error::InvalidModel(format!(
            "reference covariance must be at lag 0, got lag {}",
            r0.lag
        )));
    }
    if rtau.lag == 0 {
        return Err(Error::InvalidModel(
            "subtracted covariance must be at a non-zero lag".into(),
        ));
    }
    Ok(())
}

/// Subtraction gain for a zero-lag / lagged SCM pair.
pub fn subtraction_gain(r0: &LaggedScm, rtau: &LaggedScm) -> Result<Complex64> {
    check_lags(r0, rtau)?;
    optimal_gain(&r0.matrix, &rtau.matrix)
}

/// Hermitian part of `R_0 - xi R_tau`.
pub fn subtract_rfi(r0: &LaggedScm, rtau: &LaggedScm, xi: Complex64) -> Result<MitigationResult> {
    check_lags(r0, rtau)?;
    check_square("lagged covariance", r0.dim(), &rtau.matrix)?;
    let corrected = hermitian_part(&(&r0.matrix - &rtau.matrix * xi));
    Ok(MitigationResult {
        corrected,
        method: Method::Subtraction,
        xi0: Some(xi),
        rank_removed: None,
        mse_vs_reference: None,
    })
}

/// Lag subtraction with the optimal gain.
pub fn subtract_rfi_optimal(r0: &LaggedScm, rtau: &LaggedScm) -> Result<MitigationResult> {
    let xi = subtraction_gain(r0, rtau)?;
    subtract_rfi(r0, rtau, xi)
}

/// Projects out the `d` dominant eigenvectors of the zero-lag SCM, with `d`
/// chosen by the eigenvalue threshold `kappa * median(eigenvalues)`.
pub fn project_rfi(r0: &LaggedScm, kappa: f64) -> Result<MitigationResult> {
    if r0.lag != 0 {
        return Err(Error::InvalidModel(format!(
            "projection operates on the lag-0 covariance, got lag {}",
            r0.lag
        )));
    }
    let spectrum = estimate_rfi_subspace(r0, 0)?.values;
    let d = rfi_subspace_rank(&spectrum, median_noise_power(&spectrum), kappa);
    project_rfi_rank(r0, d)
}

/// Projects out a fixed number `d` of dominant eigenvectors.
pub fn project_rfi_rank(r0: &LaggedScm, d: usize) -> Result<MitigationResult> {
    let estimate = estimate_rfi_subspace(r0, d)?;
    let p = orthogonal_projector(&estimate.basis)?;
    let corrected = hermitian_part(&project_covariance(&r0.matrix, &p)?);
    Ok(MitigationResult {
        corrected,
        method: Method::Projection,
        xi0: None,
        rank_removed: Some(d),
        mse_vs_reference: None,
    })
}

/// `||A - B||_F^2 / M^2`.
pub fn covariance_mse(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    check_square("covariance", a.nrows(), b)?;
    let m = a.nrows() as f64;
    Ok((a - b).norm_squared() / (m * m))
}
