//! Spatial RFI mitigation on antenna arrays.
//!
//! The crate simulates narrowband array snapshots containing a (possibly
//! moving) continuous-wave interferer, cosmic point sources and white noise,
//! and implements two covariance-domain corrections:
//!
//! * subspace projection, where the dominant RFI subspace is estimated from
//!   the sample covariance and projected out;
//! * lag subtraction, where the covariance at a non-zero lag (free of white
//!   noise and white cosmic signals) is scaled by a Frobenius-optimal complex
//!   gain and subtracted from the zero-lag covariance.
//!
//! Monte-Carlo drivers in [`harness`] reproduce the signature-estimation
//! study, the subspace smearing study and the projection vs subtraction
//! comparison.

pub mod cli;
pub mod covariance;
pub mod error;
pub mod harness;
pub mod imaging;
pub mod mitigation;
pub mod rng;
pub mod scenario;
pub mod subspace;

pub use error::{Error, Result};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix used for snapshots, covariances and bases.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector (spatial signatures).
pub type CVector = DVector<Complex64>;

/// Converts a power ratio in decibels to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Largest entry modulus of a complex matrix.
#[cfg(test)]
pub(crate) trait MaxAbs {
    fn max_abs(&self) -> f64;
}

#[cfg(test)]
impl MaxAbs for CMatrix {
    fn max_abs(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}
