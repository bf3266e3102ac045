//! Sample covariance at arbitrary lag, model covariances and the closed-form
//! covariance of a drifting interferer.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::rng::{self, tag};
use crate::scenario::{rfi_ssv, synthesize, RfiModel, ScenarioConfig, SnapshotMatrix};
use crate::{CMatrix, Error, Result};

/// Below this drift-rate difference the geometric sum is evaluated as its
/// limit `N`.
const COINCIDENT_RATE: f64 = 1e-12;

/// Estimated covariance tagged with its lag and the number of averaged
/// outer products.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedScm {
    pub matrix: CMatrix,
    pub lag: usize,
    pub n_used: usize,
}

impl LaggedScm {
    pub fn new(matrix: CMatrix, lag: usize, n_used: usize) -> Self {
        Self {
            matrix,
            lag,
            n_used,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Covariance of the same data after per-element gains `u`:
    /// `diag(u) R diag(u)`.
    pub fn with_gains(&self, gains: &[f64]) -> Result<Self> {
        if gains.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "gain vector",
                expected: self.dim(),
                got: gains.len(),
            });
        }
        let matrix = CMatrix::from_fn(self.dim(), self.dim(), |k, l| {
            self.matrix[(k, l)] * (gains[k] * gains[l])
        });
        Ok(Self {
            matrix,
            lag: self.lag,
            n_used: self.n_used,
        })
    }
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for k in 0..n {
        for l in k..n {
            worst = worst.max((a[(k, l)] - a[(l, k)].conj()).norm());
        }
    }
    worst
}

/// Lagged sample covariance `(1/(N-tau)) sum_{n=tau}^{N-1} x(n) x(n-tau)^H`.
///
/// Sums are truncated at the record edge rather than wrapped. At lag zero the
/// result is made exactly Hermitian.
pub fn sample_covariance(snapshots: &SnapshotMatrix, tau: usize) -> Result<LaggedScm> {
    let n = snapshots.n_samples();
    if tau >= n {
        return Err(Error::InsufficientSamples {
            lag: tau,
            samples: n,
        });
    }
    let used = n - tau;
    let x = snapshots.data();
    let lead = x.columns(tau, used);
    let lagged = x.columns(0, used);
    let mut matrix = lead * lagged.adjoint();
    matrix.unscale_mut(used as f64);
    if tau == 0 {
        matrix = hermitian_part(&matrix);
    }
    Ok(LaggedScm::new(matrix, tau, used))
}

/// Expected covariance of a spatially stationary interferer in white noise:
/// `sigma_r^2 e^{i omega tau} a a^H + delta(tau) sigma_n^2 I`.
pub fn model_covariance(rfi: &RfiModel, sigma_n: f64, tau: usize) -> Result<CMatrix> {
    let m = rfi.len();
    if !rfi.is_stationary() {
        return Err(Error::Domain(
            "model covariance is only defined for a spatially stationary interferer".into(),
        ));
    }
    let a = rfi_ssv(rfi, 0.0, m)?;
    let phase = Complex64::from_polar(rfi.power(), rfi.omega * tau as f64);
    let mut r = &a * a.adjoint() * phase;
    if tau == 0 {
        for k in 0..m {
            r[(k, k)] += sigma_n * sigma_n;
        }
    }
    Ok(r)
}

/// `sum_{n=0}^{N-1} e^{i d n}`, with the coincident-rate limit `N`.
fn geometric_sum(d: f64, n: usize) -> Complex64 {
    if d.abs() < COINCIDENT_RATE {
        return Complex64::new(n as f64, 0.0);
    }
    let i = Complex64::i();
    (Complex64::new(1.0, 0.0) - (i * (d * n as f64)).exp())
        / (Complex64::new(1.0, 0.0) - (i * d).exp())
}

/// Closed-form `N`-sample covariance of the drifting interferer at lag `tau`,
/// treating the signature as constant across the lag:
///
/// ```text
/// R_kl = sigma_r^2 e^{i omega tau} e^{i(phi_k - phi_l)} / (M N)
///        * (1 - e^{i(alpha_k - alpha_l) N}) / (1 - e^{i(alpha_k - alpha_l)})
/// ```
pub fn rfi_scm_closed_form(rfi: &RfiModel, tau: usize, n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InsufficientSamples {
            lag: tau,
            samples: 0,
        });
    }
    let m = rfi.len();
    let scale = Complex64::from_polar(rfi.power() / (m * n) as f64, rfi.omega * tau as f64);
    Ok(CMatrix::from_fn(m, m, |k, l| {
        let phase = Complex64::from_polar(1.0, rfi.phis[k] - rfi.phis[l]);
        scale * phase * geometric_sum(rfi.alphas[k] - rfi.alphas[l], n)
    }))
}

/// Empirical mean covariance and entrywise variance over Monte-Carlo trials.
#[derive(Debug, Clone)]
pub struct ScmStatistics {
    pub mean: CMatrix,
    /// `E|R_kl - mean_kl|^2`, unbiased over trials.
    pub variance: nalgebra::DMatrix<f64>,
    pub trials: usize,
}

impl ScmStatistics {
    pub fn mean_variance(&self) -> f64 {
        self.variance.mean()
    }
}

/// Trials summed per work unit; fixed so aggregation order never depends on
/// the thread count.
const CHUNK: usize = 16;

/// Runs `trials` independent realizations of `config` (seed of trial t is
/// derived from `(config.seed, t)`) and accumulates the lag-`tau` SCM
/// statistics. Gains, when `gain_delta > 0`, are redrawn per trial.
pub fn empirical_scm_statistics(
    config: &ScenarioConfig,
    tau: usize,
    trials: usize,
) -> Result<ScmStatistics> {
    if trials < 2 {
        return Err(Error::InvalidModel("need at least 2 trials".into()));
    }
    config.validate()?;
    let m = config.n_elements();
    let chunks: Vec<(CMatrix, nalgebra::DMatrix<f64>)> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| -> Result<_> {
            let mut sum = CMatrix::zeros(m, m);
            let mut sum_sq = nalgebra::DMatrix::<f64>::zeros(m, m);
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let trial = ScenarioConfig {
                    seed: rng::derive_seed(config.seed, &[tag::TRIAL, t as u64]),
                    ..config.clone()
                };
                let x = synthesize(&trial)?;
                let mut scm = sample_covariance(&x, tau)?;
                if trial.gain_delta > 0.0 {
                    scm = scm.with_gains(&trial.gain_vector())?;
                }
                sum += &scm.matrix;
                sum_sq.zip_apply(&scm.matrix, |s, z| *s += z.norm_sqr());
            }
            Ok((sum, sum_sq))
        })
        .collect::<Result<_>>()?;

    let mut sum = CMatrix::zeros(m, m);
    let mut sum_sq = nalgebra::DMatrix::<f64>::zeros(m, m);
    for (s, q) in &chunks {
        sum += s;
        sum_sq += q;
    }
    let t = trials as f64;
    let mean = sum / Complex64::new(t, 0.0);
    let variance = nalgebra::DMatrix::from_fn(m, m, |k, l| {
        ((sum_sq[(k, l)] - t * mean[(k, l)].norm_sqr()) / (t - 1.0)).max(0.0)
    });
    Ok(ScmStatistics {
        mean,
        variance,
        trials,
    })
}
