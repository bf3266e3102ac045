//! Spectrum of a drifting interferer's covariance as the averaging window
//! grows.

use std::io::Write;

use rayon::prelude::*;

use super::{fmt, write_rows};
use crate::covariance::{rfi_scm_closed_form, sample_covariance};
use crate::rng::{self, tag};
use crate::scenario::{synthesize, ArrayGeometry, RfiModel, ScenarioConfig};
use crate::subspace::hermitian_eigen;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SmearingStudyConfig {
    pub n_elements: usize,
    /// Standard deviation of the per-element drift rates, rad/sample.
    pub alpha_std: f64,
    pub n_grid: Vec<usize>,
    pub sigma_r: f64,
    pub omega: f64,
    pub trials: usize,
    pub base_seed: u64,
    /// Largest window for which the noiseless simulation is also run and
    /// compared against the closed form.
    pub empirical_max_n: usize,
}

impl Default for SmearingStudyConfig {
    fn default() -> Self {
        Self {
            n_elements: 8,
            alpha_std: 0.1,
            n_grid: (0..=20).step_by(2).map(|p| 1usize << p).collect(),
            sigma_r: 1.0,
            omega: 0.3,
            trials: 16,
            base_seed: 1,
            empirical_max_n: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmearingRow {
    pub trial: usize,
    pub n_samples: usize,
    /// Eigenvalues of the closed-form covariance, descending.
    pub spectrum: Vec<f64>,
    /// Largest eigenvalue over the trace.
    pub dominant_fraction: f64,
    /// Number of eigenvalues needed to hold 99% of the interferer power.
    pub dim_99: usize,
    pub empirical_dominant_fraction: Option<f64>,
    /// Largest eigenvalue difference between closed form and simulation.
    pub empirical_spectrum_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmearingTable {
    pub rows: Vec<SmearingRow>,
}

impl SmearingTable {
    /// Mean dominant fraction over trials for window `n`.
    pub fn mean_dominant_fraction(&self, n: usize) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.n_samples == n)
            .map(|r| r.dominant_fraction)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        write_rows(
            out,
            &[
                "trial",
                "n_samples",
                "dominant_fraction",
                "dim_99",
                "empirical_dominant_fraction",
                "empirical_spectrum_error",
                "eigenvalues",
            ],
            self.rows.iter().map(|r| {
                vec![
                    r.trial.to_string(),
                    r.n_samples.to_string(),
                    fmt(r.dominant_fraction),
                    r.dim_99.to_string(),
                    opt(r.empirical_dominant_fraction),
                    opt(r.empirical_spectrum_error),
                    r.spectrum
                        .iter()
                        .map(|v| fmt(*v))
                        .collect::<Vec<_>>()
                        .join(";"),
                ]
            }),
        )
    }
}

fn dim_99(spectrum: &[f64]) -> usize {
    let total: f64 = spectrum.iter().map(|v| v.max(0.0)).sum();
    let mut acc = 0.0;
    for (i, v) in spectrum.iter().enumerate() {
        acc += v.max(0.0);
        if acc >= 0.99 * total {
            return i + 1;
        }
    }
    spectrum.len()
}

fn run_trial(cfg: &SmearingStudyConfig, trial: usize) -> Result<Vec<SmearingRow>> {
    let m = cfg.n_elements;
    let seed = rng::derive_seed(cfg.base_seed, &[trial as u64]);
    let mut g = rng::stream(seed, &[tag::RFI]);
    let rfi = RfiModel::drifting(m, cfg.sigma_r, cfg.omega, 0.0, cfg.alpha_std, &mut g);
    let geometry = ArrayGeometry::new((0..m).map(|k| [0.5 * k as f64, 0.0]).collect())?;

    cfg.n_grid
        .iter()
        .map(|&n| {
            let closed = rfi_scm_closed_form(&rfi, 0, n)?;
            let (spectrum, _) = hermitian_eigen(&closed)?;
            let trace = closed.trace().re;
            let (mut emp_fraction, mut emp_error) = (None, None);
            if n <= cfg.empirical_max_n {
                let scenario = ScenarioConfig {
                    geometry: geometry.clone(),
                    rfi: Some(rfi.clone()),
                    sources: vec![],
                    sigma_n: f64::MIN_POSITIVE,
                    n_samples: n,
                    gain_delta: 0.0,
                    seed,
                };
                let scm = sample_covariance(&synthesize(&scenario)?, 0)?;
                let (emp, _) = hermitian_eigen(&scm.matrix)?;
                emp_fraction = Some(emp[0] / scm.matrix.trace().re);
                emp_error = Some(
                    emp.iter()
                        .zip(&spectrum)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max),
                );
            }
            Ok(SmearingRow {
                trial,
                n_samples: n,
                dominant_fraction: spectrum[0] / trace,
                dim_99: dim_99(&spectrum),
                spectrum,
                empirical_dominant_fraction: emp_fraction,
                empirical_spectrum_error: emp_error,
            })
        })
        .collect()
}

/// For each trial, draws drift rates i.i.d. `N(0, alpha_std^2)` and records
/// the spectrum of the interferer covariance at every window in `n_grid`.
pub fn run_smearing_study(cfg: &SmearingStudyConfig) -> Result<SmearingTable> {
    if cfg.n_elements < 2 {
        return Err(Error::InvalidModel(
            "smearing study needs at least 2 elements".into(),
        ));
    }
    if cfg.n_grid.contains(&0) {
        return Err(Error::InsufficientSamples { lag: 0, samples: 0 });
    }
    let per_trial: Vec<Vec<SmearingRow>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<_>>()?;
    Ok(SmearingTable {
        rows: per_trial.into_iter().flatten().collect(),
    })
}
