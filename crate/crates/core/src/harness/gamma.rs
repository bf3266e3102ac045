//! Signature-estimation accuracy versus INR, sample count, gain errors and
//! lag.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use super::{fmt, mean_var, write_rows};
use crate::covariance::sample_covariance;
use crate::rng::{self, tag};
use crate::scenario::{rfi_ssv, synthesize, ArrayGeometry, RfiModel, ScenarioConfig};
use crate::subspace::{alignment_gamma, estimate_rfi_ssv};
use crate::{db_to_linear, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GammaStudyConfig {
    pub n_elements: usize,
    pub inr_db: Vec<f64>,
    pub n_grid: Vec<usize>,
    /// Gain-error half widths; 0 is the calibrated array.
    pub deltas: Vec<f64>,
    pub lags: Vec<usize>,
    pub trials: usize,
    pub sigma_n: f64,
    /// Interferer carrier offset, rad/sample.
    pub omega: f64,
    pub base_seed: u64,
}

impl Default for GammaStudyConfig {
    fn default() -> Self {
        Self {
            n_elements: 8,
            inr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            n_grid: (6..=13).map(|p| 1usize << p).collect(),
            deltas: vec![0.0, 0.1],
            lags: vec![0, 1],
            trials: 512,
            sigma_n: 1.0,
            omega: 0.3,
            base_seed: 1,
        }
    }
}

impl GammaStudyConfig {
    fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(Error::InvalidModel(
                "gamma study needs at least 2 trials".into(),
            ));
        }
        if self.n_elements < 2 {
            return Err(Error::InvalidModel(
                "gamma study needs at least 2 elements".into(),
            ));
        }
        if let Some(&lag) = self.lags.iter().max() {
            if self.n_grid.iter().any(|&n| n <= lag) {
                return Err(Error::InsufficientSamples {
                    lag,
                    samples: *self.n_grid.iter().min().unwrap_or(&0),
                });
            }
        }
        if self.deltas.iter().any(|d| !(0.0..1.0).contains(d)) {
            return Err(Error::InvalidModel("gain deltas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaCell {
    pub inr_db: f64,
    pub n_samples: usize,
    pub delta: f64,
    pub tau: usize,
    pub mean_gamma: f64,
    pub var_gamma: f64,
    pub trials: usize,
}

/// Gridded Monte-Carlo results of the alignment study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub config: GammaStudyConfig,
    pub cells: Vec<GammaCell>,
}

impl StudyTable {
    pub fn cell(
        &self,
        inr_db: f64,
        n_samples: usize,
        delta: f64,
        tau: usize,
    ) -> Option<&GammaCell> {
        self.cells.iter().find(|c| {
            c.inr_db == inr_db && c.n_samples == n_samples && c.delta == delta && c.tau == tau
        })
    }

    /// Name of the estimator used at lag `tau`.
    pub fn estimator(tau: usize) -> &'static str {
        if tau == 0 {
            "hermitian_eigenvector"
        } else {
            "left_singular_vector"
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_rows(
            out,
            &[
                "inr_db",
                "n_samples",
                "delta",
                "tau",
                "mean_gamma",
                "var_gamma",
                "trials",
                "estimator",
            ],
            self.cells.iter().map(|c| {
                vec![
                    fmt(c.inr_db),
                    c.n_samples.to_string(),
                    fmt(c.delta),
                    c.tau.to_string(),
                    fmt(c.mean_gamma),
                    fmt(c.var_gamma),
                    c.trials.to_string(),
                    Self::estimator(c.tau).to_string(),
                ]
            }),
        )
    }
}

/// Alignment values of one trial, indexed `[delta][lag]`.
fn run_trial(cfg: &GammaStudyConfig, inr_db: f64, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let m = cfg.n_elements;
    let mut rfi_rng = rng::stream(seed, &[tag::RFI]);
    let phis = (0..m)
        .map(|_| 2.0 * std::f64::consts::PI * rfi_rng.random::<f64>())
        .collect();
    let sigma_r = cfg.sigma_n * db_to_linear(inr_db).sqrt();
    let rfi = RfiModel::stationary(sigma_r, cfg.omega, 0.0, phis);
    let a_true = rfi_ssv(&rfi, 0.0, m)?;
    let scenario = ScenarioConfig {
        geometry: ArrayGeometry::new((0..m).map(|k| [0.5 * k as f64, 0.0]).collect())?,
        rfi: Some(rfi),
        sources: vec![],
        sigma_n: cfg.sigma_n,
        n_samples: n,
        gain_delta: 0.0,
        seed,
    };
    let x = synthesize(&scenario)?;
    let scms = cfg
        .lags
        .iter()
        .map(|&tau| sample_covariance(&x, tau))
        .collect::<Result<Vec<_>>>()?;

    // One set of uniform draws shared by every delta.
    let mut gain_rng = rng::stream(seed, &[tag::GAINS]);
    let unit: Vec<f64> = (0..m)
        .map(|_| 2.0 * gain_rng.random::<f64>() - 1.0)
        .collect();

    cfg.deltas
        .iter()
        .map(|&delta| {
            let gains: Vec<f64> = unit.iter().map(|v| 1.0 + delta * v).collect();
            scms.iter()
                .map(|scm| {
                    let observed = if delta > 0.0 {
                        scm.with_gains(&gains)?
                    } else {
                        scm.clone()
                    };
                    alignment_gamma(&a_true, &estimate_rfi_ssv(&observed)?.dominant())
                })
                .collect()
        })
        .collect()
}

/// Runs the alignment study. Every `(INR, N)` cell draws `trials`
/// independent realizations; all gain and lag variants of a cell reuse the
/// same realization.
pub fn run_gamma_study(cfg: &GammaStudyConfig) -> Result<StudyTable> {
    cfg.validate()?;
    let (nd, nl) = (cfg.deltas.len(), cfg.lags.len());
    let mut cells = Vec::new();
    let mut blocks = Vec::new();
    for (i, &inr) in cfg.inr_db.iter().enumerate() {
        for (j, &n) in cfg.n_grid.iter().enumerate() {
            let cell_id = (i * cfg.n_grid.len() + j) as u64;
            let per_trial: Vec<Vec<Vec<f64>>> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    run_trial(
                        cfg,
                        inr,
                        n,
                        rng::derive_seed(cfg.base_seed, &[cell_id, t as u64]),
                    )
                })
                .collect::<Result<_>>()?;
            blocks.push((inr, n, per_trial));
        }
    }
    for di in 0..nd {
        for li in 0..nl {
            for (inr, n, per_trial) in &blocks {
                let gammas: Vec<f64> = per_trial.iter().map(|t| t[di][li]).collect();
                let (mean, var) = mean_var(&gammas);
                cells.push(GammaCell {
                    inr_db: *inr,
                    n_samples: *n,
                    delta: cfg.deltas[di],
                    tau: cfg.lags[li],
                    mean_gamma: mean,
                    var_gamma: var,
                    trials: cfg.trials,
                });
            }
        }
    }
    Ok(StudyTable {
        config: cfg.clone(),
        cells,
    })
}
