//! Projection versus lag subtraction on a drifting interferer with a weak
//! cosmic source.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{fmt, median, write_rows};
use crate::covariance::{hermitian_part, sample_covariance};
use crate::imaging::{dirty_map, residual_map, SkyGrid, SkyMap};
use crate::mitigation::{covariance_mse, project_rfi, subtract_rfi_optimal};
use crate::rng::{self, tag};
use crate::scenario::{
    apply_gain_errors, synthesize, ArrayGeometry, CosmicSource, RfiModel, ScenarioConfig,
};
use crate::subspace::DEFAULT_KAPPA;
use crate::{db_to_linear, CMatrix, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonConfig {
    pub n_elements: usize,
    /// Maximum baseline, wavelengths.
    pub max_baseline: f64,
    pub n_samples: usize,
    pub sigma_n: f64,
    pub source_snr_db: f64,
    pub source_direction: (f64, f64),
    pub inr_db: f64,
    /// Drift-rate standard deviation, rad/sample. Zero gives a stationary
    /// interferer.
    pub alpha_std: f64,
    pub omega: f64,
    pub lag: usize,
    pub kappa: f64,
    pub gain_delta: f64,
    pub grid: SkyGrid,
    pub seeds: usize,
    pub base_seed: u64,
    /// Skip the image-domain residuals (covariance-domain only).
    pub compute_maps: bool,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            n_elements: 100,
            max_baseline: 15.0,
            n_samples: 1024,
            sigma_n: 1.0,
            source_snr_db: -5.0,
            source_direction: (-0.3, -0.1),
            inr_db: 10.0,
            alpha_std: 0.1,
            omega: 0.3,
            lag: 1,
            kappa: DEFAULT_KAPPA,
            gain_delta: 0.0,
            grid: SkyGrid::default(),
            seeds: 50,
            base_seed: 1,
            compute_maps: true,
        }
    }
}

/// Per-seed outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRecord {
    pub seed_index: usize,
    pub seed: u64,
    pub rank_removed: usize,
    pub xi0: Complex64,
    pub mse_uncorrected: f64,
    pub mse_projection: f64,
    pub mse_subtraction: f64,
    pub map_residual_projection: Option<f64>,
    pub map_residual_subtraction: Option<f64>,
}

impl ComparisonRecord {
    pub fn subtraction_wins_covariance(&self) -> bool {
        self.mse_subtraction < self.mse_projection
    }

    pub fn subtraction_wins_map(&self) -> Option<bool> {
        Some(self.map_residual_subtraction? < self.map_residual_projection?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSummary {
    /// Fraction of seeds where subtraction wins in both domains (covariance
    /// only when maps are skipped).
    pub win_fraction_subtraction: f64,
    pub win_fraction_covariance: f64,
    pub win_fraction_map: Option<f64>,
    pub median_mse_projection: f64,
    pub median_mse_subtraction: f64,
    pub median_map_residual_projection: Option<f64>,
    pub median_map_residual_subtraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub config: ComparisonConfig,
    pub records: Vec<ComparisonRecord>,
    pub summary: ComparisonSummary,
}

impl ComparisonReport {
    pub fn write_records_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        write_rows(
            out,
            &[
                "seed_index",
                "seed",
                "rank_removed",
                "xi0_re",
                "xi0_im",
                "mse_uncorrected",
                "mse_projection",
                "mse_subtraction",
                "map_residual_projection",
                "map_residual_subtraction",
            ],
            self.records.iter().map(|r| {
                vec![
                    r.seed_index.to_string(),
                    r.seed.to_string(),
                    r.rank_removed.to_string(),
                    fmt(r.xi0.re),
                    fmt(r.xi0.im),
                    fmt(r.mse_uncorrected),
                    fmt(r.mse_projection),
                    fmt(r.mse_subtraction),
                    opt(r.map_residual_projection),
                    opt(r.map_residual_subtraction),
                ]
            }),
        )
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let s = &self.summary;
        let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        write_rows(
            out,
            &[
                "seeds",
                "win_fraction",
                "win_fraction_covariance",
                "win_fraction_map",
                "median_mse_projection",
                "median_mse_subtraction",
                "median_map_residual_projection",
                "median_map_residual_subtraction",
                "projection_rank_rule",
                "lag",
            ],
            [vec![
                self.records.len().to_string(),
                fmt(s.win_fraction_subtraction),
                fmt(s.win_fraction_covariance),
                opt(s.win_fraction_map),
                fmt(s.median_mse_projection),
                fmt(s.median_mse_subtraction),
                opt(s.median_map_residual_projection),
                opt(s.median_map_residual_subtraction),
                format!("eigenvalue > {} x median", fmt(self.config.kappa)),
                self.config.lag.to_string(),
            ]],
        )
    }
}

struct SeedData {
    geometry: ArrayGeometry,
    reference: CMatrix,
    raw: CMatrix,
    lagged: CMatrix,
    projection: crate::mitigation::MitigationResult,
    subtraction: crate::mitigation::MitigationResult,
}

fn seed_for(cfg: &ComparisonConfig, index: usize) -> u64 {
    rng::derive_seed(cfg.base_seed, &[index as u64])
}

fn simulate_seed(cfg: &ComparisonConfig, index: usize) -> Result<SeedData> {
    let seed = seed_for(cfg, index);
    let m = cfg.n_elements;
    let geometry = ArrayGeometry::random_disk(
        m,
        cfg.max_baseline,
        &mut rng::stream(seed, &[tag::GEOMETRY]),
    )?;
    let sigma_r = cfg.sigma_n * db_to_linear(cfg.inr_db).sqrt();
    let rfi = RfiModel::drifting(
        m,
        sigma_r,
        cfg.omega,
        0.0,
        cfg.alpha_std,
        &mut rng::stream(seed, &[tag::RFI]),
    );
    let scenario = ScenarioConfig {
        geometry: geometry.clone(),
        rfi: Some(rfi),
        sources: vec![CosmicSource {
            sigma_c: cfg.sigma_n * db_to_linear(cfg.source_snr_db).sqrt(),
            direction: cfg.source_direction,
        }],
        sigma_n: cfg.sigma_n,
        n_samples: cfg.n_samples,
        gain_delta: cfg.gain_delta,
        seed,
    };
    let mut contaminated = synthesize(&scenario)?;
    let mut clean = synthesize(&scenario.without_rfi())?;
    if cfg.gain_delta > 0.0 {
        let gains = scenario.gain_vector();
        contaminated = apply_gain_errors(&contaminated, &gains)?;
        clean = apply_gain_errors(&clean, &gains)?;
    }
    let r0 = sample_covariance(&contaminated, 0)?;
    let r_lag = sample_covariance(&contaminated, cfg.lag)?;
    let reference = sample_covariance(&clean, 0)?.matrix;
    let projection = project_rfi(&r0, cfg.kappa)?.with_reference(&reference)?;
    let subtraction = subtract_rfi_optimal(&r0, &r_lag)?.with_reference(&reference)?;
    Ok(SeedData {
        geometry,
        reference,
        raw: r0.matrix,
        lagged: r_lag.matrix,
        projection,
        subtraction,
    })
}

/// Mean squared image residual between a corrected covariance and the
/// reference.
fn map_residual(
    corrected: &CMatrix,
    reference: &CMatrix,
    geometry: &ArrayGeometry,
    grid: &SkyGrid,
) -> Result<f64> {
    let a = dirty_map(corrected, geometry, grid)?;
    let b = dirty_map(reference, geometry, grid)?;
    Ok(residual_map(&a, &b)?.mean())
}

fn run_seed(cfg: &ComparisonConfig, index: usize) -> Result<ComparisonRecord> {
    let data = simulate_seed(cfg, index)?;
    let (map_p, map_s) = if cfg.compute_maps {
        (
            Some(map_residual(
                &data.projection.corrected,
                &data.reference,
                &data.geometry,
                &cfg.grid,
            )?),
            Some(map_residual(
                &data.subtraction.corrected,
                &data.reference,
                &data.geometry,
                &cfg.grid,
            )?),
        )
    } else {
        (None, None)
    };
    Ok(ComparisonRecord {
        seed_index: index,
        seed: seed_for(cfg, index),
        rank_removed: data.projection.rank_removed.unwrap_or(0),
        xi0: data.subtraction.xi0.unwrap_or_default(),
        mse_uncorrected: covariance_mse(&data.raw, &data.reference)?,
        mse_projection: data.projection.mse_vs_reference.unwrap_or(f64::NAN),
        mse_subtraction: data.subtraction.mse_vs_reference.unwrap_or(f64::NAN),
        map_residual_projection: map_p,
        map_residual_subtraction: map_s,
    })
}

fn fraction(flags: impl Iterator<Item = bool>) -> f64 {
    let (wins, total) = flags.fold((0usize, 0usize), |(w, t), f| (w + f as usize, t + 1));
    if total == 0 {
        f64::NAN
    } else {
        wins as f64 / total as f64
    }
}

/// Runs the comparison over `cfg.seeds` independent realizations. For each
/// seed the interference-free reference shares the noise and source draws of
/// the contaminated data.
pub fn run_mitigation_comparison(cfg: &ComparisonConfig) -> Result<ComparisonReport> {
    if cfg.seeds == 0 {
        return Err(Error::InvalidModel(
            "comparison needs at least one seed".into(),
        ));
    }
    let records: Vec<ComparisonRecord> = (0..cfg.seeds)
        .into_par_iter()
        .map(|i| run_seed(cfg, i))
        .collect::<Result<_>>()?;

    let collect = |f: fn(&ComparisonRecord) -> Option<f64>| -> Option<Vec<f64>> {
        records.iter().map(f).collect()
    };
    let map_p = collect(|r| r.map_residual_projection);
    let map_s = collect(|r| r.map_residual_subtraction);
    let summary =
        ComparisonSummary {
            win_fraction_subtraction: fraction(records.iter().map(|r| {
                r.subtraction_wins_covariance() && r.subtraction_wins_map().unwrap_or(true)
            })),
            win_fraction_covariance: fraction(
                records
                    .iter()
                    .map(ComparisonRecord::subtraction_wins_covariance),
            ),
            win_fraction_map: cfg.compute_maps.then(|| {
                fraction(
                    records
                        .iter()
                        .map(|r| r.subtraction_wins_map().unwrap_or(false)),
                )
            }),
            median_mse_projection: median(
                &records.iter().map(|r| r.mse_projection).collect::<Vec<_>>(),
            ),
            median_mse_subtraction: median(
                &records
                    .iter()
                    .map(|r| r.mse_subtraction)
                    .collect::<Vec<_>>(),
            ),
            median_map_residual_projection: map_p.map(|v| median(&v)),
            median_map_residual_subtraction: map_s.map(|v| median(&v)),
        };
    Ok(ComparisonReport {
        config: cfg.clone(),
        records,
        summary,
    })
}

/// Maps of one realization: raw data, lagged data (Hermitian part), the
/// interference-free reference and the squared residuals of both
/// corrections.
#[derive(Debug, Clone)]
pub struct ComparisonMaps {
    pub raw: SkyMap,
    pub lagged: SkyMap,
    pub reference: SkyMap,
    pub residual_subtraction: SkyMap,
    pub residual_projection: SkyMap,
}

pub fn comparison_maps(cfg: &ComparisonConfig, seed_index: usize) -> Result<ComparisonMaps> {
    let data = simulate_seed(cfg, seed_index)?;
    let map = |r: &CMatrix, what: &str| -> Result<SkyMap> {
        let mut m = dirty_map(r, &data.geometry, &cfg.grid)?;
        m.description = what.to_string();
        Ok(m)
    };
    let reference = map(&data.reference, "interference-free reference")?;
    let sub = map(&data.subtraction.corrected, "lag subtraction")?;
    let proj = map(&data.projection.corrected, "subspace projection")?;
    Ok(ComparisonMaps {
        raw: map(&data.raw, "raw data")?,
        lagged: map(
            &hermitian_part(&data.lagged),
            &format!("lag {} data", cfg.lag),
        )?,
        residual_subtraction: residual_map(&sub, &reference)?,
        residual_projection: residual_map(&proj, &reference)?,
        reference,
    })
}
