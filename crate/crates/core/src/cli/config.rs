//! JSON configuration schema.
//!
//! Amplitudes and `sigma_n` are linear; interferer and source strengths are
//! given in dB relative to the noise power and converted with
//! `sigma^2 = sigma_n^2 * 10^(dB / 10)`. Rates are rad/sample, positions
//! and baselines are in wavelengths, directions are direction cosines.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::harness::{ComparisonConfig, GammaStudyConfig, SmearingStudyConfig};
use crate::imaging::SkyGrid;
use crate::rng::{self, tag};
use crate::scenario::{ArrayGeometry, CosmicSource, RfiModel, ScenarioConfig};
use crate::subspace::DEFAULT_KAPPA;
use crate::{db_to_linear, Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Number of antennas, placed at random in a disk. Ignored when
    /// `positions` is given.
    #[serde(default)]
    pub elements: Option<usize>,
    /// Explicit antenna positions `[x, y]` in wavelengths.
    #[serde(default)]
    pub positions: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_max_baseline")]
    pub max_baseline: f64,
    pub sigma_n: f64,
    pub samples: usize,
    #[serde(default)]
    pub gain_delta: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub rfi: Option<RfiSection>,
    #[serde(default)]
    pub sources: Vec<SourceSection>,
    #[serde(default)]
    pub gamma_study: GammaSection,
    #[serde(default)]
    pub smear_study: SmearSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub imaging: ImagingSection,
}

fn default_max_baseline() -> f64 {
    15.0
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfiSection {
    pub inr_db: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub phi: f64,
    /// Standard deviation of drawn drift rates (rad/sample); 0 = stationary.
    #[serde(default)]
    pub alpha_std: f64,
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    #[serde(default)]
    pub phis: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub snr_db: f64,
    pub direction: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GammaSection {
    pub inr_db: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub deltas: Vec<f64>,
    pub lags: Vec<usize>,
    pub trials: usize,
}

impl Default for GammaSection {
    fn default() -> Self {
        let d = GammaStudyConfig::default();
        Self {
            inr_db: d.inr_db,
            n_grid: d.n_grid,
            deltas: d.deltas,
            lags: d.lags,
            trials: d.trials,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmearSection {
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub empirical_max_n: usize,
}

impl Default for SmearSection {
    fn default() -> Self {
        let d = SmearingStudyConfig::default();
        Self {
            n_grid: d.n_grid,
            trials: d.trials,
            empirical_max_n: d.empirical_max_n,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub seeds: usize,
    pub lag: usize,
    pub kappa: f64,
    pub maps: bool,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            seeds: 50,
            lag: 1,
            kappa: DEFAULT_KAPPA,
            maps: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImagingSection {
    pub grid_size: usize,
    /// Half width of the square grid in direction cosines.
    pub extent: f64,
}

impl Default for ImagingSection {
    fn default() -> Self {
        Self {
            grid_size: 129,
            extent: 0.5,
        }
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parses a configuration document. Errors carry the line, column and field
/// reported by the parser.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let cfg: ConfigFile = serde_json::from_str(text).map_err(|e| config_error(e.to_string()))?;
    cfg.check()?;
    Ok(cfg)
}

impl ConfigFile {
    fn check(&self) -> Result<()> {
        if !(self.sigma_n > 0.0 && self.sigma_n.is_finite()) {
            return Err(config_error(format!(
                "field `sigma_n` must be positive, got {}",
                self.sigma_n
            )));
        }
        if self.samples == 0 {
            return Err(config_error("field `samples` must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.gain_delta) {
            return Err(config_error(format!(
                "field `gain_delta` must lie in [0, 1), got {}",
                self.gain_delta
            )));
        }
        let m = self.n_elements()?;
        if m < 2 {
            return Err(config_error(
                "the array needs at least 2 elements (`elements` or `positions`)",
            ));
        }
        if let Some(rfi) = &self.rfi {
            for (name, v) in [("rfi.alphas", &rfi.alphas), ("rfi.phis", &rfi.phis)] {
                if let Some(v) = v {
                    if v.len() != m {
                        return Err(config_error(format!(
                            "field `{name}` has {} entries for {m} elements",
                            v.len()
                        )));
                    }
                }
            }
            if rfi.alpha_std.is_nan() || rfi.alpha_std < 0.0 {
                return Err(config_error("field `rfi.alpha_std` must be non-negative"));
            }
        }
        for (i, s) in self.sources.iter().enumerate() {
            let [l, mm] = s.direction;
            if l * l + mm * mm > 1.0 {
                return Err(config_error(format!(
                    "field `sources[{i}].direction` lies outside the unit disk"
                )));
            }
        }
        if self.imaging.grid_size == 0 || !(self.imaging.extent > 0.0 && self.imaging.extent <= 1.0)
        {
            return Err(config_error(
                "field `imaging` needs grid_size >= 1 and 0 < extent <= 1",
            ));
        }
        if self.gamma_study.trials < 2 {
            return Err(config_error(
                "field `gamma_study.trials` must be at least 2",
            ));
        }
        Ok(())
    }

    pub fn n_elements(&self) -> Result<usize> {
        match (&self.positions, self.elements) {
            (Some(p), _) => Ok(p.len()),
            (None, Some(m)) => Ok(m),
            (None, None) => Err(config_error("missing field `elements` (or `positions`)")),
        }
    }

    pub fn geometry(&self, seed: u64) -> Result<ArrayGeometry> {
        match &self.positions {
            Some(p) => ArrayGeometry::new(p.clone())
                .map_err(|e| config_error(format!("field `positions`: {e}"))),
            None => ArrayGeometry::random_disk(
                self.n_elements()?,
                self.max_baseline,
                &mut rng::stream(seed, &[tag::GEOMETRY]),
            )
            .map_err(|e| config_error(format!("field `max_baseline`: {e}"))),
        }
    }

    pub fn sigma_r(&self) -> f64 {
        self.rfi
            .as_ref()
            .map_or(0.0, |r| self.sigma_n * db_to_linear(r.inr_db).sqrt())
    }

    pub fn rfi_model(&self, seed: u64) -> Result<Option<RfiModel>> {
        let Some(section) = &self.rfi else {
            return Ok(None);
        };
        let m = self.n_elements()?;
        let mut g = rng::stream(seed, &[tag::RFI]);
        let alphas = match &section.alphas {
            Some(a) => a.clone(),
            None => (0..m)
                .map(|_| rng::normal(&mut g, section.alpha_std))
                .collect(),
        };
        let phis = match &section.phis {
            Some(p) => p.clone(),
            None => (0..m).map(|_| 2.0 * PI * g.random::<f64>()).collect(),
        };
        Ok(Some(RfiModel {
            sigma_r: self.sigma_r(),
            omega: section.omega,
            phi: section.phi,
            alphas,
            phis,
        }))
    }

    pub fn scenario(&self, seed: u64) -> Result<ScenarioConfig> {
        let scenario = ScenarioConfig {
            geometry: self.geometry(seed)?,
            rfi: self.rfi_model(seed)?,
            sources: self
                .sources
                .iter()
                .map(|s| CosmicSource {
                    sigma_c: self.sigma_n * db_to_linear(s.snr_db).sqrt(),
                    direction: (s.direction[0], s.direction[1]),
                })
                .collect(),
            sigma_n: self.sigma_n,
            n_samples: self.samples,
            gain_delta: self.gain_delta,
            seed,
        };
        scenario
            .validate()
            .map_err(|e| config_error(e.to_string()))?;
        Ok(scenario)
    }

    pub fn grid(&self) -> Result<SkyGrid> {
        let e = self.imaging.extent;
        SkyGrid::square(self.imaging.grid_size, -e, e)
            .map_err(|err| config_error(format!("field `imaging`: {err}")))
    }

    pub fn gamma_study(&self, seed: u64) -> Result<GammaStudyConfig> {
        let s = &self.gamma_study;
        Ok(GammaStudyConfig {
            n_elements: self.n_elements()?,
            inr_db: s.inr_db.clone(),
            n_grid: s.n_grid.clone(),
            deltas: s.deltas.clone(),
            lags: s.lags.clone(),
            trials: s.trials,
            sigma_n: self.sigma_n,
            omega: self.rfi.as_ref().map_or(0.0, |r| r.omega),
            base_seed: seed,
        })
    }

    pub fn smear_study(&self, seed: u64) -> Result<SmearingStudyConfig> {
        let rfi = self
            .rfi
            .as_ref()
            .ok_or_else(|| config_error("smear-study needs an `rfi` section"))?;
        Ok(SmearingStudyConfig {
            n_elements: self.n_elements()?,
            alpha_std: rfi.alpha_std,
            n_grid: self.smear_study.n_grid.clone(),
            sigma_r: self.sigma_r(),
            omega: rfi.omega,
            trials: self.smear_study.trials,
            base_seed: seed,
            empirical_max_n: self.smear_study.empirical_max_n,
        })
    }

    pub fn comparison(&self, seed: u64) -> Result<ComparisonConfig> {
        let rfi = self
            .rfi
            .as_ref()
            .ok_or_else(|| config_error("compare needs an `rfi` section"))?;
        let source = self
            .sources
            .first()
            .ok_or_else(|| config_error("compare needs at least one entry in `sources`"))?;
        if self.positions.is_some() {
            return Err(config_error(
                "compare draws a random array per seed; use `elements`, not `positions`",
            ));
        }
        Ok(ComparisonConfig {
            n_elements: self.n_elements()?,
            max_baseline: self.max_baseline,
            n_samples: self.samples,
            sigma_n: self.sigma_n,
            source_snr_db: source.snr_db,
            source_direction: (source.direction[0], source.direction[1]),
            inr_db: rfi.inr_db,
            alpha_std: rfi.alpha_std,
            omega: rfi.omega,
            lag: self.compare.lag,
            kappa: self.compare.kappa,
            gain_delta: self.gain_delta,
            grid: self.grid()?,
            seeds: self.compare.seeds,
            base_seed: seed,
            compute_maps: self.compare.maps,
        })
    }
}

/// Bundled presets.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "fig1" | "fig1.json" => Some(include_str!("../../presets/fig1.json")),
        "fig2" | "fig2.json" => Some(include_str!("../../presets/fig2.json")),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"elements": 4, "sigma_n": 1.0, "samples": 64}"#;

    #[test]
    fn minimal_config() {
        let cfg = parse_config(MINIMAL).unwrap();
        let s = cfg.scenario(cfg.seed).unwrap();
        assert_eq!(s.n_elements(), 4);
        assert!((s.geometry.max_baseline() - 15.0).abs() < 1e-9);
        assert!(s.rfi.is_none());
    }

    #[test]
    fn missing_sigma_n_is_named() {
        let err = parse_config(r#"{"elements": 4, "samples": 64}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("sigma_n"), "{err}");
    }

    #[test]
    fn unknown_field_has_location() {
        let err =
            parse_config("{\n\"elements\": 4, \"sigma_n\": 1.0, \"samples\": 64,\n \"sigam\": 2}")
                .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sigam") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn db_fields_are_converted() {
        let cfg = parse_config(
            r#"{"elements": 3, "sigma_n": 2.0, "samples": 8,
                "rfi": {"inr_db": 10, "alpha_std": 0.1},
                "sources": [{"snr_db": -10, "direction": [0.1, 0.2]}]}"#,
        )
        .unwrap();
        let s = cfg.scenario(1).unwrap();
        assert!((s.inr() - 10.0).abs() < 1e-12);
        assert!((s.snrs()[0] - 0.1).abs() < 1e-12);
        assert!(!s.rfi.unwrap().is_stationary());
    }

    #[test]
    fn bad_values_are_config_errors() {
        for text in [
            r#"{"elements": 4, "sigma_n": -1.0, "samples": 64}"#,
            r#"{"elements": 4, "sigma_n": 1.0, "samples": 0}"#,
            r#"{"elements": 1, "sigma_n": 1.0, "samples": 8}"#,
            r#"{"sigma_n": 1.0, "samples": 8}"#,
            r#"{"elements": 2, "sigma_n": 1.0, "samples": 8, "gain_delta": 1.5}"#,
            r#"{"elements": 2, "sigma_n": 1.0, "samples": 8, "rfi": {"inr_db": 0, "alphas": [0.1]}}"#,
            r#"{"elements": 2, "sigma_n": 1.0, "samples": 8, "sources": [{"snr_db": 0, "direction": [1, 1]}]}"#,
        ] {
            assert!(
                matches!(parse_config(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn presets_parse() {
        for name in ["fig1", "fig2"] {
            let cfg = parse_config(preset(name).unwrap()).unwrap();
            cfg.scenario(cfg.seed).unwrap();
        }
        let fig2 = parse_config(preset("fig2").unwrap()).unwrap();
        let cmp = fig2.comparison(fig2.seed).unwrap();
        assert_eq!((cmp.n_elements, cmp.n_samples), (100, 1024));
        assert_eq!(cmp.source_direction, (-0.3, -0.1));
        assert_eq!(
            (cmp.inr_db, cmp.source_snr_db, cmp.alpha_std),
            (10.0, -5.0, 0.1)
        );
    }
}
