//! Command-line front end: configuration ingestion, experiment dispatch and
//! artifact export.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numeric
//! failure.

pub mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::covariance::{sample_covariance, LaggedScm};
use crate::harness::{
    comparison_maps, run_gamma_study, run_mitigation_comparison, run_smearing_study,
};
use crate::imaging::{dirty_map, SkyMap};
use crate::mitigation::{project_rfi, subtract_rfi_optimal};
use crate::scenario::{apply_gain_errors, synthesize, SnapshotMatrix};
use crate::{Error, Result};

pub use config::{parse_config, preset, ConfigFile};

/// Environment variable overriding the configured base seed.
pub const SEED_ENV: &str = "RFI_FORGE_SEED";

pub const TOOL_NAME: &str = "rfi-forge";

/// Where the configuration comes from.
#[derive(Debug, Clone)]
pub enum ConfigSource {
    Path(PathBuf),
    Preset(String),
}

/// Overrides shared by every subcommand. Unset fields keep the configured
/// value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tau: Option<usize>,
    pub delta: Option<f64>,
    /// Value of [`SEED_ENV`], if set.
    pub env_seed: Option<String>,
    pub write_snapshots: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Record of one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub base_seed: u64,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub outputs: Vec<OutputEntry>,
    pub timings_ms: BTreeMap<String, f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Run {
    out_dir: PathBuf,
    manifest: RunManifest,
    started: Instant,
}

impl Run {
    fn new(command: &str, out_dir: &Path, config_bytes: &[u8], seed: u64) -> Result<Self> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            manifest: RunManifest {
                tool: TOOL_NAME.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                config_sha256: sha256_hex(config_bytes),
                base_seed: seed,
                parameters: BTreeMap::new(),
                outputs: Vec::new(),
                timings_ms: BTreeMap::new(),
            },
            started: Instant::now(),
        })
    }

    fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.manifest.parameters.insert(key.into(), v);
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f()?;
        self.manifest
            .timings_ms
            .insert(stage.into(), t0.elapsed().as_secs_f64() * 1e3);
        Ok(out)
    }

    fn emit(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<()> {
        let mut bytes = Vec::new();
        let path = self.out_dir.join(name);
        write(&mut bytes).map_err(|e| Error::io(&path, e))?;
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        self.manifest.outputs.push(OutputEntry {
            path: name.into(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    fn emit_map(&mut self, stem: &str, map: &SkyMap) -> Result<()> {
        self.emit(&format!("{stem}.csv"), |w| map.write_csv(w))?;
        let mut scaling = None;
        self.emit(&format!("{stem}.pgm"), |w| {
            scaling = Some(map.write_pgm(w)?);
            Ok(())
        })?;
        self.emit(&format!("{stem}.pgm.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &scaling)?;
            w.push(b'\n');
            Ok(())
        })
    }

    fn finish(mut self) -> Result<RunManifest> {
        self.manifest
            .timings_ms
            .insert("total".into(), self.started.elapsed().as_secs_f64() * 1e3);
        let path = self.out_dir.join("manifest.json");
        let mut text =
            serde_json::to_vec_pretty(&self.manifest).map_err(|e| Error::io(&path, e.into()))?;
        text.push(b'\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(self.manifest)
    }
}

/// Loads the raw configuration bytes and the parsed document.
pub fn load_config(source: &ConfigSource) -> Result<(Vec<u8>, ConfigFile)> {
    let bytes = match source {
        ConfigSource::Path(p) => fs::read(p).map_err(|e| Error::io(p, e))?,
        ConfigSource::Preset(name) => preset(name)
            .ok_or_else(|| {
                Error::Config(format!("unknown preset `{name}` (available: fig1, fig2)"))
            })?
            .as_bytes()
            .to_vec(),
    };
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::Config(format!("config is not UTF-8: {e}")))?;
    let cfg = parse_config(text)?;
    Ok((bytes, cfg))
}

/// Base seed with precedence config < environment < flag.
pub fn resolve_seed(cfg: &ConfigFile, overrides: &Overrides) -> Result<u64> {
    if let Some(seed) = overrides.seed {
        return Ok(seed);
    }
    if let Some(text) = &overrides.env_seed {
        return text.trim().parse().map_err(|_| {
            Error::Config(format!(
                "{SEED_ENV}=`{text}` is not an unsigned 64-bit integer"
            ))
        });
    }
    Ok(cfg.seed)
}

fn apply_overrides(cfg: &mut ConfigFile, overrides: &Overrides) -> Result<()> {
    if let Some(delta) = overrides.delta {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::Config(format!(
                "--delta must lie in [0, 1), got {delta}"
            )));
        }
        cfg.gain_delta = delta;
        cfg.gamma_study.deltas = vec![delta];
    }
    if let Some(tau) = overrides.tau {
        cfg.gamma_study.lags = vec![tau];
        cfg.compare.lag = tau;
    }
    if let Some(trials) = overrides.trials {
        cfg.gamma_study.trials = trials;
        cfg.smear_study.trials = trials;
        cfg.compare.seeds = trials;
    }
    Ok(())
}

fn scm_csv(scm: &LaggedScm, out: &mut Vec<u8>) -> std::io::Result<()> {
    let m = scm.dim();
    let rows = (0..m).flat_map(|k| {
        (0..m).map(move |l| {
            let z = scm.matrix[(k, l)];
            vec![
                k.to_string(),
                l.to_string(),
                z.re.to_string(),
                z.im.to_string(),
            ]
        })
    });
    crate::harness::write_rows(out, &["row", "col", "re", "im"], rows)
}

fn snapshots_csv(x: &SnapshotMatrix, out: &mut Vec<u8>) -> std::io::Result<()> {
    let rows = (0..x.n_samples()).flat_map(|n| {
        (0..x.n_elements()).map(move |k| {
            let z = x.data()[(k, n)];
            vec![
                n.to_string(),
                k.to_string(),
                z.re.to_string(),
                z.im.to_string(),
            ]
        })
    });
    crate::harness::write_rows(out, &["sample", "element", "re", "im"], rows)
}

fn prepare(
    command: &str,
    source: &ConfigSource,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<(ConfigFile, Run, u64)> {
    let (bytes, mut cfg) = load_config(source)?;
    apply_overrides(&mut cfg, overrides)?;
    let seed = resolve_seed(&cfg, overrides)?;
    let run = Run::new(command, out_dir, &bytes, seed)?;
    Ok((cfg, run, seed))
}

/// Synthesizes one scenario and writes its lag-0 and lag-tau SCMs.
pub fn cmd_simulate(
    source: &ConfigSource,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<RunManifest> {
    let (cfg, mut run, seed) = prepare("simulate", source, out_dir, overrides)?;
    let tau = overrides.tau.unwrap_or(1);
    let scenario = cfg.scenario(seed)?;
    run.param("elements", scenario.n_elements());
    run.param("samples", scenario.n_samples);
    run.param("gain_delta", scenario.gain_delta);
    run.param("inr", scenario.inr());
    run.param("tau", tau);

    let mut x = run.time("synthesize", || synthesize(&scenario))?;
    if scenario.gain_delta > 0.0 {
        let gains = scenario.gain_vector();
        let bytes: Vec<u8> = gains.iter().flat_map(|g| g.to_le_bytes()).collect();
        run.param("gain_vector_sha256", sha256_hex(&bytes));
        run.param("gain_vector", &gains);
        x = apply_gain_errors(&x, &gains)?;
    }
    let r0 = sample_covariance(&x, 0)?;
    let r_tau = sample_covariance(&x, tau).map_err(|e| Error::Config(format!("--tau: {e}")))?;
    if overrides.write_snapshots {
        run.emit("snapshots.csv", |w| snapshots_csv(&x, w))?;
    }
    run.emit("scm_tau0.csv", |w| scm_csv(&r0, w))?;
    if tau != 0 {
        run.emit(&format!("scm_tau{tau}.csv"), |w| scm_csv(&r_tau, w))?;
    }
    run.finish()
}

pub fn cmd_gamma_study(
    source: &ConfigSource,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<RunManifest> {
    let (cfg, mut run, seed) = prepare("gamma-study", source, out_dir, overrides)?;
    let study = cfg.gamma_study(seed)?;
    run.param("elements", study.n_elements);
    run.param("trials", study.trials);
    run.param("inr_db", &study.inr_db);
    run.param("n_grid", &study.n_grid);
    run.param("deltas", &study.deltas);
    run.param("lags", &study.lags);
    run.param(
        "estimator",
        "lag 0: dominant Hermitian eigenvector; lag > 0: dominant left singular vector",
    );
    let table = run.time("study", || run_gamma_study(&study))?;
    run.emit("gamma_study.csv", |w| table.write_csv(w))?;
    run.finish()
}

pub fn cmd_smear_study(
    source: &ConfigSource,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<RunManifest> {
    let (cfg, mut run, seed) = prepare("smear-study", source, out_dir, overrides)?;
    let study = cfg.smear_study(seed)?;
    run.param("elements", study.n_elements);
    run.param("alpha_std", study.alpha_std);
    run.param("trials", study.trials);
    run.param("n_grid", &study.n_grid);
    let table = run.time("study", || run_smearing_study(&study))?;
    run.emit("smearing.csv", |w| table.write_csv(w))?;
    run.finish()
}

pub fn cmd_compare(
    source: &ConfigSource,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<RunManifest> {
    let (cfg, mut run, seed) = prepare("compare", source, out_dir, overrides)?;
    let cmp = cfg.comparison(seed)?;
    run.param("elements", cmp.n_elements);
    run.param("samples", cmp.n_samples);
    run.param("seeds", cmp.seeds);
    run.param("lag", cmp.lag);
    run.param("kappa", cmp.kappa);
    run.param(
        "projection_rank_rule",
        "count of eigenvalues > kappa * median eigenvalue",
    );
    let report = run.time("comparison", || run_mitigation_comparison(&cmp))?;
    run.param("win_fraction", report.summary.win_fraction_subtraction);
    run.emit("comparison_records.csv", |w| report.write_records_csv(w))?;
    run.emit("comparison_summary.csv", |w| report.write_summary_csv(w))?;
    if cmp.compute_maps {
        let maps = run.time("maps", || comparison_maps(&cmp, 0))?;
        run.emit_map("map_raw", &maps.raw)?;
        run.emit_map("map_lagged", &maps.lagged)?;
        run.emit_map("map_reference", &maps.reference)?;
        run.emit_map("map_residual_subtraction", &maps.residual_subtraction)?;
        run.emit_map("map_residual_projection", &maps.residual_projection)?;
    }
    run.finish()
}

/// Images one synthesized scenario: raw, lagged and both corrections.
pub fn cmd_image(
    source: &ConfigSource,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<RunManifest> {
    let (cfg, mut run, seed) = prepare("image", source, out_dir, overrides)?;
    let scenario = cfg.scenario(seed)?;
    let grid = cfg.grid()?;
    let tau = overrides.tau.unwrap_or(cfg.compare.lag).max(1);
    let mut x = synthesize(&scenario)?;
    if scenario.gain_delta > 0.0 {
        x = apply_gain_errors(&x, &scenario.gain_vector())?;
    }
    let r0 = sample_covariance(&x, 0)?;
    let r_tau = sample_covariance(&x, tau)?;
    let projected = project_rfi(&r0, cfg.compare.kappa)?;
    run.param("rank_removed", projected.rank_removed);
    let maps: Vec<(&str, crate::CMatrix)> = vec![
        ("map_raw", r0.matrix.clone()),
        (
            "map_lagged",
            crate::covariance::hermitian_part(&r_tau.matrix),
        ),
        (
            "map_subtraction",
            subtract_rfi_optimal(&r0, &r_tau)?.corrected,
        ),
        ("map_projection", projected.corrected),
    ];
    for (stem, r) in maps {
        let mut map = run.time(stem, || dirty_map(&r, &scenario.geometry, &grid))?;
        map.description = stem.trim_start_matches("map_").into();
        run.emit_map(stem, &map)?;
    }
    run.finish()
}
