//! Array geometry, signal models and snapshot synthesis.
//!
//! All rates are expressed in radians per sample (the sampling period is
//! one sample). A snapshot column is
//!
//! ```text
//! x(n) = sigma_r e^{i(omega n + phi)} a_r(n) + sum_k c_k(n) a_ck + noise(n)
//! ```
//!
//! where `a_r(n)` drifts linearly in phase per element and `c_k`, `noise` are
//! circular complex Gaussian.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::rng::{self, tag, StreamRng};
use crate::{CMatrix, CVector, Error, Result};

/// Antenna positions in units of wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<[f64; 2]>,
}

impl ArrayGeometry {
    pub fn new(positions: Vec<[f64; 2]>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "array needs at least 2 elements, got {}",
                positions.len()
            )));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(
                "antenna positions must be finite".into(),
            ));
        }
        Ok(Self { positions })
    }

    /// Draws `m` antennas uniformly in a disk and rescales the layout about
    /// its centroid so that the largest pairwise distance is exactly
    /// `max_baseline` wavelengths.
    pub fn random_disk<R: Rng + ?Sized>(m: usize, max_baseline: f64, rng: &mut R) -> Result<Self> {
        if !(max_baseline > 0.0 && max_baseline.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "max baseline must be positive, got {max_baseline}"
            )));
        }
        let radius = max_baseline / 2.0;
        let mut positions: Vec<[f64; 2]> = (0..m)
            .map(|_| {
                let r = radius * rng.random::<f64>().sqrt();
                let theta = 2.0 * PI * rng.random::<f64>();
                [r * theta.cos(), r * theta.sin()]
            })
            .collect();
        let geometry = Self::new(positions.clone())?;
        let current = geometry.max_baseline();
        if current <= 0.0 {
            return Err(Error::InvalidModel("all antennas coincide".into()));
        }
        let scale = max_baseline / current;
        let (cx, cy) = geometry.centroid();
        for p in &mut positions {
            p[0] = cx + (p[0] - cx) * scale;
            p[1] = cy + (p[1] - cy) * scale;
        }
        Self::new(positions)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    fn centroid(&self) -> (f64, f64) {
        let m = self.len() as f64;
        let (sx, sy) = self
            .positions
            .iter()
            .fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
        (sx / m, sy / m)
    }

    /// Largest pairwise antenna separation in wavelengths.
    pub fn max_baseline(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, p) in self.positions.iter().enumerate() {
            for q in &self.positions[i + 1..] {
                best = best.max((p[0] - q[0]).hypot(p[1] - q[1]));
            }
        }
        best
    }
}

/// Continuous-wave interferer with a linearly drifting spatial signature.
#[derive(Debug, Clone, PartialEq)]
pub struct RfiModel {
    /// Amplitude; the interferer power is `sigma_r^2`.
    pub sigma_r: f64,
    /// Carrier offset, rad/sample.
    pub omega: f64,
    /// Carrier phase, rad.
    pub phi: f64,
    /// Per-element phase drift rates, rad/sample.
    pub alphas: Vec<f64>,
    /// Per-element initial phases, rad.
    pub phis: Vec<f64>,
}

impl RfiModel {
    /// Spatially stationary interferer (all drift rates zero).
    pub fn stationary(sigma_r: f64, omega: f64, phi: f64, phis: Vec<f64>) -> Self {
        Self {
            sigma_r,
            omega,
            phi,
            alphas: vec![0.0; phis.len()],
            phis,
        }
    }

    /// Interferer with drift rates drawn i.i.d. N(0, alpha_std^2) and initial
    /// phases uniform on [0, 2 pi).
    pub fn drifting<R: Rng + ?Sized>(
        m: usize,
        sigma_r: f64,
        omega: f64,
        phi: f64,
        alpha_std: f64,
        rng: &mut R,
    ) -> Self {
        let alphas = (0..m).map(|_| rng::normal(rng, alpha_std)).collect();
        let phis = (0..m).map(|_| 2.0 * PI * rng.random::<f64>()).collect();
        Self {
            sigma_r,
            omega,
            phi,
            alphas,
            phis,
        }
    }

    pub fn power(&self) -> f64 {
        self.sigma_r * self.sigma_r
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// True when every element drifts at the same rate, so the signature
    /// only picks up a global phase over time.
    pub fn is_stationary(&self) -> bool {
        match self.alphas.first() {
            None => true,
            Some(&a0) => self.alphas.iter().all(|&a| (a - a0).abs() < 1e-12),
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if !(self.sigma_r >= 0.0 && self.sigma_r.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "sigma_r must be finite and non-negative, got {}",
                self.sigma_r
            )));
        }
        if self.alphas.len() != m || self.phis.len() != m {
            return Err(Error::InvalidModel(format!(
                "rfi model has {} drift rates and {} phases for {} elements",
                self.alphas.len(),
                self.phis.len(),
                m
            )));
        }
        if !(self.omega.is_finite() && self.phi.is_finite())
            || self.alphas.iter().chain(&self.phis).any(|v| !v.is_finite())
        {
            return Err(Error::InvalidModel("rfi parameters must be finite".into()));
        }
        Ok(())
    }

    /// Waveform sample `sigma_r e^{i(omega n + phi)}`.
    pub fn waveform(&self, n: f64) -> Complex64 {
        Complex64::from_polar(self.sigma_r, self.omega * n + self.phi)
    }
}

/// Spatial signature of the interferer at sample `n`:
/// entry k is `e^{i(alpha_k n + phi_k)} / sqrt(M)`.
pub fn rfi_ssv(rfi: &RfiModel, n: f64, m: usize) -> Result<CVector> {
    if rfi.alphas.len() != m || rfi.phis.len() != m {
        return Err(Error::InvalidModel(format!(
            "rfi model has {} drift rates and {} phases for {} elements",
            rfi.alphas.len(),
            rfi.phis.len(),
            m
        )));
    }
    let norm = 1.0 / (m as f64).sqrt();
    Ok(DVector::from_iterator(
        m,
        rfi.alphas
            .iter()
            .zip(&rfi.phis)
            .map(|(&a, &p)| Complex64::from_polar(norm, a * n + p)),
    ))
}

/// Far-field narrowband signature towards direction cosines `(l, m)`,
/// normalized to unit length.
pub fn steering_vector(geometry: &ArrayGeometry, direction: (f64, f64)) -> Result<CVector> {
    let (l, m) = direction;
    if !(l.is_finite() && m.is_finite()) || l * l + m * m > 1.0 {
        return Err(Error::Domain(format!(
            "direction ({l}, {m}) lies outside the unit disk"
        )));
    }
    let norm = 1.0 / (geometry.len() as f64).sqrt();
    Ok(DVector::from_iterator(
        geometry.len(),
        geometry
            .positions()
            .iter()
            .map(|p| Complex64::from_polar(norm, 2.0 * PI * (p[0] * l + p[1] * m))),
    ))
}

/// Point-like cosmic source with a white Gaussian waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosmicSource {
    pub sigma_c: f64,
    /// Direction cosines (l, m).
    pub direction: (f64, f64),
}

impl CosmicSource {
    pub fn power(&self) -> f64 {
        self.sigma_c * self.sigma_c
    }
}

/// Complete generative description of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: ArrayGeometry,
    pub rfi: Option<RfiModel>,
    pub sources: Vec<CosmicSource>,
    pub sigma_n: f64,
    pub n_samples: usize,
    pub gain_delta: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn n_elements(&self) -> usize {
        self.geometry.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidModel(
                "sample count must be at least 1".into(),
            ));
        }
        if !(self.sigma_n > 0.0 && self.sigma_n.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "sigma_n must be positive, got {}",
                self.sigma_n
            )));
        }
        if !(0.0..1.0).contains(&self.gain_delta) {
            return Err(Error::InvalidModel(format!(
                "gain_delta must lie in [0, 1), got {}",
                self.gain_delta
            )));
        }
        if let Some(rfi) = &self.rfi {
            rfi.validate(self.n_elements())?;
        }
        for s in &self.sources {
            let (l, m) = s.direction;
            if !(s.sigma_c >= 0.0 && s.sigma_c.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "source amplitude must be non-negative, got {}",
                    s.sigma_c
                )));
            }
            if !(l.is_finite() && m.is_finite()) || l * l + m * m > 1.0 {
                return Err(Error::Domain(format!(
                    "source direction ({l}, {m}) lies outside the unit disk"
                )));
            }
        }
        Ok(())
    }

    /// Interference-to-noise ratio `sigma_r^2 / sigma_n^2` (linear).
    pub fn inr(&self) -> f64 {
        self.rfi
            .as_ref()
            .map_or(0.0, |r| r.power() / (self.sigma_n * self.sigma_n))
    }

    /// Per-source signal-to-noise ratios (linear).
    pub fn snrs(&self) -> Vec<f64> {
        self.sources
            .iter()
            .map(|s| s.power() / (self.sigma_n * self.sigma_n))
            .collect()
    }

    /// Same realization of noise and sources with the interferer removed.
    pub fn without_rfi(&self) -> Self {
        Self {
            rfi: None,
            ..self.clone()
        }
    }

    /// Gain vector for this scenario, drawn from its own stream so it does
    /// not perturb the noise realization.
    pub fn gain_vector(&self) -> Vec<f64> {
        let mut rng = rng::stream(self.seed, &[tag::GAINS]);
        draw_gain_vector(self.gain_delta, self.n_elements(), &mut rng)
    }
}

/// Array output, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix(CMatrix);

impl SnapshotMatrix {
    pub fn new(data: CMatrix) -> Self {
        Self(data)
    }

    pub fn n_elements(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.0.ncols()
    }

    pub fn data(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

/// Generates the snapshots described by `config` (without gain errors).
///
/// Noise and source draws come from the `(seed, NOISE)` stream and the
/// interferer is deterministic, so [`ScenarioConfig::without_rfi`] yields the
/// identical noise and source realization.
pub fn synthesize(config: &ScenarioConfig) -> Result<SnapshotMatrix> {
    config.validate()?;
    let m = config.n_elements();
    let n = config.n_samples;
    let mut rng: StreamRng = rng::stream(config.seed, &[tag::NOISE]);

    let signatures = config
        .sources
        .iter()
        .map(|s| steering_vector(&config.geometry, s.direction))
        .collect::<Result<Vec<_>>>()?;
    let noise_power = config.sigma_n * config.sigma_n;

    let mut data = CMatrix::zeros(m, n);
    for t in 0..n {
        let mut col = data.column_mut(t);
        if let Some(rfi) = &config.rfi {
            let w = rfi.waveform(t as f64);
            let norm = 1.0 / (m as f64).sqrt();
            for (k, (&a, &p)) in rfi.alphas.iter().zip(&rfi.phis).enumerate() {
                col[k] += w * Complex64::from_polar(norm, a * t as f64 + p);
            }
        }
        for (src, sig) in config.sources.iter().zip(&signatures) {
            let c = rng::complex_normal(&mut rng, src.power());
            col.axpy(c, sig, Complex64::new(1.0, 0.0));
        }
        for k in 0..m {
            col[k] += rng::complex_normal(&mut rng, noise_power);
        }
    }
    Ok(SnapshotMatrix(data))
}

/// Per-element gains drawn i.i.d. uniform on `[1 - delta, 1 + delta]`.
pub fn draw_gain_vector<R: Rng + ?Sized>(delta: f64, m: usize, rng: &mut R) -> Vec<f64> {
    (0..m)
        .map(|_| {
            let u: f64 = rng.random();
            1.0 + delta * (2.0 * u - 1.0)
        })
        .collect()
}

/// Applies per-element gains: row k of the snapshots is scaled by `u[k]`.
pub fn apply_gain_errors(snapshots: &SnapshotMatrix, gains: &[f64]) -> Result<SnapshotMatrix> {
    let m = snapshots.n_elements();
    if gains.len() != m {
        return Err(Error::DimensionMismatch {
            context: "gain vector",
            expected: m,
            got: gains.len(),
        });
    }
    let mut data = snapshots.0.clone();
    for (k, &g) in gains.iter().enumerate() {
        data.row_mut(k).scale_mut(g);
    }
    Ok(SnapshotMatrix(data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn geometry(m: usize) -> ArrayGeometry {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        ArrayGeometry::random_disk(m, 15.0, &mut rng).unwrap()
    }

    fn noise_only(m: usize, n: usize, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            geometry: geometry(m),
            rfi: None,
            sources: vec![],
            sigma_n: 1.0,
            n_samples: n,
            gain_delta: 0.0,
            seed,
        }
    }

    #[test]
    fn zero_phase_stationary_ssv() {
        let rfi = RfiModel::stationary(1.0, 0.0, 0.0, vec![0.0; 4]);
        for n in [0.0, 5.0, 1e6] {
            let a = rfi_ssv(&rfi, n, 4).unwrap();
            for z in a.iter() {
                assert!((z - Complex64::new(0.5, 0.0)).norm() < 1e-15);
            }
            assert!((a.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_element_ssv_phase() {
        let rfi = RfiModel {
            sigma_r: 1.0,
            omega: 0.0,
            phi: 0.0,
            alphas: vec![0.1],
            phis: vec![0.2],
        };
        let a = rfi_ssv(&rfi, 3.0, 1).unwrap();
        assert!((a[0] - Complex64::from_polar(1.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn ssv_dimension_mismatch() {
        let rfi = RfiModel::stationary(1.0, 0.0, 0.0, vec![0.0; 3]);
        assert!(matches!(rfi_ssv(&rfi, 0.0, 4), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn steering_zenith_and_half_wave_pair() {
        let g = ArrayGeometry::new(vec![[0.0, 0.0], [0.5, 0.0]]).unwrap();
        let v = steering_vector(&g, (0.0, 0.0)).unwrap();
        assert!(v
            .iter()
            .all(|z| (z - Complex64::new(0.5f64.sqrt(), 0.0)).norm() < 1e-15));
        let v = steering_vector(&g, (1.0, 0.0)).unwrap();
        assert!(v[0].arg().abs() < 1e-15);
        assert!((v[1].arg().abs() - PI).abs() < 1e-12);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn steering_outside_unit_disk() {
        let g = geometry(4);
        assert!(matches!(
            steering_vector(&g, (0.8, 0.8)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn random_disk_hits_max_baseline() {
        for seed in 0..10 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = ArrayGeometry::random_disk(100, 15.0, &mut rng).unwrap();
            assert_eq!(g.len(), 100);
            assert!((g.max_baseline() - 15.0).abs() < 1e-9);
        }
    }

    #[test]
    fn geometry_needs_two_finite_elements() {
        assert!(ArrayGeometry::new(vec![[0.0, 0.0]]).is_err());
        assert!(ArrayGeometry::new(vec![[0.0, 0.0], [f64::NAN, 1.0]]).is_err());
    }

    #[test]
    fn stationary_rfi_columns_are_collinear_with_signature() {
        let mut cfg = noise_only(6, 50, 1);
        cfg.sigma_n = 1e-9;
        let rfi = RfiModel::stationary(2.0, 0.3, 0.1, vec![0.0, 0.4, 1.0, 2.0, 3.0, 5.0]);
        let a = rfi_ssv(&rfi, 0.0, 6).unwrap();
        cfg.rfi = Some(rfi);
        let x = synthesize(&cfg).unwrap();
        for col in x.data().column_iter() {
            let gamma = a.dotc(&col).norm() / col.norm();
            assert!((gamma - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_power_and_circularity() {
        let n = 100_000;
        let x = synthesize(&noise_only(4, n, 11)).unwrap();
        let sqrt_n = (n as f64).sqrt();
        for row in x.data().row_iter() {
            let power = row.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
            // std of the power estimate is sigma_n^2 / sqrt(N)
            assert!((power - 1.0).abs() < 4.0 / sqrt_n, "power {power}");
            let pseudo: Complex64 = row.iter().map(|z| z * z).sum::<Complex64>() / n as f64;
            assert!(pseudo.norm() <= 4.0 / sqrt_n, "pseudo {pseudo}");
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let mut cfg = noise_only(5, 64, 99);
        cfg.sources.push(CosmicSource {
            sigma_c: 0.5,
            direction: (0.1, -0.2),
        });
        assert_eq!(synthesize(&cfg).unwrap(), synthesize(&cfg).unwrap());
        let other = ScenarioConfig {
            seed: 100,
            ..cfg.clone()
        };
        assert_ne!(synthesize(&cfg).unwrap(), synthesize(&other).unwrap());
    }

    #[test]
    fn removing_rfi_keeps_noise_realization() {
        let mut cfg = noise_only(4, 32, 5);
        cfg.rfi = Some(RfiModel::stationary(
            3.0,
            0.2,
            0.0,
            vec![0.0, 1.0, 2.0, 3.0],
        ));
        let with = synthesize(&cfg).unwrap();
        let without = synthesize(&cfg.without_rfi()).unwrap();
        let a = rfi_ssv(cfg.rfi.as_ref().unwrap(), 0.0, 4).unwrap();
        for t in 0..32 {
            let w = cfg.rfi.as_ref().unwrap().waveform(t as f64);
            let diff = with.data().column(t) - without.data().column(t) - &a * w;
            assert!(diff.norm() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = noise_only(4, 8, 0);
        cfg.sigma_n = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = noise_only(4, 8, 0);
        cfg.n_samples = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = noise_only(4, 8, 0);
        cfg.gain_delta = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = noise_only(4, 8, 0);
        cfg.rfi = Some(RfiModel::stationary(1.0, 0.0, 0.0, vec![0.0; 3]));
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn inr_and_snr_are_power_ratios() {
        let mut cfg = noise_only(4, 8, 0);
        cfg.sigma_n = 2.0;
        cfg.rfi = Some(RfiModel::stationary(4.0, 0.0, 0.0, vec![0.0; 4]));
        cfg.sources.push(CosmicSource {
            sigma_c: 1.0,
            direction: (0.0, 0.0),
        });
        assert!((cfg.inr() - 4.0).abs() < 1e-15);
        assert!((cfg.snrs()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn gain_vectors() {
        let mut rng = rng::stream(4, &[]);
        assert!(draw_gain_vector(0.0, 16, &mut rng)
            .iter()
            .all(|&u| u == 1.0));
        let u = draw_gain_vector(0.1, 10_000, &mut rng);
        assert!(u.iter().all(|&g| (0.9..=1.1).contains(&g)));
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        assert!((mean - 1.0).abs() < 4.0 * 0.1 / (u.len() as f64).sqrt());
    }

    #[test]
    fn gain_application() {
        let x = synthesize(&noise_only(4, 200, 8)).unwrap();
        assert_eq!(apply_gain_errors(&x, &[1.0; 4]).unwrap(), x);
        let y = apply_gain_errors(&x, &[2.0, 1.0, 1.0, 0.5]).unwrap();
        for t in 0..200 {
            assert_eq!(y.data()[(0, t)], x.data()[(0, t)] * 2.0);
            assert_eq!(y.data()[(1, t)], x.data()[(1, t)]);
        }
        let p = |s: &SnapshotMatrix, k: usize| {
            s.data().row(k).iter().map(|z| z.norm_sqr()).sum::<f64>()
        };
        assert!((p(&y, 3) - 0.25 * p(&x, 3)).abs() < 1e-12 * p(&x, 3));
        assert!(apply_gain_errors(&x, &[1.0; 3]).is_err());
    }
}
