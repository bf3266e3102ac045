//! Beamformed dirty maps over a direction-cosine grid.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::hermitian_defect;
use crate::scenario::ArrayGeometry;
use crate::{CMatrix, Error, Result};

/// Hermitian tolerance accepted by [`dirty_map`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

/// Uniform grid of direction cosines. Points with `l^2 + m^2 > 1` are masked.
#[derive(Debug, Clone, PartialEq)]
pub struct SkyGrid {
    l_axis: Vec<f64>,
    m_axis: Vec<f64>,
}

impl SkyGrid {
    pub fn new(l_axis: Vec<f64>, m_axis: Vec<f64>) -> Result<Self> {
        for axis in [&l_axis, &m_axis] {
            if axis.is_empty() {
                return Err(Error::Domain("sky grid axes must be non-empty".into()));
            }
            if axis.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                return Err(Error::Domain(
                    "sky grid axes must lie within [-1, 1]".into(),
                ));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Domain(
                    "sky grid axes must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { l_axis, m_axis })
    }

    /// `n x n` grid spanning `[lo, hi]` on both axes.
    pub fn square(n: usize, lo: f64, hi: f64) -> Result<Self> {
        let axis: Vec<f64> = match n {
            0 => vec![],
            1 => vec![0.5 * (lo + hi)],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        Self::new(axis.clone(), axis)
    }

    pub fn l_axis(&self) -> &[f64] {
        &self.l_axis
    }

    pub fn m_axis(&self) -> &[f64] {
        &self.m_axis
    }

    pub fn is_visible(&self, row: usize, col: usize) -> bool {
        let (l, m) = (self.l_axis[col], self.m_axis[row]);
        l * l + m * m <= 1.0
    }

    /// Grid indices `(row, col)` of the point closest to `(l, m)`.
    pub fn nearest(&self, direction: (f64, f64)) -> (usize, usize) {
        let closest = |axis: &[f64], v: f64| {
            axis.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0)
        };
        (
            closest(&self.m_axis, direction.1),
            closest(&self.l_axis, direction.0),
        )
    }
}

impl Default for SkyGrid {
    /// 129 x 129 points over `[-0.5, 0.5]^2`.
    fn default() -> Self {
        Self::square(129, -0.5, 0.5).expect("default grid is valid")
    }
}

/// Real-valued map over a [`SkyGrid`], stored row-major with rows along `m`
/// and columns along `l`. Masked points hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SkyMap {
    pub grid: SkyGrid,
    pub values: Vec<f64>,
    pub description: String,
}

impl SkyMap {
    pub fn width(&self) -> usize {
        self.grid.l_axis.len()
    }

    pub fn height(&self) -> usize {
        self.grid.m_axis.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width() + col]
    }

    fn visible(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(|v| !v.is_nan())
    }

    /// Mean over unmasked points.
    pub fn mean(&self) -> f64 {
        let (sum, count) = self
            .visible()
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        }
    }

    /// `(min, max)` over unmasked points.
    pub fn range(&self) -> (f64, f64) {
        self.visible()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// `(row, col)` of the largest unmasked value.
    pub fn peak(&self) -> (usize, usize) {
        let w = self.width();
        let idx = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (idx / w, idx % w)
    }

    /// CSV with a header row of `l` values; each following row starts with
    /// its `m` value.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header = std::iter::once("m\\l".to_string())
            .chain(self.grid.l_axis.iter().map(|l| l.to_string()));
        w.write_record(header)?;
        for (row, m) in self.grid.m_axis.iter().enumerate() {
            let record = std::iter::once(m.to_string())
                .chain((0..self.width()).map(|col| self.get(row, col).to_string()));
            w.write_record(record)?;
        }
        w.flush()
    }

    /// Binary 16-bit PGM, min-max scaled, top row = largest `m`. Returns the
    /// scaling needed to recover values.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> std::io::Result<PgmScaling> {
        let (lo, hi) = self.range();
        let span = if hi > lo { hi - lo } else { 1.0 };
        write!(out, "P5\n{} {}\n65535\n", self.width(), self.height())?;
        let mut bytes = Vec::with_capacity(2 * self.values.len());
        for row in (0..self.height()).rev() {
            for col in 0..self.width() {
                let v = self.get(row, col);
                let level = if v.is_nan() {
                    0
                } else {
                    (((v - lo) / span) * 65535.0).round() as u16
                };
                bytes.extend_from_slice(&level.to_be_bytes());
            }
        }
        out.write_all(&bytes)?;
        Ok(PgmScaling {
            width: self.width(),
            height: self.height(),
            min: lo,
            max: hi,
            maxval: 65535,
            description: self.description.clone(),
        })
    }
}

/// Sidecar describing how PGM levels map back to values:
/// `value = min + level / maxval * (max - min)`.
#[derive(Debug, Clone, Serialize)]
pub struct PgmScaling {
    pub width: usize,
    pub height: usize,
    pub min: f64,
    pub max: f64,
    pub maxval: u32,
    pub description: String,
}

/// Beamformed power `Re(v^H R v) / M` with unnormalized steering phases
/// `v_k = e^{i 2 pi (x_k l + y_k m)}`.
pub fn dirty_map(r: &CMatrix, geometry: &ArrayGeometry, grid: &SkyGrid) -> Result<SkyMap> {
    let m = geometry.len();
    if r.nrows() != m || r.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "dirty map covariance",
            expected: m,
            got: r.nrows(),
        });
    }
    let defect = hermitian_defect(r);
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian(defect));
    }
    let positions = geometry.positions();
    let width = grid.l_axis.len();
    let rows: Vec<Vec<f64>> = grid
        .m_axis
        .par_iter()
        .enumerate()
        .map(|(row, &mm)| {
            let mut v = vec![Complex64::new(0.0, 0.0); m];
            (0..width)
                .map(|col| {
                    if !grid.is_visible(row, col) {
                        return f64::NAN;
                    }
                    let l = grid.l_axis[col];
                    for (vk, p) in v.iter_mut().zip(positions) {
                        *vk = Complex64::from_polar(1.0, 2.0 * PI * (p[0] * l + p[1] * mm));
                    }
                    let mut acc = 0.0;
                    for (k, vk) in v.iter().enumerate() {
                        let rv: Complex64 = (0..m).map(|j| r[(k, j)] * v[j]).sum();
                        acc += (vk.conj() * rv).re;
                    }
                    acc / m as f64
                })
                .collect()
        })
        .collect();
    Ok(SkyMap {
        grid: grid.clone(),
        values: rows.into_iter().flatten().collect(),
        description: "dirty map".into(),
    })
}

/// Pointwise squared difference of two maps on the same grid.
pub fn residual_map(a: &SkyMap, b: &SkyMap) -> Result<SkyMap> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(SkyMap {
        grid: a.grid.clone(),
        values: a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y) * (x - y))
            .collect(),
        description: format!("squared residual: {} vs {}", a.description, b.description),
    })
}
