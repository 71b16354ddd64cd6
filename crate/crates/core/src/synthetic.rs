//! Synthetic embedding spaces with a known chronology.
//!
//! A 3D curve parameterized by `u = (y - y_min) / (y_max - y_min)` is placed
//! in `R^N` through a seeded random orthonormal frame, shifted off the origin
//! along a fourth frame direction so that unit-normalization keeps distinct
//! years distinct, and normalized. Queries add isotropic Gaussian noise
//! before normalization.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{EmbeddingRecord, EmbeddingSet, TimeAnchorSet};
use crate::vector::{dot, norm, normalized};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Line,
    Helix,
    SCurve,
}

impl CurveKind {
    /// Point on the base curve at `u` in `[0, 1]`.
    pub fn point(self, u: f64) -> [f64; 3] {
        match self {
            CurveKind::Line => [u, 0.0, 0.0],
            CurveKind::Helix => [(4.0 * PI * u).cos(), (4.0 * PI * u).sin(), u],
            CurveKind::SCurve => [u, (6.0 * u - 3.0).tanh(), 0.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Line => "line",
            CurveKind::Helix => "helix",
            CurveKind::SCurve => "s-curve",
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(CurveKind::Line),
            "helix" => Ok(CurveKind::Helix),
            "s-curve" => Ok(CurveKind::SCurve),
            other => Err(Error::InvalidParameter(format!("unknown curve kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub y_min: i32,
    pub y_max: i32,
    pub curve: CurveKind,
    pub noise_sigma: f64,
    pub queries_per_year: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            dim: 512,
            y_min: 1700,
            y_max: 2024,
            curve: CurveKind::Helix,
            noise_sigma: 0.0,
            queries_per_year: 1,
            seed: 7,
        }
    }
}

/// Offset of the base curve along the frame's fourth axis.
const OFFSET: f64 = 1.0;

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 4 {
            return Err(Error::InvalidParameter(format!(
                "synthetic dimension must be at least 4, got {}",
                self.dim
            )));
        }
        if self.y_min > self.y_max {
            return Err(Error::InvalidYearRange {
                y_min: self.y_min,
                y_max: self.y_max,
            });
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    pub fn u(&self, year: i32) -> f64 {
        let span = f64::from(self.y_max) - f64::from(self.y_min);
        if span == 0.0 {
            0.0
        } else {
            (f64::from(year) - f64::from(self.y_min)) / span
        }
    }
}

/// Four orthonormal vectors in `R^dim`: the offset axis followed by the
/// three curve axes.
pub fn random_frame(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(4);
    while frame.len() < 4 {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        // two Gram-Schmidt passes
        for _ in 0..2 {
            for f in &frame {
                let p = dot(&v, f);
                v.iter_mut().zip(f).for_each(|(x, y)| *x -= p * y);
            }
        }
        let n = norm(&v);
        if n > 1e-6 {
            v.iter_mut().for_each(|x| *x /= n);
            frame.push(v);
        }
    }
    frame
}

/// Raw (unnormalized) embedding of a base-curve point.
pub fn embed_point(frame: &[Vec<f64>], p: [f64; 3]) -> Vec<f64> {
    let coeffs = [OFFSET, p[0], p[1], p[2]];
    let mut out = vec![0.0; frame[0].len()];
    for (c, f) in coeffs.iter().zip(frame) {
        out.iter_mut().zip(f).for_each(|(o, x)| *o += c * x);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub anchors: TimeAnchorSet,
    pub queries: EmbeddingSet,
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let frame = random_frame(spec.dim, &mut rng);
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let mut anchors = Vec::new();
    let mut queries = Vec::new();
    for year in spec.y_min..=spec.y_max {
        let raw = embed_point(&frame, spec.curve.point(spec.u(year)));
        let anchor = normalized(&raw).ok_or_else(|| Error::ZeroNorm {
            id: format!("anchor {year}"),
        })?;
        anchors.push(anchor);
        for j in 0..spec.queries_per_year {
            let noisy: Vec<f64> = raw.iter().map(|x| x + noise.sample(&mut rng)).collect();
            let id = format!("q{year}_{j}");
            let vec = normalized(&noisy).ok_or_else(|| Error::ZeroNorm { id: id.clone() })?;
            queries.push(EmbeddingRecord {
                id,
                year: Some(year),
                label: Some(spec.curve.name().to_string()),
                vec,
            });
        }
    }
    Ok(SyntheticData {
        anchors: TimeAnchorSet::new(spec.y_min, anchors)?,
        queries: EmbeddingSet::from_records(queries, false)?,
    })
}

/// Anchor set as records with ids `T<year>`.
pub fn anchors_to_set(anchors: &TimeAnchorSet) -> EmbeddingSet {
    let records = anchors
        .iter()
        .map(|(year, v)| EmbeddingRecord {
            id: format!("T{year}"),
            year: Some(year),
            label: None,
            vec: v.to_vec(),
        })
        .collect();
    EmbeddingSet::from_records(records, false).expect("anchor rows share one dimension")
}
