//! Bézier timelines.
//!
//! Control points are picked uniformly from the year-sorted anchors (either
//! in the ambient space or in a kernel PCA subspace) and the resulting
//! single high-degree Bézier curve is discretized into `N_samples` points.
//! Every anchor is mapped to the parameter `t` of its nearest sample, and
//! queries are dated either by the nearest anchor parameter or by linear
//! interpolation between the anchors that bracket the query parameter.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kpca::{Projector, ProjectorPayload};
use crate::store::{EmbeddingSet, TimeAnchorSet};
use crate::vector::squared_distance;

pub const DEFAULT_CONTROL_POINTS: usize = 200;
pub const DEFAULT_SAMPLES: usize = 1000;

/// Upper bound on the discretization accepted from model files.
pub const MAX_SAMPLES: usize = 1_000_000;

/// Evaluates the Bézier curve with the given control points at `t` using
/// de Casteljau's repeated convex combinations.
pub fn decasteljau(control_points: &[Vec<f64>], t: f64) -> Result<Vec<f64>> {
    if control_points.len() < 2 {
        return Err(Error::InvalidParameter(
            "a Bézier curve needs at least 2 control points".into(),
        ));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("t = {t} outside [0, 1]")));
    }
    let dim = control_points[0].len();
    if control_points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidParameter("ragged control points".into()));
    }
    let mut work: Vec<Vec<f64>> = control_points.to_vec();
    let s = 1.0 - t;
    for level in (1..work.len()).rev() {
        for i in 0..level {
            let (head, tail) = work.split_at_mut(i + 1);
            let (a, b) = (&mut head[i], &tail[0]);
            for (x, y) in a.iter_mut().zip(b) {
                *x = s * *x + t * y;
            }
        }
    }
    work.truncate(1);
    Ok(work.pop().unwrap_or_default())
}

/// Weights of every control point in `C(t)`, built with the same triangle of
/// convex combinations de Casteljau uses, run on the basis instead of the
/// points. `C(t) = sum_i w_i P_i`.
fn casteljau_weights(count: usize, t: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize(count, 0.0);
    out[0] = 1.0;
    let s = 1.0 - t;
    for level in 1..count {
        for j in (1..=level).rev() {
            out[j] = s * out[j] + t * out[j - 1];
        }
        out[0] *= s;
    }
}

/// Row indices `round(i (M-1) / (K-1))` for `i = 0..K`.
pub fn control_point_indices(m: usize, k: usize) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 control points, got {k}"
        )));
    }
    if k > m {
        return Err(Error::InvalidParameter(format!(
            "{k} control points requested from {m} anchors"
        )));
    }
    let (num, den) = ((m - 1) as u128, (k - 1) as u128);
    // round half up in integer arithmetic
    Ok((0..k as u128)
        .map(|i| ((2 * i * num + den) / (2 * den)) as usize)
        .collect())
}

pub fn select_control_points(sorted_rows: &[Vec<f64>], k: usize) -> Result<Vec<Vec<f64>>> {
    Ok(control_point_indices(sorted_rows.len(), k)?
        .into_iter()
        .map(|i| sorted_rows[i].clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BezierCurve {
    control_points: Vec<Vec<f64>>,
    samples: Vec<Vec<f64>>,
}

impl BezierCurve {
    /// Discretizes the curve at `t_j = j / (n_samples - 1)`.
    pub fn new(control_points: Vec<Vec<f64>>, n_samples: usize) -> Result<Self> {
        let k = control_points.len();
        if k < 2 {
            return Err(Error::InvalidParameter(
                "a Bézier curve needs at least 2 control points".into(),
            ));
        }
        if n_samples < k {
            return Err(Error::InvalidParameter(format!(
                "{n_samples} samples is fewer than {k} control points"
            )));
        }
        let dim = control_points[0].len();
        if dim == 0 || control_points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidParameter("ragged control points".into()));
        }
        let step = 1.0 / (n_samples - 1) as f64;
        let samples = (0..n_samples)
            .into_par_iter()
            .map_init(Vec::new, |weights, j| {
                let t = if j == n_samples - 1 { 1.0 } else { j as f64 * step };
                casteljau_weights(k, t, weights);
                let mut point = vec![0.0; dim];
                for (w, p) in weights.iter().zip(&control_points) {
                    if *w == 0.0 {
                        continue;
                    }
                    for (acc, x) in point.iter_mut().zip(p) {
                        *acc += w * x;
                    }
                }
                point
            })
            .collect();
        Ok(BezierCurve {
            control_points,
            samples,
        })
    }

    pub fn control_points(&self) -> &[Vec<f64>] {
        &self.control_points
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn degree(&self) -> usize {
        self.control_points.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.control_points[0].len()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn param(&self, index: usize) -> f64 {
        if index + 1 == self.samples.len() {
            1.0
        } else {
            index as f64 / (self.samples.len() - 1) as f64
        }
    }

    /// Index of the sample nearest to `point`; the earliest wins ties.
    pub fn closest_sample(&self, point: &[f64]) -> Result<usize> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, s) in self.samples.iter().enumerate() {
            let d = squared_distance(point, s);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok(best)
    }

    pub fn closest_param(&self, point: &[f64]) -> Result<f64> {
        Ok(self.param(self.closest_sample(point)?))
    }
}

/// Space the curve lives in.
#[derive(Debug, Clone, PartialEq)]
pub enum TimelineSpace {
    Ambient,
    Kpca(Box<Projector>),
}

impl TimelineSpace {
    pub fn tag(&self) -> SpaceTag {
        match self {
            TimelineSpace::Ambient => SpaceTag::Ambient,
            TimelineSpace::Kpca(_) => SpaceTag::Kpca,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceTag {
    Ambient,
    Kpca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InferenceMethod {
    Nn,
    Interp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimelineConfig {
    pub control_points: usize,
    pub samples: usize,
}

impl Default for TimelineConfig {
    fn default() -> Self {
        TimelineConfig {
            control_points: DEFAULT_CONTROL_POINTS,
            samples: DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePrediction {
    pub id: String,
    pub y_pred: f64,
    pub t_query: f64,
    pub method: InferenceMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimelineModel {
    curve: BezierCurve,
    space: TimelineSpace,
    y_min: i32,
    anchor_params: Vec<f64>,
}

/// Fits a timeline through `anchors`.
///
/// With [`TimelineSpace::Kpca`] the projector must have been fitted on the
/// same anchors.
pub fn fit_timeline(
    anchors: &TimeAnchorSet,
    space: TimelineSpace,
    config: TimelineConfig,
) -> Result<TimelineModel> {
    let rows: Vec<Vec<f64>> = match &space {
        TimelineSpace::Ambient => anchors.vectors().to_vec(),
        TimelineSpace::Kpca(projector) => {
            if projector.training_vectors() != anchors.vectors() {
                return Err(Error::InvalidParameter(
                    "projector was fitted on different anchors".into(),
                ));
            }
            anchors
                .vectors()
                .iter()
                .map(|v| projector.transform(v))
                .collect::<Result<_>>()?
        }
    };
    let control_points = select_control_points(&rows, config.control_points)?;
    let curve = BezierCurve::new(control_points, config.samples)?;
    let anchor_params = rows
        .par_iter()
        .map(|r| curve.closest_param(r))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimelineModel {
        curve,
        space,
        y_min: anchors.y_min(),
        anchor_params,
    })
}

impl TimelineModel {
    pub fn curve(&self) -> &BezierCurve {
        &self.curve
    }

    pub fn space(&self) -> &TimelineSpace {
        &self.space
    }

    pub fn y_min(&self) -> i32 {
        self.y_min
    }

    pub fn y_max(&self) -> i32 {
        self.y_min + self.anchor_params.len() as i32 - 1
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.anchor_params.len()).map(move |i| self.y_min + i as i32)
    }

    /// Curve parameter of each anchor, in ascending year order.
    pub fn anchor_params(&self) -> &[f64] {
        &self.anchor_params
    }

    pub fn anchor_param(&self, year: i32) -> Option<f64> {
        let idx = usize::try_from(i64::from(year) - i64::from(self.y_min)).ok()?;
        self.anchor_params.get(idx).copied()
    }

    /// Moves an ambient query into the curve's space.
    pub fn embed(&self, query: &[f64]) -> Result<Vec<f64>> {
        match &self.space {
            TimelineSpace::Ambient => {
                if query.len() != self.curve.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.curve.dim(),
                        got: query.len(),
                    });
                }
                Ok(query.to_vec())
            }
            TimelineSpace::Kpca(p) => p.transform(query),
        }
    }

    pub fn map_to_curve(&self, query: &[f64]) -> Result<f64> {
        self.curve.closest_param(&self.embed(query)?)
    }

    /// Anchor year whose parameter is nearest to `t`; earlier years win ties.
    pub fn year_nn_at(&self, t: f64) -> i32 {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &ta) in self.anchor_params.iter().enumerate() {
            let d = (ta - t).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        self.y_min + best as i32
    }

    /// Interpolates between the anchors bracketing `t` in parameter space.
    /// Outside the anchor range the extreme anchor year is returned.
    pub fn year_interp_at(&self, t: f64) -> f64 {
        let mut before: Option<(f64, i32)> = None;
        let mut after: Option<(f64, i32)> = None;
        for (year, &ta) in self.years().zip(&self.anchor_params) {
            if ta <= t && before.map_or(true, |(tb, _)| ta > tb) {
                before = Some((ta, year));
            }
            if ta >= t && after.map_or(true, |(tf, _)| ta < tf) {
                after = Some((ta, year));
            }
        }
        match (before, after) {
            (Some((tb, yb)), Some((ta, ya))) => {
                let (db, da) = (t - tb, ta - t);
                if db + da == 0.0 {
                    return f64::from(yb);
                }
                let w = db / (db + da);
                f64::from(yb) + w * f64::from(ya - yb)
            }
            (Some((_, y)), None) | (None, Some((_, y))) => f64::from(y),
            (None, None) => f64::from(self.y_min),
        }
    }

    pub fn predict(&self, id: &str, query: &[f64], method: InferenceMethod) -> Result<TimePrediction> {
        let t_query = self.map_to_curve(query)?;
        let y_pred = match method {
            InferenceMethod::Nn => f64::from(self.year_nn_at(t_query)),
            InferenceMethod::Interp => self.year_interp_at(t_query),
        };
        Ok(TimePrediction {
            id: id.to_string(),
            y_pred,
            t_query,
            method,
        })
    }

    pub fn predict_nn(&self, query: &[f64]) -> Result<TimePrediction> {
        self.predict("", query, InferenceMethod::Nn)
    }

    pub fn predict_interp(&self, query: &[f64]) -> Result<TimePrediction> {
        self.predict("", query, InferenceMethod::Interp)
    }

    /// Predicts every query, preserving input order.
    pub fn predict_batch(
        &self,
        queries: &EmbeddingSet,
        method: InferenceMethod,
    ) -> Result<Vec<TimePrediction>> {
        queries
            .records()
            .par_iter()
            .map(|r| self.predict(&r.id, &r.vec, method))
            .collect()
    }

    pub fn to_file(&self) -> TimelineFile {
        TimelineFile {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            space: self.space.tag(),
            y_min: self.y_min,
            y_max: self.y_max(),
            samples: self.curve.n_samples(),
            control_points: self.curve.control_points.clone(),
            anchor_params: self.years().zip(self.anchor_params.iter().copied()).collect(),
            projector: match &self.space {
                TimelineSpace::Ambient => None,
                TimelineSpace::Kpca(p) => Some(p.to_payload()),
            },
        }
    }
}

const FORMAT_TAG: &str = "chronoline-timeline";
const FORMAT_VERSION: u32 = 1;

/// On-disk timeline model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineFile {
    pub format: String,
    pub version: u32,
    pub space: SpaceTag,
    pub y_min: i32,
    pub y_max: i32,
    pub samples: usize,
    pub control_points: Vec<Vec<f64>>,
    pub anchor_params: Vec<(i32, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projector: Option<ProjectorPayload>,
}

impl TryFrom<TimelineFile> for TimelineModel {
    type Error = Error;

    fn try_from(f: TimelineFile) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if f.format != FORMAT_TAG || f.version != FORMAT_VERSION {
            return bad(format!("unsupported format {:?} v{}", f.format, f.version));
        }
        if f.y_min > f.y_max {
            return bad(format!("year range {}..={}", f.y_min, f.y_max));
        }
        let span = i64::from(f.y_max) - i64::from(f.y_min) + 1;
        if f.anchor_params.len() as i64 != span {
            return bad("anchor_params does not cover the year range".into());
        }
        for (i, &(year, t)) in f.anchor_params.iter().enumerate() {
            if i64::from(year) != i64::from(f.y_min) + i as i64 {
                return bad(format!("anchor_params out of order at year {year}"));
            }
            if !(0.0..=1.0).contains(&t) {
                return bad(format!("anchor parameter {t} for {year} outside [0, 1]"));
            }
        }
        if f.samples > MAX_SAMPLES {
            return bad(format!("{} samples exceeds limit {MAX_SAMPLES}", f.samples));
        }
        if f.control_points.iter().flatten().any(|x| !x.is_finite()) {
            return bad("non-finite control point".into());
        }
        let space = match (f.space, f.projector) {
            (SpaceTag::Ambient, None) => TimelineSpace::Ambient,
            (SpaceTag::Kpca, Some(payload)) => {
                let p = Projector::try_from(payload)?;
                if f.control_points.first().map(Vec::len) != Some(p.s_dim()) {
                    return bad("control point dimension differs from projector output".into());
                }
                TimelineSpace::Kpca(Box::new(p))
            }
            _ => return bad("space tag and projector payload disagree".into()),
        };
        let curve = BezierCurve::new(f.control_points, f.samples)
            .map_err(|e| Error::InvalidModel(format!("curve: {e}")))?;
        Ok(TimelineModel {
            curve,
            space,
            y_min: f.y_min,
            anchor_params: f.anchor_params.into_iter().map(|(_, t)| t).collect(),
        })
    }
}

pub fn parse_model(text: &str) -> Result<TimelineModel> {
    read_model(text.as_bytes())
}

pub fn read_model<R: Read>(reader: R) -> Result<TimelineModel> {
    let file: TimelineFile = serde_json::from_reader(reader)
        .map_err(|e| Error::InvalidModel(e.to_string()))?;
    TimelineModel::try_from(file)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TimelineModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(BufReader::new(file))
}

pub fn write_model<W: Write>(mut writer: W, model: &TimelineModel) -> std::io::Result<()> {
    serde_json::to_writer(&mut writer, &model.to_file())?;
    writer.write_all(b"\n")?;
    writer.flush()
}

pub fn save_model(path: impl AsRef<Path>, model: &TimelineModel) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_model(BufWriter::new(file), model).map_err(|e| Error::io(path, e))
}
