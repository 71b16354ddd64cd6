//! Accuracy and ranking metrics.
//!
//! Accuracy: mean absolute error and the time-adaptive accuracy index (TAI),
//! whose tolerance `T(y)` and intolerance `I(y)` thresholds are linearly
//! interpolated between their values at the two ends of the year range.
//!
//! Ranking: Spearman's rho, Kendall's tau and the adjacent-swap distance
//! `1 - 2S/M`, where `S` is the number of adjacent swaps that sort the
//! predicted order into the true one and `M = N(N-1)/2`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probing::ProbeResult;
use crate::store::EmbeddingSet;
use crate::timeline::TimePrediction;

pub fn mae(preds: &[f64], truths: &[f64]) -> Result<f64> {
    if preds.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: truths.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let total: f64 = preds.iter().zip(truths).map(|(p, t)| (p - t).abs()).sum();
    Ok(total / preds.len() as f64)
}

/// Endpoint thresholds for TAI, in years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaiConfig {
    pub t_at_ymin: f64,
    pub i_at_ymin: f64,
    pub t_at_ymax: f64,
    pub i_at_ymax: f64,
    pub y_min: i32,
    pub y_max: i32,
}

impl Default for TaiConfig {
    fn default() -> Self {
        TaiConfig {
            t_at_ymin: 20.0,
            i_at_ymin: 50.0,
            t_at_ymax: 5.0,
            i_at_ymax: 15.0,
            y_min: 1700,
            y_max: 2024,
        }
    }
}

impl TaiConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.t_at_ymin, self.i_at_ymin, self.t_at_ymax, self.i_at_ymax]
            .iter()
            .all(|x| x.is_finite());
        let ordered = |t: f64, i: f64| 0.0 <= t && t < i;
        if !finite || !ordered(self.t_at_ymin, self.i_at_ymin) || !ordered(self.t_at_ymax, self.i_at_ymax)
        {
            return Err(Error::InvalidParameter(format!(
                "TAI thresholds need 0 <= T < I at both ends, got T={}/{} I={}/{}",
                self.t_at_ymin, self.t_at_ymax, self.i_at_ymin, self.i_at_ymax
            )));
        }
        if self.y_min > self.y_max {
            return Err(Error::InvalidYearRange {
                y_min: self.y_min,
                y_max: self.y_max,
            });
        }
        Ok(())
    }

    /// `(T(y), I(y))`, clamped to the endpoint values outside the range.
    pub fn thresholds(&self, year: f64) -> (f64, f64) {
        let span = f64::from(self.y_max) - f64::from(self.y_min);
        let frac = if span > 0.0 {
            ((year - f64::from(self.y_min)) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let lerp = |a: f64, b: f64| a + (b - a) * frac;
        (
            lerp(self.t_at_ymin, self.t_at_ymax),
            lerp(self.i_at_ymin, self.i_at_ymax),
        )
    }
}

/// TAI of a single prediction.
pub fn tai(pred: f64, truth: f64, cfg: &TaiConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(tai_unchecked(pred, truth, cfg))
}

fn tai_unchecked(pred: f64, truth: f64, cfg: &TaiConfig) -> f64 {
    let (t, i) = cfg.thresholds(truth);
    let err = (pred - truth).abs();
    if err <= t {
        1.0
    } else if err < i {
        1.0 - err / i
    } else {
        0.0
    }
}

/// Ranks starting at 1; tied values share the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn check_pair(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    if a < 2 {
        return Err(Error::InvalidParameter(format!(
            "rank correlation needs at least 2 elements, got {a}"
        )));
    }
    Ok(())
}

pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a.len(), b.len())?;
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("NaN in rank input".into()));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let mean = (a.len() + 1) as f64 / 2.0;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - mean, y - mean);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// `(concordant - discordant) / (n(n-1)/2)`; tied pairs count as neither.
pub fn kendall(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a.len(), b.len())?;
    let n = a.len();
    let mut net: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let s = (a[i] - a[j]).signum_or_zero() * (b[i] - b[j]).signum_or_zero();
            net += s as i64;
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(net as f64 / pairs)
}

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    fn signum_or_zero(self) -> f64 {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

/// Number of inversions in `seq`, i.e. the adjacent swaps bubble sort makes.
pub fn adjacent_swaps(seq: &[usize]) -> u64 {
    fn sort_count(v: &mut [usize], buf: &mut Vec<usize>) -> u64 {
        let n = v.len();
        if n < 2 {
            return 0;
        }
        let mid = n / 2;
        let mut count = sort_count(&mut v[..mid], buf) + sort_count(&mut v[mid..], buf);
        buf.clear();
        let (mut i, mut j) = (0, mid);
        while i < mid && j < n {
            if v[j] < v[i] {
                count += (mid - i) as u64;
                buf.push(v[j]);
                j += 1;
            } else {
                buf.push(v[i]);
                i += 1;
            }
        }
        buf.extend_from_slice(&v[i..mid]);
        buf.extend_from_slice(&v[j..]);
        v.copy_from_slice(buf);
        count
    }
    let mut work = seq.to_vec();
    let mut buf = Vec::with_capacity(work.len());
    sort_count(&mut work, &mut buf)
}

/// Adjacent-swap ranking score of `predicted` against `truth`, both
/// orderings of the same distinct elements.
pub fn mndl<T: Eq + Hash>(predicted: &[T], truth: &[T]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::NotPermutation);
    }
    let n = truth.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "ranking needs at least 2 elements, got {n}"
        )));
    }
    let mut position: HashMap<&T, usize> = HashMap::with_capacity(n);
    for (i, x) in truth.iter().enumerate() {
        if position.insert(x, i).is_some() {
            return Err(Error::NotPermutation);
        }
    }
    let mut seen = HashSet::with_capacity(n);
    let mut seq = Vec::with_capacity(n);
    for x in predicted {
        let &p = position.get(x).ok_or(Error::NotPermutation)?;
        if !seen.insert(p) {
            return Err(Error::NotPermutation);
        }
        seq.push(p);
    }
    let swaps = adjacent_swaps(&seq) as i128;
    let max = (n * (n - 1) / 2) as i128;
    // 1 - 2S/M with an exact numerator
    Ok((max - 2 * swaps) as f64 / max as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingScores {
    pub rho: f64,
    pub tau: f64,
    pub mndl: f64,
}

/// Scores how well `coords` orders `years` chronologically.
///
/// The predicted order sorts years by coordinate, earlier year first on ties.
pub fn ranking_scores(years: &[i32], coords: &[f64]) -> Result<RankingScores> {
    check_pair(years.len(), coords.len())?;
    let ys: Vec<f64> = years.iter().map(|&y| f64::from(y)).collect();
    let mut predicted: Vec<usize> = (0..years.len()).collect();
    predicted.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]).then(years[a].cmp(&years[b])));
    let predicted: Vec<i32> = predicted.into_iter().map(|i| years[i]).collect();
    let mut truth = years.to_vec();
    truth.sort_unstable();
    Ok(RankingScores {
        rho: spearman(&ys, coords)?,
        tau: kendall(&ys, coords)?,
        mndl: mndl(&predicted, &truth)?,
    })
}

/// Anything that assigns a year to a query id.
pub trait YearEstimate {
    fn query_id(&self) -> &str;
    fn year_estimate(&self) -> f64;
}

impl YearEstimate for ProbeResult {
    fn query_id(&self) -> &str {
        &self.id
    }
    fn year_estimate(&self) -> f64 {
        f64::from(self.y_pred)
    }
}

impl YearEstimate for TimePrediction {
    fn query_id(&self) -> &str {
        &self.id
    }
    fn year_estimate(&self) -> f64 {
        self.y_pred
    }
}

/// Minimal prediction line: any JSON object with `id` and `y_pred`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub y_pred: f64,
}

impl YearEstimate for PredictionRecord {
    fn query_id(&self) -> &str {
        &self.id
    }
    fn year_estimate(&self) -> f64 {
        self.y_pred
    }
}

/// Reads prediction JSON Lines written by `probe` or `predict`.
pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        let text = line.trim_end_matches('\r');
        if text.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord =
            serde_json::from_str(text).map_err(|e| Error::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
        if !rec.y_pred.is_finite() {
            return Err(Error::NonFinite { id: rec.id });
        }
        if !ids.insert(rec.id.clone()) {
            return Err(Error::DuplicateId(rec.id));
        }
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub y_true: i32,
    pub y_pred: f64,
    pub abs_error: f64,
    pub tai: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub mae: f64,
    pub tai: f64,
    pub n: usize,
    pub year_min: i32,
    pub year_max: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    pub tai: f64,
    pub n: usize,
    pub per_label: BTreeMap<String, LabelStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<RankingScores>,
    pub queries: Vec<QueryOutcome>,
}

/// Aggregates MAE and TAI overall and per label.
pub fn evaluate<P: YearEstimate>(
    preds: &[P],
    truths: &EmbeddingSet,
    cfg: &TaiConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    if preds.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let index: HashMap<&str, (Option<i32>, Option<&str>)> = truths
        .iter()
        .map(|r| (r.id.as_str(), (r.year, r.label.as_deref())))
        .collect();
    let mut queries = Vec::with_capacity(preds.len());
    for p in preds {
        let id = p.query_id();
        let &(year, label) = index.get(id).ok_or_else(|| Error::UnknownId(id.to_string()))?;
        let y_true = year.ok_or_else(|| Error::MissingYearField(id.to_string()))?;
        let y_pred = p.year_estimate();
        if !y_pred.is_finite() {
            return Err(Error::NonFinite { id: id.to_string() });
        }
        let truth = f64::from(y_true);
        queries.push(QueryOutcome {
            id: id.to_string(),
            label: label.map(str::to_string),
            y_true,
            y_pred,
            abs_error: (y_pred - truth).abs(),
            tai: tai_unchecked(y_pred, truth, cfg),
        });
    }

    let mean = |xs: &mut dyn Iterator<Item = f64>| {
        let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        sum / n as f64
    };
    let mut groups: BTreeMap<String, Vec<&QueryOutcome>> = BTreeMap::new();
    for q in &queries {
        if let Some(label) = &q.label {
            groups.entry(label.clone()).or_default().push(q);
        }
    }
    let per_label = groups
        .into_iter()
        .map(|(label, qs)| {
            let stats = LabelStats {
                mae: mean(&mut qs.iter().map(|q| q.abs_error)),
                tai: mean(&mut qs.iter().map(|q| q.tai)),
                n: qs.len(),
                year_min: qs.iter().map(|q| q.y_true).min().unwrap_or_default(),
                year_max: qs.iter().map(|q| q.y_true).max().unwrap_or_default(),
            };
            (label, stats)
        })
        .collect();

    Ok(EvalReport {
        mae: mean(&mut queries.iter().map(|q| q.abs_error)),
        tai: mean(&mut queries.iter().map(|q| q.tai)),
        n: queries.len(),
        per_label,
        ranking: None,
        queries,
    })
}
