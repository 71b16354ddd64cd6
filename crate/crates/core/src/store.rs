//! Embedding data model and file I/O.
//!
//! Embedding files are UTF-8 JSON Lines, one record per line:
//!
//! ```text
//! {"id":"a","year":1950,"label":"cars","vec":[0.6,0.8]}
//! ```
//!
//! `year` and `label` are optional. Reals are written as shortest round-trip
//! decimals. Projection files are CSV with a `year,value` header.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub vec: Vec<f64>,
}

/// Id-keyed vectors sharing one dimension, kept in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingSet {
    dim: usize,
    records: Vec<EmbeddingRecord>,
}

impl EmbeddingSet {
    /// Validates and optionally L2-normalizes `records`.
    ///
    /// Errors carry the 1-based record position in their `line` field.
    pub fn from_records(records: Vec<EmbeddingRecord>, normalize: bool) -> Result<Self> {
        let mut builder = SetBuilder::new(normalize);
        for (i, record) in records.into_iter().enumerate() {
            builder.push(i + 1, record)?;
        }
        Ok(builder.finish())
    }

    /// Dimension shared by all records; 0 for an empty set.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn iter(&self) -> std::slice::Iter<'_, EmbeddingRecord> {
        self.records.iter()
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

impl<'a> IntoIterator for &'a EmbeddingSet {
    type Item = &'a EmbeddingRecord;
    type IntoIter = std::slice::Iter<'a, EmbeddingRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

struct SetBuilder {
    normalize: bool,
    dim: Option<usize>,
    ids: HashSet<String>,
    records: Vec<EmbeddingRecord>,
}

impl SetBuilder {
    fn new(normalize: bool) -> Self {
        SetBuilder {
            normalize,
            dim: None,
            ids: HashSet::new(),
            records: Vec::new(),
        }
    }

    fn push(&mut self, line: usize, mut record: EmbeddingRecord) -> Result<()> {
        let got = record.vec.len();
        match self.dim {
            Some(expected) if expected != got => {
                return Err(Error::DimensionMismatchAtLine {
                    line,
                    expected,
                    got,
                })
            }
            None if got < 2 => return Err(Error::DimensionTooSmall { line, got }),
            None => self.dim = Some(got),
            _ => {}
        }
        if record.vec.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { id: record.id });
        }
        if self.normalize {
            record.vec = vector::normalized(&record.vec).ok_or_else(|| Error::ZeroNorm {
                id: record.id.clone(),
            })?;
        }
        if !self.ids.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        self.records.push(record);
        Ok(())
    }

    fn finish(self) -> EmbeddingSet {
        EmbeddingSet {
            dim: self.dim.unwrap_or(0),
            records: self.records,
        }
    }
}

/// Parses JSON Lines from `reader`. Blank lines are skipped.
pub fn read_embeddings<R: BufRead>(reader: R, normalize: bool) -> Result<EmbeddingSet> {
    let mut builder = SetBuilder::new(normalize);
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
        let record: EmbeddingRecord =
            serde_json::from_str(text).map_err(|e| Error::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
        builder.push(line_no, record)?;
    }
    Ok(builder.finish())
}

pub fn parse_embeddings(text: &str, normalize: bool) -> Result<EmbeddingSet> {
    read_embeddings(text.as_bytes(), normalize)
}

pub fn load_embeddings(path: impl AsRef<Path>, normalize: bool) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file), normalize)
}

pub fn write_embeddings<W: Write>(mut writer: W, set: &EmbeddingSet) -> std::io::Result<()> {
    for record in set {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_embeddings(path: impl AsRef<Path>, set: &EmbeddingSet) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_embeddings(BufWriter::new(file), set).map_err(|e| Error::io(path, e))
}

/// One embedding per year over the contiguous range `y_min..=y_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAnchorSet {
    y_min: i32,
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl TimeAnchorSet {
    /// Builds an anchor set from vectors listed in ascending year order
    /// starting at `y_min`.
    pub fn new(y_min: i32, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors.first().map(Vec::len).ok_or(Error::Empty("anchor set"))?;
        if dim < 2 {
            return Err(Error::DimensionTooSmall { line: 1, got: dim });
        }
        if i32::try_from(vectors.len())
            .ok()
            .and_then(|n| y_min.checked_add(n - 1))
            .is_none()
        {
            return Err(Error::InvalidParameter("year range overflows".into()));
        }
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        Ok(TimeAnchorSet { y_min, dim, vectors })
    }

    pub fn y_min(&self) -> i32 {
        self.y_min
    }

    pub fn y_max(&self) -> i32 {
        self.y_min + self.vectors.len() as i32 - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, year: i32) -> Option<&[f64]> {
        let idx = usize::try_from(i64::from(year) - i64::from(self.y_min)).ok()?;
        self.vectors.get(idx).map(Vec::as_slice)
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.vectors.len()).map(move |i| self.y_min + i as i32)
    }

    /// Anchor rows in ascending year order.
    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &[f64])> + '_ {
        self.years().zip(self.vectors.iter().map(Vec::as_slice))
    }
}

/// Selects one anchor per year in `y_min..=y_max` from `set`.
///
/// Records whose year lies outside the range are ignored; every record must
/// carry a year.
pub fn to_anchor_set(set: &EmbeddingSet, y_min: i32, y_max: i32) -> Result<TimeAnchorSet> {
    if y_min > y_max {
        return Err(Error::InvalidYearRange { y_min, y_max });
    }
    let span = (i64::from(y_max) - i64::from(y_min) + 1) as usize;
    let mut slots: Vec<Option<&[f64]>> = vec![None; span];
    for record in set {
        let year = record
            .year
            .ok_or_else(|| Error::MissingYearField(record.id.clone()))?;
        if year < y_min || year > y_max {
            continue;
        }
        let slot = &mut slots[(i64::from(year) - i64::from(y_min)) as usize];
        if slot.is_some() {
            return Err(Error::DuplicateYear(year));
        }
        *slot = Some(&record.vec);
    }
    let mut vectors = Vec::with_capacity(span);
    for (i, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(v) => vectors.push(v.to_vec()),
            None => return Err(Error::MissingYear(y_min + i as i32)),
        }
    }
    TimeAnchorSet::new(y_min, vectors)
}

/// Year-keyed 1D coordinates produced by an external reducer.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalProjection1D {
    y_min: i32,
    values: Vec<f64>,
}

impl ExternalProjection1D {
    pub fn y_min(&self) -> i32 {
        self.y_min
    }

    pub fn y_max(&self) -> i32 {
        self.y_min + self.values.len() as i32 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values in ascending year order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        let idx = usize::try_from(i64::from(year) - i64::from(self.y_min)).ok()?;
        self.values.get(idx).copied()
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.values.len()).map(move |i| self.y_min + i as i32)
    }
}

#[derive(Deserialize)]
struct ProjectionRow {
    year: i32,
    value: f64,
}

pub fn read_projection_1d<R: Read>(reader: R) -> Result<ExternalProjection1D> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::MalformedProjection {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    if headers.len() != 2 || &headers[0] != "year" || &headers[1] != "value" {
        return Err(Error::MalformedProjection {
            row: 0,
            message: "expected header `year,value`".into(),
        });
    }
    let mut rows: Vec<(i32, f64)> = Vec::new();
    for (i, row) in rdr.deserialize::<ProjectionRow>().enumerate() {
        let row = row.map_err(|e| Error::MalformedProjection {
            row: i + 1,
            message: e.to_string(),
        })?;
        if !row.value.is_finite() {
            return Err(Error::MalformedProjection {
                row: i + 1,
                message: format!("non-finite value for year {}", row.year),
            });
        }
        rows.push((row.year, row.value));
    }
    if rows.is_empty() {
        return Err(Error::Empty("projection"));
    }
    rows.sort_by_key(|&(year, _)| year);
    for pair in rows.windows(2) {
        let (prev, next) = (pair[0].0, pair[1].0);
        if prev == next {
            return Err(Error::DuplicateYear(prev));
        }
        if next != prev + 1 {
            return Err(Error::NonContiguousYears(prev + 1));
        }
    }
    Ok(ExternalProjection1D {
        y_min: rows[0].0,
        values: rows.into_iter().map(|(_, v)| v).collect(),
    })
}

pub fn parse_projection_1d(text: &str) -> Result<ExternalProjection1D> {
    read_projection_1d(text.as_bytes())
}

pub fn load_projection_1d(path: impl AsRef<Path>) -> Result<ExternalProjection1D> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_projection_1d(BufReader::new(file))
}
