//! File formats: point CSVs, dataset manifests and prediction records.
//!
//! Labels are 0-based in memory and 1-based on disk.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datagen::{Arrangement, SampleSpec};
use crate::error::{Error, Result};
use crate::points::PointCloud;

/// Name of the optional label column.
pub const LABEL_COLUMN: &str = "label";

/// Writes `x1,…,xD[,label]` with 17 significant digits per value.
pub fn write_points_csv<W: Write>(writer: W, cloud: &PointCloud) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=cloud.dim()).map(|k| format!("x{k}")).collect();
    if cloud.labels().is_some() {
        header.push(LABEL_COLUMN.into());
    }
    w.write_record(&header)?;
    for j in 0..cloud.len() {
        let mut record: Vec<String> = cloud.matrix().row(j).iter().map(|v| format!("{v:.16e}")).collect();
        if let Some(l) = cloud.labels() {
            record.push((l[j] + 1).to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a point CSV. Labels may be any integers; they are mapped to
/// `0..k` in increasing order of value.
pub fn read_points_csv<R: Read>(reader: R) -> Result<PointCloud> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = r.headers()?.clone();
    let has_label = header.iter().next_back() == Some(LABEL_COLUMN);
    let dim = header.len() - usize::from(has_label);
    if dim == 0 {
        return Err(Error::Parse("no coordinate columns".into()));
    }
    for (k, name) in header.iter().take(dim).enumerate() {
        if name != format!("x{}", k + 1) {
            return Err(Error::Parse(format!("column {} should be x{}, found {name:?}", k + 1, k + 1)));
        }
    }
    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse(format!("row {} has {} fields, expected {}", line + 1, record.len(), header.len())));
        }
        for field in record.iter().take(dim) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: {field:?} is not a number", line + 1)))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("row {}: non-finite value", line + 1)));
            }
            values.push(v);
        }
        if has_label {
            let field = &record[dim];
            let l: i64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: label {field:?} is not an integer", line + 1)))?;
            raw_labels.push(l);
        }
    }
    let n = values.len() / dim;
    let points = DMatrix::from_row_slice(n, dim, &values);
    let labels = has_label.then(|| compact_sorted(&raw_labels));
    PointCloud::new(points, labels)
}

pub fn parse_points_csv(text: &str) -> Result<PointCloud> {
    read_points_csv(text.as_bytes())
}

fn compact_sorted(raw: &[i64]) -> Vec<usize> {
    let mut distinct = raw.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    raw.iter().map(|l| distinct.binary_search(l).expect("present")).collect()
}

/// Everything needed to regenerate a synthetic dataset, plus the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub seed: u64,
    pub ambient_dim: usize,
    pub dims: Vec<usize>,
    pub counts: Vec<usize>,
    pub sigma: f64,
    /// Per subspace, its orthonormal basis as `D` rows of `d` entries.
    pub bases: Vec<Vec<Vec<f64>>>,
    /// Effective configuration that produced the dataset.
    #[serde(default)]
    pub config: serde_json::Value,
}

impl Manifest {
    pub fn new(spec: &SampleSpec, arrangement: &Arrangement, config: serde_json::Value) -> Self {
        let bases = arrangement
            .subspaces()
            .iter()
            .map(|s| s.basis().row_iter().map(|r| r.iter().copied().collect()).collect())
            .collect();
        Self {
            seed: spec.seed,
            ambient_dim: spec.ambient_dim,
            dims: spec.dims.clone(),
            counts: spec.counts.clone(),
            sigma: spec.sigma,
            bases,
            config,
        }
    }

    pub fn spec(&self) -> SampleSpec {
        SampleSpec::new(self.ambient_dim, self.dims.clone(), self.counts.clone(), self.sigma, self.seed)
    }

    /// Shape checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<()> {
        self.spec().validate()?;
        if self.bases.len() != self.dims.len() {
            return Err(Error::Parse(format!("{} bases for {} subspaces", self.bases.len(), self.dims.len())));
        }
        for (b, &d) in self.bases.iter().zip(&self.dims) {
            if b.len() != self.ambient_dim || b.iter().any(|r| r.len() != d) {
                return Err(Error::Parse(format!("basis shape does not match {}×{d}", self.ambient_dim)));
            }
        }
        Ok(())
    }
}

pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let m: Manifest = serde_json::from_str(text)?;
    m.validate()?;
    Ok(m)
}

/// Stored output of one clustering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    /// 1-based cluster labels.
    pub labels: Vec<usize>,
    /// Affinity rows, when the method produced one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affinity: Option<Vec<Vec<f64>>>,
}

impl Predictions {
    pub fn new(labels: &[usize], affinity: Option<&DMatrix<f64>>) -> Self {
        Self {
            labels: labels.iter().map(|l| l + 1).collect(),
            affinity: affinity.map(|a| a.row_iter().map(|r| r.iter().copied().collect()).collect()),
        }
    }

    /// Labels back to 0-based.
    pub fn zero_based(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.saturating_sub(1)).collect()
    }

    pub fn affinity_matrix(&self) -> Result<Option<DMatrix<f64>>> {
        let Some(rows) = &self.affinity else {
            return Ok(None);
        };
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Parse("affinity must be square".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parse("affinity must be finite".into()));
        }
        Ok(Some(DMatrix::from_fn(n, n, |i, j| rows[i][j])))
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.contains(&0) {
            return Err(Error::Parse("labels are 1-based".into()));
        }
        if let Some(a) = self.affinity_matrix()? {
            if a.nrows() != self.labels.len() {
                return Err(Error::Parse(format!(
                    "affinity has {} rows for {} labels",
                    a.nrows(),
                    self.labels.len()
                )));
            }
        }
        Ok(())
    }
}

/// Parses a prediction record; unknown fields (metrics, timings) are ignored.
pub fn parse_predictions(text: &str) -> Result<Predictions> {
    let p: Predictions = serde_json::from_str(text)?;
    p.validate()?;
    Ok(p)
}
