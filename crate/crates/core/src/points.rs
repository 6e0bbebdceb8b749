use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `N` points in `ℝ^D`, stored one per row, with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: DMatrix<f64>,
    labels: Option<Vec<usize>>,
}

impl PointCloud {
    pub fn new(points: DMatrix<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        if points.ncols() == 0 {
            return Err(Error::InvalidArgument("points must have positive dimension".into()));
        }
        if let Some(l) = &labels {
            if l.len() != points.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: points.nrows(),
                    found: l.len(),
                });
            }
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("points must be finite".into()));
        }
        Ok(Self { points, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<usize>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        let m = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        Self::new(m, labels)
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn point(&self, j: usize) -> Vec<f64> {
        self.points.row(j).iter().copied().collect()
    }

    pub fn point_vector(&self, j: usize) -> DVector<f64> {
        self.points.row(j).transpose()
    }

    /// Every point rescaled to unit Euclidean norm. Zero points stay zero.
    pub fn normalized(&self) -> Self {
        let mut points = self.points.clone();
        normalize_rows(&mut points);
        Self {
            points,
            labels: self.labels.clone(),
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.points.row_iter().all(|r| (r.norm() - 1.0).abs() <= 1e-12)
    }

    /// Sub-cloud of the given rows, labels carried along.
    pub fn select(&self, indices: &[usize]) -> Self {
        let points = self.points.select_rows(indices);
        let labels = self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect());
        Self { points, labels }
    }

    /// Points mapped through a linear map: `y = A x`, for `A` with `D` columns.
    pub fn transformed(&self, map: &DMatrix<f64>) -> Result<Self> {
        if map.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: map.ncols(),
            });
        }
        Ok(Self {
            points: &self.points * map.transpose(),
            labels: self.labels.clone(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: &self.points * factor,
            labels: self.labels.clone(),
        }
    }

    pub fn with_labels(mut self, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.len(),
                    found: l.len(),
                });
            }
        }
        self.labels = labels;
        Ok(self)
    }
}

pub(crate) fn normalize_rows(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= n;
        }
    }
}
