use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A feature matrix (one row per observation) paired with its targets.
///
/// Construction validates the shape and rejects non-finite entries, so every
/// `Dataset` in circulation has `n >= 1`, `p >= 1` and finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    targets: DVector<f64>,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, targets: DVector<f64>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::InvalidData(format!(
                "feature matrix must be non-empty, got {}x{}",
                features.nrows(),
                features.ncols()
            )));
        }
        if features.nrows() != targets.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} targets",
                features.nrows(),
                targets.len()
            )));
        }
        if let Some(idx) = features.iter().position(|v| !v.is_finite()) {
            let (row, col) = (idx % features.nrows(), idx / features.nrows());
            return Err(Error::InvalidData(format!(
                "non-finite feature at row {row}, column {col}"
            )));
        }
        if let Some(row) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite target at row {row}"
            )));
        }
        Ok(Self { features, targets })
    }

    /// Builds a dataset from row-major feature rows.
    pub fn from_rows(rows: &[Vec<f64>], targets: Vec<f64>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::Shape(format!(
                "row {bad} has {} columns, expected {p}",
                rows[bad].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(
            DMatrix::from_row_slice(rows.len(), p, &flat),
            DVector::from_vec(targets),
        )
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    /// Copies the given rows, in order, into a new dataset.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let features = self.features.select_rows(rows);
        let targets = DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.targets[r]));
        Ok(Self { features, targets })
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DVector<f64>) {
        (self.features, self.targets)
    }
}
