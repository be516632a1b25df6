use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification_error: Option<f64>,
}

/// Mean squared error, and with `classification` the fraction of
/// `sign(prediction)` (with `sign(0) = +1`) that disagree with ±1 labels.
pub fn compute_metrics(
    predictions: &[f64],
    targets: &[f64],
    classification: bool,
) -> Result<Metrics> {
    if predictions.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} predictions but {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let m = predictions.len() as f64;
    let mse = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / m;
    let classification_error = classification.then(|| {
        let wrong = predictions
            .iter()
            .zip(targets)
            .filter(|(p, y)| {
                let label = if **p >= 0.0 { 1.0 } else { -1.0 };
                label != y.signum()
            })
            .count();
        wrong as f64 / m
    });
    Ok(Metrics {
        mse,
        classification_error,
    })
}
