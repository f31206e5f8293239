use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub rmse: f64,
    pub r2: f64,
    /// `None` when either input is constant.
    pub pearson: Option<f64>,
}

/// Pearson correlation; `None` if either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// MSE, RMSE, `R² = 1 − SS_res/SS_tot` and Pearson correlation. A constant
/// `y_true` gives `R² = 1` for a perfect prediction and 0 otherwise.
pub fn metrics(y_true: &DVector<f64>, y_pred: &DVector<f64>) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(shape_mismatch(y_true.len(), y_pred.len()));
    }
    if y_true.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 samples to score".into(),
        ));
    }
    let n = y_true.len() as f64;
    let ss_res: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p).powi(2))
        .sum();
    let mean = y_true.mean();
    let ss_tot: f64 = y_true.iter().map(|t| (t - mean).powi(2)).sum();
    let mse = ss_res / n;
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(Metrics {
        mse,
        rmse: mse.sqrt(),
        r2,
        pearson: pearson(y_true.as_slice(), y_pred.as_slice()),
    })
}
