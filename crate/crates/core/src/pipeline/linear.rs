use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::pca::{center, column_means};
use crate::error::{shape_mismatch, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: DVector<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.ncols() != self.weights.len() {
            return Err(shape_mismatch(self.weights.len(), x.ncols()));
        }
        Ok((x * &self.weights).add_scalar(self.intercept))
    }
}

fn check_xy(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(shape_mismatch(x.nrows(), y.len()));
    }
    if x.nrows() == 0 {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    Ok(())
}

/// Least squares with intercept. Rank-deficient designs get the minimum-norm
/// weight vector.
pub fn ols_fit(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LinearModel> {
    check_xy(x, y)?;
    let xm = column_means(x);
    let ym = y.mean();
    let xc = center(x, &xm);
    let yc = y.add_scalar(-ym);
    let weights = if x.ncols() == 0 {
        DVector::zeros(0)
    } else {
        let svd = xc.svd(true, true);
        let smax = svd.singular_values.max();
        let eps = f64::EPSILON * x.nrows().max(x.ncols()) as f64 * smax;
        svd.solve(&yc, eps)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
    };
    let intercept = ym - xm.dot(&weights);
    Ok(LinearModel { weights, intercept })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LassoParams {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl LassoParams {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            max_iter: 100_000,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub model: LinearModel,
    /// Coefficients on the standardized design.
    pub standardized_weights: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Columns centered and scaled to unit mean square; constant columns keep
/// scale 0 and are never selected.
pub(crate) struct Standardized {
    pub x: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub scale: DVector<f64>,
    pub y: DVector<f64>,
    pub y_mean: f64,
}

pub(crate) fn standardize(x: &DMatrix<f64>, y: &DVector<f64>) -> Standardized {
    let m = x.nrows() as f64;
    let mean = column_means(x);
    let mut xs = center(x, &mean);
    let mut scale = DVector::zeros(x.ncols());
    for (j, mut col) in xs.column_iter_mut().enumerate() {
        let s = (col.norm_squared() / m).sqrt();
        if s > 0.0 {
            col /= s;
            scale[j] = s;
        }
    }
    let y_mean = y.mean();
    Standardized {
        x: xs,
        mean,
        scale,
        y: y.add_scalar(-y_mean),
        y_mean,
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Smallest λ for which all standardized weights are zero:
/// `max_j |x̃_jᵀ(y − ȳ)| / m`.
pub fn lasso_lambda_max(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    check_xy(x, y)?;
    let s = standardize(x, y);
    let corr = s.x.tr_mul(&s.y) / x.nrows() as f64;
    Ok(corr.amax())
}

/// Coordinate descent on `(1/2m)‖y − X̃w − b‖² + λ‖w‖₁` over the
/// standardized design `X̃`; weights are mapped back to the original scale.
///
/// Stops when the largest coordinate change in a sweep is below `tol`.
/// Reaching `max_iter` sweeps is reported through `converged`.
pub fn lasso_fit(x: &DMatrix<f64>, y: &DVector<f64>, params: LassoParams) -> Result<LassoFit> {
    check_xy(x, y)?;
    if !(params.lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {}",
            params.lambda
        )));
    }
    let m = x.nrows() as f64;
    let q = x.ncols();
    let s = standardize(x, y);
    let col_sq: Vec<f64> = s.x.column_iter().map(|c| c.norm_squared() / m).collect();

    let mut w = DVector::zeros(q);
    let mut resid = s.y.clone();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        let mut max_delta = 0.0f64;
        for j in 0..q {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = s.x.column(j);
            let rho = col.dot(&resid) / m + col_sq[j] * w[j];
            let next = soft_threshold(rho, params.lambda) / col_sq[j];
            let delta: f64 = next - w[j];
            if delta != 0.0 {
                resid.axpy(-delta, &col, 1.0);
                w[j] = next;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta <= params.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("lasso did not converge in {iterations} sweeps");
    }

    let weights = DVector::from_iterator(
        q,
        (0..q).map(|j| {
            if s.scale[j] > 0.0 {
                w[j] / s.scale[j]
            } else {
                0.0
            }
        }),
    );
    let intercept = s.y_mean - s.mean.dot(&weights);
    Ok(LassoFit {
        model: LinearModel { weights, intercept },
        standardized_weights: w,
        converged,
        iterations,
    })
}

/// Largest violation of the lasso optimality conditions on the standardized
/// design: `|x̃_jᵀr/m| ≤ λ` where `w_j = 0`, `x̃_jᵀr/m = λ·sign(w_j)`
/// elsewhere.
pub fn lasso_kkt_violation(x: &DMatrix<f64>, y: &DVector<f64>, fit: &LassoFit, lambda: f64) -> f64 {
    let s = standardize(x, y);
    let m = x.nrows() as f64;
    let resid = &s.y - &s.x * &fit.standardized_weights;
    let grad = s.x.tr_mul(&resid) / m;
    (0..x.ncols())
        .filter(|&j| s.scale[j] > 0.0)
        .map(|j| {
            let wj = fit.standardized_weights[j];
            if wj == 0.0 {
                (grad[j].abs() - lambda).max(0.0)
            } else {
                (grad[j] - lambda * wj.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}
