use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::linear::{lasso_fit, ols_fit, LassoParams, LinearModel};
use super::metrics::{metrics, Metrics};
use super::pca::{pca_fit, Pca};
use super::select::{select_k_best, take_columns};
use crate::error::{shape_mismatch, Error, Result};
use crate::synth::stream_rng;

const STREAM_CV_SHUFFLE: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CvScheme {
    KFold {
        k: usize,
        #[serde(default)]
        shuffle_seed: Option<u64>,
    },
    LeaveOneGroupOut {
        groups: Vec<i64>,
    },
}

impl CvScheme {
    /// Held-out index sets, one per fold. Together they partition `0..m`.
    pub fn test_folds(&self, m: usize) -> Result<Vec<Vec<usize>>> {
        match self {
            CvScheme::KFold { k, shuffle_seed } => {
                if *k < 2 || *k > m {
                    return Err(Error::InvalidArgument(format!(
                        "k-fold needs 2 <= k <= {m}, got {k}"
                    )));
                }
                let mut idx: Vec<usize> = (0..m).collect();
                if let Some(seed) = shuffle_seed {
                    idx.shuffle(&mut stream_rng(*seed, STREAM_CV_SHUFFLE));
                }
                let (base, extra) = (m / k, m % k);
                let mut folds = Vec::with_capacity(*k);
                let mut start = 0;
                for f in 0..*k {
                    let size = base + usize::from(f < extra);
                    let mut fold = idx[start..start + size].to_vec();
                    fold.sort_unstable();
                    folds.push(fold);
                    start += size;
                }
                Ok(folds)
            }
            CvScheme::LeaveOneGroupOut { groups } => {
                if groups.len() != m {
                    return Err(shape_mismatch(m, groups.len()));
                }
                let mut labels = groups.clone();
                labels.sort_unstable();
                labels.dedup();
                if labels.len() < 2 {
                    return Err(Error::InvalidArgument(
                        "leave-one-group-out needs at least 2 groups".into(),
                    ));
                }
                Ok(labels
                    .iter()
                    .map(|g| (0..m).filter(|&i| groups[i] == *g).collect())
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regressor {
    Ols,
    Lasso {
        lambda: f64,
    },
    /// Lasso with λ picked by inner k-fold CV (lowest mean MSE) on the
    /// training fold only.
    LassoCv {
        lambdas: Vec<f64>,
        inner_folds: usize,
    },
}

/// Feature selection, then PCA, then a regressor; every stage is fit on
/// training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default)]
    pub k_best: Option<usize>,
    #[serde(default)]
    pub pca_components: Option<usize>,
    pub regressor: Regressor,
}

impl ModelSpec {
    pub fn ols() -> Self {
        Self {
            k_best: None,
            pca_components: None,
            regressor: Regressor::Ols,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub selected: Option<Vec<usize>>,
    pub pca: Option<Pca>,
    pub model: LinearModel,
    /// λ actually used, for the lasso regressors.
    pub lambda: Option<f64>,
}

impl FittedPipeline {
    fn features(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut z = match &self.selected {
            Some(cols) => take_columns(x, cols),
            None => x.clone(),
        };
        if let Some(p) = &self.pca {
            z = p.transform(&z)?;
        }
        Ok(z)
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.model.predict(&self.features(x)?)
    }
}

pub fn fit_pipeline(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    spec: &ModelSpec,
) -> Result<FittedPipeline> {
    let selected = match spec.k_best {
        Some(k) => Some(select_k_best(x, y, k.min(x.ncols()))?),
        None => None,
    };
    let mut fitted = FittedPipeline {
        selected,
        pca: None,
        model: LinearModel {
            weights: DVector::zeros(0),
            intercept: 0.0,
        },
        lambda: None,
    };
    let mut z = fitted.features(x)?;
    if let Some(nc) = spec.pca_components {
        let p = pca_fit(&z, nc)?;
        z = p.transform(&z)?;
        fitted.pca = Some(p);
    }
    let (model, lambda) = match &spec.regressor {
        Regressor::Ols => (ols_fit(&z, y)?, None),
        Regressor::Lasso { lambda } => (
            lasso_fit(&z, y, LassoParams::new(*lambda))?.model,
            Some(*lambda),
        ),
        Regressor::LassoCv {
            lambdas,
            inner_folds,
        } => {
            let best = choose_lambda(&z, y, lambdas, *inner_folds)?;
            (lasso_fit(&z, y, LassoParams::new(best))?.model, Some(best))
        }
    };
    fitted.model = model;
    fitted.lambda = lambda;
    Ok(fitted)
}

fn choose_lambda(x: &DMatrix<f64>, y: &DVector<f64>, lambdas: &[f64], inner: usize) -> Result<f64> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    let folds = CvScheme::KFold {
        k: inner,
        shuffle_seed: None,
    }
    .test_folds(x.nrows())?;
    let mut best = (f64::INFINITY, lambdas[0]);
    for &lambda in lambdas {
        let mut total = 0.0;
        for test in &folds {
            let train = complement(x.nrows(), test);
            let fit = lasso_fit(
                &rows(x, &train),
                &subvec(y, &train),
                LassoParams::new(lambda),
            )?;
            let pred = fit.model.predict(&rows(x, test))?;
            total += (pred - subvec(y, test)).norm_squared();
        }
        if total < best.0 {
            best = (total, lambda);
        }
    }
    Ok(best.1)
}

pub(crate) fn rows(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), x.ncols(), |i, j| x[(idx[i], j)])
}

pub(crate) fn subvec(y: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| y[i]))
}

fn complement(m: usize, test: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; m];
    for &i in test {
        mask[i] = false;
    }
    (0..m).filter(|&i| mask[i]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mse: f64,
    pub rmse: f64,
    pub r2: f64,
    pub pearson: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub folds: Vec<Metrics>,
    pub fitted: Vec<FittedPipeline>,
    pub mean: MetricSummary,
    /// Standard error of the mean over folds, `sd / √n_folds`.
    pub se: MetricSummary,
}

pub(crate) fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean and standard error per metric. Pearson is averaged over the folds
/// where it is defined.
pub fn summarize(scores: &[Metrics]) -> (MetricSummary, MetricSummary) {
    let pick = |f: fn(&Metrics) -> f64| mean_se(&scores.iter().map(f).collect::<Vec<_>>());
    let (mse, mse_se) = pick(|m| m.mse);
    let (rmse, rmse_se) = pick(|m| m.rmse);
    let (r2, r2_se) = pick(|m| m.r2);
    let pearsons: Vec<f64> = scores.iter().filter_map(|m| m.pearson).collect();
    let (p, p_se) = if pearsons.is_empty() {
        (None, None)
    } else {
        let (a, b) = mean_se(&pearsons);
        (Some(a), Some(b))
    };
    (
        MetricSummary {
            mse,
            rmse,
            r2,
            pearson: p,
        },
        MetricSummary {
            mse: mse_se,
            rmse: rmse_se,
            r2: r2_se,
            pearson: p_se,
        },
    )
}

/// Scores `spec` on each held-out fold after fitting it on the remaining
/// rows.
pub fn cross_validate(
    features: &DMatrix<f64>,
    y: &DVector<f64>,
    spec: &ModelSpec,
    cv: &CvScheme,
) -> Result<CvResult> {
    if features.nrows() != y.len() {
        return Err(shape_mismatch(features.nrows(), y.len()));
    }
    let m = y.len();
    let folds = cv.test_folds(m)?;
    let mut scores = Vec::with_capacity(folds.len());
    let mut fitted = Vec::with_capacity(folds.len());
    for (f, test) in folds.iter().enumerate() {
        let train = complement(m, test);
        if test.len() < 2 || train.len() < 3 {
            return Err(Error::FoldTooSmall {
                fold: f,
                size: test.len().min(train.len()),
            });
        }
        let model = fit_pipeline(&rows(features, &train), &subvec(y, &train), spec)?;
        let pred = model.predict(&rows(features, test))?;
        scores.push(metrics(&subvec(y, test), &pred)?);
        fitted.push(model);
    }
    let (mean, se) = summarize(&scores);
    Ok(CvResult {
        folds: scores,
        fitted,
        mean,
        se,
    })
}
