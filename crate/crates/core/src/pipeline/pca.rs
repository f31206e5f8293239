use nalgebra::{DMatrix, DVector};

use crate::error::{shape_mismatch, Error, Result};

/// Principal axes of centered training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: DVector<f64>,
    /// `n_components × q`, orthonormal rows.
    pub components: DMatrix<f64>,
    /// Variance along each component (denominator `m − 1`), nonincreasing.
    pub explained_variance: Vec<f64>,
    /// Total variance of the centered data.
    pub total_variance: f64,
}

pub(crate) fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.mean()))
}

pub(crate) fn center(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    c
}

/// Fits via the SVD of the centered matrix. Each component's largest-magnitude
/// entry is made nonnegative.
pub fn pca_fit(x: &DMatrix<f64>, n_components: usize) -> Result<Pca> {
    let (m, q) = x.shape();
    let max = m.min(q);
    if n_components == 0 || n_components > max {
        return Err(Error::TooManyComponents {
            requested: n_components,
            max,
        });
    }
    if m < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let mean = column_means(x);
    let centered = center(x, &mean);
    let total_variance = centered.norm_squared() / (m - 1) as f64;

    let svd = centered.svd(false, true);
    let vt = svd.v_t.ok_or(Error::ConvergenceFailure {
        residual: f64::INFINITY,
    })?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.truncate(n_components);

    let mut components = DMatrix::zeros(n_components, q);
    let mut explained_variance = Vec::with_capacity(n_components);
    for (r, &k) in order.iter().enumerate() {
        let mut row = vt.row(k).into_owned();
        let mut pivot = 0;
        for j in 1..q {
            if row[j].abs() > row[pivot].abs() {
                pivot = j;
            }
        }
        if row[pivot] < 0.0 {
            row.neg_mut();
        }
        components.set_row(r, &row);
        explained_variance.push(svd.singular_values[k].powi(2) / (m - 1) as f64);
    }
    Ok(Pca {
        mean,
        components,
        explained_variance,
        total_variance,
    })
}

impl Pca {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(shape_mismatch(self.mean.len(), x.ncols()));
        }
        Ok(center(x, &self.mean) * self.components.transpose())
    }

    /// Maps scores back to the input space.
    pub fn inverse_transform(&self, scores: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if scores.ncols() != self.n_components() {
            return Err(shape_mismatch(self.n_components(), scores.ncols()));
        }
        let mut out = scores * &self.components;
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col.add_scalar_mut(self.mean[j]);
        }
        Ok(out)
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance
            .iter()
            .map(|v| v / self.total_variance)
            .collect()
    }
}

pub fn pca_transform(model: &Pca, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    model.transform(x)
}
