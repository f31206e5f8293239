use nalgebra::{DMatrix, DVector};

use super::metrics::pearson;
use crate::error::{shape_mismatch, Error, Result};

/// Univariate scores `|corr(X_j, y)|`; constant columns score 0.
pub fn feature_scores(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Vec<f64>> {
    if x.nrows() != y.len() {
        return Err(shape_mismatch(x.nrows(), y.len()));
    }
    if x.nrows() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 samples, got {}",
            x.nrows()
        )));
    }
    Ok(x.column_iter()
        .map(|col| {
            let col: Vec<f64> = col.iter().copied().collect();
            pearson(&col, y.as_slice()).map_or(0.0, f64::abs)
        })
        .collect())
}

/// Indices of the `k` best-scoring columns, best first; ties go to the lower
/// index.
pub fn select_k_best(x: &DMatrix<f64>, y: &DVector<f64>, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > x.ncols() {
        return Err(Error::KOutOfRange { k, max: x.ncols() });
    }
    let scores = feature_scores(x, y)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order)
}

/// Copies the given columns, in order.
pub fn take_columns(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |i, j| x[(i, cols[j])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn copy_of_target_ranks_first() {
        let y = DVector::from_vec(vec![1.0, 3.0, 2.0, 5.0]);
        let x = dmatrix![0.3, 1.0, 7.0; 0.1, 3.0, 7.0; 0.9, 2.0, 7.0; 0.2, 5.0, 7.0];
        assert_eq!(select_k_best(&x, &y, 1).unwrap(), vec![1]);
        let all = select_k_best(&x, &y, 3).unwrap();
        assert_eq!(all[0], 1);
        assert_eq!(all[2], 2, "constant column scores 0");
    }

    #[test]
    fn ties_prefer_lower_index() {
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = dmatrix![3.0, 1.0, 2.0; 2.0, 2.0, 4.0; 1.0, 3.0, 6.0];
        assert_eq!(select_k_best(&x, &y, 3).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn k_out_of_range() {
        let x = DMatrix::zeros(4, 2);
        let y = DVector::zeros(4);
        assert!(matches!(
            select_k_best(&x, &y, 0),
            Err(Error::KOutOfRange { .. })
        ));
        assert!(matches!(
            select_k_best(&x, &y, 3),
            Err(Error::KOutOfRange { k: 3, max: 2 })
        ));
    }
}
