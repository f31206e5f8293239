//! Graphs, Laplacians and the graph Fourier basis.
//!
//! Degrees are always taken from absolute weight values, `D_ii = Σ_j |w_ij|`,
//! so that `L = D − W` stays positive semi-definite when some weights are
//! negative (as in covariance or correlation graphs).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Error, Result};

/// A real value per vertex.
pub type GraphSignal = DVector<f64>;

/// Undirected weighted graph stored as a dense symmetric weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    weights: DMatrix<f64>,
    coords: Option<DMatrix<f64>>,
}

impl Graph {
    /// Validates exact symmetry and a zero diagonal.
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() != weights.ncols() {
            return Err(shape_mismatch(
                "square weight matrix",
                format!("{}x{}", weights.nrows(), weights.ncols()),
            ));
        }
        if weights.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "graph must have at least one node".into(),
            ));
        }
        let n = weights.nrows();
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::NonzeroDiagonal(i));
            }
            for j in (i + 1)..n {
                let (a, b) = (weights[(i, j)], weights[(j, i)]);
                if a != b || !a.is_finite() {
                    return Err(Error::AsymmetricInput { row: i, col: j });
                }
            }
        }
        Ok(Self {
            weights,
            coords: None,
        })
    }

    /// Builds a graph from any square matrix: the result is `(W + Wᵀ)/2` with
    /// the diagonal cleared.
    pub fn from_symmetrized(mut weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() != weights.ncols() {
            return Err(shape_mismatch(
                "square weight matrix",
                format!("{}x{}", weights.nrows(), weights.ncols()),
            ));
        }
        let n = weights.nrows();
        for i in 0..n {
            weights[(i, i)] = 0.0;
            for j in (i + 1)..n {
                let avg = 0.5 * (weights[(i, j)] + weights[(j, i)]);
                weights[(i, j)] = avg;
                weights[(j, i)] = avg;
            }
        }
        Self::new(weights)
    }

    pub fn with_coords(mut self, coords: DMatrix<f64>) -> Result<Self> {
        if coords.nrows() != self.n_nodes() {
            return Err(shape_mismatch(
                format!("{} coordinate rows", self.n_nodes()),
                coords.nrows(),
            ));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn coords(&self) -> Option<&DMatrix<f64>> {
        self.coords.as_ref()
    }

    pub fn into_weights(self) -> DMatrix<f64> {
        self.weights
    }

    /// Absolute degrees `Σ_j |w_ij|`.
    pub fn degrees(&self) -> DVector<f64> {
        let n = self.n_nodes();
        DVector::from_iterator(
            n,
            (0..n).map(|i| self.weights.row(i).iter().map(|w| w.abs()).sum()),
        )
    }

    /// Number of undirected edges with nonzero weight.
    pub fn edge_count(&self) -> usize {
        let n = self.n_nodes();
        (0..n)
            .map(|i| {
                ((i + 1)..n)
                    .filter(|&j| self.weights[(i, j)] != 0.0)
                    .count()
            })
            .sum()
    }

    /// Connectivity over nonzero-weight edges.
    pub fn is_connected(&self) -> bool {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for (j, visited) in seen.iter_mut().enumerate() {
                if !*visited && self.weights[(i, j)] != 0.0 {
                    *visited = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    #[default]
    Combinatorial,
    Normalized,
}

#[derive(Debug, Clone)]
pub struct Laplacian {
    matrix: DMatrix<f64>,
    kind: LaplacianKind,
}

impl Laplacian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    /// Wraps an arbitrary symmetric matrix, e.g. for testing the eigensolver.
    pub fn from_matrix(matrix: DMatrix<f64>, kind: LaplacianKind) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(shape_mismatch(
                "square matrix",
                format!("{}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        let n = matrix.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 {
                    return Err(Error::AsymmetricInput { row: i, col: j });
                }
            }
        }
        Ok(Self { matrix, kind })
    }

    /// `fᵀ L f`.
    pub fn quadratic_form(&self, f: &GraphSignal) -> Result<f64> {
        check_len(self.n_nodes(), f.len())?;
        Ok(f.dot(&(&self.matrix * f)))
    }
}

/// `L = D − W` with absolute degrees; the normalized kind is
/// `D^{-1/2} L D^{-1/2}`.
pub fn build_laplacian(g: &Graph, kind: LaplacianKind) -> Result<Laplacian> {
    let n = g.n_nodes();
    let deg = g.degrees();
    let mut l = -g.weights().clone();
    for i in 0..n {
        l[(i, i)] = deg[i];
    }
    if kind == LaplacianKind::Normalized {
        if let Some(i) = deg.iter().position(|&d| d == 0.0) {
            return Err(Error::IsolatedNode(i));
        }
        let inv_sqrt = deg.map(|d| 1.0 / d.sqrt());
        for i in 0..n {
            for j in 0..n {
                l[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
            }
        }
        // Row and column scaling can leave ulp-level asymmetry.
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (l[(i, j)] + l[(j, i)]);
                l[(i, j)] = avg;
                l[(j, i)] = avg;
            }
        }
    }
    Ok(Laplacian { matrix: l, kind })
}

/// Ascending eigenvalues with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn n_nodes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.n_nodes() - 1]
    }

    /// Graph Fourier transform `Uᵀ f`.
    pub fn gft(&self, f: &GraphSignal) -> Result<DVector<f64>> {
        check_len(self.n_nodes(), f.len())?;
        Ok(self.eigenvectors.tr_mul(f))
    }

    /// Inverse transform `U f̂`.
    pub fn igft(&self, fhat: &DVector<f64>) -> Result<GraphSignal> {
        check_len(self.n_nodes(), fhat.len())?;
        Ok(&self.eigenvectors * fhat)
    }

    /// Row-wise transform of an `m × n` signal matrix: `X U`.
    pub fn gft_rows(&self, signals: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_len(self.n_nodes(), signals.ncols())?;
        Ok(signals * &self.eigenvectors)
    }

    /// Row-wise inverse: `F̂ Uᵀ`.
    pub fn igft_rows(&self, coeffs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_len(self.n_nodes(), coeffs.ncols())?;
        Ok(coeffs * self.eigenvectors.transpose())
    }
}

const EIGEN_MAX_SWEEPS: usize = 10_000;

/// Full symmetric eigendecomposition with a deterministic sign convention:
/// each eigenvector's entry of largest magnitude is nonnegative, ties going
/// to the lowest index.
pub fn eigendecompose(l: &Laplacian) -> Result<Spectrum> {
    let m = l.matrix();
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_SWEEPS).ok_or(
        Error::ConvergenceFailure {
            residual: f64::INFINITY,
        },
    )?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        eigenvectors.set_column(dst, &col);
    }

    let scale = m.norm().max(1.0);
    let residual =
        (m * &eigenvectors - &eigenvectors * DMatrix::from_diagonal(&eigenvalues)).amax() / scale;
    if !(residual <= 1e-8) {
        return Err(Error::ConvergenceFailure { residual });
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

pub fn gft(s: &Spectrum, f: &GraphSignal) -> Result<DVector<f64>> {
    s.gft(f)
}

pub fn igft(s: &Spectrum, fhat: &DVector<f64>) -> Result<GraphSignal> {
    s.igft(fhat)
}

pub fn laplacian_quadratic_form(l: &Laplacian, f: &GraphSignal) -> Result<f64> {
    l.quadratic_form(f)
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(shape_mismatch(expected, actual));
    }
    Ok(())
}
