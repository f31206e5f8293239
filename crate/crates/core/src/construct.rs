//! Graphs inferred from multivariate time series: covariance and
//! correlation, thresholded/binary variants, k-nearest-neighbour pruning,
//! distance-pruned semi-local graphs, and smoothness-based graph learning.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{shape_mismatch, Error, Result};
use crate::graph::Graph;

/// `T × n` observations: rows are time points, columns are nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesMatrix {
    data: DMatrix<f64>,
}

impl TimeSeriesMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 observations, got {}",
                data.nrows()
            )));
        }
        if data.ncols() == 0 {
            return Err(Error::InvalidArgument("time series has no columns".into()));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % data.nrows(), pos / data.nrows());
            return Err(Error::Parse {
                row: row + 1,
                col: col + 1,
                message: "non-finite value".into(),
            });
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn n_obs(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.data.ncols()
    }

    fn centered(&self) -> DMatrix<f64> {
        let mut c = self.data.clone();
        for mut col in c.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        c
    }
}

fn zero_diagonal(mut m: DMatrix<f64>) -> Result<Graph> {
    m.fill_diagonal(0.0);
    Graph::from_symmetrized(m)
}

/// Sample covariance (denominator `T − 1`) with the diagonal cleared.
pub fn covariance_graph(x: &TimeSeriesMatrix) -> Result<Graph> {
    let c = x.centered();
    let cov = c.tr_mul(&c) / (x.n_obs() - 1) as f64;
    zero_diagonal(cov)
}

/// Pearson correlation with the diagonal cleared.
pub fn correlation_graph(x: &TimeSeriesMatrix) -> Result<Graph> {
    let mut c = x.centered();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::DegenerateSeries(j));
        }
        col /= norm;
    }
    let corr = c.tr_mul(&c).map(|v| v.clamp(-1.0, 1.0));
    zero_diagonal(corr)
}

/// Zeroes weights with `|w| < t`; with `binary`, survivors become 1.
pub fn threshold_graph(g: &Graph, t: f64, binary: bool) -> Result<Graph> {
    let w = g.weights().map(|v| {
        if v.abs() < t || v == 0.0 {
            0.0
        } else if binary {
            1.0
        } else {
            v
        }
    });
    rebuild(g, w)
}

fn rebuild(g: &Graph, w: DMatrix<f64>) -> Result<Graph> {
    let out = Graph::new(w)?;
    match g.coords() {
        Some(c) => out.with_coords(c.clone()),
        None => Ok(out),
    }
}

/// Keeps each node's `k` strongest (largest `|w|`) edges. An edge survives if
/// either endpoint keeps it. Ties go to the lower node index.
pub fn knn_graph(g: &Graph, k: usize, binary: bool) -> Result<Graph> {
    let n = g.n_nodes();
    if k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let w = g.weights();
    let mut keep = vec![false; n * n];
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        // Stable sort keeps index order among equal magnitudes.
        others.sort_by(|&a, &b| w[(i, b)].abs().total_cmp(&w[(i, a)].abs()));
        for &j in &others[..k] {
            keep[i * n + j] = true;
            keep[j * n + i] = true;
        }
    }
    let out = DMatrix::from_fn(n, n, |i, j| {
        if keep[i * n + j] {
            let v = w[(i, j)];
            if binary && v != 0.0 {
                1.0
            } else {
                v
            }
        } else {
            0.0
        }
    });
    rebuild(g, out)
}

struct DisjointSets {
    parent: Vec<usize>,
    components: usize,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            components: n,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
            self.components -= 1;
        }
    }
}

fn euclidean(coords: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (coords.row(i) - coords.row(j)).norm()
}

/// Smallest pairwise distance `t*` such that the nonzero-weight edges no
/// longer than `t*` connect the graph.
pub fn semi_local_threshold(g: &Graph, coords: &DMatrix<f64>) -> Result<f64> {
    let n = g.n_nodes();
    if coords.nrows() != n {
        return Err(shape_mismatch(
            format!("{n} coordinate rows"),
            coords.nrows(),
        ));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let w = g.weights();
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            if w[(i, j)] != 0.0 {
                edges.push((euclidean(coords, i, j), i, j));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut sets = DisjointSets::new(n);
    for (d, i, j) in edges {
        sets.union(i, j);
        if sets.components == 1 {
            return Ok(d);
        }
    }
    Err(Error::DisconnectedAtAnyThreshold)
}

/// Zeroes the weights of node pairs farther apart than the connectivity
/// threshold [`semi_local_threshold`].
pub fn semi_local_graph(g: &Graph, coords: &DMatrix<f64>) -> Result<Graph> {
    let t = semi_local_threshold(g, coords)?;
    let n = g.n_nodes();
    let w = DMatrix::from_fn(n, n, |i, j| {
        if i != j && euclidean(coords, i, j) <= t {
            g.weights()[(i, j)]
        } else {
            0.0
        }
    });
    Graph::new(w)?.with_coords(coords.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KalofoliasParams {
    pub alpha: f64,
    pub beta: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KalofoliasParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            max_iter: 2000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LearnedGraph {
    pub graph: Graph,
    pub converged: bool,
    pub iterations: usize,
    /// Objective after iteration 1, every
    /// [`KALOFOLIAS_CHECKPOINT`] iterations, and at the returned iterate.
    pub objective_checkpoints: Vec<f64>,
}

pub const KALOFOLIAS_CHECKPOINT: usize = 10;

/// Pairs `(i, j)` with `i < j`, in row-major order.
struct PairIndex {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairIndex {
    fn new(n: usize) -> Self {
        let pairs = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        Self { n, pairs }
    }

    /// Degrees `S w`.
    fn degrees(&self, w: &[f64]) -> DVector<f64> {
        let mut d = DVector::zeros(self.n);
        for (&(i, j), &v) in self.pairs.iter().zip(w) {
            d[i] += v;
            d[j] += v;
        }
        d
    }
}

/// `‖W ⊙ Z‖₁ − α·1ᵀlog(W1) + β‖W‖²_F` written on the upper-triangle edge
/// vector `w`, where both full-matrix norms count every edge twice.
struct LogDegreeObjective<'a> {
    pairs: &'a PairIndex,
    z: &'a [f64],
    alpha: f64,
    beta: f64,
}

impl LogDegreeObjective<'_> {
    fn value(&self, w: &[f64]) -> f64 {
        let d = self.pairs.degrees(w);
        if d.iter().any(|&v| !(v > 0.0)) {
            return f64::INFINITY;
        }
        let linear: f64 = w.iter().zip(self.z).map(|(a, b)| a * b).sum();
        let frob: f64 = w.iter().map(|v| v * v).sum();
        2.0 * linear - self.alpha * d.iter().map(|v| v.ln()).sum::<f64>() + 2.0 * self.beta * frob
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let inv_deg = self.pairs.degrees(w).map(|v| 1.0 / v);
        self.pairs
            .pairs
            .iter()
            .zip(w.iter().zip(self.z))
            .map(|(&(i, j), (&we, &ze))| {
                2.0 * ze - self.alpha * (inv_deg[i] + inv_deg[j]) + 4.0 * self.beta * we
            })
            .collect()
    }

    /// Best constant edge weight, used as the starting point.
    fn constant_start(&self) -> f64 {
        let m = self.z.len() as f64;
        let n = self.pairs.n as f64;
        let zsum: f64 = self.z.iter().sum();
        // d/dc of F(c·1): 2Σz − αn/c + 4βmc = 0.
        if self.beta > 0.0 {
            let a = 4.0 * self.beta * m;
            (-2.0 * zsum + (4.0 * zsum * zsum + 4.0 * a * self.alpha * n).sqrt()) / (2.0 * a)
        } else if zsum > 0.0 {
            self.alpha * n / (2.0 * zsum)
        } else {
            1.0
        }
    }
}

const MIN_STEP: f64 = 1e-20;

/// Learns a nonnegative symmetric graph on which the columns of `x` are
/// smooth by minimizing the log-degree model. Pairwise squared distances
/// between node signals are normalized by their mean.
///
/// The solver is projected gradient descent with Barzilai–Borwein steps and
/// a sufficient-decrease backtracking test, so every accepted step lowers
/// the objective. Not reaching `tol` is reported through `converged`, not as
/// an error; the last (and best) iterate is returned either way.
pub fn kalofolias_learn(x: &TimeSeriesMatrix, params: KalofoliasParams) -> Result<LearnedGraph> {
    let KalofoliasParams {
        alpha,
        beta,
        max_iter,
        tol,
    } = params;
    if !(alpha > 0.0) || !(beta >= 0.0) || max_iter == 0 || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid learning parameters {params:?}"
        )));
    }
    let n = x.n_nodes();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 nodes".into()));
    }
    let pairs = PairIndex::new(n);
    let data = x.data();
    let mut z: Vec<f64> = pairs
        .pairs
        .iter()
        .map(|&(i, j)| (data.column(i) - data.column(j)).norm_squared())
        .collect();
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    if mean > 0.0 {
        z.iter_mut().for_each(|v| *v /= mean);
    }
    let objective = LogDegreeObjective {
        pairs: &pairs,
        z: &z,
        alpha,
        beta,
    };

    let mut w = vec![objective.constant_start(); z.len()];
    let mut value = objective.value(&w);
    let mut grad = objective.gradient(&w);
    let mut step = 1.0;
    let mut checkpoints = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=max_iter {
        iterations = it;
        let (next, next_value) = loop {
            let cand: Vec<f64> = w
                .iter()
                .zip(&grad)
                .map(|(wi, gi)| (wi - step * gi).max(0.0))
                .collect();
            let cand_value = objective.value(&cand);
            // F(w⁺) ≤ F(w) + ∇F·(w⁺ − w) + ‖w⁺ − w‖²/(2t)
            let (lin, sq) =
                cand.iter()
                    .zip(&w)
                    .zip(&grad)
                    .fold((0.0, 0.0), |(l, s), ((c, wi), g)| {
                        let d = c - wi;
                        (l + g * d, s + d * d)
                    });
            if cand_value <= value + lin + sq / (2.0 * step) || step < MIN_STEP {
                break (cand, cand_value.min(value));
            }
            step *= 0.5;
        };
        if next_value > value {
            // Step underflowed without progress.
            break;
        }

        let next_grad = objective.gradient(&next);
        let (mut ss, mut sy, mut change, mut norm) = (0.0, 0.0, 0.0, 0.0);
        for e in 0..w.len() {
            let s = next[e] - w[e];
            let y = next_grad[e] - grad[e];
            ss += s * s;
            sy += s * y;
            change += s * s;
            norm += next[e] * next[e];
        }
        w = next;
        value = next_value;
        grad = next_grad;

        if it == 1 || it % KALOFOLIAS_CHECKPOINT == 0 {
            checkpoints.push(value);
        }
        if change.sqrt() <= tol * norm.sqrt() {
            converged = true;
            break;
        }
        step = if sy > 0.0 { ss / sy } else { step * 2.0 };
    }
    if checkpoints.last() != Some(&value) {
        checkpoints.push(value);
    }
    if !converged {
        log::warn!(
            "graph learning stopped after {iterations} iterations without reaching tol {tol:e}"
        );
    }

    let mut weights = DMatrix::zeros(n, n);
    for (&(i, j), &v) in pairs.pairs.iter().zip(&w) {
        weights[(i, j)] = v;
        weights[(j, i)] = v;
    }
    Ok(LearnedGraph {
        graph: Graph::new(weights)?,
        converged,
        iterations,
        objective_checkpoints: checkpoints,
    })
}
