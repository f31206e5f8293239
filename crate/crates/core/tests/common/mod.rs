#![allow(dead_code)]

use graphlet_core::Graph;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn normal_vector(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Connected graph: a random spanning path plus extra random edges with
/// weights in (0.1, 2).
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    let mut w = DMatrix::zeros(n, n);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    for pair in order.windows(2) {
        let v = rng.random_range(0.1..2.0);
        w[(pair[0], pair[1])] = v;
        w[(pair[1], pair[0])] = v;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if w[(i, j)] == 0.0 && rng.random::<f64>() < p {
                let v = rng.random_range(0.1..2.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    Graph::new(w).unwrap()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Node-domain atoms `ψ_{b,i} = U·diag(g_b(λ))·Uᵀ·δ_i` built one at a time
/// from the dense spectrum; coefficients are `⟨ψ_{b,i}, f⟩`.
pub fn naive_coefficients(
    u: &DMatrix<f64>,
    lambdas: &DVector<f64>,
    kernel: impl Fn(usize, f64) -> f64,
    n_bands: usize,
    f: &DVector<f64>,
) -> DMatrix<f64> {
    let n = f.len();
    let mut out = DMatrix::zeros(n_bands, n);
    for b in 0..n_bands {
        for i in 0..n {
            let mut atom = DVector::zeros(n);
            for k in 0..n {
                let gk = kernel(b, lambdas[k]);
                for v in 0..n {
                    atom[v] += gk * u[(i, k)] * u[(v, k)];
                }
            }
            out[(b, i)] = atom.dot(f);
        }
    }
    out
}
