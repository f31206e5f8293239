//! Synthetic regression problem with graph-smooth inputs.
//!
//! A connected Erdős–Rényi graph defines a diffusion operator
//! `A = I + D⁻¹W`. Random signals `R` are diffused to `R̂ = R·A`, the target
//! is `y = log(R̂·β + c)` and the observed inputs are `X = R̂ + σ·G`.
//!
//! # Reproducibility
//!
//! All randomness comes from ChaCha20 ([`GENERATOR`]) seeded with
//! `seed_from_u64(seed)`. Each quantity draws from its own stream
//! (`set_stream`): graph attempt `a` uses stream `0x100 + a`, `R` stream 1,
//! `β` stream 2, noise stream 3. Matrices are filled row by row.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io;

/// Name and version of the pseudo-random generator and stream layout.
pub const GENERATOR: &str = "chacha20/streams-v1";

pub const MAX_GRAPH_ATTEMPTS: usize = 100;

const STREAM_GRAPH: u64 = 0x100;
const STREAM_SIGNALS: u64 = 1;
const STREAM_WEIGHTS: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// A ChaCha20 generator positioned on one of the documented sub-streams.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer, used to derive independent per-trial seeds.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Unit-weight G(n, p) graph, resampled until connected.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 nodes, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "edge probability {p} not in [0, 1]"
        )));
    }
    for attempt in 0..MAX_GRAPH_ATTEMPTS {
        let mut rng = stream_rng(seed, STREAM_GRAPH + attempt as u64);
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    w[(i, j)] = 1.0;
                    w[(j, i)] = 1.0;
                }
            }
        }
        let g = Graph::new(w)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::ConnectivityFailure {
        attempts: MAX_GRAPH_ATTEMPTS,
    })
}

/// `I + D⁻¹W`, or half of it when `halved` (the conventional lazy walk).
pub fn diffusion_operator(g: &Graph, halved: bool) -> Result<DMatrix<f64>> {
    let deg = g.degrees();
    if let Some(i) = deg.iter().position(|&d| d == 0.0) {
        return Err(Error::IsolatedNode(i));
    }
    let n = g.n_nodes();
    let mut a = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += g.weights()[(i, j)] / deg[i];
        }
    }
    if halved {
        a *= 0.5;
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_nodes: usize,
    pub n_samples: usize,
    pub edge_prob: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub halved_diffusion: bool,
    pub diffusion_steps: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_nodes: 500,
            n_samples: 200,
            edge_prob: 0.1,
            noise_sigma: 0.1,
            seed: 0,
            halved_diffusion: false,
            diffusion_steps: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub params: SynthParams,
    pub graph: Graph,
    /// Undiffused signals `R`.
    pub raw: DMatrix<f64>,
    /// Diffused, noise-free signals `R̂`.
    pub clean: DMatrix<f64>,
    /// Observed inputs `X = R̂ + σG`.
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub beta: DVector<f64>,
    /// Shift `c` added inside the logarithm.
    pub shift: f64,
}

#[derive(Debug, Serialize)]
struct DatasetMeta<'a> {
    generator: &'a str,
    params: &'a SynthParams,
    shift: f64,
    edges: usize,
}

impl SyntheticDataset {
    pub fn seed(&self) -> u64 {
        self.params.seed
    }

    /// Writes `weights.csv`, `X.csv`, `y.csv` and `meta.json` into `dir`.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        io::write_matrix(dir.join("weights.csv"), self.graph.weights())?;
        io::write_matrix(dir.join("X.csv"), &self.x)?;
        io::write_vector(dir.join("y.csv"), &self.y)?;
        io::write_json(
            dir.join("meta.json"),
            &DatasetMeta {
                generator: GENERATOR,
                params: &self.params,
                shift: self.shift,
                edges: self.graph.edge_count(),
            },
        )
    }
}

fn normal_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

/// Draws `R` (standard normal), diffuses it, draws `β ~ U(0, 1)`, and forms
/// `y_i = log(R̂_i·β + c)` with `c = 1 + max(0, −min_i R̂_i·β)` so every
/// argument is at least 1.
pub fn generate_dataset(params: SynthParams) -> Result<SyntheticDataset> {
    let SynthParams {
        n_nodes: n,
        n_samples: m,
        edge_prob,
        noise_sigma,
        seed,
        halved_diffusion,
        diffusion_steps,
    } = params;
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "bad noise sigma {noise_sigma}"
        )));
    }
    let graph = erdos_renyi(n, edge_prob, seed)?;
    let a = diffusion_operator(&graph, halved_diffusion)?;

    let raw = normal_matrix(&mut stream_rng(seed, STREAM_SIGNALS), m, n);
    let mut clean = raw.clone();
    for _ in 0..diffusion_steps {
        clean = &clean * &a;
    }

    let mut beta_rng = stream_rng(seed, STREAM_WEIGHTS);
    let beta = DVector::from_iterator(n, (0..n).map(|_| beta_rng.random::<f64>()));
    let linear = &clean * &beta;
    let shift = 1.0 + (-linear.min()).max(0.0);
    let y = linear.map(|v| (v + shift).ln());

    let x = if noise_sigma == 0.0 {
        clean.clone()
    } else {
        &clean + normal_matrix(&mut stream_rng(seed, STREAM_NOISE), m, n) * noise_sigma
    };

    Ok(SyntheticDataset {
        params,
        graph,
        raw,
        clean,
        x,
        y,
        beta,
        shift,
    })
}
