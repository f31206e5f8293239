//! Repeated synthetic trials comparing SGWT feature sets with raw signals.
//!
//! Each trial draws a dataset from its own seed, computes the Laplacian
//! spectrum of the generating graph once, then scores every kernel arm and
//! the raw-signal arm on the same seeded train/test split.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{mean_se, rows, subvec};
use super::linear::ols_fit;
use super::metrics::{metrics, Metrics};
use super::select::{select_k_best, take_columns};
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, eigendecompose, LaplacianKind};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::sgwt::build_frame;
use crate::synth::{derive_seed, generate_dataset, stream_rng, SynthParams, GENERATOR};

const STREAM_SPLIT: u64 = 4;

/// Label of the arm that regresses on the raw signals.
pub const NO_WAVELET: &str = "no_wavelet";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub nodes: usize,
    pub samples: usize,
    pub trials: usize,
    pub edge_prob: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub kernels: Vec<KernelSpec>,
    pub k_best: usize,
    /// Fraction of samples used for fitting.
    pub split_ratio: f64,
    pub halved_diffusion: bool,
    pub diffusion_steps: usize,
    pub laplacian: LaplacianKind,
    /// Append the raw signals to the wavelet features instead of replacing
    /// them.
    pub augment: bool,
    pub report_csv: PathBuf,
    pub report_json: PathBuf,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            nodes: 500,
            samples: 200,
            trials: 500,
            edge_prob: 0.1,
            noise_sigma: 0.1,
            seed: 0,
            kernels: KernelFamily::ALL
                .iter()
                .map(|&f| KernelSpec::new(f))
                .collect(),
            k_best: 100,
            split_ratio: 0.7,
            halved_diffusion: false,
            diffusion_steps: 1,
            laplacian: LaplacianKind::Combinatorial,
            augment: false,
            report_csv: PathBuf::from("report.csv"),
            report_json: PathBuf::from("report.json"),
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> Error {
    Error::InvalidConfig {
        key: key.to_string(),
        message: message.into(),
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(invalid("nodes", "must be at least 2"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) || self.edge_prob == 0.0 {
            return Err(invalid("edge_prob", "must be in (0, 1]"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid("noise_sigma", "must be finite and >= 0"));
        }
        if self.kernels.is_empty() {
            return Err(invalid("kernels", "must list at least one kernel"));
        }
        for (i, k) in self.kernels.iter().enumerate() {
            k.validate()
                .map_err(|e| invalid(&format!("kernels[{i}]"), e.to_string()))?;
        }
        if self.k_best == 0 {
            return Err(invalid("k_best", "must be at least 1"));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(invalid("split_ratio", "must be in (0, 1)"));
        }
        let (train, test) = self.split_sizes();
        if train < 3 {
            return Err(invalid(
                "samples",
                format!("train split has {train} samples, need 3"),
            ));
        }
        if test < 2 {
            return Err(invalid(
                "samples",
                format!("test split has {test} samples, need 2"),
            ));
        }
        if self.diffusion_steps == 0 {
            return Err(invalid("diffusion_steps", "must be at least 1"));
        }
        Ok(())
    }

    /// Train and test sizes; the train size is `round(split_ratio · samples)`.
    pub fn split_sizes(&self) -> (usize, usize) {
        let train = ((self.samples as f64) * self.split_ratio).round() as usize;
        let train = train.min(self.samples);
        (train, self.samples - train)
    }

    /// Arm labels in report order: kernels as configured, then the raw arm.
    pub fn arm_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .kernels
            .iter()
            .map(|k| k.family.name().to_string())
            .collect();
        labels.push(NO_WAVELET.to_string());
        labels
    }

    fn synth_params(&self, seed: u64) -> SynthParams {
        SynthParams {
            n_nodes: self.nodes,
            n_samples: self.samples,
            edge_prob: self.edge_prob,
            noise_sigma: self.noise_sigma,
            seed,
            halved_diffusion: self.halved_diffusion,
            diffusion_steps: self.diffusion_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// One entry per arm, in report order; empty if the trial failed.
    pub scores: Vec<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub representation: String,
    pub kernel: String,
    pub graph_method: String,
    pub n_trials: usize,
    pub mse_mean: f64,
    pub mse_se: f64,
    /// `sqrt(mse_mean)`.
    pub rmse: f64,
    pub r2_mean: f64,
    pub r2_se: f64,
    pub pearson_mean: Option<f64>,
    pub pearson_se: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedDelta {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionReport {
    pub generator: String,
    pub config: BenchmarkConfig,
    pub rows: Vec<ReportRow>,
    pub failed_trials: usize,
    pub trials: Vec<TrialRecord>,
}

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

impl RegressionReport {
    pub fn row(&self, kernel: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.kernel == kernel)
    }

    fn arm_index(&self, kernel: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.kernel == kernel)
    }

    /// Per-trial `R²(a) − R²(b)` over successful trials.
    pub fn paired_r2_differences(&self, a: &str, b: &str) -> Option<Vec<f64>> {
        let (ia, ib) = (self.arm_index(a)?, self.arm_index(b)?);
        Some(
            self.trials
                .iter()
                .filter(|t| t.error.is_none())
                .map(|t| t.scores[ia].r2 - t.scores[ib].r2)
                .collect(),
        )
    }

    /// Mean paired R² difference with a normal-approximation 95% interval.
    pub fn paired_r2_delta(&self, a: &str, b: &str) -> Option<PairedDelta> {
        let d = self.paired_r2_differences(a, b)?;
        if d.is_empty() {
            return None;
        }
        let (mean, se) = mean_se(&d);
        Some(PairedDelta {
            n: d.len(),
            mean,
            se,
            ci_low: mean - Z95 * se,
            ci_high: mean + Z95 * se,
        })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::File::create(path)?.write_all(self.to_csv()?.as_bytes())?;
        Ok(())
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::File::create(path)?.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }
}

/// Seeded permutation of `0..m` cut into train and test index sets.
pub fn train_test_split(m: usize, n_train: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut stream_rng(seed, STREAM_SPLIT));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn score_arm(
    features: &DMatrix<f64>,
    y: &DVector<f64>,
    train: &[usize],
    test: &[usize],
    k_best: usize,
) -> Result<Metrics> {
    let (x_tr, y_tr) = (rows(features, train), subvec(y, train));
    let cols = select_k_best(&x_tr, &y_tr, k_best.min(features.ncols()))?;
    let model = ols_fit(&take_columns(&x_tr, &cols), &y_tr)?;
    let pred = model.predict(&take_columns(&rows(features, test), &cols))?;
    metrics(&subvec(y, test), &pred)
}

/// Runs one trial and returns scores for every arm in report order.
pub fn run_trial(config: &BenchmarkConfig, seed: u64) -> Result<Vec<Metrics>> {
    let data = generate_dataset(config.synth_params(seed))?;
    let laplacian = build_laplacian(&data.graph, config.laplacian)?;
    let spectrum = Arc::new(eigendecompose(&laplacian)?);
    let eigenvalues: Vec<f64> = spectrum.eigenvalues().iter().copied().collect();
    let (n_train, _) = config.split_sizes();
    let (train, test) = train_test_split(config.samples, n_train, seed);

    let mut scores = Vec::with_capacity(config.kernels.len() + 1);
    for spec in &config.kernels {
        let bank = spec.build(&eigenvalues)?;
        let frame = build_frame(spectrum.clone(), &bank)?;
        let mut features = frame.extract_features(&data.x)?;
        if config.augment {
            let wavelet = features;
            features = DMatrix::zeros(wavelet.nrows(), data.x.ncols() + wavelet.ncols());
            features.columns_mut(0, data.x.ncols()).copy_from(&data.x);
            features
                .columns_mut(data.x.ncols(), wavelet.ncols())
                .copy_from(&wavelet);
        }
        scores.push(score_arm(&features, &data.y, &train, &test, config.k_best)?);
    }
    scores.push(score_arm(&data.x, &data.y, &train, &test, config.k_best)?);
    Ok(scores)
}

fn summarize_arm(records: &[&TrialRecord], arm: usize, label: &str) -> ReportRow {
    let scores: Vec<&Metrics> = records.iter().map(|t| &t.scores[arm]).collect();
    let (mse_mean, mse_se) = mean_se(&scores.iter().map(|m| m.mse).collect::<Vec<_>>());
    let (r2_mean, r2_se) = mean_se(&scores.iter().map(|m| m.r2).collect::<Vec<_>>());
    let pearsons: Vec<f64> = scores.iter().filter_map(|m| m.pearson).collect();
    let (pearson_mean, pearson_se) = if pearsons.is_empty() {
        (None, None)
    } else {
        let (a, b) = mean_se(&pearsons);
        (Some(a), Some(b))
    };
    let representation = if label == NO_WAVELET { "raw" } else { "sgwt" };
    ReportRow {
        representation: representation.to_string(),
        kernel: label.to_string(),
        graph_method: "erdos_renyi".to_string(),
        n_trials: scores.len(),
        mse_mean,
        mse_se,
        rmse: mse_mean.sqrt(),
        r2_mean,
        r2_se,
        pearson_mean,
        pearson_se,
    }
}

/// Runs every trial on a pool of `jobs` threads. The report does not depend
/// on `jobs`: trials are seeded by index and aggregated in index order.
pub fn run_synthetic_benchmark(config: &BenchmarkConfig, jobs: usize) -> Result<RegressionReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let trials: Vec<TrialRecord> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = derive_seed(config.seed, trial as u64);
                match run_trial(config, seed) {
                    Ok(scores) => {
                        log::debug!("trial {trial} done");
                        TrialRecord {
                            trial,
                            seed,
                            scores,
                            error: None,
                        }
                    }
                    Err(e) => {
                        log::warn!("trial {trial} (seed {seed}) failed: {e}");
                        TrialRecord {
                            trial,
                            seed,
                            scores: Vec::new(),
                            error: Some(e.to_string()),
                        }
                    }
                }
            })
            .collect()
    });

    let ok: Vec<&TrialRecord> = trials.iter().filter(|t| t.error.is_none()).collect();
    let failed_trials = trials.len() - ok.len();
    if ok.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "all {failed_trials} trials failed; first error: {}",
            trials[0].error.as_deref().unwrap_or("")
        )));
    }
    let rows = config
        .arm_labels()
        .iter()
        .enumerate()
        .map(|(arm, label)| summarize_arm(&ok, arm, label))
        .collect();
    Ok(RegressionReport {
        generator: GENERATOR.to_string(),
        config: config.clone(),
        rows,
        failed_trials,
        trials,
    })
}
