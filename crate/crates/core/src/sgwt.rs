//! Spectral graph wavelet transform.
//!
//! Coefficients are computed in the spectral domain: for band `b` and node
//! `a`, `W_f(b, a) = Σ_n k_b(λ_n) f̂(n) u_n(a)`, i.e. the inner product of
//! `f` with the atom centered at `a`, without materializing the atoms.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{shape_mismatch, Error, Result};
use crate::graph::{GraphSignal, Spectrum};
use crate::kernels::{BandLabel, KernelBank};

/// Tolerance on `B/A − 1` for treating a frame as tight.
pub const TIGHT_TOLERANCE: f64 = 1e-6;

/// A kernel bank evaluated on the eigenvalues of one spectrum.
#[derive(Debug, Clone)]
pub struct WaveletFrame {
    spectrum: Arc<Spectrum>,
    /// `bands × n`; entry `(b, k)` is `kernel_b(λ_k)`.
    multipliers: DMatrix<f64>,
    labels: Vec<BandLabel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients {
    /// `bands × n`.
    pub coefficients: DMatrix<f64>,
}

/// One feature column: which band and which node it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FeatureSlot {
    pub band: usize,
    pub node: usize,
}

pub fn build_frame(spectrum: Arc<Spectrum>, bank: &KernelBank) -> Result<WaveletFrame> {
    let lmax = bank.lambda_max();
    let slack = 1e-9 * lmax.abs().max(1.0);
    let top = spectrum.lambda_max();
    if top > lmax + slack {
        return Err(Error::SpectrumExceedsCalibration {
            eigenvalue: top,
            lambda_max: lmax,
        });
    }
    let eig = spectrum.eigenvalues();
    let multipliers = DMatrix::from_fn(bank.len(), spectrum.n_nodes(), |b, k| bank.eval(b, eig[k]));
    if let Some(v) = multipliers.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "kernel produced invalid multiplier {v}"
        )));
    }
    Ok(WaveletFrame {
        spectrum,
        multipliers,
        labels: bank.labels(),
    })
}

impl WaveletFrame {
    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn multipliers(&self) -> &DMatrix<f64> {
        &self.multipliers
    }

    pub fn labels(&self) -> &[BandLabel] {
        &self.labels
    }

    pub fn n_bands(&self) -> usize {
        self.multipliers.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.multipliers.ncols()
    }

    /// Frame bounds restricted to the eigenvalues of this spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let sums = self.multipliers.map(|v| v * v).row_sum();
        (sums.min(), sums.max())
    }

    fn check_signal_len(&self, len: usize) -> Result<()> {
        if len != self.n_nodes() {
            return Err(shape_mismatch(self.n_nodes(), len));
        }
        Ok(())
    }

    pub fn analyze(&self, f: &GraphSignal) -> Result<WaveletCoefficients> {
        self.check_signal_len(f.len())?;
        let fhat = self.spectrum.gft(f)?;
        let u = self.spectrum.eigenvectors();
        let mut coefficients = DMatrix::zeros(self.n_bands(), self.n_nodes());
        for b in 0..self.n_bands() {
            let filtered = self.multipliers.row(b).transpose().component_mul(&fhat);
            coefficients.set_row(b, &(u * filtered).transpose());
        }
        Ok(WaveletCoefficients { coefficients })
    }

    /// Transforms each row of an `m × n` matrix; row `i` of the result is the
    /// band-major flattening of `analyze(row_i)`.
    pub fn extract_features(&self, signals: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_signal_len(signals.ncols())?;
        let n = self.n_nodes();
        let spectral = self.spectrum.gft_rows(signals)?;
        let ut = self.spectrum.eigenvectors().transpose();
        let mut out = DMatrix::zeros(signals.nrows(), self.n_bands() * n);
        for b in 0..self.n_bands() {
            let mut scaled = spectral.clone();
            for (k, mut col) in scaled.column_iter_mut().enumerate() {
                col *= self.multipliers[(b, k)];
            }
            out.columns_mut(b * n, n).copy_from(&(scaled * &ut));
        }
        Ok(out)
    }

    /// Column layout of [`extract_features`](Self::extract_features).
    pub fn feature_layout(&self) -> Vec<FeatureSlot> {
        (0..self.n_bands())
            .flat_map(|band| (0..self.n_nodes()).map(move |node| FeatureSlot { band, node }))
            .collect()
    }

    /// Inverts [`analyze`](Self::analyze) for a tight frame by applying the
    /// adjoint and dividing by the frame bound.
    pub fn synthesize_tight(&self, c: &WaveletCoefficients) -> Result<GraphSignal> {
        let coeffs = &c.coefficients;
        if coeffs.nrows() != self.n_bands() || coeffs.ncols() != self.n_nodes() {
            return Err(shape_mismatch(
                format!("{}x{}", self.n_bands(), self.n_nodes()),
                format!("{}x{}", coeffs.nrows(), coeffs.ncols()),
            ));
        }
        let (a, b) = self.bounds();
        let ratio = b / a;
        if !(a > 0.0) || ratio - 1.0 > TIGHT_TOLERANCE {
            return Err(Error::NotTight { ratio });
        }
        let u = self.spectrum.eigenvectors();
        let mut acc = DVector::zeros(self.n_nodes());
        for band in 0..self.n_bands() {
            let chat = u.tr_mul(&coeffs.row(band).transpose());
            acc += self.multipliers.row(band).transpose().component_mul(&chat);
        }
        Ok(u * acc / a)
    }
}

pub fn analyze(frame: &WaveletFrame, f: &GraphSignal) -> Result<WaveletCoefficients> {
    frame.analyze(f)
}

pub fn extract_features(frame: &WaveletFrame, signals: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    frame.extract_features(signals)
}

pub fn synthesize_tight(frame: &WaveletFrame, c: &WaveletCoefficients) -> Result<GraphSignal> {
    frame.synthesize_tight(c)
}
