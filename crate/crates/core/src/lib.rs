//! Spectral graph wavelet features for regression on graph signals.
//!
//! The crate covers the full path from data to scores: graph construction
//! from time series, Laplacians and the graph Fourier basis, wavelet kernel
//! banks (including spectrum-adapted warped translates), the forward
//! transform used as a feature extractor, a synthetic smooth-signal
//! regression generator, and the regression pipeline that scores features.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod construct;
pub mod error;
pub mod graph;
pub mod io;
pub mod kernels;
pub mod pipeline;
pub mod sgwt;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{
    build_laplacian, eigendecompose, gft, igft, laplacian_quadratic_form, Graph, GraphSignal,
    Laplacian, LaplacianKind, Spectrum,
};
pub use kernels::{frame_bounds, BandLabel, KernelBank, KernelFamily, KernelSpec, WarpingFunction};
pub use sgwt::{build_frame, FeatureSlot, WaveletCoefficients, WaveletFrame};
