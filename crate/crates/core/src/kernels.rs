//! Spectral kernels: band-pass wavelet shapes, scaling functions and
//! spectrum-adapted (warped) translates.
//!
//! A [`KernelBank`] holds one low-pass band (index 0) followed by the
//! band-pass bands. Each band is a nonnegative scalar function on
//! `[0, lambda_max]`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    CubicSpline,
    Meyer,
    IteratedSine,
    WarpedTranslate,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 4] = [
        KernelFamily::CubicSpline,
        KernelFamily::Meyer,
        KernelFamily::IteratedSine,
        KernelFamily::WarpedTranslate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::CubicSpline => "cubic_spline",
            KernelFamily::Meyer => "meyer",
            KernelFamily::IteratedSine => "iterated_sine",
            KernelFamily::WarpedTranslate => "warped_translate",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_BANDS: usize = 4;
/// Hann window: `q(t) = 1/2 + 1/2 cos(2π(t − 1/2))`.
pub const HANN_COEFFS: [f64; 2] = [0.5, 0.5];

/// Family plus parameters; `n_bands` counts band-pass bands only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: KernelFamily,
    #[serde(default = "default_bands")]
    pub n_bands: usize,
    /// Cosine coefficients `a_0..a_K` for warped translates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
}

fn default_bands() -> usize {
    DEFAULT_BANDS
}

impl KernelSpec {
    pub fn new(family: KernelFamily) -> Self {
        Self {
            family,
            n_bands: DEFAULT_BANDS,
            coeffs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bands == 0 {
            return Err(Error::InvalidArgument("n_bands must be at least 1".into()));
        }
        if self.family == KernelFamily::WarpedTranslate {
            if self.n_bands < 2 {
                return Err(Error::TooFewTranslates(self.n_bands));
            }
            check_admissible(self.coeffs())?;
        } else if self.coeffs.is_some() {
            return Err(Error::InvalidArgument(format!(
                "coeffs only apply to {}",
                KernelFamily::WarpedTranslate
            )));
        }
        Ok(())
    }

    pub fn coeffs(&self) -> &[f64] {
        self.coeffs.as_deref().unwrap_or(&HANN_COEFFS)
    }

    /// Builds the bank for a spectrum given by its ascending eigenvalues.
    pub fn build(&self, eigenvalues: &[f64]) -> Result<KernelBank> {
        self.validate()?;
        let lambda_max = eigenvalues.last().copied().ok_or(Error::EmptyEvalPoints)?;
        match self.family {
            KernelFamily::CubicSpline => cubic_spline_bank(lambda_max, self.n_bands),
            KernelFamily::Meyer => meyer_bank(lambda_max, self.n_bands),
            KernelFamily::IteratedSine => iterated_sine_bank(lambda_max, self.n_bands),
            KernelFamily::WarpedTranslate => {
                let warp = empirical_cdf_warping(eigenvalues)?;
                warped_translate_bank(&warp, self.n_bands, self.coeffs())
            }
        }
    }
}

fn check_nonnegative(x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeArgument(x))
    }
}

fn spline_unchecked(x: f64) -> f64 {
    if x < 1.0 {
        x * x
    } else if x <= 2.0 {
        -5.0 + x * (11.0 + x * (-6.0 + x))
    } else {
        4.0 / (x * x)
    }
}

/// Band-pass cubic spline: `x²` below 1, a cubic joining at 1 and 2, `4/x²`
/// above 2.
pub fn cubic_spline_kernel(x: f64) -> Result<f64> {
    check_nonnegative(x)?;
    Ok(spline_unchecked(x))
}

/// Meyer auxiliary polynomial, rising from 0 to 1 on `[0, 1]`.
fn meyer_nu(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    // Rounding in the cubic factor can overshoot 1 by ~1e-14 near t = 1.
    (t.powi(4) * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))).clamp(0.0, 1.0)
}

fn meyer_unchecked(x: f64) -> f64 {
    if !(0.5..=2.0).contains(&x) {
        0.0
    } else if x <= 1.0 {
        (FRAC_PI_2 * meyer_nu(2.0 * x - 1.0)).sin()
    } else {
        (FRAC_PI_2 * meyer_nu(x - 1.0)).cos()
    }
}

/// Meyer band-pass window supported on `[1/2, 2]`, peaking at 1.
pub fn meyer_kernel(x: f64) -> Result<f64> {
    check_nonnegative(x)?;
    Ok(meyer_unchecked(x))
}

fn iterated_sine_unchecked(x: f64) -> f64 {
    if !(0.5..=2.0).contains(&x) {
        return 0.0;
    }
    let c = (FRAC_PI_2 * x.log2()).cos();
    (FRAC_PI_2 * c * c).sin()
}

/// `sin(π/2 · cos²(π/2 · log₂ x))` on `[1/2, 2]`. Squares of dyadic dilates
/// sum to one.
pub fn iterated_sine_kernel(x: f64) -> Result<f64> {
    check_nonnegative(x)?;
    Ok(iterated_sine_unchecked(x))
}

/// Piecewise-linear, nondecreasing map from the spectrum onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WarpingFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl WarpingFunction {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lambda_min(&self) -> f64 {
        self.knots[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        let k = &self.knots;
        if lambda <= k[0] {
            return 0.0;
        }
        if lambda >= k[k.len() - 1] {
            return 1.0;
        }
        // First knot strictly greater than lambda.
        let hi = k.partition_point(|&x| x <= lambda);
        let lo = hi - 1;
        let t = (lambda - k[lo]) / (k[hi] - k[lo]);
        self.values[lo] + t * (self.values[hi] - self.values[lo])
    }
}

/// Eigenvalues closer than this (relative to the spectral range) are treated
/// as one repeated eigenvalue.
const DUPLICATE_TOL: f64 = 1e-10;

/// Interpolates the empirical CDF through `(λ_(i), i/(n−1))`. Repeated
/// eigenvalues are collapsed to one knot at their mean rank, and the ranks
/// are rescaled so the first knot maps to 0 and the last to 1.
pub fn empirical_cdf_warping(eigenvalues: &[f64]) -> Result<WarpingFunction> {
    let n = eigenvalues.len();
    if n < 2 {
        return Err(Error::DegenerateSpectrum);
    }
    let lo = eigenvalues[0];
    let hi = eigenvalues[n - 1];
    if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "eigenvalues must be ascending".into(),
        ));
    }
    let tol = DUPLICATE_TOL * (hi - lo).abs().max(hi.abs()).max(1.0);
    if hi - lo <= tol {
        return Err(Error::DegenerateSpectrum);
    }

    let mut knots = Vec::new();
    let mut ranks = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end] - eigenvalues[end - 1] <= tol {
            end += 1;
        }
        let group = &eigenvalues[start..end];
        knots.push(group.iter().sum::<f64>() / group.len() as f64);
        ranks.push((start + end - 1) as f64 / 2.0);
        start = end;
    }
    knots[0] = lo;
    let last = knots.len() - 1;
    knots[last] = hi;
    let (r0, r1) = (ranks[0], ranks[last]);
    let values = ranks.iter().map(|r| (r - r0) / (r1 - r0)).collect();
    Ok(WarpingFunction { knots, values })
}

/// Identifies a band for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BandLabel {
    Scaling,
    Scale { scale: f64 },
    Translate { index: usize, center: f64 },
    Custom { name: String },
}

type KernelFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Band {
    label: BandLabel,
    kernel: KernelFn,
}

impl Band {
    pub fn new(label: BandLabel, kernel: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label,
            kernel: Arc::new(kernel),
        }
    }

    pub fn label(&self) -> &BandLabel {
        &self.label
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        (self.kernel)(lambda)
    }
}

impl fmt::Debug for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Band").field("label", &self.label).finish()
    }
}

/// Scaling function followed by band-pass kernels, calibrated to a spectrum
/// upper bound.
#[derive(Debug, Clone)]
pub struct KernelBank {
    bands: Vec<Band>,
    lambda_max: f64,
}

impl KernelBank {
    pub fn new(bands: Vec<Band>, lambda_max: f64) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::InvalidArgument(
                "kernel bank needs at least one band".into(),
            ));
        }
        if !(lambda_max >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bad lambda_max {lambda_max}"
            )));
        }
        Ok(Self { bands, lambda_max })
    }

    /// `n_bands` copies of the constant-one kernel.
    pub fn identity(n_bands: usize, lambda_max: f64) -> Result<Self> {
        let bands = (0..n_bands)
            .map(|i| {
                Band::new(
                    BandLabel::Custom {
                        name: format!("identity_{i}"),
                    },
                    |_| 1.0,
                )
            })
            .collect();
        Self::new(bands, lambda_max)
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    /// Total number of bands, scaling function included.
    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn labels(&self) -> Vec<BandLabel> {
        self.bands.iter().map(|b| b.label.clone()).collect()
    }

    pub fn eval(&self, band: usize, lambda: f64) -> f64 {
        self.bands[band].eval(lambda)
    }

    pub fn sum_of_squares(&self, lambda: f64) -> f64 {
        self.bands.iter().map(|b| b.eval(lambda).powi(2)).sum()
    }
}

/// Log-spaced scales from `2/(λ_max/20)` down to `2/λ_max`.
pub fn select_scales(lambda_max: f64, n_scales: usize) -> Result<Vec<f64>> {
    if !(lambda_max > 0.0) {
        return Err(Error::NonpositiveLambdaMax(lambda_max));
    }
    if n_scales == 0 {
        return Err(Error::InvalidArgument("need at least one scale".into()));
    }
    let finest = 2.0 / lambda_max;
    if n_scales == 1 {
        return Ok(vec![finest]);
    }
    let coarsest = 2.0 / (lambda_max / LAMBDA_MIN_RATIO);
    let (a, b) = (coarsest.ln(), finest.ln());
    let step = (b - a) / (n_scales - 1) as f64;
    let mut scales: Vec<f64> = (0..n_scales).map(|i| (a + step * i as f64).exp()).collect();
    scales[0] = coarsest;
    scales[n_scales - 1] = finest;
    Ok(scales)
}

/// Lowest frequency resolved by the band-pass kernels, as a fraction of
/// `λ_max`.
const LAMBDA_MIN_RATIO: f64 = 20.0;

fn scale_labels(scales: &[f64]) -> impl Iterator<Item = BandLabel> + '_ {
    scales.iter().map(|&scale| BandLabel::Scale { scale })
}

/// Cubic-spline wavelets `g(s_j λ)` with the low-pass
/// `γ·exp(−(λ/(0.6 λ_min))⁴)`, where `γ` is the spline's peak value.
pub fn cubic_spline_bank(lambda_max: f64, n_scales: usize) -> Result<KernelBank> {
    let scales = select_scales(lambda_max, n_scales)?;
    let lambda_min = lambda_max / LAMBDA_MIN_RATIO;
    // s'(x) = 11 − 12x + 3x² vanishes at x = 2 − 1/√3.
    let gamma = spline_unchecked(2.0 - 1.0 / 3f64.sqrt());
    let mut bands = vec![Band::new(BandLabel::Scaling, move |l: f64| {
        gamma * (-(l.max(0.0) / (0.6 * lambda_min)).powi(4)).exp()
    })];
    for (label, s) in scale_labels(&scales).zip(scales.iter().copied()) {
        bands.push(Band::new(label, move |l: f64| {
            spline_unchecked(s * l.max(0.0))
        }));
    }
    KernelBank::new(bands, lambda_max)
}

/// Dyadic-window bank: band-pass `g(s_j λ / 2)` so band centers run from
/// `λ_max/20` to `λ_max`. The low-pass is 1 below the first band and follows
/// the falling edge of the band one octave down, so it complements the
/// coarsest wavelet exactly.
fn window_bank(lambda_max: f64, n_scales: usize, g: fn(f64) -> f64) -> Result<KernelBank> {
    let scales = select_scales(lambda_max, n_scales)?;
    let coarsest = scales[0];
    let mut bands = vec![Band::new(BandLabel::Scaling, move |l: f64| {
        let x = coarsest * l.max(0.0) / 2.0;
        if x <= 0.5 {
            1.0
        } else {
            g(2.0 * x)
        }
    })];
    for (label, s) in scale_labels(&scales).zip(scales.iter().copied()) {
        bands.push(Band::new(label, move |l: f64| g(s * l.max(0.0) / 2.0)));
    }
    KernelBank::new(bands, lambda_max)
}

pub fn meyer_bank(lambda_max: f64, n_scales: usize) -> Result<KernelBank> {
    window_bank(lambda_max, n_scales, meyer_unchecked)
}

pub fn iterated_sine_bank(lambda_max: f64, n_scales: usize) -> Result<KernelBank> {
    window_bank(lambda_max, n_scales, iterated_sine_unchecked)
}

/// The cosine window `q` on its unit support, centered at 1/2, negative lobes
/// clipped.
fn cosine_window(coeffs: &[f64], t: f64) -> f64 {
    if !(0.0..1.0).contains(&t) {
        return 0.0;
    }
    let v: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(k, a)| a * (2.0 * PI * k as f64 * (t - 0.5)).cos())
        .sum();
    v.max(0.0)
}

/// Window values must vanish at the ends of the support:
/// `Σ_{k=0}^{K} (−1)^k a_k = 0`.
fn check_admissible(coeffs: &[f64]) -> Result<()> {
    if coeffs.len() < 2 {
        return Err(Error::InadmissibleCoefficients(
            "need at least a_0 and a_1".into(),
        ));
    }
    if coeffs.iter().any(|a| !a.is_finite()) {
        return Err(Error::InadmissibleCoefficients(
            "non-finite coefficient".into(),
        ));
    }
    let alternating: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(k, a)| if k % 2 == 0 { *a } else { -a })
        .sum();
    let scale: f64 = coeffs.iter().map(|a| a.abs()).sum();
    if alternating.abs() > 1e-12 * scale.max(1.0) {
        return Err(Error::InadmissibleCoefficients(format!(
            "alternating sum is {alternating:e}, window does not vanish at its ends"
        )));
    }
    if coeffs[0] <= 0.0 {
        return Err(Error::InadmissibleCoefficients(
            "a_0 must be positive".into(),
        ));
    }
    Ok(())
}

/// Grid size for the numerical tightness check at bank construction.
const TIGHTNESS_GRID: usize = 10_000;

/// Spectrum-adapted tight bank of `n_translates + 1` bands.
///
/// Translates of the cosine window `q` with `K + 1` coefficients are placed at
/// uniform centers `m·d` in warped coordinates, `d = 1/(n_translates + K)`,
/// each of width `(2K + 1)·d`. With that overlap the squared translates sum
/// to a constant. Translates that are nonzero at the bottom of the spectrum
/// are merged (root-sum-of-squares) into band 0, which plays the scaling
/// role; those reaching past the top are merged into the last band. Bands in
/// between are single translates and vanish at `λ_min`.
pub fn warped_translate_bank(
    warp: &WarpingFunction,
    n_translates: usize,
    coeffs: &[f64],
) -> Result<KernelBank> {
    if n_translates < 2 {
        return Err(Error::TooFewTranslates(n_translates));
    }
    check_admissible(coeffs)?;
    let k = (coeffs.len() - 1) as i64;
    let r = n_translates as i64;
    let spacing = 1.0 / (r + k) as f64;
    let width = (2 * k + 1) as f64 * spacing;
    let coeffs: Arc<[f64]> = coeffs.into();
    let warp = Arc::new(warp.clone());

    let translate = {
        let coeffs = coeffs.clone();
        move |m: i64, u: f64| cosine_window(&coeffs, (u - m as f64 * spacing) / width + 0.5)
    };
    let translate = Arc::new(translate);

    // Translate indices whose support meets [0, 1] run from −K to R + 2K.
    let groups: Vec<(BandLabel, Vec<i64>)> = (0..=r)
        .map(|b| {
            let members: Vec<i64> = if b == 0 {
                (-k..=k).collect()
            } else if b == r {
                (k + r..=r + 2 * k).collect()
            } else {
                vec![k + b]
            };
            let label = if b == 0 {
                BandLabel::Scaling
            } else {
                BandLabel::Translate {
                    index: b as usize,
                    center: (k + b) as f64 * spacing,
                }
            };
            (label, members)
        })
        .collect();

    let bands = groups
        .into_iter()
        .map(|(label, members)| {
            let warp = warp.clone();
            let translate = translate.clone();
            Band::new(label, move |l: f64| {
                let u = warp.eval(l);
                if members.len() == 1 {
                    translate(members[0], u)
                } else {
                    members
                        .iter()
                        .map(|&m| translate(m, u).powi(2))
                        .sum::<f64>()
                        .sqrt()
                }
            })
        })
        .collect();

    let bank = KernelBank::new(bands, warp.lambda_max())?;

    // Clipped or otherwise non-tight windows are rejected here.
    let (a, b) = warped_bounds(&bank, &warp);
    if !(a > 0.0) || b / a - 1.0 > 1e-8 {
        return Err(Error::InadmissibleCoefficients(format!(
            "translates are not tight: bounds ({a}, {b})"
        )));
    }
    Ok(bank)
}

/// Frame bounds of a warped bank over a uniform grid in warped coordinates.
fn warped_bounds(bank: &KernelBank, warp: &WarpingFunction) -> (f64, f64) {
    let mut a = f64::INFINITY;
    let mut b = 0.0f64;
    let knots = warp.knots();
    let values = warp.values();
    for i in 0..=TIGHTNESS_GRID {
        let u = i as f64 / TIGHTNESS_GRID as f64;
        // Invert the warp on the grid point.
        let hi = values.partition_point(|&v| v < u).min(knots.len() - 1);
        let lambda = if hi == 0 {
            knots[0]
        } else {
            let lo = hi - 1;
            let t = (u - values[lo]) / (values[hi] - values[lo]);
            knots[lo] + t * (knots[hi] - knots[lo])
        };
        let s = bank.sum_of_squares(lambda);
        a = a.min(s);
        b = b.max(s);
    }
    (a, b)
}

/// Lower and upper frame bounds: min and max of `Σ_b kernel_b(λ)²` over the
/// given points.
pub fn frame_bounds(bank: &KernelBank, eval_points: &[f64]) -> Result<(f64, f64)> {
    if eval_points.is_empty() {
        return Err(Error::EmptyEvalPoints);
    }
    let tol = 1e-9 * bank.lambda_max().max(1.0);
    let mut a = f64::INFINITY;
    let mut b = f64::NEG_INFINITY;
    for &l in eval_points {
        if !(l >= -tol && l <= bank.lambda_max() + tol) {
            return Err(Error::InvalidArgument(format!(
                "evaluation point {l} outside [0, {}]",
                bank.lambda_max()
            )));
        }
        let s = bank.sum_of_squares(l);
        a = a.min(s);
        b = b.max(s);
    }
    Ok((a, b))
}
