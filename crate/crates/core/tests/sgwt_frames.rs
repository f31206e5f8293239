mod common;

use std::sync::Arc;

use common::*;
use graphlet_core::kernels::{empirical_cdf_warping, warped_translate_bank, HANN_COEFFS};
use graphlet_core::{
    build_frame, build_laplacian, eigendecompose, frame_bounds, KernelFamily, KernelSpec,
    LaplacianKind, Spectrum,
};
use nalgebra::DVector;
use rand::Rng;

fn spectrum(seed: u64, n: usize) -> Arc<Spectrum> {
    let g = random_connected_graph(&mut rng(seed), n, 0.25);
    Arc::new(eigendecompose(&build_laplacian(&g, LaplacianKind::Combinatorial).unwrap()).unwrap())
}

fn eigenvalues(s: &Spectrum) -> Vec<f64> {
    s.eigenvalues().iter().copied().collect()
}

#[test]
fn analyze_matches_atom_inner_products() {
    for seed in 0..6 {
        let n = 6 + 2 * seed as usize;
        let s = spectrum(seed, n);
        for family in KernelFamily::ALL {
            let bank = KernelSpec::new(family).build(&eigenvalues(&s)).unwrap();
            let frame = build_frame(s.clone(), &bank).unwrap();
            let f = normal_vector(&mut rng(seed + 100), n);
            let fast = frame.analyze(&f).unwrap().coefficients;
            let naive = naive_coefficients(
                s.eigenvectors(),
                s.eigenvalues(),
                |b, l| bank.eval(b, l),
                bank.len(),
                &f,
            );
            assert!(max_abs_diff(&fast, &naive) <= 1e-9, "{family} seed {seed}");
        }
    }
}

#[test]
fn features_are_band_major_analyze_rows() {
    let s = spectrum(3, 9);
    let bank = KernelSpec::new(KernelFamily::Meyer)
        .build(&eigenvalues(&s))
        .unwrap();
    let frame = build_frame(s, &bank).unwrap();
    let x = normal_matrix(&mut rng(4), 3, 9);
    let feats = frame.extract_features(&x).unwrap();
    assert_eq!(feats.ncols(), bank.len() * 9);
    for i in 0..3 {
        let f = DVector::from_iterator(9, x.row(i).iter().copied());
        let c = frame.analyze(&f).unwrap().coefficients;
        for (col, slot) in frame.feature_layout().iter().enumerate() {
            assert!((feats[(i, col)] - c[(slot.band, slot.node)]).abs() <= 1e-12);
        }
    }
}

#[test]
fn warped_bank_is_tight_on_spectrum_and_grid() {
    for seed in 0..10 {
        let s = spectrum(seed, 30);
        let ev = eigenvalues(&s);
        let warp = empirical_cdf_warping(&ev).unwrap();
        let bank = warped_translate_bank(&warp, 4, &HANN_COEFFS).unwrap();
        let (a, b) = frame_bounds(&bank, &ev).unwrap();
        assert!(b / a - 1.0 <= 1e-6);
        let lmax = s.lambda_max();
        let grid: Vec<f64> = (0..=1000).map(|i| lmax * i as f64 / 1000.0).collect();
        let (a, b) = frame_bounds(&bank, &grid).unwrap();
        assert!(b / a - 1.0 <= 1e-6);
    }
}

#[test]
fn tight_frame_energy_and_reconstruction() {
    let mut r = rng(8);
    let s = spectrum(8, 20);
    let bank = KernelSpec::new(KernelFamily::WarpedTranslate)
        .build(&eigenvalues(&s))
        .unwrap();
    let frame = build_frame(s, &bank).unwrap();
    let (a, _) = frame.bounds();
    for _ in 0..20 {
        let f = normal_vector(&mut r, 20);
        let c = frame.analyze(&f).unwrap();
        let energy = c.coefficients.norm_squared();
        assert!((energy - a * f.norm_squared()).abs() <= 1e-8 * energy);
        let back = frame.synthesize_tight(&c).unwrap();
        assert!((back - &f).amax() <= 1e-6);
    }
}

#[test]
fn non_tight_frame_refuses_tight_synthesis() {
    let s = spectrum(2, 10);
    let bank = KernelSpec::new(KernelFamily::CubicSpline)
        .build(&eigenvalues(&s))
        .unwrap();
    let frame = build_frame(s, &bank).unwrap();
    let c = frame.analyze(&DVector::from_element(10, 1.0)).unwrap();
    assert!(frame.synthesize_tight(&c).is_err());
}

#[test]
fn bank_built_for_smaller_spectrum_is_rejected() {
    let s = spectrum(1, 10);
    let bank = KernelSpec::new(KernelFamily::Meyer)
        .build(&[0.0, 0.5 * s.lambda_max()])
        .unwrap();
    assert!(build_frame(s, &bank).is_err());
}

#[test]
fn warped_bands_other_than_scaling_vanish_at_dc() {
    let mut r = rng(12);
    for _ in 0..5 {
        let n = r.random_range(8..25);
        let s = spectrum(r.random(), n);
        let bank = KernelSpec::new(KernelFamily::WarpedTranslate)
            .build(&eigenvalues(&s))
            .unwrap();
        for b in 1..bank.len() {
            assert_eq!(bank.eval(b, 0.0), 0.0);
        }
        assert!(bank.eval(0, 0.0) > 0.0);
    }
}
