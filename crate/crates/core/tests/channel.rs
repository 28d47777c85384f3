mod common;

use common::{random_psd, ring, rng};
use jsdm::channel::{draw_channel, draw_channel_seeded, eigendecompose, one_ring_covariance};
use jsdm::linalg::{frobenius_norm, hermitian_asymmetry, trace_re};
use jsdm::similarity::{dol, dol_entries};
use jsdm::{AntennaArray, CMatrix, CovarianceMatrix, UserProfile};
use nalgebra::Complex;
use proptest::prelude::*;

#[test]
fn table_one_overlaps() {
    let cases: [(f64, f64, f64); 4] = [(0.0, 1.0, 0.9280), (0.0, 3.0, 0.7275), (30.0, 1.0, 0.9313), (30.0, 3.0, 0.7311)];
    for (theta, sep, expected) in cases {
        let v = dol(&ring(128, theta, 5.0), &ring(128, theta + sep, 5.0)).unwrap();
        assert!((v - expected).abs() <= 0.01, "θ={theta} sep={sep}: {v} vs {expected}");
    }
    let far = dol(&ring(128, 0.0, 5.0), &ring(128, 30.0, 5.0)).unwrap();
    assert!(far <= 1e-3, "{far}");
}

#[test]
fn effective_rank_regression() {
    assert_eq!(ring(128, 0.0, 5.0).effective_rank(), 15);
    assert_eq!(ring(32, 0.0, 5.0).effective_rank(), 6);
}

#[test]
fn trace_is_antennas_times_kappa() {
    let array = AntennaArray::half_wavelength_ula(24).unwrap();
    let user = UserProfile::with_pathloss(0, 0.3, 0.1, 2.5).unwrap();
    let r = one_ring_covariance(&array, &user, 256).unwrap();
    assert!((r.trace() - 24.0 * 2.5).abs() < 1e-9);
}

#[test]
fn overlap_decreases_with_separation() {
    let base = ring(32, 0.0, 5.0);
    let values: Vec<f64> = (0..=30).step_by(2).map(|s| dol(&base, &ring(32, s as f64, 5.0)).unwrap()).collect();
    for w in values.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{values:?}");
    }
}

#[test]
fn identity_keeps_every_mode() {
    let d = eigendecompose(&CMatrix::<f64>::identity(6, 6), 0.9999).unwrap();
    assert_eq!(d.rank(), 6);
    assert!(d.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-12));
}

#[test]
fn rank_one_outer_product() {
    let v = CMatrix::from_fn(5, 1, |i, _| Complex::new(i as f64 + 1.0, 0.5));
    let r = &v * v.adjoint();
    let d = eigendecompose(&r, 0.9999).unwrap();
    assert_eq!(d.rank(), 1);
    assert!((d.eigenvalues[0] - v.norm_squared()).abs() < 1e-9);
}

#[test]
fn zero_covariance_draws_zero() {
    let zero = CovarianceMatrix::from_entries(CMatrix::zeros(4, 4), 0.9999).unwrap();
    assert!(draw_channel_seeded(&zero, 1).iter().all(|z| z.norm() == 0.0));
}

#[test]
fn empirical_covariance_converges() {
    let mut r = rng(11);
    let entries = random_psd(&mut r, 4, 4, 0.7);
    let cov = CovarianceMatrix::from_entries(entries.clone(), 1.0).unwrap();
    let draws = 100_000;
    let mut acc = CMatrix::<f64>::zeros(4, 4);
    for _ in 0..draws {
        let h = draw_channel(&cov, &mut r);
        acc += &h * h.adjoint();
    }
    acc /= Complex::new(draws as f64, 0.0);
    let err = frobenius_norm(&(&acc - &entries)) / frobenius_norm(&entries);
    assert!(err < 0.05, "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn diagonal_is_kappa_and_hermitian_exact(
        theta in -1.2f64..1.2,
        spread in 0.01f64..0.6,
        kappa in 0.1f64..10.0,
        n in 2usize..20,
    ) {
        let array = AntennaArray::half_wavelength_ula(n).unwrap();
        let user = UserProfile::with_pathloss(0, theta, spread, kappa).unwrap();
        let r = one_ring_covariance(&array, &user, 128).unwrap();
        for m in 0..n {
            prop_assert!((r.entries()[(m, m)].re - kappa).abs() < 1e-9);
            prop_assert_eq!(r.entries()[(m, m)].im, 0.0);
        }
        prop_assert_eq!(hermitian_asymmetry(r.entries()), 0.0);
        prop_assert!(r.eigenvalues().iter().all(|&l| l > 0.0));
        let again = one_ring_covariance(&array, &user, 128).unwrap();
        prop_assert_eq!(r.entries(), again.entries());
    }

    #[test]
    fn energy_capture_is_monotone(seed in any::<u64>(), f1 in 0.5f64..1.0, f2 in 0.5f64..1.0) {
        let r = random_psd(&mut rng(seed), 10, 10, 0.6);
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let a = eigendecompose(&r, lo).unwrap();
        let b = eigendecompose(&r, hi).unwrap();
        prop_assert!(a.rank() <= b.rank());
        prop_assert!(b.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let total: f64 = (0..10).map(|i| r[(i, i)].re).sum();
        let kept: f64 = b.eigenvalues.iter().sum();
        prop_assert!(kept >= hi * total * (1.0 - 1e-12));
    }

    #[test]
    fn truncation_residual_within_energy_bound(seed in any::<u64>(), n in 2usize..12, decay in 0.05f64..1.0) {
        let fraction = 0.9999;
        let r = random_psd(&mut rng(seed), n, n, decay);
        let d = eigendecompose(&r, fraction).unwrap();
        // Dropped eigenvalues sum to at most (1 - fraction) of the trace.
        let resid = frobenius_norm(&(&r - d.reconstruct())) / trace_re(&r);
        prop_assert!(resid <= 1.0 - fraction + 1e-8, "residual {resid}");
    }

    #[test]
    fn overlap_is_symmetric_bounded_and_scale_free(
        seed in any::<u64>(),
        a in 0.01f64..100.0,
        b in 0.01f64..100.0,
        k1 in 1usize..6,
        k2 in 1usize..6,
    ) {
        let mut g = rng(seed);
        let r1 = random_psd(&mut g, 6, k1, 0.8);
        let r2 = random_psd(&mut g, 6, k2, 0.8);
        let v = dol_entries(&r1, &r2).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        prop_assert!((v - dol_entries(&r2, &r1).unwrap()).abs() < 1e-12);
        let scaled = dol_entries(&(&r1 * Complex::new(a, 0.0)), &(&r2 * Complex::new(b, 0.0))).unwrap();
        prop_assert!((v - scaled).abs() < 1e-12);
    }
}
