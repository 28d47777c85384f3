#![allow(dead_code)]

use jsdm::channel::{one_ring_covariance, AntennaArray, UserProfile};
use jsdm::{CMatrix, CovarianceMatrix};
use nalgebra::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ring(n: usize, theta_deg: f64, spread_deg: f64) -> CovarianceMatrix {
    let array = AntennaArray::half_wavelength_ula(n).unwrap();
    let user = UserProfile::new(0, theta_deg.to_radians(), spread_deg.to_radians()).unwrap();
    one_ring_covariance(&array, &user, 512).unwrap()
}

pub fn gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix<f64> {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(re, im)
    })
}

/// `X Xᴴ` with `X` an `n × k` Gaussian matrix whose columns are scaled by
/// geometrically decaying factors, so spectra range over several decades.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize, k: usize, decay: f64) -> CMatrix<f64> {
    let mut x = gaussian(rng, n, k);
    for j in 0..k {
        let s = Complex::new(decay.powi(j as i32), 0.0);
        x.column_mut(j).iter_mut().for_each(|z| *z *= s);
    }
    &x * x.adjoint()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
