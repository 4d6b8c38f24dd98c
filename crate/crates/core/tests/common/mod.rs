#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wpmec::channel::ChannelSet;
use wpmec::linalg::{CMat, CVec, C64};
use wpmec::SystemConfig;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn cvec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CVec {
    CVec::from_fn(n, |_, _| gauss(rng) * scale)
}

pub fn cmat<R: Rng>(rng: &mut R, r: usize, c: usize, scale: f64) -> CMat {
    CMat::from_fn(r, c, |_, _| gauss(rng) * scale)
}

/// Random Hermitian PSD matrix `A A^H / n`.
pub fn psd<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CMat {
    let a = cmat(rng, n, n, 1.0);
    &a * a.adjoint() * C64::new(scale / n as f64, 0.0)
}

/// Config whose counts match `(k, b, m, i, n)`.
pub fn sized_config(k: usize, b: usize, m: usize, i: usize, n: usize) -> SystemConfig {
    SystemConfig {
        k,
        b,
        m,
        i,
        n,
        ..SystemConfig::default()
    }
}

/// Rayleigh channel set with desk-scale magnitudes.
pub fn random_channels(config: &SystemConfig, seed: u64) -> ChannelSet {
    let mut r = rng(seed);
    let h_d = (0..config.b)
        .map(|_| (0..config.k).map(|_| cvec(&mut r, config.m, 1e-3)).collect())
        .collect();
    let g = (0..config.b)
        .map(|_| (0..config.i).map(|_| cmat(&mut r, config.m, config.n, 4e-3)).collect())
        .collect();
    let h_r = (0..config.i)
        .map(|_| (0..config.k).map(|_| cvec(&mut r, config.n, 2e-2)).collect())
        .collect();
    ChannelSet::from_links(h_d, g, h_r).unwrap()
}

/// Point in the closed unit disk, elementwise.
pub fn disk<R: Rng>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| {
        let r: f64 = rng.random::<f64>().sqrt();
        C64::from_polar(r, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
    })
}
