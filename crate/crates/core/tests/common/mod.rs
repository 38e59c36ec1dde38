#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wiretap_core::linalg::ComplexMatrix;
use wiretap_core::model::{complex_gaussian, random_simplex, random_unitary, sample_channel, ChannelPair, Dims};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dimensions in `1..=max` and a channel at an SNR drawn from 0..20 dB.
pub fn random_channel(seed: u64, max: usize) -> ChannelPair {
    let mut r = rng(seed ^ 0x5eed);
    let dims = Dims::new(r.random_range(1..=max), r.random_range(1..=max), r.random_range(1..=max));
    let rho = 10f64.powf(r.random_range(0.0..2.0));
    sample_channel(dims, rho, rho, seed).unwrap()
}

pub fn channel(dims: Dims, snr_db: f64, seed: u64) -> ChannelPair {
    let rho = 10f64.powf(snr_db / 10.0);
    sample_channel(dims, rho, rho, seed).unwrap()
}

/// A random feasible point: Haar basis and eigenvalues summing to at most the budget.
pub fn random_factors(r: &mut ChaCha8Rng, m: usize) -> (ComplexMatrix, Vec<f64>) {
    let u = random_unitary(r, m);
    let total = m as f64 * r.random_range(0.2..1.0);
    (u, random_simplex(r, m, total))
}

pub fn gaussian(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    complex_gaussian(r, rows, cols, 1.0)
}

/// Largest drop between consecutive entries (0 for a non-decreasing trace).
pub fn worst_drop(trace: &[f64]) -> f64 {
    trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}
