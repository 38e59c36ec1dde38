mod common;

use common::{gaussian, random_channel, random_factors, rng};
use num_complex::Complex64;
use proptest::prelude::*;
use wiretap_core::linalg::{c64, hermitian_eig, identity, real_diag, ComplexMatrix};
use wiretap_core::model::{
    factored_rate, grad_lambda_logdet, grad_unitary, hadamard_objective, random_unitary,
    sample_channel, secrecy_rate, ChannelPair, Dims, TransmitCovariance,
};

/// `ln |det(I + H P H^H)|` by LU, independent of the Cholesky path.
fn lu_logdet_link(h: &ComplexMatrix, p: &ComplexMatrix) -> f64 {
    let k = identity(h.nrows()) + h * p * h.adjoint();
    k.lu().determinant().norm().ln()
}

fn oracle_rate(ch: &ChannelPair, u: &ComplexMatrix, lambda: &[f64]) -> f64 {
    let p = u.adjoint() * real_diag(lambda) * u;
    lu_logdet_link(ch.h_main(), &p) - lu_logdet_link(ch.h_eave(), &p)
}

#[test]
fn unitary_gradient_matches_central_differences() {
    let h = 1e-5;
    let mut r = rng(11);
    for seed in 0..50 {
        let ch = random_channel(seed, 4);
        let m = ch.m();
        let (u, lambda) = random_factors(&mut r, m);
        let g = grad_unitary(&ch, &u, &lambda).unwrap();
        let mut fd = ComplexMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let mut partial = [0.0; 2];
                for (k, dir) in [c64(1.0, 0.0), c64(0.0, 1.0)].into_iter().enumerate() {
                    let mut plus = u.clone();
                    let mut minus = u.clone();
                    plus[(i, j)] += dir * h;
                    minus[(i, j)] -= dir * h;
                    partial[k] = (oracle_rate(&ch, &plus, &lambda) - oracle_rate(&ch, &minus, &lambda)) / (2.0 * h);
                }
                fd[(i, j)] = Complex64::new(partial[0], partial[1]) / 2.0;
            }
        }
        let err = (&fd - &g).norm() / g.norm().max(1e-8);
        assert!(err <= 1e-4, "instance {seed}: relative error {err}");
    }
}

#[test]
fn eigenvalue_gradient_matches_central_differences() {
    let h = 1e-5;
    let mut r = rng(12);
    for seed in 0..50 {
        let ch = random_channel(100 + seed, 4);
        let m = ch.m();
        let (u, mut lambda) = random_factors(&mut r, m);
        for l in &mut lambda {
            *l += 0.05;
        }
        let g = grad_lambda_logdet(&ch, &u, &lambda).unwrap();
        let main = |lam: &[f64]| lu_logdet_link(&(ch.h_main() * u.adjoint()), &real_diag(lam));
        let fd: Vec<f64> = (0..m)
            .map(|i| {
                let mut plus = lambda.clone();
                let mut minus = lambda.clone();
                plus[i] += h;
                minus[i] -= h;
                (main(&plus) - main(&minus)) / (2.0 * h)
            })
            .collect();
        let diff: f64 = fd.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(diff / norm.max(1e-8) <= 1e-4, "instance {seed}: {fd:?} vs {g:?}");
    }
}

#[test]
fn hadamard_bound_dominated_and_tight_on_diagonal() {
    let mut r = rng(13);
    for seed in 0..100 {
        let ch = random_channel(200 + seed, 4);
        let m = ch.m();
        let (u, lambda) = random_factors(&mut r, m);
        let bound = hadamard_objective(&ch, &u, &lambda).unwrap();
        let rate = factored_rate(&ch, &u, &lambda).unwrap();
        assert!(bound <= rate + 1e-12, "bound {bound} above rate {rate}");

        // Rows of U0 are conjugated eigenvectors of H_e^H H_e: D(U0) is diagonal.
        let eig = hermitian_eig(&ch.eave_gram()).unwrap();
        let u0 = eig.vectors.adjoint();
        let bound = hadamard_objective(&ch, &u0, &lambda).unwrap();
        let rate = factored_rate(&ch, &u0, &lambda).unwrap();
        assert!((bound - rate).abs() <= 1e-12 * rate.abs().max(1.0), "{bound} vs {rate}");
    }
}

#[test]
fn rate_invariant_under_receiver_rotations() {
    let mut r = rng(14);
    for seed in 0..50 {
        let ch = random_channel(300 + seed, 4);
        let (u, lambda) = random_factors(&mut r, ch.m());
        let p = TransmitCovariance::new(u.adjoint() * real_diag(&lambda) * &u).unwrap();
        let qm = random_unitary(&mut r, ch.n_main());
        let qe = random_unitary(&mut r, ch.n_eave());
        let rotated = ChannelPair::from_matrices(&qm * ch.h_main(), &qe * ch.h_eave()).unwrap();
        let a = secrecy_rate(&ch, &p).unwrap();
        let b = secrecy_rate(&rotated, &p).unwrap();
        assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }
}

#[test]
fn rotation_free_form_agrees_with_direct_rate() {
    let mut r = rng(15);
    for seed in 0..50 {
        let ch = random_channel(400 + seed, 4);
        let m = ch.m();
        let x = gaussian(&mut r, m, m);
        let raw = &x * x.adjoint();
        let scale = m as f64 / raw.trace().re;
        let p = TransmitCovariance::new(raw.scale(scale)).unwrap();
        let eig = hermitian_eig(p.matrix()).unwrap();
        let u = eig.vectors.adjoint();
        let root = real_diag(&eig.values.iter().map(|v| v.max(0.0).sqrt()).collect::<Vec<_>>());
        // ln det(I + Λ^{1/2} U H^H H U^H Λ^{1/2})
        let side = |h: &ComplexMatrix| {
            let k = identity(m) + &root * &u * h.adjoint() * h * u.adjoint() * &root;
            k.lu().determinant().norm().ln()
        };
        let rotation_free = side(ch.h_main()) - side(ch.h_eave());
        let direct = secrecy_rate(&ch, &p).unwrap();
        assert!((rotation_free - direct).abs() <= 1e-10, "{rotation_free} vs {direct}");
    }
}

#[test]
fn sampled_entry_variance_follows_snr() {
    // Entries have variance ρ/M; averaged over many draws of one entry.
    let dims = Dims::new(3, 2, 2);
    let rho = 6.0;
    let mut acc = 0.0;
    let n = 20_000;
    for seed in 0..n {
        let ch = sample_channel(dims, rho, rho, seed).unwrap();
        acc += ch.h_eave()[(1, 2)].norm_sqr();
    }
    let var = acc / n as f64;
    assert!((var - 2.0).abs() < 0.06, "variance {var}");
}

proptest! {
    #[test]
    fn channel_json_round_trips(seed in any::<u64>(), m in 1usize..5, nm in 1usize..5, ne in 1usize..5, rho in 0.0f64..100.0) {
        let ch = sample_channel(Dims::new(m, nm, ne), rho, rho * 0.5, seed).unwrap();
        let back = ChannelPair::from_json(&ch.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, ch);
    }

    #[test]
    fn covariance_round_trip_through_factors(seed in any::<u64>(), m in 1usize..5) {
        let mut r = rng(seed);
        let (u, lambda) = random_factors(&mut r, m);
        let p = TransmitCovariance::new(u.adjoint() * real_diag(&lambda) * &u).unwrap();
        let mut sorted = lambda.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let eig = hermitian_eig(p.matrix()).unwrap();
        for (a, b) in eig.values.iter().zip(&sorted) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }
}
