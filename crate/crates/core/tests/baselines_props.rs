mod common;

use common::{channel, random_channel};
use wiretap_core::baselines::{
    misome_capacity, precode_gsvd, precode_isotropic, precode_slnr, precode_water_filling,
    precode_zero_forcing, random_search_oracle,
};
use wiretap_core::linalg::{hermitian_defect, null_space_basis, DEFAULT_RANK_TOL};
use wiretap_core::model::{leakage, secrecy_rate, ChannelPair, Dims, TransmitCovariance};

fn all_precoders(ch: &ChannelPair) -> Vec<(&'static str, TransmitCovariance)> {
    vec![
        ("water_filling", precode_water_filling(ch).unwrap()),
        ("isotropic", precode_isotropic(ch)),
        ("zero_forcing", precode_zero_forcing(ch).unwrap()),
        ("slnr", precode_slnr(ch).unwrap()),
        ("gsvd", precode_gsvd(ch).unwrap()),
    ]
}

#[test]
fn precoders_are_feasible() {
    for seed in 0..100 {
        let ch = random_channel(2000 + seed, 4);
        let m = ch.m() as f64;
        for (name, p) in all_precoders(&ch) {
            assert!(p.trace() <= m + 1e-9, "{name}: trace {}", p.trace());
            assert!(p.min_eigenvalue() >= -1e-10, "{name}: {}", p.min_eigenvalue());
            assert!(hermitian_defect(p.matrix()) <= 1e-12, "{name}");
            assert!(secrecy_rate(&ch, &p).unwrap().is_finite());
        }
    }
}

#[test]
fn zero_forcing_leaks_nothing() {
    let mut checked = 0;
    for seed in 0..100 {
        let ch = random_channel(2100 + seed, 4);
        if null_space_basis(ch.h_eave(), DEFAULT_RANK_TOL).ncols() == 0 {
            continue;
        }
        checked += 1;
        let p = precode_zero_forcing(&ch).unwrap();
        assert!(leakage(&ch, &p).unwrap() <= 1e-10);
    }
    assert!(checked > 10);
}

#[test]
fn misome_capacity_dominates_every_method() {
    for seed in 0..50 {
        let ch = channel(Dims::new(2, 1, 2), (seed % 5) as f64 * 5.0, 2200 + seed);
        let cap = misome_capacity(&ch).unwrap();
        for (name, p) in all_precoders(&ch) {
            let r = secrecy_rate(&ch, &p).unwrap();
            assert!(r <= cap + 1e-6, "{name}: {r} > {cap}");
        }
        let oracle = random_search_oracle(&ch, 2000, seed).unwrap();
        assert!(oracle.rate <= cap + 1e-6);
    }
}

#[test]
fn misome_capacity_is_reached_by_random_search() {
    for seed in 0..5 {
        let ch = channel(Dims::new(2, 1, 2), 10.0, 2300 + seed);
        let cap = misome_capacity(&ch).unwrap();
        let oracle = random_search_oracle(&ch, 100_000, seed).unwrap();
        assert!(cap >= oracle.rate - 1e-3);
        assert!(cap <= oracle.rate + 1e-2, "capacity {cap} far above search {}", oracle.rate);
    }
}

#[test]
fn oracle_prefix_property() {
    let ch = channel(Dims::new(3, 2, 2), 10.0, 2400);
    let mut last = f64::MIN;
    for n in [1, 10, 100, 5000, 9000] {
        let r = random_search_oracle(&ch, n, 5).unwrap().rate;
        assert!(r >= last);
        last = r;
    }
}

#[test]
fn oracle_self_consistent_across_sample_counts() {
    let ch = channel(Dims::new(2, 2, 2), 10.0, 2500);
    let small = random_search_oracle(&ch, 100_000, 1).unwrap().rate;
    let large = random_search_oracle(&ch, 1_000_000, 1).unwrap().rate;
    assert!((large - small).abs() <= 5e-3, "{small} vs {large}");
}

#[test]
fn oracle_output_is_consistent() {
    let ch = random_channel(2600, 4);
    let res = random_search_oracle(&ch, 500, 2).unwrap();
    assert!((secrecy_rate(&ch, &res.p).unwrap() - res.rate).abs() <= 1e-12);
    assert!(res.p.trace() <= ch.m() as f64 + 1e-9);
}
