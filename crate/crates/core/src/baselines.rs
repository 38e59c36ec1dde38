//! Reference precoders, the closed-form MISOME capacity and a random-search
//! lower-bound oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, geig_hpd, hermitian_eig, identity, null_space_basis, real_diag, ComplexMatrix, DEFAULT_RANK_TOL,
};
use crate::model::{
    derive_seed, factored_rate, random_simplex, random_unitary, secrecy_rate, ChannelPair,
    TransmitCovariance,
};
use crate::potdc::projected_ascent;

/// Regularization added to `H_e^H H_e` in the GSVD pencil.
pub const GSVD_REGULARIZATION: f64 = 1e-10;

/// Samples drawn from one independently seeded oracle sub-stream.
const ORACLE_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecoderKind {
    Potdc,
    Gsvd,
    ZeroForcing,
    Slnr,
    WaterFilling,
    Isotropic,
    RandomSearchOracle,
}

impl PrecoderKind {
    pub const ALL: [PrecoderKind; 7] = [
        PrecoderKind::Potdc,
        PrecoderKind::Gsvd,
        PrecoderKind::ZeroForcing,
        PrecoderKind::Slnr,
        PrecoderKind::WaterFilling,
        PrecoderKind::Isotropic,
        PrecoderKind::RandomSearchOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrecoderKind::Potdc => "potdc",
            PrecoderKind::Gsvd => "gsvd",
            PrecoderKind::ZeroForcing => "zero_forcing",
            PrecoderKind::Slnr => "slnr",
            PrecoderKind::WaterFilling => "water_filling",
            PrecoderKind::Isotropic => "isotropic",
            PrecoderKind::RandomSearchOracle => "random_search_oracle",
        }
    }
}

/// Power allocation maximizing `Σ ln(1 + g_i p_i)` under `Σp_i ≤ budget`.
///
/// The water level `μ` is bracketed by bisection, then fixed exactly from the
/// identified active set so that the budget is met to rounding.
pub fn water_fill(gains: &[f64], budget: f64) -> Vec<f64> {
    let inv: Vec<Option<f64>> =
        gains.iter().map(|&g| (g > 0.0 && g.is_finite()).then(|| 1.0 / g)).collect();
    let floors: Vec<f64> = inv.iter().flatten().copied().collect();
    if floors.is_empty() || !(budget > 0.0) {
        return vec![0.0; gains.len()];
    }
    let filled = |mu: f64| -> f64 { floors.iter().map(|f| (mu - f).max(0.0)).sum() };
    let lowest = floors.iter().cloned().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (lowest, lowest + budget);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if filled(mid) > budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mu_guess = 0.5 * (lo + hi);
    let active: Vec<f64> = floors.iter().copied().filter(|f| *f < mu_guess).collect();
    let mu = if active.is_empty() {
        mu_guess
    } else {
        (budget + active.iter().sum::<f64>()) / active.len() as f64
    };
    inv.iter().map(|f| f.map_or(0.0, |f| (mu - f).max(0.0))).collect()
}

/// `Σ_i p_i w_i w_i^H` for the columns `w_i` of `w`.
fn weighted_outer(w: &ComplexMatrix, powers: &[f64]) -> ComplexMatrix {
    w * real_diag(powers) * w.adjoint()
}

/// Water-filling over the eigenmodes of the main channel, ignoring the eavesdropper.
pub fn precode_water_filling(ch: &ChannelPair) -> Result<TransmitCovariance> {
    let eig = hermitian_eig(&ch.main_gram())?;
    let gains: Vec<f64> = eig.values.iter().map(|g| g.max(0.0)).collect();
    let powers = water_fill(&gains, ch.budget());
    Ok(TransmitCovariance::from_trusted(weighted_outer(&eig.vectors, &powers)))
}

/// Equal power on every antenna, `P = I_M`.
pub fn precode_isotropic(ch: &ChannelPair) -> TransmitCovariance {
    TransmitCovariance::isotropic(ch.m())
}

/// Transmits only inside the null space of `H_e`, water-filling over the
/// main-channel modes there. Zero covariance when the null space is empty.
pub fn precode_zero_forcing(ch: &ChannelPair) -> Result<TransmitCovariance> {
    let basis = null_space_basis(ch.h_eave(), DEFAULT_RANK_TOL);
    if basis.ncols() == 0 {
        return Ok(TransmitCovariance::zeros(ch.m()));
    }
    let projected = &basis.adjoint() * ch.main_gram() * &basis;
    let eig = hermitian_eig(&crate::linalg::hermitian_part(&projected))?;
    let gains: Vec<f64> = eig.values.iter().map(|g| g.max(0.0)).collect();
    let powers = water_fill(&gains, ch.budget());
    let directions = &basis * &eig.vectors;
    Ok(TransmitCovariance::from_trusted(weighted_outer(&directions, &powers)))
}

/// Full-power beamforming along the principal generalized eigenvector of
/// `(H_m^H H_m, I + H_e^H H_e)`, which maximizes the signal-to-leakage-plus-noise ratio.
pub fn precode_slnr(ch: &ChannelPair) -> Result<TransmitCovariance> {
    let m = ch.m();
    let eig = geig_hpd(&ch.main_gram(), &(identity(m) + ch.eave_gram()))?;
    let v = eig.vectors.column(0).into_owned();
    let w = &v / c64(v.norm(), 0.0);
    Ok(TransmitCovariance::from_trusted((&w * w.adjoint()).scale(ch.budget())))
}

/// Beamforming along generalized singular directions of `(H_m, H_e)` that
/// favour the main channel, with powers chosen by projected gradient over
/// the separable rate `Σ ln(1 + a_i p_i) − ln(1 + b_i p_i)`.
pub fn precode_gsvd(ch: &ChannelPair) -> Result<TransmitCovariance> {
    let m = ch.m();
    let pencil_b = identity(m).scale(GSVD_REGULARIZATION) + ch.eave_gram();
    let eig = geig_hpd(&ch.main_gram(), &pencil_b)?;

    let mut directions = Vec::new();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..m {
        let v = eig.vectors.column(i);
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            continue;
        }
        let u = v.into_owned() / c64(norm, 0.0);
        let ai = (ch.h_main() * &u).norm_squared();
        let bi = (ch.h_eave() * &u).norm_squared();
        directions.push(u);
        a.push(ai);
        b.push(bi);
    }
    let a_max = a.iter().cloned().fold(0.0, f64::max);
    let kept: Vec<usize> = (0..a.len()).filter(|&i| a[i] - b[i] > 1e-12 * a_max).collect();
    if kept.is_empty() {
        return Ok(TransmitCovariance::zeros(m));
    }

    let ka: Vec<f64> = kept.iter().map(|&i| a[i]).collect();
    let kb: Vec<f64> = kept.iter().map(|&i| b[i]).collect();
    let budget = ch.budget();
    let start = vec![budget / kept.len() as f64; kept.len()];
    let powers = projected_ascent(
        |p| Ok(p.iter().zip(ka.iter().zip(&kb)).map(|(p, (a, b))| (a * p).ln_1p() - (b * p).ln_1p()).sum()),
        |p| Ok(p.iter().zip(ka.iter().zip(&kb)).map(|(p, (a, b))| a / (1.0 + a * p) - b / (1.0 + b * p)).collect()),
        &start,
        budget,
        1e-12,
        5000,
    )?;

    let mut p = ComplexMatrix::zeros(m, m);
    for (k, &i) in kept.iter().enumerate() {
        let u = &directions[i];
        p += (u * u.adjoint()).scale(powers[k]);
    }
    Ok(TransmitCovariance::from_trusted(p))
}

/// Closed-form secrecy capacity of a single-antenna-receiver channel:
/// `max(0, ln μ_max)` for the pencil `(I + M h_m^H h_m, I + M H_e^H H_e)`.
pub fn misome_capacity(ch: &ChannelPair) -> Result<f64> {
    if ch.n_main() != 1 {
        return Err(Error::InvalidConfig(format!(
            "closed-form capacity needs a single-antenna legitimate receiver, got {}",
            ch.n_main()
        )));
    }
    let m = ch.m();
    let power = ch.budget();
    let a = identity(m) + ch.main_gram().scale(power);
    let b = identity(m) + ch.eave_gram().scale(power);
    let eig = geig_hpd(&a, &b)?;
    Ok(eig.values[0].ln().max(0.0))
}

/// Result of [`random_search_oracle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub rate: f64,
    pub p: TransmitCovariance,
}

/// Best secrecy rate over the deterministic baseline candidates plus
/// `samples` random feasible covariances.
///
/// Random covariances use a Haar eigenbasis and eigenvalues uniform on the
/// simplex, scaled to the full budget with probability 1/2 and otherwise to a
/// uniform fraction of it. Sample `j` depends only on `(seed, j)`, so a longer
/// search extends a shorter one.
pub fn random_search_oracle(ch: &ChannelPair, samples: usize, seed: u64) -> Result<OracleResult> {
    if samples == 0 {
        return Err(Error::InvalidConfig("oracle needs at least one sample".into()));
    }
    let m = ch.m();
    let budget = ch.budget();

    let mut candidates = vec![TransmitCovariance::zeros(m), precode_isotropic(ch)];
    candidates.extend(precode_water_filling(ch).ok());
    candidates.extend(precode_zero_forcing(ch).ok());
    candidates.extend(precode_slnr(ch).ok());
    candidates.extend(precode_gsvd(ch).ok());

    let mut best_rate = f64::NEG_INFINITY;
    let mut best_p = TransmitCovariance::zeros(m);
    for p in candidates {
        let r = secrecy_rate(ch, &p)?;
        if r > best_rate {
            best_rate = r;
            best_p = p;
        }
    }

    let mut best_sample: Option<(f64, ComplexMatrix, Vec<f64>)> = None;
    let chunks = samples.div_ceil(ORACLE_CHUNK);
    for chunk in 0..chunks {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, chunk as u64));
        let count = ORACLE_CHUNK.min(samples - chunk * ORACLE_CHUNK);
        for _ in 0..count {
            let u = random_unitary(&mut rng, m);
            let total = if rng.random_bool(0.5) { budget } else { budget * rng.random::<f64>() };
            let lambda = random_simplex(&mut rng, m, total);
            let r = factored_rate(ch, &u, &lambda)?;
            if best_sample.as_ref().is_none_or(|(b, _, _)| r > *b) {
                best_sample = Some((r, u, lambda));
            }
        }
    }
    if let Some((r, u, lambda)) = best_sample {
        if r > best_rate {
            best_rate = r;
            best_p = crate::model::assemble(&u, &lambda)?;
        }
    }
    Ok(OracleResult { rate: best_rate, p: best_p })
}
