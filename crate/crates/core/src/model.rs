//! The wire-tap problem instance: channels, transmit covariances and the
//! objective functions (plus gradients) the solvers work with.
//!
//! Conventions used throughout:
//!
//! * a covariance is factored as `P = U^H Λ U`, so the *rows* of `U` are the
//!   conjugated eigenvectors of `P`;
//! * rates are in nats;
//! * a complex gradient `∇` of a real function `f` satisfies
//!   `f(U + tΔ) ≈ f(U) + 2t·Re tr(∇^H Δ)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, cholesky_lower, cholesky_solve, hermitian_eig, hermitian_part, identity, is_finite,
    qr_orthonormalize, real_diag, trace_re, unitarity_defect, ComplexMatrix,
};

/// Slack allowed on the PSD and trace-budget constraints.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Antenna counts `(M, N_m, N_e)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub m: usize,
    pub n_main: usize,
    pub n_eave: usize,
}

impl Dims {
    pub fn new(m: usize, n_main: usize, n_eave: usize) -> Self {
        Dims { m, n_main, n_eave }
    }
}

/// Main and eavesdropper channel matrices of one wire-tap instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelDoc", into = "ChannelDoc")]
pub struct ChannelPair {
    h_main: ComplexMatrix,
    h_eave: ComplexMatrix,
    rho_main: f64,
    rho_eave: f64,
}

impl ChannelPair {
    pub fn new(
        h_main: ComplexMatrix,
        h_eave: ComplexMatrix,
        rho_main: f64,
        rho_eave: f64,
    ) -> Result<Self> {
        if h_main.ncols() != h_eave.ncols() {
            return Err(Error::InvalidMatrix(format!(
                "main channel has {} columns but eavesdropper channel has {}",
                h_main.ncols(),
                h_eave.ncols()
            )));
        }
        if h_main.ncols() == 0 {
            return Err(Error::InvalidMatrix("channels need at least one transmit antenna".into()));
        }
        if !is_finite(&h_main) || !is_finite(&h_eave) {
            return Err(Error::InvalidMatrix("channel has non-finite entries".into()));
        }
        for rho in [rho_main, rho_eave] {
            if !(rho >= 0.0 && rho.is_finite()) {
                return Err(Error::InvalidConfig(format!("SNR must be finite and >= 0, got {rho}")));
            }
        }
        Ok(ChannelPair { h_main, h_eave, rho_main, rho_eave })
    }

    /// Builds an instance from unit-SNR-free matrices (both SNRs recorded as 1).
    pub fn from_matrices(h_main: ComplexMatrix, h_eave: ComplexMatrix) -> Result<Self> {
        Self::new(h_main, h_eave, 1.0, 1.0)
    }

    pub fn h_main(&self) -> &ComplexMatrix {
        &self.h_main
    }

    pub fn h_eave(&self) -> &ComplexMatrix {
        &self.h_eave
    }

    pub fn rho_main(&self) -> f64 {
        self.rho_main
    }

    pub fn rho_eave(&self) -> f64 {
        self.rho_eave
    }

    /// Number of transmit antennas, which is also the power budget.
    pub fn m(&self) -> usize {
        self.h_main.ncols()
    }

    pub fn n_main(&self) -> usize {
        self.h_main.nrows()
    }

    pub fn n_eave(&self) -> usize {
        self.h_eave.nrows()
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.m(), self.n_main(), self.n_eave())
    }

    pub fn budget(&self) -> f64 {
        self.m() as f64
    }

    /// `H_m^H H_m`, Hermitian by construction.
    pub fn main_gram(&self) -> ComplexMatrix {
        hermitian_part(&(self.h_main.adjoint() * &self.h_main))
    }

    /// `H_e^H H_e`, Hermitian by construction.
    pub fn eave_gram(&self) -> ComplexMatrix {
        hermitian_part(&(self.h_eave.adjoint() * &self.h_eave))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// On-disk layout of a [`ChannelPair`]; complex entries are `[re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChannelDoc {
    m: usize,
    n_main: usize,
    n_eave: usize,
    rho_main: f64,
    rho_eave: f64,
    h_main: Vec<Vec<[f64; 2]>>,
    h_eave: Vec<Vec<[f64; 2]>>,
}

impl From<ChannelPair> for ChannelDoc {
    fn from(ch: ChannelPair) -> Self {
        ChannelDoc {
            m: ch.m(),
            n_main: ch.n_main(),
            n_eave: ch.n_eave(),
            rho_main: ch.rho_main,
            rho_eave: ch.rho_eave,
            h_main: matrix_to_rows(&ch.h_main),
            h_eave: matrix_to_rows(&ch.h_eave),
        }
    }
}

impl TryFrom<ChannelDoc> for ChannelPair {
    type Error = Error;

    fn try_from(doc: ChannelDoc) -> Result<Self> {
        let h_main = matrix_from_rows(&doc.h_main, doc.n_main, doc.m)?;
        let h_eave = matrix_from_rows(&doc.h_eave, doc.n_eave, doc.m)?;
        ChannelPair::new(h_main, h_eave, doc.rho_main, doc.rho_eave)
    }
}

pub(crate) fn matrix_to_rows(a: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

pub(crate) fn matrix_from_rows(
    rows: &[Vec<[f64; 2]>],
    nrows: usize,
    ncols: usize,
) -> Result<ComplexMatrix> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidMatrix(format!(
            "matrix entries do not match the declared {nrows}x{ncols} shape"
        )));
    }
    Ok(ComplexMatrix::from_fn(nrows, ncols, |i, j| c64(rows[i][j][0], rows[i][j][1])))
}

/// Hermitian PSD transmit covariance with `tr P ≤ M`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitCovariance(ComplexMatrix);

impl TransmitCovariance {
    /// Validates Hermitian symmetry, PSD-ness and the trace budget
    /// `M = dim(P)`, then stores the symmetrized matrix.
    pub fn new(p: ComplexMatrix) -> Result<Self> {
        let eig = hermitian_eig(&p)?;
        let m = p.nrows() as f64;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -FEASIBILITY_TOL {
            return Err(Error::InvalidConfig(format!(
                "covariance is not PSD (min eigenvalue {min:e})"
            )));
        }
        let tr = trace_re(&p);
        if tr > m + FEASIBILITY_TOL {
            return Err(Error::InvalidConfig(format!("covariance trace {tr} exceeds budget {m}")));
        }
        Ok(TransmitCovariance(hermitian_part(&p)))
    }

    /// Wraps a matrix the caller built to be feasible (symmetrized, no checks).
    pub(crate) fn from_trusted(p: ComplexMatrix) -> Self {
        TransmitCovariance(hermitian_part(&p))
    }

    pub fn zeros(m: usize) -> Self {
        TransmitCovariance(ComplexMatrix::zeros(m, m))
    }

    pub fn isotropic(m: usize) -> Self {
        TransmitCovariance(identity(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eig(&self.0)
            .map(|e| e.values.last().copied().unwrap_or(0.0))
            .unwrap_or(f64::NAN)
    }
}

impl Serialize for TransmitCovariance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_rows(&self.0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransmitCovariance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let n = rows.len();
        let p = matrix_from_rows(&rows, n, n).map_err(serde::de::Error::custom)?;
        TransmitCovariance::new(p).map_err(serde::de::Error::custom)
    }
}

/// Factor pair `(U, λ)` with `P = U^H diag(λ) U`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFactorization {
    pub u: ComplexMatrix,
    pub lambda: Vec<f64>,
}

impl EigenFactorization {
    /// Factors a covariance; eigenvalues come out descending and clipped at 0.
    pub fn from_covariance(p: &TransmitCovariance) -> Result<Self> {
        let eig = hermitian_eig(p.matrix())?;
        let mut lambda: Vec<f64> = eig.values.iter().map(|&w| w.max(0.0)).collect();
        let total: f64 = lambda.iter().sum();
        let budget = p.dim() as f64;
        if total > budget {
            lambda.iter_mut().for_each(|l| *l *= budget / total);
        }
        Ok(EigenFactorization { u: eig.vectors.adjoint(), lambda })
    }

    pub fn covariance(&self) -> Result<TransmitCovariance> {
        assemble(&self.u, &self.lambda)
    }
}

/// `U^H diag(λ) U`, symmetrized, after checking unitarity and feasibility.
pub(crate) fn assemble(u: &ComplexMatrix, lambda: &[f64]) -> Result<TransmitCovariance> {
    if u.nrows() != u.ncols() || u.nrows() != lambda.len() {
        return Err(Error::InvalidMatrix("factor sizes do not match".into()));
    }
    if unitarity_defect(u) > 1e-8 {
        return Err(Error::InvalidMatrix("eigenbasis is not unitary".into()));
    }
    check_lambda(lambda, lambda.len() as f64)?;
    Ok(TransmitCovariance(covariance_from_factors(u, lambda)))
}

pub(crate) fn covariance_from_factors(u: &ComplexMatrix, lambda: &[f64]) -> ComplexMatrix {
    hermitian_part(&(u.adjoint() * real_diag(lambda) * u))
}

/// Checks `λ ≥ 0` and `Σλ ≤ budget` (within [`FEASIBILITY_TOL`]).
pub fn check_lambda(lambda: &[f64], budget: f64) -> Result<()> {
    if lambda.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::InvalidConfig("eigenvalues must be finite and non-negative".into()));
    }
    let total: f64 = lambda.iter().sum();
    if total > budget + FEASIBILITY_TOL {
        return Err(Error::InvalidConfig(format!("eigenvalue sum {total} exceeds budget {budget}")));
    }
    Ok(())
}

/// Deterministically derives an independent seed for sub-stream `stream`
/// of `base` (SplitMix64 finalizer over both words).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(base.wrapping_add(0x9e37_79b9_7f4a_7c15)) ^ stream.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Draws an i.i.d. Rayleigh instance: entries `CN(0, ρ/M)`.
pub fn sample_channel(dims: Dims, rho_main: f64, rho_eave: f64, seed: u64) -> Result<ChannelPair> {
    if dims.m == 0 || dims.n_main == 0 || dims.n_eave == 0 {
        return Err(Error::InvalidConfig(format!("antenna counts must be positive, got {dims:?}")));
    }
    for rho in [rho_main, rho_eave] {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidConfig(format!("SNR must be finite and >= 0, got {rho}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = dims.m as f64;
    let h_main = complex_gaussian(&mut rng, dims.n_main, dims.m, rho_main / m);
    let h_eave = complex_gaussian(&mut rng, dims.n_eave, dims.m, rho_eave / m);
    ChannelPair::new(h_main, h_eave, rho_main, rho_eave)
}

/// Matrix of i.i.d. circular complex Gaussians with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> ComplexMatrix {
    let sd = (variance / 2.0).sqrt();
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            out[(i, j)] = c64(sd * re, sd * im);
        }
    }
    out
}

/// Haar-distributed unitary matrix (QR of a complex Gaussian matrix).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, m: usize) -> ComplexMatrix {
    loop {
        let g = complex_gaussian(rng, m, m, 1.0);
        if let Ok(q) = qr_orthonormalize(&g) {
            return q;
        }
    }
}

/// Uniform point on `{λ ≥ 0, Σλ = total}`.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, m: usize, total: f64) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| total * x / s).collect()
}

fn check_covariance_dims(ch: &ChannelPair, p: &ComplexMatrix) -> Result<()> {
    if p.nrows() != ch.m() || p.ncols() != ch.m() {
        return Err(Error::InvalidMatrix(format!(
            "covariance is {}x{} but the channel has {} transmit antennas",
            p.nrows(),
            p.ncols(),
            ch.m()
        )));
    }
    Ok(())
}

fn check_factor_dims(ch: &ChannelPair, u: &ComplexMatrix, lambda: &[f64]) -> Result<()> {
    let m = ch.m();
    if u.nrows() != m || u.ncols() != m || lambda.len() != m {
        return Err(Error::InvalidMatrix(format!(
            "factors ({}x{}, {}) do not match {m} transmit antennas",
            u.nrows(),
            u.ncols(),
            lambda.len()
        )));
    }
    Ok(())
}

/// `ln det(I + H P H^H)`.
pub(crate) fn link_logdet(h: &ComplexMatrix, p: &ComplexMatrix) -> Result<f64> {
    let n = h.nrows();
    let k = identity(n) + h * p * h.adjoint();
    let l = cholesky_lower(&k)?;
    Ok(2.0 * (0..n).map(|i| l[(i, i)].re.ln()).sum::<f64>())
}

/// Secrecy rate `ln det(I + H_m P H_m^H) − ln det(I + H_e P H_e^H)` in nats.
/// Not clamped; negative values mean the eavesdropper is better served.
pub fn secrecy_rate(ch: &ChannelPair, p: &TransmitCovariance) -> Result<f64> {
    secrecy_rate_of_matrix(ch, p.matrix())
}

pub(crate) fn secrecy_rate_of_matrix(ch: &ChannelPair, p: &ComplexMatrix) -> Result<f64> {
    check_covariance_dims(ch, p)?;
    Ok(link_logdet(&ch.h_main, p)? - link_logdet(&ch.h_eave, p)?)
}

/// Rate over the main link alone, `ln det(I + H_m P H_m^H)`.
pub fn main_rate(ch: &ChannelPair, p: &TransmitCovariance) -> Result<f64> {
    check_covariance_dims(ch, p.matrix())?;
    link_logdet(&ch.h_main, p.matrix())
}

/// Information leaked to the eavesdropper, `ln det(I + H_e P H_e^H)`.
pub fn leakage(ch: &ChannelPair, p: &TransmitCovariance) -> Result<f64> {
    check_covariance_dims(ch, p.matrix())?;
    link_logdet(&ch.h_eave, p.matrix())
}

/// Secrecy rate of `P = U^H diag(λ) U`, evaluated without forming an
/// eigendecomposition. This is the objective of the unitary step.
pub fn factored_rate(ch: &ChannelPair, u: &ComplexMatrix, lambda: &[f64]) -> Result<f64> {
    check_factor_dims(ch, u, lambda)?;
    secrecy_rate_of_matrix(ch, &covariance_from_factors(u, lambda))
}

/// `diag(D(U0))` with `D(U0) = U0 H_e^H H_e U0^H`, i.e. the squared column
/// norms of `H_e U0^H`.
pub fn leakage_diagonal(ch: &ChannelPair, u0: &ComplexMatrix) -> Vec<f64> {
    let b = &ch.h_eave * u0.adjoint();
    (0..b.ncols()).map(|j| b.column(j).norm_squared()).collect()
}

/// Lower bound on [`factored_rate`] obtained by replacing the eavesdropper
/// log-det with the log of the diagonal product (Hadamard's inequality).
pub fn hadamard_objective(ch: &ChannelPair, u0: &ComplexMatrix, lambda: &[f64]) -> Result<f64> {
    check_factor_dims(ch, u0, lambda)?;
    let a = &ch.h_main * u0.adjoint();
    let d = leakage_diagonal(ch, u0);
    let main = link_logdet(&a, &real_diag(lambda))?;
    let eave: f64 = d.iter().zip(lambda).map(|(di, li)| (di * li).ln_1p()).sum();
    Ok(main - eave)
}

/// Euclidean gradient of [`factored_rate`] with respect to `U` (λ fixed):
/// `Λ U H_m^H K_m^{-1} H_m − Λ U H_e^H K_e^{-1} H_e` with
/// `K = I + H U^H Λ U H^H`.
pub fn grad_unitary(ch: &ChannelPair, u: &ComplexMatrix, lambda0: &[f64]) -> Result<ComplexMatrix> {
    check_factor_dims(ch, u, lambda0)?;
    let p = covariance_from_factors(u, lambda0);
    let lu = real_diag(lambda0) * u;
    let term = |h: &ComplexMatrix| -> Result<ComplexMatrix> {
        let k = identity(h.nrows()) + h * &p * h.adjoint();
        let l = cholesky_lower(&k)?;
        Ok(&lu * h.adjoint() * cholesky_solve(&l, h))
    };
    Ok(term(&ch.h_main)? - term(&ch.h_eave)?)
}

/// Gradient of `λ ↦ ln det(I + A diag(λ) A^H)` with `A = H_m U0^H`:
/// component `i` is `a_i^H (I + A Λ A^H)^{-1} a_i`.
pub fn grad_lambda_logdet(ch: &ChannelPair, u0: &ComplexMatrix, lambda: &[f64]) -> Result<Vec<f64>> {
    check_factor_dims(ch, u0, lambda)?;
    let a = &ch.h_main * u0.adjoint();
    logdet_gradient(&a, lambda)
}

pub(crate) fn logdet_gradient(a: &ComplexMatrix, lambda: &[f64]) -> Result<Vec<f64>> {
    let k = identity(a.nrows()) + a * real_diag(lambda) * a.adjoint();
    let l = cholesky_lower(&k)?;
    let x = cholesky_solve(&l, a);
    Ok((0..a.ncols())
        .map(|j| a.column(j).dotc(&x.column(j)).re.max(0.0))
        .collect())
}
