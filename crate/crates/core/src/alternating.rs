//! Full precoder design: alternate the eigenvalue step and the eigenvector
//! step until the secrecy rate stops improving.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::model::{
    assemble, derive_seed, factored_rate, random_simplex, random_unitary, ChannelPair,
    EigenFactorization, TransmitCovariance,
};
use crate::potdc::{optimize, EigenvalueProblem, PotdcSettings};
use crate::unitary::{ascend_unitary, UnitarySettings};

/// Halvings tried when an eigenvalue step lowers the true secrecy rate.
const GUARD_HALVINGS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlternatingSettings {
    /// Stop once a full alternation improves the rate by at most this much (nats).
    pub zeta2: f64,
    pub max_alternations: usize,
    pub potdc: PotdcSettings,
    pub unitary: UnitarySettings,
    /// Starting covariance for the first start; later starts are random.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_covariance: Option<TransmitCovariance>,
    /// Independent starts; the best result is kept. Use 1 for a single random start.
    pub starts: usize,
    /// Seed for the random starting points.
    pub seed: u64,
    /// Warm-start each eigenvalue step from the current eigenvalues
    /// (otherwise restart from uniform power).
    pub warm_start: bool,
}

impl Default for AlternatingSettings {
    fn default() -> Self {
        AlternatingSettings {
            zeta2: 1e-5,
            max_alternations: 50,
            potdc: PotdcSettings::default(),
            unitary: UnitarySettings::default(),
            init_covariance: None,
            starts: 3,
            seed: 0,
            warm_start: true,
        }
    }
}

impl AlternatingSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta2 > 0.0 && self.zeta2.is_finite()) {
            return Err(Error::InvalidConfig("zeta2 must be finite and positive".into()));
        }
        if self.max_alternations == 0 || self.starts == 0 {
            return Err(Error::InvalidConfig("max_alternations and starts must be positive".into()));
        }
        self.potdc.validate()?;
        self.unitary.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Threshold,
    MaxIters,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub p_opt: TransmitCovariance,
    /// `max(0, rate)` of `p_opt`, in nats.
    pub secrecy_rate: f64,
    /// Rate at the starting point, then after every half-step, for the winning start.
    pub alternation_trace: Vec<f64>,
    /// Lower-bound traces of every eigenvalue step of the winning start.
    pub potdc_traces: Vec<Vec<f64>>,
    pub alternations: usize,
    pub converged: bool,
    pub termination_reason: TerminationReason,
    /// Index of the start that produced `p_opt`.
    pub best_start: usize,
}

/// `U^H diag(λ) U`, symmetrized.
pub fn assemble_covariance(u: &ComplexMatrix, lambda: &[f64]) -> Result<TransmitCovariance> {
    assemble(u, lambda)
}

#[derive(Debug)]
struct Run {
    best_u: ComplexMatrix,
    best_lambda: Vec<f64>,
    best_value: f64,
    trace: Vec<f64>,
    potdc_traces: Vec<Vec<f64>>,
    alternations: usize,
    reason: TerminationReason,
}

struct Iterate {
    u: ComplexMatrix,
    lambda: Vec<f64>,
    value: f64,
}

fn random_start(ch: &ChannelPair, seed: u64) -> EigenFactorization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = ch.m();
    let u = random_unitary(&mut rng, m);
    let lambda = random_simplex(&mut rng, m, ch.budget());
    EigenFactorization { u, lambda }
}

fn is_numerical(err: &Error) -> bool {
    matches!(err, Error::NumericalFailure(_) | Error::NotPositiveDefinite)
}

/// Eigenvalue half-step. The lower bound never decreases, but the true rate
/// can; a step that lowers it is shortened towards the current eigenvalues
/// and dropped if no shortened version helps.
fn eigenvalue_step(
    ch: &ChannelPair,
    cur: &Iterate,
    settings: &AlternatingSettings,
    potdc_traces: &mut Vec<Vec<f64>>,
) -> Result<(Vec<f64>, f64)> {
    let problem = EigenvalueProblem::new(ch, &cur.u)?;
    let init = if settings.warm_start { cur.lambda.clone() } else { vec![1.0; ch.m()] };
    let res = optimize(&problem, &init, &settings.potdc)?;
    potdc_traces.push(res.objective_trace);
    let proposal = res.lambda_opt;
    let mut t = 1.0;
    for _ in 0..=GUARD_HALVINGS {
        let cand: Vec<f64> =
            cur.lambda.iter().zip(&proposal).map(|(c, p)| c + t * (p - c)).collect();
        let value = factored_rate(ch, &cur.u, &cand)?;
        if !value.is_finite() {
            return Err(Error::NumericalFailure("non-finite rate after eigenvalue step".into()));
        }
        if value >= cur.value {
            return Ok((cand, value));
        }
        t *= 0.5;
    }
    Ok((cur.lambda.clone(), cur.value))
}

/// Eigenvector half-step; keeps the current basis if ascent did not help.
///
/// Zero power is stationary for both half-steps, so once the eigenvalues
/// have collapsed there the basis is instead rotated for a full-power beam on
/// its first row. The rate stays 0 meanwhile, and the next eigenvalue step
/// starts from a direction worth transmitting on, if one exists.
fn eigenvector_step(ch: &ChannelPair, cur: &mut Iterate, settings: &AlternatingSettings) -> Result<()> {
    if cur.lambda.iter().all(|l| *l == 0.0) {
        let mut beam = vec![0.0; ch.m()];
        beam[0] = ch.budget();
        let res = ascend_unitary(ch, &beam, &cur.u, &settings.unitary)?;
        cur.u = res.u_opt;
        return Ok(());
    }
    let res = ascend_unitary(ch, &cur.lambda, &cur.u, &settings.unitary)?;
    let value = *res.objective_trace.last().expect("trace holds the start value");
    if value >= cur.value {
        cur.u = res.u_opt;
        cur.value = value;
    }
    Ok(())
}

fn run_from(ch: &ChannelPair, start: EigenFactorization, settings: &AlternatingSettings) -> Result<Run> {
    let value = factored_rate(ch, &start.u, &start.lambda)?;
    if !value.is_finite() {
        return Err(Error::NumericalFailure("non-finite rate at the starting point".into()));
    }
    let mut cur = Iterate { u: start.u, lambda: start.lambda, value };
    let mut run = Run {
        best_u: cur.u.clone(),
        best_lambda: cur.lambda.clone(),
        best_value: value,
        trace: vec![value],
        potdc_traces: Vec::new(),
        alternations: 0,
        reason: TerminationReason::MaxIters,
    };

    let outcome: Result<()> = (|| {
        while run.alternations < settings.max_alternations {
            run.alternations += 1;
            let before = cur.value;

            let (lambda, value) = eigenvalue_step(ch, &cur, settings, &mut run.potdc_traces)?;
            cur.lambda = lambda;
            cur.value = value;
            run.trace.push(value);
            record_best(&mut run, &cur);

            eigenvector_step(ch, &mut cur, settings)?;
            run.trace.push(cur.value);
            record_best(&mut run, &cur);

            if cur.value - before <= settings.zeta2 {
                run.reason = TerminationReason::Threshold;
                break;
            }
        }
        Ok(())
    })();

    match outcome {
        Ok(()) => Ok(run),
        Err(e) if is_numerical(&e) => {
            run.reason = TerminationReason::Numerical;
            Ok(run)
        }
        Err(e) => Err(e),
    }
}

fn record_best(run: &mut Run, cur: &Iterate) {
    if cur.value > run.best_value {
        run.best_value = cur.value;
        run.best_u = cur.u.clone();
        run.best_lambda = cur.lambda.clone();
    }
}

/// Designs the transmit covariance for `ch`.
///
/// Runs `settings.starts` independent alternations (the first from
/// `init_covariance` when given) and returns the best covariance seen. When
/// no start reaches a positive rate the zero covariance is returned.
pub fn solve(ch: &ChannelPair, settings: &AlternatingSettings) -> Result<SolverReport> {
    settings.validate()?;
    let m = ch.m();
    if let Some(p) = &settings.init_covariance {
        if p.dim() != m {
            return Err(Error::InvalidConfig(format!(
                "initial covariance is {0}x{0} but the channel has {m} transmit antennas",
                p.dim()
            )));
        }
    }

    let mut best: Option<(usize, Run)> = None;
    for s in 0..settings.starts {
        let start = match (&settings.init_covariance, s) {
            (Some(p), 0) => EigenFactorization::from_covariance(p)?,
            _ => random_start(ch, derive_seed(settings.seed, s as u64)),
        };
        let run = run_from(ch, start, settings)?;
        let better = best.as_ref().is_none_or(|(_, b)| run.best_value > b.best_value);
        if better {
            best = Some((s, run));
        }
    }
    let (best_start, run) = best.expect("at least one start");

    let (p_opt, rate) = if run.best_value > 0.0 {
        (assemble(&run.best_u, &run.best_lambda)?, run.best_value)
    } else {
        (TransmitCovariance::zeros(m), 0.0)
    };
    Ok(SolverReport {
        p_opt,
        secrecy_rate: rate,
        alternation_trace: run.trace,
        potdc_traces: run.potdc_traces,
        alternations: run.alternations,
        converged: run.reason == TerminationReason::Threshold,
        termination_reason: run.reason,
        best_start,
    })
}
