//! Eigenvalue step: iterative linearization of the convex eavesdropper terms
//! of the Hadamard lower bound, for a fixed eigenbasis `U0`.
//!
//! For fixed `U0` the bound reads
//!
//! ```text
//! g(λ) = ln det(I + A diag(λ) A^H) − Σ_i ln(1 + d_i λ_i),   A = H_m U0^H,
//! ```
//!
//! with `d = diag(U0 H_e^H H_e U0^H)`. Each `−ln(1 + d_i λ_i)` is convex in a
//! single variable, so replacing it with its tangent at the current point
//! `λ_c` gives a concave minorant of `g` that touches it at `λ_c`. Maximizing
//! the minorant and re-linearizing makes `g` non-decreasing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{real_diag, ComplexMatrix};
use crate::model::{check_lambda, leakage_diagonal, link_logdet, logdet_gradient, ChannelPair};

const ARMIJO_BETA: f64 = 0.5;
const ARMIJO_C: f64 = 1e-4;
const INITIAL_STEP: f64 = 1.0;
const MIN_STEP: f64 = 1e-20;
const MAX_STEP: f64 = 1e12;
/// Relative difference below which two objective values are indistinguishable.
const VALUE_NOISE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotdcSettings {
    /// Stop once the bound changes by at most this much between outer iterations (nats).
    pub zeta1: f64,
    pub max_outer_iters: usize,
    /// Gradient-mapping norm at which the inner projected-gradient solve stops.
    pub inner_tol: f64,
    pub inner_max_iters: usize,
}

impl Default for PotdcSettings {
    fn default() -> Self {
        PotdcSettings { zeta1: 1e-6, max_outer_iters: 100, inner_tol: 1e-8, inner_max_iters: 500 }
    }
}

impl PotdcSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("zeta1", self.zeta1), ("inner_tol", self.inner_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and positive")));
            }
        }
        if self.max_outer_iters == 0 || self.inner_max_iters == 0 {
            return Err(Error::InvalidConfig("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotdcResult {
    pub lambda_opt: Vec<f64>,
    /// Lower-bound value at the starting point followed by one entry per outer iteration.
    pub objective_trace: Vec<f64>,
    pub outer_iters: usize,
    pub converged: bool,
}

/// Euclidean projection onto `{λ ≥ 0, Σλ ≤ budget}`.
pub fn project_capped_simplex(x: &[f64], budget: f64) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= budget {
        return clipped;
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut theta = 0.0;
    for (j, v) in sorted.iter().enumerate() {
        prefix += v;
        let candidate = (prefix - budget) / (j + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        }
    }
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Fixed-`U0` view of the eigenvalue problem.
#[derive(Debug, Clone)]
pub(crate) struct EigenvalueProblem {
    a: ComplexMatrix,
    d: Vec<f64>,
    budget: f64,
}

impl EigenvalueProblem {
    pub(crate) fn new(ch: &ChannelPair, u0: &ComplexMatrix) -> Result<Self> {
        let m = ch.m();
        if u0.nrows() != m || u0.ncols() != m {
            return Err(Error::InvalidMatrix(format!(
                "eigenbasis is {}x{} but the channel has {m} transmit antennas",
                u0.nrows(),
                u0.ncols()
            )));
        }
        Ok(EigenvalueProblem {
            a: ch.h_main() * u0.adjoint(),
            d: leakage_diagonal(ch, u0),
            budget: ch.budget(),
        })
    }

    fn logdet(&self, lambda: &[f64]) -> Result<f64> {
        link_logdet(&self.a, &real_diag(lambda))
    }

    pub(crate) fn bound(&self, lambda: &[f64]) -> Result<f64> {
        let eave: f64 = self.d.iter().zip(lambda).map(|(d, l)| (d * l).ln_1p()).sum();
        Ok(self.logdet(lambda)? - eave)
    }

    pub(crate) fn bound_gradient(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        let mut g = logdet_gradient(&self.a, lambda)?;
        for ((gi, d), l) in g.iter_mut().zip(&self.d).zip(lambda) {
            *gi -= d / (1.0 + d * l);
        }
        Ok(g)
    }

    /// Slopes of the tangent lines of `ln(1 + d_i λ_i)` at `λ_c`.
    fn tangent_slopes(&self, lambda_c: &[f64]) -> Vec<f64> {
        self.d.iter().zip(lambda_c).map(|(d, c)| d / (1.0 + d * c)).collect()
    }

    /// Bound with each `ln(1 + d_i λ_i)` replaced by its tangent at `λ_c`.
    /// The constant `Σ ln(1 + d_i λ_{c,i})` does not move the maximizer but
    /// makes the value touch the bound at `λ_c`.
    fn linearized(&self, lambda: &[f64], lambda_c: &[f64], slopes: &[f64]) -> Result<f64> {
        let tangent: f64 = self
            .d
            .iter()
            .zip(slopes)
            .zip(lambda.iter().zip(lambda_c))
            .map(|((d, w), (l, c))| (d * c).ln_1p() + w * (l - c))
            .sum();
        Ok(self.logdet(lambda)? - tangent)
    }

    /// Projected gradient ascent on the concave minorant linearized at
    /// `lambda_c`, started from `lambda_c`.
    fn solve_linearized(&self, lambda_c: &[f64], settings: &PotdcSettings) -> Result<Vec<f64>> {
        let slopes = self.tangent_slopes(lambda_c);
        projected_ascent(
            |l| self.linearized(l, lambda_c, &slopes),
            |l| {
                let mut g = logdet_gradient(&self.a, l)?;
                g.iter_mut().zip(&slopes).for_each(|(g, w)| *g -= w);
                Ok(g)
            },
            lambda_c,
            self.budget,
            settings.inner_tol,
            settings.inner_max_iters,
        )
    }
}

/// Projected gradient ascent with Armijo backtracking over the capped
/// simplex `{x ≥ 0, Σx ≤ budget}`.
///
/// The first trial step is 1; each later iteration starts from twice the
/// last accepted step. A trial `x⁺ = Π(x + t∇)` is accepted when
/// `f(x⁺) ≥ f(x) + c·∇·(x⁺ − x)`, or, when the two values agree to rounding,
/// when `∇f(x⁺)·(x⁺ − x) ≥ 0`; the objective must be concave. Stops when the unit-step gradient mapping
/// is at most `tol`, after `max_iters`, or when the step collapses. The
/// objective never decreases from `x0` beyond rounding.
pub(crate) fn projected_ascent<F, G>(
    value: F,
    grad: G,
    x0: &[f64],
    budget: f64,
    tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = x0.to_vec();
    let mut fx = value(&x)?;
    if !fx.is_finite() {
        return Err(Error::NumericalFailure("non-finite objective at the start point".into()));
    }
    let mut step = INITIAL_STEP;
    for _ in 0..max_iters {
        let g = grad(&x)?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure("non-finite gradient".into()));
        }
        if mapping_norm(&x, &g, budget) <= tol {
            break;
        }
        let mut t = step;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + t * gi).collect();
            let cand = project_capped_simplex(&trial, budget);
            let f_cand = value(&cand)?;
            if !f_cand.is_finite() {
                return Err(Error::NumericalFailure("non-finite objective".into()));
            }
            let predicted: f64 = g.iter().zip(cand.iter().zip(&x)).map(|(gi, (c, xi))| gi * (c - xi)).sum();
            if f_cand >= fx + ARMIJO_C * predicted {
                break Some((cand, f_cand));
            }
            // Near the optimum value differences drown in rounding. For a
            // concave objective, ∇f(y)·(y − x) ≥ 0 already implies f(y) ≥ f(x).
            if (f_cand - fx).abs() <= VALUE_NOISE * fx.abs().max(1.0) && cand != x {
                let g_cand = grad(&cand)?;
                let slope: f64 =
                    g_cand.iter().zip(cand.iter().zip(&x)).map(|(gi, (c, xi))| gi * (c - xi)).sum();
                if slope >= 0.0 {
                    break Some((cand, f_cand));
                }
            }
            t *= ARMIJO_BETA;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((cand, f_cand)) = accepted else {
            break;
        };
        x = cand;
        fx = f_cand;
        step = (2.0 * t).min(MAX_STEP);
    }
    Ok(x)
}

/// `‖λ − Π(λ + ∇)‖₂`, the unit-step gradient mapping on the capped simplex.
pub(crate) fn mapping_norm(lambda: &[f64], grad: &[f64], budget: f64) -> f64 {
    let moved: Vec<f64> = lambda.iter().zip(grad).map(|(l, g)| l + g).collect();
    project_capped_simplex(&moved, budget)
        .iter()
        .zip(lambda)
        .map(|(p, l)| (p - l).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Value of the minorant of the Hadamard bound linearized at `lambda_c`,
/// evaluated at `lambda`.
pub fn linearized_objective(
    ch: &ChannelPair,
    u0: &ComplexMatrix,
    lambda_c: &[f64],
    lambda: &[f64],
) -> Result<f64> {
    let problem = EigenvalueProblem::new(ch, u0)?;
    check_len(lambda_c, ch.m())?;
    check_len(lambda, ch.m())?;
    problem.linearized(lambda, lambda_c, &problem.tangent_slopes(lambda_c))
}

/// Gradient-mapping norm of the Hadamard bound at `lambda`; zero exactly at
/// its KKT points over the capped simplex.
pub fn bound_mapping_norm(ch: &ChannelPair, u0: &ComplexMatrix, lambda: &[f64]) -> Result<f64> {
    let problem = EigenvalueProblem::new(ch, u0)?;
    check_len(lambda, ch.m())?;
    Ok(mapping_norm(lambda, &problem.bound_gradient(lambda)?, problem.budget))
}

fn check_len(lambda: &[f64], m: usize) -> Result<()> {
    if lambda.len() != m {
        return Err(Error::InvalidMatrix(format!(
            "eigenvalue vector has length {} but the channel has {m} transmit antennas",
            lambda.len()
        )));
    }
    Ok(())
}

/// One convex subproblem: maximize the bound with its eavesdropper terms
/// linearized at `lambda_c`. The result is feasible and never worse than
/// `lambda_c` on the subproblem objective.
pub fn solve_linearized_subproblem(
    ch: &ChannelPair,
    u0: &ComplexMatrix,
    lambda_c: &[f64],
    settings: &PotdcSettings,
) -> Result<Vec<f64>> {
    settings.validate()?;
    check_len(lambda_c, ch.m())?;
    check_lambda(lambda_c, ch.budget())?;
    EigenvalueProblem::new(ch, u0)?.solve_linearized(lambda_c, settings)
}

/// Maximizes the Hadamard lower bound over `λ` for fixed `U0` by successive
/// linearization, starting from `lambda_init`.
pub fn potdc_optimize_lambda(
    ch: &ChannelPair,
    u0: &ComplexMatrix,
    lambda_init: &[f64],
    settings: &PotdcSettings,
) -> Result<PotdcResult> {
    settings.validate()?;
    check_len(lambda_init, ch.m())?;
    check_lambda(lambda_init, ch.budget())?;
    let problem = EigenvalueProblem::new(ch, u0)?;
    optimize(&problem, lambda_init, settings)
}

/// Relative size of bound decreases attributed to rounding.
const ROUNDING_SLACK: f64 = 1e-13;

pub(crate) fn optimize(
    problem: &EigenvalueProblem,
    lambda_init: &[f64],
    settings: &PotdcSettings,
) -> Result<PotdcResult> {
    let mut lambda = project_capped_simplex(lambda_init, problem.budget);
    let mut value = problem.bound(&lambda)?;
    if !value.is_finite() {
        return Err(Error::NumericalFailure("non-finite lower bound at the start point".into()));
    }
    let mut trace = vec![value];
    let mut converged = false;
    let mut outer_iters = 0;
    while outer_iters < settings.max_outer_iters {
        outer_iters += 1;
        let next = problem.solve_linearized(&lambda, settings)?;
        let next_value = problem.bound(&next)?;
        if !next_value.is_finite() {
            return Err(Error::NumericalFailure("non-finite lower bound".into()));
        }
        // The minorant argument guarantees next_value >= value up to rounding,
        // so a drop inside the rounding slack is still a valid step.
        let slack = ROUNDING_SLACK * value.abs().max(1.0);
        if next_value < value - slack {
            trace.push(value);
            converged = true;
            break;
        }
        let change = (next_value - value).abs();
        let moved = next != lambda;
        lambda = next;
        value = next_value;
        trace.push(value);
        if change <= settings.zeta1 || !moved {
            converged = true;
            break;
        }
    }
    Ok(PotdcResult { lambda_opt: lambda, objective_trace: trace, outer_iters, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, identity};
    use crate::model::{random_unitary, sample_channel, Dims};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_channel(hm: f64, he: f64) -> ChannelPair {
        ChannelPair::from_matrices(
            ComplexMatrix::from_element(1, 1, c64(hm, 0.0)),
            ComplexMatrix::from_element(1, 1, c64(he, 0.0)),
        )
        .unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_capped_simplex(&[0.5, 0.5], 2.0), vec![0.5, 0.5]);
        assert_eq!(project_capped_simplex(&[3.0, -1.0], 2.0), vec![2.0, 0.0]);
        assert_eq!(project_capped_simplex(&[-1.0, -2.0], 5.0), vec![0.0, 0.0]);
        let p = project_capped_simplex(&[2.0, 2.0, 0.1], 3.0);
        assert!((p.iter().sum::<f64>() - 3.0).abs() < 1e-15);
        assert!((p[0] - 1.5).abs() < 1e-15 && p[2] == 0.0);
    }

    #[test]
    fn subproblem_without_main_channel_drops_leaky_coordinates() {
        let he = ComplexMatrix::from_row_slice(1, 2, &[c64(1.0, 0.0), c64(0.0, 0.0)]);
        let ch = ChannelPair::from_matrices(ComplexMatrix::zeros(1, 2), he).unwrap();
        let out = solve_linearized_subproblem(&ch, &identity(2), &[1.0, 1.0], &Default::default())
            .unwrap();
        assert_eq!(out[0], 0.0);
        assert!((out[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn subproblem_scalar_full_power() {
        let ch = scalar_channel(1.0, 0.0);
        let out = solve_linearized_subproblem(&ch, &identity(1), &[0.5], &Default::default()).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_potdc_cases() {
        let ch = scalar_channel(1.0, 0.5);
        let r = potdc_optimize_lambda(&ch, &identity(1), &[1.0], &Default::default()).unwrap();
        assert!((r.lambda_opt[0] - 1.0).abs() < 1e-12);
        let expect = 2f64.ln() - 1.25f64.ln();
        assert!((r.objective_trace.last().unwrap() - expect).abs() < 1e-12);

        let ch = scalar_channel(0.5, 1.0);
        let r = potdc_optimize_lambda(&ch, &identity(1), &[1.0], &Default::default()).unwrap();
        assert!(r.lambda_opt[0].abs() < 1e-12);
        assert!(r.objective_trace.last().unwrap().abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn rejects_infeasible_start() {
        let ch = scalar_channel(1.0, 0.5);
        assert!(potdc_optimize_lambda(&ch, &identity(1), &[1.5], &Default::default()).is_err());
        assert!(potdc_optimize_lambda(&ch, &identity(1), &[-0.1], &Default::default()).is_err());
    }

    #[test]
    fn linearization_is_tangent_minorant() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for seed in 0..10 {
            let ch = sample_channel(Dims::new(3, 2, 3), 10.0, 10.0, seed).unwrap();
            let u = random_unitary(&mut rng, 3);
            let problem = EigenvalueProblem::new(&ch, &u).unwrap();
            let c = crate::model::random_simplex(&mut rng, 3, 3.0);
            let at_c = linearized_objective(&ch, &u, &c, &c).unwrap();
            assert!((at_c - problem.bound(&c).unwrap()).abs() < 1e-12);
            for _ in 0..10 {
                let total = 3.0 * rand::Rng::random::<f64>(&mut rng);
                let x = crate::model::random_simplex(&mut rng, 3, total);
                let lin = linearized_objective(&ch, &u, &c, &x).unwrap();
                assert!(lin <= problem.bound(&x).unwrap() + 1e-12);
            }
        }
    }
}
