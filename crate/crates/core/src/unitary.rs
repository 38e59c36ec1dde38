//! Eigenvector step: Riemannian steepest ascent over the unitary group for
//! fixed eigenvalues.
//!
//! Iterates move along geodesics `U ← exp(μG) U`, where `G = ∇U^H − U∇^H`
//! is the (skew-Hermitian) Riemannian gradient. With the crate's gradient
//! convention the directional derivative along this geodesic at `μ = 0` is
//! exactly `‖G‖_F²`, which is what the Armijo test compares against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm_skew, qr_orthonormalize, unitarity_defect, ComplexMatrix};
use crate::model::{check_lambda, factored_rate, grad_unitary, ChannelPair};

/// Accepted deviation of a Stiefel iterate from unitarity.
pub const UNITARITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnitarySettings {
    pub max_iters: usize,
    /// Stop when `‖G‖_F` falls to this value.
    pub grad_tol: f64,
    pub armijo_beta: f64,
    pub armijo_c: f64,
    pub initial_step: f64,
    pub reorthonormalize_every: usize,
}

impl Default for UnitarySettings {
    fn default() -> Self {
        UnitarySettings {
            max_iters: 200,
            grad_tol: 1e-6,
            armijo_beta: 0.5,
            armijo_c: 1e-4,
            initial_step: 1.0,
            reorthonormalize_every: 10,
        }
    }
}

impl UnitarySettings {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return Err(Error::InvalidConfig("grad_tol must be finite and positive".into()));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::InvalidConfig("initial_step must be finite and positive".into()));
        }
        if !unit(self.armijo_beta) || !unit(self.armijo_c) {
            return Err(Error::InvalidConfig("Armijo parameters must lie in (0, 1)".into()));
        }
        if self.max_iters == 0 || self.reorthonormalize_every == 0 {
            return Err(Error::InvalidConfig("iteration counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryResult {
    pub u_opt: ComplexMatrix,
    /// Objective at `u_init` followed by one entry per accepted step.
    pub objective_trace: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
}

/// `G = ∇U^H − U∇^H`, returned with its Hermitian residue removed.
pub fn riemannian_gradient(euclid_grad: &ComplexMatrix, u: &ComplexMatrix) -> Result<ComplexMatrix> {
    if euclid_grad.shape() != u.shape() || u.nrows() != u.ncols() {
        return Err(Error::InvalidMatrix(format!(
            "gradient {:?} and point {:?} must be equal-size square matrices",
            euclid_grad.shape(),
            u.shape()
        )));
    }
    let x = euclid_grad * u.adjoint();
    let g = &x - x.adjoint();
    Ok((&g - g.adjoint()).scale(0.5))
}

/// Maximizes the secrecy rate of `U^H diag(λ0) U` over unitary `U`.
///
/// Each iteration starts its line search at twice the previously accepted
/// step (the very first at `initial_step`), capped so the geodesic rotation
/// stays below half a turn, and halves by `armijo_beta` until the increase is
/// at least `armijo_c · μ · ‖G‖_F²`. If the step shrinks to nothing the
/// iteration stops.
pub fn ascend_unitary(
    ch: &ChannelPair,
    lambda0: &[f64],
    u_init: &ComplexMatrix,
    settings: &UnitarySettings,
) -> Result<UnitaryResult> {
    settings.validate()?;
    let m = ch.m();
    if u_init.nrows() != m || u_init.ncols() != m || lambda0.len() != m {
        return Err(Error::InvalidMatrix("starting point does not match the channel".into()));
    }
    check_lambda(lambda0, ch.budget())?;
    if unitarity_defect(u_init) > UNITARITY_TOL {
        return Err(Error::InvalidMatrix("starting point is not unitary".into()));
    }

    let mut u = u_init.clone();
    let mut value = factored_rate(ch, &u, lambda0)?;
    if !value.is_finite() {
        return Err(Error::NumericalFailure("non-finite objective at the start point".into()));
    }
    let mut trace = vec![value];
    let mut step = settings.initial_step;
    let mut iters = 0;
    let mut converged = false;

    while iters < settings.max_iters {
        let g = riemannian_gradient(&grad_unitary(ch, &u, lambda0)?, &u)?;
        let g_norm = g.norm();
        if g_norm <= settings.grad_tol {
            converged = true;
            break;
        }
        if !g_norm.is_finite() {
            return Err(Error::NumericalFailure("non-finite Riemannian gradient".into()));
        }
        let slope = g_norm * g_norm;
        let mut mu = step.min(std::f64::consts::PI / g_norm);
        let accepted = loop {
            let cand = expm_skew(&g.scale(mu))? * &u;
            let cand_value = factored_rate(ch, &cand, lambda0)?;
            if !cand_value.is_finite() {
                return Err(Error::NumericalFailure("non-finite objective".into()));
            }
            if cand_value - value >= settings.armijo_c * mu * slope {
                break Some((cand, cand_value));
            }
            mu *= settings.armijo_beta;
            if mu * g_norm < 1e-15 {
                break None;
            }
        };
        let Some((cand, cand_value)) = accepted else {
            break;
        };
        iters += 1;
        u = cand;
        value = cand_value;
        if iters % settings.reorthonormalize_every == 0 {
            u = qr_orthonormalize(&u)?;
            value = factored_rate(ch, &u, lambda0)?;
        }
        trace.push(value);
        step = 2.0 * mu;
    }

    Ok(UnitaryResult { u_opt: u, objective_trace: trace, iters, converged })
}
