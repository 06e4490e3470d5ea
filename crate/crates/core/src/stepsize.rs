//! Step-size rules: the self-adaptive sequence, Armijo backtracking, and the
//! rule that takes the smaller of the two.
//!
//! The adaptive candidate for iteration `k` is built from iteration `k−1`'s
//! accepted `(w, y, Aw, Ay)`; the first candidate is `λ₀`. Because that data
//! is one step stale, the final step is re-checked against
//! `λ‖Aw − Ay‖ ≤ μ‖w − y‖` and shrunk by `ℓ` until it holds (see [`guard`]).

use crate::error::{Result, ViError};
use crate::geometry::Vector;
use crate::problems::VIProblem;

/// Default cap on Armijo reductions.
pub const DEFAULT_M_MAX: u32 = 60;

/// Parameters shared by the adaptive and Armijo rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub mu: f64,
    pub gamma: f64,
    pub ell: f64,
    pub lambda0: f64,
    pub m_max: u32,
}

impl Default for StepParams {
    fn default() -> Self {
        Self {
            mu: 0.5,
            gamma: 1.0,
            ell: 0.5,
            lambda0: 1.0,
            m_max: DEFAULT_M_MAX,
        }
    }
}

impl StepParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.mu > 0.0 && self.mu < 1.0) {
            problems.push(format!("mu={} must lie in (0,1)", self.mu));
        }
        if !(self.ell > 0.0 && self.ell < 1.0) {
            problems.push(format!("ell={} must lie in (0,1)", self.ell));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            problems.push(format!("gamma={} must be positive", self.gamma));
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            problems.push(format!("lambda0={} must be positive", self.lambda0));
        }
        if self.m_max == 0 {
            problems.push("m_max must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ViError::Validation(problems.join("; ")))
        }
    }
}

/// Which rule produced the accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepRule {
    Adaptive,
    Armijo,
    Fixed,
}

impl StepRule {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Adaptive => "adaptive",
            Self::Armijo => "armijo",
            Self::Fixed => "fixed",
        }
    }
}

/// `min(μ‖w−y‖/‖Aw−Ay‖, λ_prev)` when `Aw ≠ Ay`, else `λ_prev`.
pub fn adaptive_next(lambda_prev: f64, w: &Vector, y: &Vector, aw: &Vector, ay: &Vector, mu: f64) -> f64 {
    let op_gap = aw.distance(ay);
    if op_gap > 0.0 {
        (mu * w.distance(y) / op_gap).min(lambda_prev)
    } else {
        lambda_prev
    }
}

/// Result of an Armijo search: the accepted step `γℓᵐ`, its exponent, and
/// the trial projection with its operator value.
#[derive(Debug, Clone)]
pub struct ArmijoOutcome {
    pub lambda: f64,
    pub m: u32,
    pub y: Vector,
    pub ay: Vector,
    /// Operator evaluations spent on trial points.
    pub evaluations: usize,
    /// Projections spent on trial points.
    pub projections: usize,
}

/// Smallest `m ≥ 0` with `γℓᵐ‖A(w) − A(y)‖ ≤ μ‖w − y‖`,
/// where `y = P_C(w − γℓᵐ·A(w))`.
pub fn armijo_search(problem: &VIProblem, w: &Vector, params: &StepParams) -> Result<ArmijoOutcome> {
    let aw = problem.evaluate(w)?;
    armijo_search_from(problem, w, &aw, params)
}

/// [`armijo_search`] with `A(w)` already evaluated.
pub fn armijo_search_from(problem: &VIProblem, w: &Vector, aw: &Vector, params: &StepParams) -> Result<ArmijoOutcome> {
    let mut lambda = params.gamma;
    let mut evaluations = 0;
    let mut projections = 0;
    let mut m = 0;
    loop {
        let y = problem.project(&w.axpy(-lambda, aw))?;
        projections += 1;
        let ay = problem.evaluate(&y)?;
        evaluations += 1;
        if lambda * aw.distance(&ay) <= params.mu * w.distance(&y) {
            return Ok(ArmijoOutcome {
                lambda,
                m,
                y,
                ay,
                evaluations,
                projections,
            });
        }
        if m >= params.m_max {
            return Err(ViError::BacktrackFailure {
                m_max: params.m_max,
                last_lambda: lambda,
                last_trial: y,
            });
        }
        m += 1;
        lambda *= params.ell;
    }
}

/// `min(λ⁽¹⁾, λ⁽²⁾)`; ties go to the adaptive rule.
pub fn combined_step(lambda1: f64, lambda2: f64) -> (f64, StepRule) {
    if lambda1 <= lambda2 {
        (lambda1, StepRule::Adaptive)
    } else {
        (lambda2, StepRule::Armijo)
    }
}

/// A step together with the projection it produced.
#[derive(Debug, Clone)]
pub struct GuardedStep {
    pub lambda: f64,
    pub y: Vector,
    pub ay: Vector,
    pub shrinks: u32,
    pub evaluations: usize,
    pub projections: usize,
}

/// Projects with `lambda` and shrinks by `ℓ` until
/// `λ‖A(w) − A(y)‖ ≤ μ‖w − y‖`. Fails after `m_max` shrinks.
pub fn guard(problem: &VIProblem, w: &Vector, aw: &Vector, lambda: f64, params: &StepParams) -> Result<GuardedStep> {
    let mut lambda = lambda;
    let mut shrinks = 0;
    let mut evaluations = 0;
    let mut projections = 0;
    loop {
        let y = problem.project(&w.axpy(-lambda, aw))?;
        projections += 1;
        let ay = problem.evaluate(&y)?;
        evaluations += 1;
        if lambda * aw.distance(&ay) <= params.mu * w.distance(&y) {
            return Ok(GuardedStep {
                lambda,
                y,
                ay,
                shrinks,
                evaluations,
                projections,
            });
        }
        if shrinks >= params.m_max {
            return Err(ViError::BacktrackFailure {
                m_max: params.m_max,
                last_lambda: lambda,
                last_trial: y,
            });
        }
        shrinks += 1;
        lambda *= params.ell;
    }
}
