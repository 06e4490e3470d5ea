//! Inertial-parameter feasibility and the Lyapunov sequence that certifies
//! boundedness of the two-step inertial iteration.
//!
//! The three conditions on `(α, β, μ)`:
//!
//! * **A2a**: `0 ≤ α ≤ (1−μ)/(3+μ)`
//! * **A2b**: `max{2α(1−μ)/(3+μ) − (1−α), ½[α(1+μ) − (1−μ)(1−α)²/(1+α)]} < β ≤ 0`
//! * **A2c**: `2α²μ − (1−3α) + μ(1−α) − β(4α+3−μ) + 2μβ² < 0`
//!
//! α = 0 is accepted, even though the boundedness argument is usually stated
//! for α > 0.
//!
//! For a dual solution `q`, with `c = (1−μ)/(1+μ)`:
//!
//! ```text
//! Γ_k  = ‖x_k−q‖² − α‖x_{k−1}−q‖² − β‖x_{k−2}−q‖² + c(1+β−α)‖x_k−x_{k−1}‖²
//! Γ'_k = Γ_k + k₁‖x_{k−1}−x_{k−2}‖²
//! ```
//!
//! and `Γ'_{k+1} ≤ Γ'_k` along every run with feasible parameters.

use std::fmt;

use crate::error::{Result, ViError};
use crate::geometry::Vector;
use crate::problems::{VIProblem, KNOWN_SOLUTION_RESIDUAL_TOL};
use crate::solvers::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    A2a,
    A2b,
    A2c,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Self::A2a => "A2a",
            Self::A2b => "A2b",
            Self::A2c => "A2c",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Evaluated sides of each condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionValues {
    /// `(1−μ)/(3+μ)`
    pub alpha_upper: f64,
    /// First term inside the A2b max.
    pub beta_lower_first: f64,
    /// Second term inside the A2b max.
    pub beta_lower_second: f64,
    /// Left side of A2c.
    pub c_lhs: f64,
}

impl ConditionValues {
    pub fn beta_lower(&self) -> f64 {
        self.beta_lower_first.max(self.beta_lower_second)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamVerdict {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub feasible: bool,
    pub failed_conditions: Vec<Condition>,
    pub values: ConditionValues,
}

impl ParamVerdict {
    pub fn describe_failures(&self) -> String {
        self.failed_conditions
            .iter()
            .map(|c| self.describe(*c))
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn describe(&self, c: Condition) -> String {
        let v = &self.values;
        match c {
            Condition::A2a => format!(
                "A2a: 0 <= alpha <= (1-mu)/(3+mu) requires alpha={} <= {:.6}",
                self.alpha, v.alpha_upper
            ),
            Condition::A2b => format!(
                "A2b: max{{{:.6}, {:.6}}} < beta <= 0 requires beta={}",
                v.beta_lower_first, v.beta_lower_second, self.beta
            ),
            Condition::A2c => format!("A2c: quadratic form must be < 0, got {:.6}", v.c_lhs),
        }
    }
}

impl fmt::Display for ParamVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "alpha={} beta={} mu={}: {}",
            self.alpha,
            self.beta,
            self.mu,
            if self.feasible { "feasible" } else { "infeasible" }
        )?;
        for c in [Condition::A2a, Condition::A2b, Condition::A2c] {
            let status = if self.failed_conditions.contains(&c) { "FAIL" } else { "ok" };
            writeln!(f, "  [{status}] {}", self.describe(c))?;
        }
        Ok(())
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(ViError::Input(format!("mu must lie in (0,1), got {mu}")));
    }
    Ok(())
}

fn condition_values(alpha: f64, beta: f64, mu: f64) -> ConditionValues {
    let alpha_upper = (1.0 - mu) / (3.0 + mu);
    ConditionValues {
        alpha_upper,
        beta_lower_first: 2.0 * alpha * alpha_upper - (1.0 - alpha),
        beta_lower_second: 0.5 * (alpha * (1.0 + mu) - (1.0 - mu) * (1.0 - alpha).powi(2) / (1.0 + alpha)),
        c_lhs: c_quadratic(alpha, mu, beta),
    }
}

/// Left side of A2c as a polynomial in β.
fn c_quadratic(alpha: f64, mu: f64, beta: f64) -> f64 {
    let (a, b, c) = c_coefficients(alpha, mu);
    (a * beta + b) * beta + c
}

/// `(a, b, c)` with A2c equivalent to `aβ² + bβ + c < 0`.
fn c_coefficients(alpha: f64, mu: f64) -> (f64, f64, f64) {
    (
        2.0 * mu,
        -(4.0 * alpha + 3.0 - mu),
        2.0 * alpha * alpha * mu - (1.0 - 3.0 * alpha) + mu * (1.0 - alpha),
    )
}

pub fn validate_params(alpha: f64, beta: f64, mu: f64) -> Result<ParamVerdict> {
    check_mu(mu)?;
    let values = condition_values(alpha, beta, mu);
    let mut failed = Vec::new();
    if !(0.0 <= alpha && alpha <= values.alpha_upper) {
        failed.push(Condition::A2a);
    }
    if !(values.beta_lower() < beta && beta <= 0.0) {
        failed.push(Condition::A2b);
    }
    if !(values.c_lhs < 0.0) {
        failed.push(Condition::A2c);
    }
    Ok(ParamVerdict {
        alpha,
        beta,
        mu,
        feasible: failed.is_empty(),
        failed_conditions: failed,
        values,
    })
}

/// An interval of β with explicit endpoint closedness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaInterval {
    pub lower: f64,
    pub lower_closed: bool,
    pub upper: f64,
    pub upper_closed: bool,
}

impl BetaInterval {
    pub fn contains(&self, beta: f64) -> bool {
        let above = if self.lower_closed { beta >= self.lower } else { beta > self.lower };
        let below = if self.upper_closed { beta <= self.upper } else { beta < self.upper };
        above && below
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

impl fmt::Display for BetaInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lower_closed { '[' } else { '(' },
            self.lower,
            self.upper,
            if self.upper_closed { ']' } else { ')' }
        )
    }
}

/// Roots of `ax² + bx + c` (a > 0), ascending, using the cancellation-free form.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    Some((r1.min(r2), r1.max(r2)))
}

/// All β making `(α, β, μ)` feasible, or `None` when there are none.
pub fn feasible_beta_interval(alpha: f64, mu: f64) -> Result<Option<BetaInterval>> {
    check_mu(mu)?;
    let values = condition_values(alpha, 0.0, mu);
    if !(0.0 <= alpha && alpha <= values.alpha_upper) {
        return Err(ViError::Input(format!(
            "alpha={alpha} violates A2a (0 <= alpha <= {:.6})",
            values.alpha_upper
        )));
    }
    let (a, b, c) = c_coefficients(alpha, mu);
    let Some((r_lo, r_hi)) = quadratic_roots(a, b, c) else {
        return Ok(None);
    };
    // A2b gives (lower, 0]; A2c gives the open interval (r_lo, r_hi).
    let lower = values.beta_lower().max(r_lo);
    let (upper, upper_closed) = if r_hi > 0.0 { (0.0, true) } else { (r_hi, false) };
    let interval = BetaInterval {
        lower,
        lower_closed: false,
        upper,
        upper_closed,
    };
    Ok((lower < upper).then_some(interval))
}

/// `(k₁, k₂)` for the Lyapunov recursion.
pub fn k_constants(alpha: f64, beta: f64, mu: f64) -> (f64, f64) {
    let c = (1.0 - mu) / (1.0 + mu);
    let base = (1.0 + alpha) * (alpha - beta) - c * (alpha * alpha - 2.0 * alpha + beta * alpha + beta + 1.0);
    let k1 = -base;
    let k2 = -(base - beta * (alpha - beta) - c * (beta * beta + beta + beta * alpha));
    (k1, k2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEntry {
    pub k: isize,
    pub gamma: f64,
    pub gamma_prime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovTrace {
    pub k1: f64,
    pub k2: f64,
    pub entries: Vec<LyapunovEntry>,
}

impl LyapunovTrace {
    /// First `k` with `Γ'_{k+1} > Γ'_k + rel_slack·(1 + |Γ'_first|)`.
    pub fn first_increase(&self, rel_slack: f64) -> Option<isize> {
        let scale = 1.0 + self.entries.first().map_or(0.0, |e| e.gamma_prime.abs());
        self.entries
            .windows(2)
            .find(|w| w[1].gamma_prime > w[0].gamma_prime + rel_slack * scale)
            .map(|w| w[0].k)
    }

    pub fn is_nonincreasing(&self, rel_slack: f64) -> bool {
        self.first_increase(rel_slack).is_none()
    }

    pub fn min_gamma(&self) -> f64 {
        self.entries.iter().map(|e| e.gamma).fold(f64::INFINITY, f64::min)
    }
}

/// `Γ_k` and `Γ'_k` for every iterate of a run recorded with history.
pub fn lyapunov_track(
    problem: &VIProblem,
    report: &RunReport,
    q: &Vector,
    alpha: f64,
    beta: f64,
    mu: f64,
) -> Result<LyapunovTrace> {
    check_mu(mu)?;
    let history = report
        .history
        .as_ref()
        .ok_or_else(|| ViError::Input("run was recorded without iterate history".into()))?;
    let r = problem.residual(q, 1.0)?;
    if r > KNOWN_SOLUTION_RESIDUAL_TOL {
        return Err(ViError::Input(format!(
            "probe point {q} has residual {r:e}, above {KNOWN_SOLUTION_RESIDUAL_TOL:e}"
        )));
    }
    let (k1, k2) = k_constants(alpha, beta, mu);
    let c = (1.0 - mu) / (1.0 + mu);
    let last = history.xs.len() as isize - 2;
    let entries = (1..=last)
        .map(|k| {
            let (xk, xk1, xk2) = (history.x(k), history.x(k - 1), history.x(k - 2));
            let gamma = xk.distance(q).powi(2) - alpha * xk1.distance(q).powi(2) - beta * xk2.distance(q).powi(2)
                + c * (1.0 + beta - alpha) * xk.distance(xk1).powi(2);
            LyapunovEntry {
                k,
                gamma,
                gamma_prime: gamma + k1 * xk1.distance(xk2).powi(2),
            }
        })
        .collect();
    Ok(LyapunovTrace { k1, k2, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::builtin;
    use crate::solvers::{solve_with_history, Method, SolverParams, StoppingRule};

    #[test]
    fn validate_examples() {
        let v = validate_params(0.1, -0.05, 0.5).unwrap();
        assert!(v.feasible, "{v}");
        assert!((v.values.alpha_upper - 1.0 / 7.0).abs() < 1e-15);
        assert!((v.values.beta_lower_first - -0.871_428_571_428_571_4).abs() < 1e-12);
        assert!((v.values.beta_lower_second - -0.109_090_909_090_909_1).abs() < 1e-12);
        assert!((v.values.c_lhs - -0.0925).abs() < 1e-12);

        let v = validate_params(0.0, 0.0, 0.5).unwrap();
        assert!(v.feasible);
        assert!((v.values.c_lhs - -0.5).abs() < 1e-15);

        let v = validate_params(0.2, 0.0, 0.5).unwrap();
        assert!(!v.feasible);
        assert_eq!(v.failed_conditions, vec![Condition::A2a, Condition::A2b, Condition::A2c]);
        assert!(v.describe_failures().contains("A2a"));
    }

    #[test]
    fn mu_out_of_range_is_input_error() {
        for mu in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(validate_params(0.0, 0.0, mu).is_err());
            assert!(feasible_beta_interval(0.0, mu).is_err());
        }
    }

    #[test]
    fn beta_on_lower_bound_is_infeasible() {
        let lower = feasible_beta_interval(0.1, 0.5).unwrap().unwrap().lower;
        assert!(!validate_params(0.1, lower, 0.5).unwrap().feasible);
        assert!(validate_params(0.1, lower + 1e-9, 0.5).unwrap().feasible);
        assert!(!validate_params(0.1, 1e-12, 0.5).unwrap().feasible);
    }

    #[test]
    fn beta_interval_examples() {
        let i = feasible_beta_interval(0.1, 0.5).unwrap().unwrap();
        // A2c binds: lower root of β² − 2.9β − 0.24
        let root = (2.9 - (2.9f64 * 2.9 + 0.96).sqrt()) / 2.0;
        assert!((i.lower - root).abs() < 1e-14, "{i}");
        assert!(i.upper_closed && i.upper == 0.0);
        assert!(i.contains(-0.05) && i.contains(0.0));
        assert!(!i.contains(i.lower));

        let i = feasible_beta_interval(0.0, 0.5).unwrap().unwrap();
        assert!(i.contains(0.0));

        assert!(feasible_beta_interval(0.2, 0.5).is_err());
    }

    #[test]
    fn quadratic_roots_stable() {
        let (a, b) = quadratic_roots(1.0, -1e8, 1.0).unwrap();
        assert!((a - 1e-8).abs() < 1e-20);
        assert!((b - 1e8).abs() < 1e-4);
        assert!(quadratic_roots(1.0, 0.0, 1.0).is_none());
    }

    #[test]
    fn k_constant_examples() {
        let (k1, k2) = k_constants(0.0, 0.0, 0.5);
        assert!((k1 - 1.0 / 3.0).abs() < 1e-15 && (k2 - 1.0 / 3.0).abs() < 1e-15);
        let (k1, k2) = k_constants(0.1, -0.05, 0.5);
        assert!(k1 > 0.0 && k2 > 0.0);
        let (p1, p2) = k_constants(0.1, -0.05 + 1e-9, 0.5);
        assert!((p1 - k1).abs() < 1e-6 && (p2 - k2).abs() < 1e-6);
    }

    #[test]
    fn constant_sequence_has_zero_gamma() {
        let p = builtin("identity-box").unwrap();
        let q = Vector::zeros(2);
        let r = solve_with_history(&p, Method::Alg3, &SolverParams::default(), &StoppingRule::iterations(5), &q).unwrap();
        // starting at the solution: every iterate is q
        let trace = lyapunov_track(&p, &r, &q, 0.1, -0.05, 0.5).unwrap();
        assert!(trace.entries.iter().all(|e| e.gamma == 0.0 && e.gamma_prime == 0.0));
    }

    #[test]
    fn tracker_rejects_non_solution_probe_and_missing_history() {
        let p = builtin("identity-box").unwrap();
        let start = Vector::new(vec![0.5, 0.5]).unwrap();
        let r = solve_with_history(&p, Method::Alg3, &SolverParams::default(), &StoppingRule::iterations(3), &start).unwrap();
        assert!(lyapunov_track(&p, &r, &start, 0.1, -0.05, 0.5).is_err());
        let mut bare = r.clone();
        bare.history = None;
        assert!(lyapunov_track(&p, &bare, &Vector::zeros(2), 0.1, -0.05, 0.5).is_err());
    }

    #[test]
    fn gamma_prime_descends_on_identity_box() {
        let p = builtin("identity-box").unwrap();
        let start = Vector::new(vec![0.5, 0.5]).unwrap();
        for (a, b) in [(0.1, -0.05), (0.0, 0.0)] {
            let params = SolverParams::with_inertia(a, b);
            let r = solve_with_history(&p, Method::Alg3, &params, &StoppingRule::default(), &start).unwrap();
            let trace = lyapunov_track(&p, &r, &Vector::zeros(2), a, b, 0.5).unwrap();
            assert!(trace.is_nonincreasing(1e-10), "{:?}", trace.first_increase(1e-10));
        }
    }
}
