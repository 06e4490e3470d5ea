//! Iterative methods behind one iteration interface, with shared stopping
//! rules and per-iteration tracing.
//!
//! Every run starts from `x₋₁ = x₀ = x₁ = P_C(start)`, so inertial terms
//! vanish on the first step. The exact-equality test `y = w` is replaced by
//! `‖w − y‖ ≤ tol_wy`, with an independent natural-residual stop (`ψ = 1`).

mod steppers;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use steppers::{
    alg1_mewomo_step, egm_step, goldstein_step, liu_yang_step, segm_step, step, thong_hieu_step,
    tseng_fixed_step, two_step_inertial_tseng_step, StepOutput,
};

use crate::diagnostics;
use crate::error::{Result, ViError};
use crate::geometry::Vector;
use crate::problems::VIProblem;
use crate::stepsize::{StepParams, StepRule};

/// Iterates with a component above this magnitude abort the run.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Registered methods. The string names are a public contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Goldstein,
    Egm,
    Segm,
    TsengFixed,
    LiuYang,
    ThongHieu,
    Alg1Mewomo,
    Alg3,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Goldstein,
        Method::Egm,
        Method::Segm,
        Method::TsengFixed,
        Method::LiuYang,
        Method::ThongHieu,
        Method::Alg1Mewomo,
        Method::Alg3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Goldstein => "goldstein",
            Self::Egm => "egm",
            Self::Segm => "segm",
            Self::TsengFixed => "tseng-fixed",
            Self::LiuYang => "liu-yang",
            Self::ThongHieu => "thong-hieu",
            Self::Alg1Mewomo => "alg1-mewomo",
            Self::Alg3 => "alg3",
        }
    }

    pub fn names() -> Vec<String> {
        Self::ALL.iter().map(|m| m.name().to_string()).collect()
    }

    /// Methods whose step is a constant `λ ∈ (0, 1/L)`.
    pub fn uses_fixed_step(self) -> bool {
        matches!(self, Self::Goldstein | Self::Egm | Self::Segm | Self::TsengFixed)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ViError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ViError::UnknownMethod {
                name: s.to_string(),
                available: Self::names(),
            })
    }
}

/// Inertial weights: `w = x_k + α(x_k − x_{k−1}) + β(x_{k−1} − x_{k−2})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertialParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for InertialParams {
    fn default() -> Self {
        Self { alpha: 0.1, beta: -0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverParams {
    pub inertia: InertialParams,
    pub step: StepParams,
    /// Constant step for fixed-step methods; defaults to `0.5 / L`.
    pub fixed_lambda: Option<f64>,
}

impl SolverParams {
    pub fn with_inertia(alpha: f64, beta: f64) -> Self {
        Self {
            inertia: InertialParams { alpha, beta },
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    /// Stop when `‖w_k − y_k‖ ≤ tol_wy`.
    pub tol_wy: Option<f64>,
    /// Stop when the natural residual (`ψ = 1`) of `x_{k+1}` is `≤ tol_res`.
    pub tol_res: Option<f64>,
    pub max_iter: usize,
    pub max_time: Option<Duration>,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            tol_wy: Some(1e-9),
            tol_res: Some(1e-6),
            max_iter: 100_000,
            max_time: None,
        }
    }
}

impl StoppingRule {
    /// Runs exactly `n` iterations unless backtracking fails or iterates diverge.
    pub fn iterations(n: usize) -> Self {
        Self {
            tol_wy: None,
            tol_res: None,
            max_iter: n,
            max_time: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(ViError::Validation("max_iter must be positive".into()));
        }
        for (name, tol) in [("tol_wy", self.tol_wy), ("tol_res", self.tol_res)] {
            if let Some(t) = tol {
                if !(t >= 0.0) {
                    return Err(ViError::Validation(format!("{name} must be nonnegative")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    WyTol,
    ResTol,
    MaxIter,
    Time,
    BacktrackFail,
    Divergence,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::WyTol => "wy_tol",
            Self::ResTol => "res_tol",
            Self::MaxIter => "max_iter",
            Self::Time => "time",
            Self::BacktrackFail => "backtrack_fail",
            Self::Divergence => "divergence",
        }
    }

    pub fn converged(self) -> bool {
        matches!(self, Self::WyTol | Self::ResTol)
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The three-point iterate window plus the step carried between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub k: usize,
    pub x_k: Vector,
    pub x_km1: Vector,
    pub x_km2: Vector,
    /// Adaptive step candidate for the next iteration (or the fixed step).
    pub lambda_prev: f64,
    pub w_k: Option<Vector>,
    pub y_k: Option<Vector>,
    pub stopped: Option<StopReason>,
}

impl SolverState {
    pub fn new(x1: Vector, lambda0: f64) -> Self {
        Self {
            k: 1,
            x_km1: x1.clone(),
            x_km2: x1.clone(),
            x_k: x1,
            lambda_prev: lambda0,
            w_k: None,
            y_k: None,
            stopped: None,
        }
    }

    /// Shifts the window after a completed step.
    pub fn advance(&mut self, out: &StepOutput) {
        let next = out.x_next.clone();
        let prev = std::mem::replace(&mut self.x_k, next);
        self.x_km2 = std::mem::replace(&mut self.x_km1, prev);
        self.lambda_prev = out.lambda_next;
        self.w_k = Some(out.w.clone());
        self.y_k = Some(out.y.clone());
        self.k += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub lambda: f64,
    pub rule: StepRule,
    pub armijo_m: Option<u32>,
    pub shrinks: u32,
    pub res: f64,
    pub wy_norm: f64,
    pub step_norm: f64,
    pub elapsed_ns: u64,
}

/// Every iterate of a run: `xs` holds `x₋₁, x₀, x₁, …, x_{K+1}`; `ws[k−1]`
/// and `ys[k−1]` hold `w_k` and `y_k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterateHistory {
    pub xs: Vec<Vector>,
    pub ws: Vec<Vector>,
    pub ys: Vec<Vector>,
}

impl IterateHistory {
    /// `x_k` for `k ≥ −1`.
    pub fn x(&self, k: isize) -> &Vector {
        &self.xs[(k + 1) as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub method: Method,
    pub problem: String,
    pub final_x: Vector,
    pub iterations: usize,
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    pub operator_evals: usize,
    pub projections: usize,
    pub history: Option<IterateHistory>,
}

impl RunReport {
    /// Copy with timing fields zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> RunReport {
        let mut r = self.clone();
        for rec in &mut r.records {
            rec.elapsed_ns = 0;
        }
        r
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.res)
    }

    pub fn elapsed_ns(&self) -> u64 {
        self.records.last().map_or(0, |r| r.elapsed_ns)
    }
}

/// Checks that `params` suit `method` on `problem`. Inertial methods with
/// two-step momentum must pass the `(α, β, μ)` feasibility conditions.
pub fn validate_method_params(problem: &VIProblem, method: Method, params: &SolverParams) -> Result<()> {
    if method.uses_fixed_step() {
        fixed_lambda(problem, method, params)?;
        return Ok(());
    }
    params.step.validate()?;
    match method {
        Method::ThongHieu => {
            let a = params.inertia.alpha;
            if !(0.0..1.0).contains(&a) {
                return Err(ViError::Validation(format!(
                    "method `{method}` needs 0 <= alpha < 1, got {a}"
                )));
            }
        }
        Method::Alg1Mewomo | Method::Alg3 => {
            let InertialParams { alpha, beta } = params.inertia;
            let verdict = diagnostics::validate_params(alpha, beta, params.step.mu)?;
            if !verdict.feasible {
                return Err(ViError::Validation(format!(
                    "method `{method}`: {}",
                    verdict.describe_failures()
                )));
            }
        }
        _ => {}
    }
    Ok(())
}

/// Constant step for fixed-step methods: the configured value, or `0.5 / L`.
pub fn fixed_lambda(problem: &VIProblem, method: Method, params: &SolverParams) -> Result<f64> {
    let l = problem.lipschitz().ok_or_else(|| {
        ViError::Validation(format!(
            "method `{method}` needs a declared Lipschitz constant, `{}` has none",
            problem.label()
        ))
    })?;
    let lambda = params.fixed_lambda.unwrap_or(0.5 / l);
    if !(lambda > 0.0 && lambda < 1.0 / l) {
        return Err(ViError::Validation(format!(
            "method `{method}` needs 0 < lambda < 1/L = {}, got {lambda}",
            1.0 / l
        )));
    }
    Ok(lambda)
}

/// Runs `method` from `start` until a stopping rule fires.
pub fn solve(
    problem: &VIProblem,
    method: Method,
    params: &SolverParams,
    stopping: &StoppingRule,
    start: &Vector,
) -> Result<RunReport> {
    run(problem, method, params, stopping, start, false)
}

/// [`solve`], also keeping every `x_k`, `w_k`, `y_k`.
pub fn solve_with_history(
    problem: &VIProblem,
    method: Method,
    params: &SolverParams,
    stopping: &StoppingRule,
    start: &Vector,
) -> Result<RunReport> {
    run(problem, method, params, stopping, start, true)
}

fn diverged(v: &Vector) -> bool {
    !v.is_finite() || v.max_abs() > DIVERGENCE_BOUND
}

fn run(
    problem: &VIProblem,
    method: Method,
    params: &SolverParams,
    stopping: &StoppingRule,
    start: &Vector,
    keep_history: bool,
) -> Result<RunReport> {
    validate_method_params(problem, method, params)?;
    stopping.validate()?;
    if start.dim() != problem.dim() {
        return Err(ViError::DimensionMismatch {
            expected: problem.dim(),
            got: start.dim(),
        });
    }
    let clock = Instant::now();
    let x1 = problem.project(start)?;
    let lambda0 = if method.uses_fixed_step() {
        fixed_lambda(problem, method, params)?
    } else {
        params.step.lambda0
    };
    let mut state = SolverState::new(x1, lambda0);
    let mut history = keep_history.then(|| IterateHistory {
        xs: vec![state.x_k.clone(); 3],
        ..IterateHistory::default()
    });
    let mut records = Vec::new();
    let mut operator_evals = 0;
    let mut projections = 1;

    let initial_res = problem.residual(&state.x_k, 1.0)?;
    let mut stop = stopping
        .tol_res
        .is_some_and(|tol| initial_res <= tol)
        .then_some(StopReason::ResTol);

    while stop.is_none() {
        if records.len() >= stopping.max_iter {
            stop = Some(StopReason::MaxIter);
            break;
        }
        let out = match step(problem, method, params, &state) {
            Ok(out) => out,
            Err(ViError::BacktrackFailure { .. }) => {
                stop = Some(StopReason::BacktrackFail);
                break;
            }
            Err(e) => return Err(e),
        };
        operator_evals += out.evaluations;
        projections += out.projections;
        if diverged(&out.x_next) || diverged(&out.w) || diverged(&out.y) {
            stop = Some(StopReason::Divergence);
            break;
        }
        let res = problem.residual(&out.x_next, 1.0)?;
        let wy_norm = out.w.distance(&out.y);
        records.push(IterationRecord {
            k: state.k,
            lambda: out.lambda,
            rule: out.rule,
            armijo_m: out.armijo_m,
            shrinks: out.shrinks,
            res,
            wy_norm,
            step_norm: out.x_next.distance(&state.x_k),
            elapsed_ns: clock.elapsed().as_nanos() as u64,
        });
        if let Some(h) = history.as_mut() {
            h.xs.push(out.x_next.clone());
            h.ws.push(out.w.clone());
            h.ys.push(out.y.clone());
        }
        state.advance(&out);

        if stopping.tol_wy.is_some_and(|tol| wy_norm <= tol) {
            stop = Some(StopReason::WyTol);
        } else if stopping.tol_res.is_some_and(|tol| res <= tol) {
            stop = Some(StopReason::ResTol);
        } else if stopping.max_time.is_some_and(|t| clock.elapsed() >= t) {
            stop = Some(StopReason::Time);
        }
    }

    state.stopped = stop;
    Ok(RunReport {
        method,
        problem: problem.label().to_string(),
        final_x: state.x_k,
        iterations: records.len(),
        records,
        stop_reason: stop.expect("loop exits with a reason"),
        operator_evals,
        projections,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::builtin;

    #[test]
    fn registry_round_trips_names() {
        assert_eq!(Method::ALL.len(), 8);
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        let err = "foo".parse::<Method>().unwrap_err().to_string();
        assert!(err.contains("alg3") && err.contains("goldstein"), "{err}");
    }

    #[test]
    fn state_window_shifts() {
        let x = Vector::new(vec![1.0]).unwrap();
        let mut s = SolverState::new(x.clone(), 1.0);
        let out = StepOutput {
            x_next: Vector::new(vec![2.0]).unwrap(),
            w: x.clone(),
            y: x.clone(),
            lambda: 0.5,
            lambda_next: 0.4,
            rule: StepRule::Armijo,
            armijo_m: Some(1),
            shrinks: 0,
            evaluations: 2,
            projections: 1,
        };
        s.advance(&out);
        assert_eq!((s.x_k[0], s.x_km1[0], s.x_km2[0], s.k, s.lambda_prev), (2.0, 1.0, 1.0, 2, 0.4));
    }

    #[test]
    fn fixed_step_needs_lipschitz_and_range() {
        let square = builtin("quasi-square-1d").unwrap();
        let err = validate_method_params(&square, Method::Egm, &SolverParams::default()).unwrap_err();
        assert!(err.to_string().contains("Lipschitz"));

        let id = builtin("identity-box").unwrap();
        let bad = SolverParams { fixed_lambda: Some(1.0), ..SolverParams::default() };
        assert!(validate_method_params(&id, Method::TsengFixed, &bad).is_err());
        assert_eq!(fixed_lambda(&id, Method::Egm, &SolverParams::default()).unwrap(), 0.5);
    }

    #[test]
    fn alg3_rejects_alpha_above_bound() {
        let id = builtin("identity-box").unwrap();
        for beta in [0.0, -0.05, -0.2] {
            let params = SolverParams::with_inertia(0.2, beta);
            let err = solve(&id, Method::Alg3, &params, &StoppingRule::default(), &Vector::zeros(2)).unwrap_err();
            assert!(err.to_string().contains("A2a"), "{err}");
        }
    }

    #[test]
    fn start_is_projected_and_dimension_checked() {
        let id = builtin("identity-box").unwrap();
        let r = solve(
            &id,
            Method::Alg3,
            &SolverParams::default(),
            &StoppingRule::iterations(1),
            &Vector::new(vec![5.0, 0.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(r.iterations, 1);
        assert!(solve(&id, Method::Alg3, &SolverParams::default(), &StoppingRule::default(), &Vector::zeros(3)).is_err());
    }

    #[test]
    fn already_solved_start_stops_immediately() {
        let id = builtin("identity-box").unwrap();
        let r = solve(&id, Method::Alg3, &SolverParams::default(), &StoppingRule::default(), &Vector::zeros(2)).unwrap();
        assert_eq!((r.iterations, r.stop_reason), (0, StopReason::ResTol));
    }

    #[test]
    fn divergence_is_a_stop_reason() {
        let p = builtin("square-1d-unbounded").unwrap();
        let r = solve(
            &p,
            Method::Alg1Mewomo,
            &SolverParams::with_inertia(0.0, 0.0),
            &StoppingRule::default(),
            &Vector::new(vec![-10.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(r.stop_reason, StopReason::Divergence);
        assert!(r.final_x.is_finite());
    }
}
