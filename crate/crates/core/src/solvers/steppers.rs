use crate::error::Result;
use crate::geometry::{Halfspace, Vector};
use crate::problems::VIProblem;
use crate::stepsize::{self, StepRule};

use super::{fixed_lambda, Method, SolverParams, SolverState};

/// Everything one iteration produced. `w` is the extrapolated point (`x_k`
/// for methods without inertia) and `y` the projected point.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub x_next: Vector,
    pub w: Vector,
    pub y: Vector,
    pub lambda: f64,
    /// Step carried into the next iteration's state.
    pub lambda_next: f64,
    pub rule: StepRule,
    pub armijo_m: Option<u32>,
    pub shrinks: u32,
    pub evaluations: usize,
    pub projections: usize,
}

/// Dispatches one iteration of `method`. The state is not modified; call
/// [`SolverState::advance`] with the output.
pub fn step(problem: &VIProblem, method: Method, params: &SolverParams, state: &SolverState) -> Result<StepOutput> {
    match method {
        Method::Goldstein => goldstein_step(problem, params, state),
        Method::Egm => egm_step(problem, params, state),
        Method::Segm => segm_step(problem, params, state),
        Method::TsengFixed => tseng_fixed_step(problem, params, state),
        Method::LiuYang => liu_yang_step(problem, params, state),
        Method::ThongHieu => thong_hieu_step(problem, params, state),
        Method::Alg1Mewomo => alg1_mewomo_step(problem, params, state),
        Method::Alg3 => two_step_inertial_tseng_step(problem, params, state),
    }
}

fn fixed_output(x_next: Vector, w: Vector, y: Vector, lambda: f64, evaluations: usize, projections: usize) -> StepOutput {
    StepOutput {
        x_next,
        w,
        y,
        lambda,
        lambda_next: lambda,
        rule: StepRule::Fixed,
        armijo_m: None,
        shrinks: 0,
        evaluations,
        projections,
    }
}

/// `x⁺ = P_C(x − λAx)`
pub fn goldstein_step(problem: &VIProblem, params: &SolverParams, state: &SolverState) -> Result<StepOutput> {
    let lambda = fixed_lambda(problem, Method::Goldstein, params)?;
    let x = &state.x_k;
    let ax = problem.evaluate(x)?;
    let y = problem.project(&x.axpy(-lambda, &ax))?;
    Ok(fixed_output(y.clone(), x.clone(), y, lambda, 1, 1))
}

/// `y = P_C(x − λAx)`, `x⁺ = P_C(x − λAy)`
pub fn egm_step(problem: &VIProblem, params: &SolverParams, state: &SolverState) -> Result<StepOutput> {
    let lambda = fixed_lambda(problem, Method::Egm, params)?;
    let x = &state.x_k;
    let ax = problem.evaluate(x)?;
    let y = problem.project(&x.axpy(-lambda, &ax))?;
    let ay = problem.evaluate(&y)?;
    let x_next = problem.project(&x.axpy(-lambda, &ay))?;
    Ok(fixed_output(x_next, x.clone(), y, lambda, 2, 2))
}

/// As EGM, but the second projection is onto the halfspace
/// `T = {u : ⟨x − λAx − y, u − y⟩ ≤ 0}`, which contains `C`.
/// Only projections onto `C` are counted.
pub fn segm_step(problem: &VIProblem, params: &SolverParams, state: &SolverState) -> Result<StepOutput> {
    let lambda = fixed_lambda(problem, Method::Segm, params)?;
    let x = &state.x_k;
    let ax = problem.evaluate(x)?;
    let forward = x.axpy(-lambda, &ax);
    let y = problem.project(&forward)?;
    let ay = problem.evaluate(&y)?;
    let target = x.axpy(-lambda, &ay);
    let normal = &forward - &y;
    let x_next = if normal.norm_sq() > 0.0 {
        Halfspace::new(normal.clone(), normal.dot(&y))?.project(&target)
    } else {
        // forward step already in C: T is the whole space
        target
    };
    Ok(fixed_output(x_next, x.clone(), y, lambda, 2, 1))
}

/// `y = P_C(x − λAx)`, `x⁺ = y − λ(Ay − Ax)`
pub fn tseng_fixed_step(problem: &VIProblem, params: &SolverParams, state: &SolverState) -> Result<StepOutput> {
    let lambda = fixed_lambda(problem, Method::TsengFixed, params)?;
    let x = &state.x_k;
    let ax = problem.evaluate(x)?;
    let y = problem.project(&x.axpy(-lambda, &ax))?;
    let ay = problem.evaluate(&y)?;
    let x_next = y.axpy(-lambda, &(&ay - &ax));
    Ok(fixed_output(x_next, x.clone(), y, lambda, 2, 1))
}

/// Tseng's update with the self-adaptive step; `λ_{k+1}` is computed after
/// the step from `(x_k, y_k)`.
pub fn liu_yang_step(problem: &VIProblem, params: &SolverParams, state: &SolverState) -> Result<StepOutput> {
    let lambda = state.lambda_prev;
    let x = &state.x_k;
    let ax = problem.evaluate(x)?;
    let y = problem.project(&x.axpy(-lambda, &ax))?;
    let ay = problem.evaluate(&y)?;
    let x_next = y.axpy(-lambda, &(&ay - &ax));
    let lambda_next = stepsize::adaptive_next(lambda, x, &y, &ax, &ay, params.step.mu);
    Ok(StepOutput {
        x_next,
        w: x.clone(),
        y,
        lambda,
        lambda_next,
        rule: StepRule::Adaptive,
        armijo_m: None,
        shrinks: 0,
        evaluations: 2,
        projections: 1,
    })
}

fn armijo_tseng(problem: &VIProblem, params: &SolverParams, state: &SolverState, w: Vector) -> Result<StepOutput> {
    let aw = problem.evaluate(&w)?;
    let found = stepsize::armijo_search_from(problem, &w, &aw, &params.step)?;
    let x_next = found.y.axpy(-found.lambda, &(&found.ay - &aw));
    Ok(StepOutput {
        x_next,
        w,
        y: found.y,
        lambda: found.lambda,
        lambda_next: state.lambda_prev,
        rule: StepRule::Armijo,
        armijo_m: Some(found.m),
        shrinks: 0,
        evaluations: 1 + found.evaluations,
        projections: found.projections,
    })
}

/// One-step inertia `w = x_k + α(x_k − x_{k−1})` with an Armijo step.
pub fn thong_hieu_step(problem: &VIProblem, params: &SolverParams, state: &SolverState) -> Result<StepOutput> {
    let w = state.x_k.axpy(params.inertia.alpha, &(&state.x_k - &state.x_km1));
    armijo_tseng(problem, params, state, w)
}

/// Two-step inertia with an Armijo step only.
pub fn alg1_mewomo_step(problem: &VIProblem, params: &SolverParams, state: &SolverState) -> Result<StepOutput> {
    armijo_tseng(problem, params, state, two_step_extrapolation(params, state))
}

fn two_step_extrapolation(params: &SolverParams, state: &SolverState) -> Vector {
    let (alpha, beta) = (params.inertia.alpha, params.inertia.beta);
    state
        .x_k
        .axpy(alpha, &(&state.x_k - &state.x_km1))
        .axpy(beta, &(&state.x_km1 - &state.x_km2))
}

/// Two-step inertial Tseng iteration with `λ_k = min(λ⁽¹⁾, λ⁽²⁾)`.
///
/// `λ⁽¹⁾` is the adaptive candidate carried in `state.lambda_prev`; `λ⁽²⁾`
/// comes from a fresh Armijo search at `w_k`. When the Armijo step wins its
/// trial projection is reused. Otherwise `y_k` is recomputed with `λ⁽¹⁾` and
/// guarded so that `λ_k‖Aw_k − Ay_k‖ ≤ μ‖w_k − y_k‖` holds for the step
/// actually taken.
pub fn two_step_inertial_tseng_step(
    problem: &VIProblem,
    params: &SolverParams,
    state: &SolverState,
) -> Result<StepOutput> {
    let w = two_step_extrapolation(params, state);
    let aw = problem.evaluate(&w)?;
    let armijo = stepsize::armijo_search_from(problem, &w, &aw, &params.step)?;
    let lambda1 = state.lambda_prev;
    let (candidate, rule) = stepsize::combined_step(lambda1, armijo.lambda);

    let mut evaluations = 1 + armijo.evaluations;
    let mut projections = armijo.projections;
    let (lambda, y, ay, shrinks) = if candidate == armijo.lambda {
        (armijo.lambda, armijo.y, armijo.ay, 0)
    } else {
        let g = stepsize::guard(problem, &w, &aw, candidate, &params.step)?;
        evaluations += g.evaluations;
        projections += g.projections;
        (g.lambda, g.y, g.ay, g.shrinks)
    };

    let x_next = y.axpy(-lambda, &(&ay - &aw));
    let lambda_next = stepsize::adaptive_next(lambda1, &w, &y, &aw, &ay, params.step.mu);
    Ok(StepOutput {
        x_next,
        w,
        y,
        lambda,
        lambda_next,
        rule,
        armijo_m: Some(armijo.m),
        shrinks,
        evaluations,
        projections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FeasibleSet;
    use crate::problems::{builtin, DenseMatrix, OperatorSpec};
    use crate::solvers::{solve, StoppingRule};

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn alg3_fixed_point_at_solution() {
        let p = builtin("identity-box").unwrap();
        let params = SolverParams::with_inertia(0.0, 0.0);
        let state = SolverState::new(v(&[0.0, 0.0]), 1.0);
        let out = two_step_inertial_tseng_step(&p, &params, &state).unwrap();
        assert_eq!(out.x_next, v(&[0.0, 0.0]));
        assert_eq!(out.w, out.y);
    }

    #[test]
    fn alg3_single_step_matches_hand_formula() {
        let p = builtin("identity-box").unwrap();
        let params = SolverParams::with_inertia(0.1, -0.05);
        let x1 = v(&[0.5, 0.5]);
        let state = SolverState::new(x1.clone(), params.step.lambda0);
        let out = two_step_inertial_tseng_step(&p, &params, &state).unwrap();
        // equal seeds kill inertia
        assert_eq!(out.w, x1);
        // A = I in the interior: y = (1−λ)w and x⁺ = y − λ(y − w)
        let lam = out.lambda;
        let y = 0.5 - 0.5 * lam;
        let x_next = y - lam * (y - 0.5);
        assert!((out.y[0] - y).abs() < 1e-15 && (out.y[1] - y).abs() < 1e-15);
        assert!((out.x_next[0] - x_next).abs() < 1e-15);
        assert!(out.x_next.norm() < x1.norm());
    }

    #[test]
    fn egm_step_example() {
        let p = builtin("identity-box").unwrap();
        let params = SolverParams { fixed_lambda: Some(0.5), ..SolverParams::default() };
        let out = egm_step(&p, &params, &SolverState::new(v(&[0.5, 0.5]), 0.5)).unwrap();
        assert_eq!(out.y, v(&[0.25, 0.25]));
        assert_eq!(out.x_next, v(&[0.375, 0.375]));
    }

    #[test]
    fn goldstein_fixed_point_at_solution() {
        let r = builtin("rotation-ball").unwrap();
        let out = goldstein_step(&r, &SolverParams::default(), &SolverState::new(v(&[0.0, 0.0]), 0.5)).unwrap();
        assert_eq!(out.x_next, v(&[0.0, 0.0]));
        // x² has no declared Lipschitz constant
        let sq = builtin("quasi-square-1d").unwrap();
        assert!(goldstein_step(&sq, &SolverParams::default(), &SolverState::new(v(&[-1.0]), 0.5)).is_err());
    }

    #[test]
    fn segm_halfspace_keeps_interior_target() {
        // From an interior point the forward step stays in C, so T is the
        // whole space and SEGM coincides with EGM.
        let p = builtin("identity-box").unwrap();
        let params = SolverParams { fixed_lambda: Some(0.5), ..SolverParams::default() };
        let state = SolverState::new(v(&[0.5, 0.5]), 0.5);
        let s = segm_step(&p, &params, &state).unwrap();
        let e = egm_step(&p, &params, &state).unwrap();
        assert_eq!(s.x_next, e.x_next);
    }

    #[test]
    fn segm_projects_onto_halfspace_when_forward_step_leaves_c() {
        // A(x) = x − (3, 0) on [−1, 1]², λ = 0.5, x = (0.5, 0):
        // forward = (1.75, 0), y = (1, 0), T = {u₁ ≤ 1}, x − λAy = (1.5, 0).
        let op = OperatorSpec::affine(DenseMatrix::identity(2), v(&[-3.0, 0.0]), Some(1.0), "shift").unwrap();
        let p = VIProblem::new(op, FeasibleSet::cube(2, -1.0, 1.0).unwrap(), 2, "shift").unwrap();
        let params = SolverParams { fixed_lambda: Some(0.5), ..SolverParams::default() };
        let s = segm_step(&p, &params, &SolverState::new(v(&[0.5, 0.0]), 0.5)).unwrap();
        assert_eq!(s.y, v(&[1.0, 0.0]));
        assert_eq!(s.x_next, v(&[1.0, 0.0]));
        let t = Halfspace::new(v(&[0.75, 0.0]), 0.75).unwrap();
        assert_eq!(t.project(&s.y), s.y);
    }

    #[test]
    fn tseng_fixed_on_rotation_ball() {
        let p = builtin("rotation-ball").unwrap();
        let params = SolverParams { fixed_lambda: Some(0.3), ..SolverParams::default() };
        let r = solve(&p, Method::TsengFixed, &params, &StoppingRule::default(), &v(&[0.6, 0.0])).unwrap();
        assert!(r.stop_reason.converged());
        assert!(r.final_x.norm() < 1e-4, "{}", r.final_x);
    }

    #[test]
    fn thong_hieu_ignores_beta() {
        let p = builtin("identity-box").unwrap();
        let a = SolverParams::with_inertia(0.3, 0.0);
        let b = SolverParams::with_inertia(0.3, -0.4);
        let mut state = SolverState::new(v(&[0.5, 0.2]), 1.0);
        state.x_km1 = v(&[0.6, 0.1]);
        state.x_km2 = v(&[0.9, 0.9]);
        let oa = thong_hieu_step(&p, &a, &state).unwrap();
        let ob = thong_hieu_step(&p, &b, &state).unwrap();
        assert_eq!(oa, ob);
        assert!(oa.w.distance(&v(&[0.47, 0.23])) < 1e-15, "{}", oa.w);
    }

    #[test]
    fn alg3_inequalities_hold_along_a_run() {
        let p = builtin("affine-hphard-8").unwrap();
        let params = SolverParams::default();
        let mut state = SolverState::new(Vector::filled(8, 1.0), params.step.lambda0);
        let mu = params.step.mu;
        for _ in 0..200 {
            let out = two_step_inertial_tseng_step(&p, &params, &state).unwrap();
            let wy = out.w.distance(&out.y);
            assert!(out.x_next.distance(&out.y) <= mu * wy + 1e-12);
            assert!(out.x_next.distance(&out.w) >= (1.0 - mu) * wy - 1e-12);
            assert!(out.lambda <= state.lambda_prev);
            assert!(out.lambda_next <= state.lambda_prev);
            state.advance(&out);
        }
    }
}
