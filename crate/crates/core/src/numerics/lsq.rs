//! Levenberg-damped Gauss-Newton for nonlinear least squares.

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// A residual vector `r(x)` and its Jacobian `∂r/∂x`.
pub trait LeastSquaresProblem {
    fn num_residuals(&self) -> usize;
    fn num_params(&self) -> usize;
    fn residuals(&mut self, params: &[f64], out: &mut [f64]);
    /// Fill the `num_residuals × num_params` Jacobian at `params`.
    fn jacobian(&mut self, params: &[f64], out: &mut Mat<f64>);
}

/// Adapter turning a pair of closures into a [`LeastSquaresProblem`].
pub struct FnProblem<R, J> {
    pub residuals: usize,
    pub params: usize,
    pub residual_fn: R,
    pub jacobian_fn: J,
}

impl<R, J> LeastSquaresProblem for FnProblem<R, J>
where
    R: FnMut(&[f64], &mut [f64]),
    J: FnMut(&[f64], &mut Mat<f64>),
{
    fn num_residuals(&self) -> usize {
        self.residuals
    }
    fn num_params(&self) -> usize {
        self.params
    }
    fn residuals(&mut self, params: &[f64], out: &mut [f64]) {
        (self.residual_fn)(params, out)
    }
    fn jacobian(&mut self, params: &[f64], out: &mut Mat<f64>) {
        (self.jacobian_fn)(params, out)
    }
}

/// Early exit when progress flattens out far above the target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stall {
    /// Accepted iterations between progress checks.
    pub window: usize,
    /// Stop when the residual norm shrank by less than this factor over a window.
    pub min_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsqOptions {
    pub max_iters: usize,
    /// Stop once the residual norm falls below this.
    pub target: f64,
    pub initial_damping: f64,
    pub step_tol: f64,
    pub stall: Option<Stall>,
}

impl Default for LsqOptions {
    fn default() -> Self {
        LsqOptions {
            max_iters: 200,
            target: 0.0,
            initial_damping: 1e-3,
            step_tol: 1e-12,
            stall: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    TargetReached,
    SmallStep,
    MaxIterations,
    Stalled,
    DampingExhausted,
}

#[derive(Clone, Debug)]
pub struct LsqReport {
    pub params: Vec<f64>,
    pub residual_norm: f64,
    /// Accepted steps.
    pub iterations: usize,
    pub termination: Termination,
}

const MAX_DAMPING: f64 = 1e16;

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Minimize `‖r(x)‖₂` from `x0`.
///
/// Each iteration solves `(JᵀJ + μI)·δ = −Jᵀr`; `μ` grows ×10 on a rejected
/// step and shrinks ÷10 on an accepted one.
pub fn damped_least_squares<P: LeastSquaresProblem + ?Sized>(
    problem: &mut P,
    x0: &[f64],
    opts: &LsqOptions,
) -> Result<LsqReport> {
    let m = problem.num_residuals();
    let n = problem.num_params();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    let mut x = x0.to_vec();
    let mut r = vec![0.0; m];
    problem.residuals(&x, &mut r);
    let mut cost = sum_sq(&r);
    if !cost.is_finite() {
        return Err(Error::NonFinite("initial residual".into()));
    }
    let finish = |x: Vec<f64>, cost: f64, iterations, termination| LsqReport {
        params: x,
        residual_norm: cost.sqrt(),
        iterations,
        termination,
    };
    if n == 0 {
        return Ok(finish(x, cost, 0, Termination::SmallStep));
    }

    let mut jac = Mat::<f64>::zeros(m, n);
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; m];
    let mut mu = opts.initial_damping.max(0.0);
    let mut history: Vec<f64> = Vec::new();
    let mut accepted = 0;

    while accepted < opts.max_iters {
        if cost.sqrt() < opts.target {
            return Ok(finish(x, cost, accepted, Termination::TargetReached));
        }
        problem.jacobian(&x, &mut jac);
        let normal = jac.transpose() * &jac;
        let mut grad = vec![0.0; n];
        for (j, g) in grad.iter_mut().enumerate() {
            let col = jac.col(j);
            *g = (0..m).map(|i| col[i] * r[i]).sum();
        }
        let diag_scale = (0..n).map(|i| normal[(i, i)]).fold(0.0f64, f64::max).max(1.0);

        loop {
            let mut a = normal.clone();
            for i in 0..n {
                a[(i, i)] += mu;
            }
            let step = match a.llt(Side::Lower) {
                Ok(llt) => {
                    let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| -grad[i]);
                    faer::linalg::solvers::Solve::solve_in_place(&llt, rhs.as_mut());
                    Some((0..n).map(|i| rhs[(i, 0)]).collect::<Vec<_>>())
                }
                Err(_) => None,
            };
            let Some(step) = step.filter(|s| s.iter().all(|v| v.is_finite())) else {
                mu = if mu == 0.0 { 1e-12 * diag_scale } else { mu * 10.0 };
                if mu > MAX_DAMPING * diag_scale {
                    return Ok(finish(x, cost, accepted, Termination::DampingExhausted));
                }
                continue;
            };
            let step_norm = sum_sq(&step).sqrt();
            let x_norm = sum_sq(&x).sqrt();
            if step_norm <= opts.step_tol * (x_norm + opts.step_tol) {
                return Ok(finish(x, cost, accepted, Termination::SmallStep));
            }
            for i in 0..n {
                trial[i] = x[i] + step[i];
            }
            problem.residuals(&trial, &mut r_trial);
            let trial_cost = sum_sq(&r_trial);
            if trial_cost.is_finite() && trial_cost < cost {
                std::mem::swap(&mut x, &mut trial);
                std::mem::swap(&mut r, &mut r_trial);
                cost = trial_cost;
                mu /= 10.0;
                accepted += 1;
                break;
            }
            mu = if mu == 0.0 { 1e-12 * diag_scale } else { mu * 10.0 };
            if mu > MAX_DAMPING * diag_scale {
                return Ok(finish(x, cost, accepted, Termination::DampingExhausted));
            }
        }

        if let Some(stall) = opts.stall {
            history.push(cost.sqrt());
            if history.len() > stall.window {
                let before = history[history.len() - 1 - stall.window];
                let now = cost.sqrt();
                if now > opts.target && now > stall.min_ratio * before {
                    return Ok(finish(x, cost, accepted, Termination::Stalled));
                }
            }
        }
    }
    let termination = if cost.sqrt() < opts.target {
        Termination::TargetReached
    } else {
        Termination::MaxIterations
    };
    Ok(finish(x, cost, accepted, termination))
}
