//! Nonlinear conjugate-gradient minimization (Polak–Ribière⁺ with Armijo
//! backtracking).
//!
//! The driver is generic over [`Objective`] so the same code path that trains
//! networks can be exercised on analytically tractable functions (quadratics
//! have a known finite-termination property that pins the implementation
//! down).
//!
//! Each iteration runs one line search. The first trial step comes from a
//! one-point quadratic interpolation through the current value, the
//! directional slope, and a probe evaluation at step 1 — on a quadratic
//! objective this lands exactly on the 1-D minimizer, which Armijo then
//! accepts unhalved, preserving exact CG behavior. Trial steps halve until
//! the sufficient-decrease condition holds; if the budget runs out the
//! iteration takes a zero step and the direction restarts to steepest
//! descent.

/// A differentiable function of a flat parameter vector.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, theta: &[f64]) -> f64;
    /// Writes the gradient and returns the value at `theta`; must agree with
    /// [`Objective::value`] at the same point.
    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgParams {
    /// Iterations to run (one line search each).
    pub max_iters: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Step halvings allowed per line search before giving up.
    pub max_halvings: usize,
    /// Consecutive failed line searches tolerated before stopping early.
    pub max_consecutive_failures: usize,
    /// Restart period; `None` restarts every `dim` iterations.
    pub restart_every: Option<usize>,
}

impl Default for CgParams {
    fn default() -> CgParams {
        CgParams {
            max_iters: 500,
            armijo_c: 1e-4,
            max_halvings: 40,
            max_consecutive_failures: 10,
            restart_every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgResult {
    pub theta: Vec<f64>,
    /// Objective value after each executed iteration (non-increasing).
    pub values: Vec<f64>,
    /// Iterations actually executed (< `max_iters` only on early stop).
    pub iterations: usize,
    /// True when the run stopped early: zero gradient, or
    /// `max_consecutive_failures` stalled line searches.
    pub converged: bool,
    pub restarts: usize,
    pub line_search_failures: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Backtracking Armijo line search along `d` from `theta`.
///
/// Returns `(alpha, value)` for the accepted step, or `(0.0, f0)` when no
/// trial satisfies sufficient decrease within the halving budget.
fn line_search(
    obj: &impl Objective,
    theta: &[f64],
    d: &[f64],
    f0: f64,
    slope: f64,
    params: &CgParams,
    scratch: &mut Vec<f64>,
) -> (f64, f64) {
    let try_at = |alpha: f64, scratch: &mut Vec<f64>| {
        scratch.clear();
        scratch.extend(theta.iter().zip(d).map(|(&t, &di)| t + alpha * di));
        obj.value(scratch)
    };

    let f_probe = try_at(1.0, scratch);
    // One-point quadratic fit through (0, f0) with slope `slope` and (1,
    // f_probe); its minimizer is exact when the objective is quadratic
    // along the ray.
    let curvature = f_probe - f0 - slope;
    let mut alpha = if curvature > 0.0 {
        -slope / (2.0 * curvature)
    } else {
        1.0
    };
    if !alpha.is_finite() || alpha <= 0.0 {
        alpha = 1.0;
    }

    for _ in 0..=params.max_halvings {
        let f_try = try_at(alpha, scratch);
        if f_try <= f0 + params.armijo_c * alpha * slope {
            return (alpha, f_try);
        }
        alpha *= 0.5;
    }
    (0.0, f0)
}

/// Minimizes `obj` from `theta0`, one Armijo line search per iteration,
/// restarting to steepest descent whenever β clamps to zero, on a fixed
/// period, after a failed line search, or if the conjugate direction stops
/// being a descent direction.
pub fn minimize(obj: &impl Objective, theta0: &[f64], params: &CgParams) -> CgResult {
    let n = obj.dim();
    assert_eq!(theta0.len(), n, "starting point has wrong dimension");
    let period = params.restart_every.unwrap_or(n).max(1);

    let mut theta = theta0.to_vec();
    let mut grad = vec![0.0; n];
    let mut f = obj.value_grad(&theta, &mut grad);
    let mut direction: Vec<f64> = grad.iter().map(|&g| -g).collect();
    let mut gg = dot(&grad, &grad);

    let mut values = Vec::with_capacity(params.max_iters);
    let mut converged = false;
    let mut restarts = 0;
    let mut failures = 0;
    let mut consecutive_failures = 0;
    let mut since_restart = 0;
    let mut iterations = 0;
    let mut scratch = Vec::with_capacity(n);
    let mut grad_new = vec![0.0; n];

    for _ in 0..params.max_iters {
        if gg == 0.0 {
            converged = true;
            break;
        }
        let mut slope = dot(&grad, &direction);
        if slope >= 0.0 {
            // not a descent direction; fall back to steepest descent
            for (di, &gi) in direction.iter_mut().zip(&grad) {
                *di = -gi;
            }
            slope = -gg;
            since_restart = 0;
            restarts += 1;
        }

        let (alpha, _) = line_search(obj, &theta, &direction, f, slope, params, &mut scratch);
        iterations += 1;
        if alpha == 0.0 {
            failures += 1;
            consecutive_failures += 1;
            for (di, &gi) in direction.iter_mut().zip(&grad) {
                *di = -gi;
            }
            since_restart = 0;
            restarts += 1;
            values.push(f);
            if consecutive_failures >= params.max_consecutive_failures {
                converged = true;
                break;
            }
            continue;
        }
        consecutive_failures = 0;

        for (t, &di) in theta.iter_mut().zip(&direction) {
            *t += alpha * di;
        }
        f = obj.value_grad(&theta, &mut grad_new);
        values.push(f);

        // Polak–Ribière⁺: β = max(0, gₖ₊₁ᵀ(gₖ₊₁ − gₖ) / gₖᵀgₖ)
        let gg_new = dot(&grad_new, &grad_new);
        let mixed = dot(&grad_new, &grad);
        let beta = ((gg_new - mixed) / gg).max(0.0);
        since_restart += 1;
        let restart = beta == 0.0 || since_restart >= period;
        if restart {
            restarts += 1;
            since_restart = 0;
        }
        for i in 0..n {
            direction[i] = if restart {
                -grad_new[i]
            } else {
                -grad_new[i] + beta * direction[i]
            };
        }
        std::mem::swap(&mut grad, &mut grad_new);
        gg = gg_new;
    }

    CgResult {
        theta,
        values,
        iterations,
        converged,
        restarts,
        line_search_failures: failures,
    }
}
