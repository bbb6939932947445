//! Damped Gauss–Newton (Levenberg–Marquardt) with a projection step for
//! simple parameter constraints.

use nalgebra::{DMatrix, DVector};

pub trait LeastSquares {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
    /// Maps a trial point back into the feasible set.
    fn project(&self, x: &mut DVector<f64>);
}

#[derive(Debug, Clone, Copy)]
pub struct LmSettings {
    pub max_iterations: usize,
    /// Relative decrease in the cost below which the run has converged.
    pub ftol: f64,
    /// Relative step size below which the run has converged.
    pub xtol: f64,
    /// Cost at or below which the run stops immediately.
    pub cost_floor: f64,
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: DVector<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn minimize<P: LeastSquares>(problem: &P, x0: DVector<f64>, settings: &LmSettings) -> LmOutcome {
    let mut x = x0;
    problem.project(&mut x);
    let mut r = problem.residuals(&x);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let n = x.len();

    for iter in 0..settings.max_iterations {
        if cost <= settings.cost_floor {
            return LmOutcome { x, cost, iterations: iter, converged: true };
        }
        let j = problem.jacobian(&x);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * &r;
        if g.amax() <= 1e-14 * cost.max(f64::MIN_POSITIVE).sqrt() {
            return LmOutcome { x, cost, iterations: iter, converged: true };
        }
        let mut accepted = false;
        // a handful of damping increases before giving up on this linearization
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= nu;
                nu *= 2.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let mut trial = &x + &step;
            problem.project(&mut trial);
            let actual_step = &trial - &x;
            let r_trial = problem.residuals(&trial);
            let cost_trial = r_trial.norm_squared();
            if cost_trial < cost {
                let decrease = cost - cost_trial;
                let small_step = actual_step.norm() <= settings.xtol * (x.norm() + settings.xtol);
                x = trial;
                r = r_trial;
                let prev = cost;
                cost = cost_trial;
                lambda = (lambda / 3.0).max(1e-15);
                nu = 2.0;
                accepted = true;
                if decrease <= settings.ftol * prev || small_step {
                    return LmOutcome { x, cost, iterations: iter + 1, converged: true };
                }
                break;
            }
            lambda *= nu;
            nu *= 2.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !accepted {
            // no descent direction left: a (constrained) stationary point
            return LmOutcome { x, cost, iterations: iter + 1, converged: true };
        }
    }
    LmOutcome {
        x,
        cost,
        iterations: settings.max_iterations,
        converged: false,
    }
}

/// Euclidean projection onto `{x >= 0, Σx <= 1}`.
pub fn project_capped_simplex(x: &mut [f64]) {
    let original = x.to_vec();
    for v in x.iter_mut() {
        *v = v.max(0.0);
    }
    let total: f64 = x.iter().sum();
    if total <= 1.0 {
        return;
    }
    // the projection then lies on the face Σx = 1
    let mut sorted = original.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    for (v, o) in x.iter_mut().zip(&original) {
        *v = (o - theta).max(0.0);
    }
}
