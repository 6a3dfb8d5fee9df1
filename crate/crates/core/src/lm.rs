//! Damped Gauss-Newton (Levenberg-Marquardt) least squares with numerical
//! Jacobians, for the small smooth fits of the experiment model.

use nalgebra::{DMatrix, DVector};

/// A fitted parameter with box bounds. `scale` sets the finite-difference
/// step when the value itself is near zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub initial: f64,
    pub lower: f64,
    pub upper: f64,
    pub scale: f64,
}

impl Param {
    pub fn free(name: &str, initial: f64, scale: f64) -> Self {
        Param {
            name: name.to_string(),
            initial,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            scale,
        }
    }

    pub fn bounded(name: &str, initial: f64, lower: f64, upper: f64, scale: f64) -> Self {
        Param {
            name: name.to_string(),
            initial: initial.clamp(lower, upper),
            lower,
            upper,
            scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub cost_tolerance: f64,
    /// Stop when every parameter moves by less than this, relative.
    pub step_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            cost_tolerance: 1e-10,
            step_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// (name, value) in declaration order.
    pub params: Vec<(String, f64)>,
    /// Euclidean norm of the (weighted) residual vector.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Variance estimate of each parameter, when the normal matrix is
    /// invertible.
    pub covariance_diag: Option<Vec<f64>>,
    /// Residual norm after the initial guess and after each accepted step.
    pub residual_history: Vec<f64>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|p| p.1)
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        let i = self.params.iter().position(|(n, _)| n == name)?;
        self.covariance_diag.as_ref().map(|c| c[i].sqrt())
    }
}

/// Minimizes `sum r_i(p)^2`. `residuals(p, out)` fills `out` (length `m`).
///
/// When `scale_covariance` is set (no measurement uncertainties were
/// supplied) the covariance is multiplied by the reduced chi-square.
pub fn levenberg_marquardt<F>(
    residuals: F,
    m: usize,
    params: &[Param],
    options: LmOptions,
    scale_covariance: bool,
) -> FitResult
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = params.len();
    let clamp = |p: &mut [f64]| {
        for (v, spec) in p.iter_mut().zip(params) {
            *v = v.clamp(spec.lower, spec.upper);
        }
    };
    let eval = |p: &[f64], buf: &mut Vec<f64>| -> f64 {
        residuals(p, buf);
        let cost: f64 = buf.iter().map(|r| r * r).sum();
        if cost.is_finite() {
            cost
        } else {
            f64::INFINITY
        }
    };

    let mut p: Vec<f64> = params.iter().map(|s| s.initial).collect();
    clamp(&mut p);
    let mut r = vec![0.0; m];
    let mut cost = eval(&p, &mut r);
    let mut history = vec![cost.sqrt()];
    let mut lambda = 1e-3;
    let mut converged = cost == 0.0;
    let mut iterations = 0;
    let mut trial = vec![0.0; m];
    let mut jac = DMatrix::<f64>::zeros(m, n);

    while !converged && iterations < options.max_iterations {
        iterations += 1;
        jacobian(&residuals, &p, params, m, &mut jac);
        let jt = jac.transpose();
        let normal = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&r);

        let mut accepted = false;
        while lambda < 1e20 {
            let mut damped = normal.clone();
            for i in 0..n {
                let d = normal[(i, i)];
                damped[(i, i)] += lambda * if d > 0.0 { d } else { 1.0 };
            }
            let Some(step) = damped.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let mut p_new: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            clamp(&mut p_new);
            let small_step = p_new
                .iter()
                .zip(&p)
                .all(|(a, b)| (a - b).abs() <= options.step_tolerance * (b.abs() + options.step_tolerance));
            let new_cost = eval(&p_new, &mut trial);
            if new_cost < cost {
                let drop = (cost - new_cost) / cost;
                p = p_new;
                std::mem::swap(&mut r, &mut trial);
                cost = new_cost;
                history.push(cost.sqrt());
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if small_step || drop < options.cost_tolerance || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            if small_step {
                // no descent possible at this resolution: stationary point
                converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted && !converged {
            break;
        }
    }

    jacobian(&residuals, &p, params, m, &mut jac);
    let normal = jac.transpose() * &jac;
    let dof = m.saturating_sub(n).max(1) as f64;
    let factor = if scale_covariance { cost / dof } else { 1.0 };
    let covariance_diag = normal
        .try_inverse()
        .map(|inv| (0..n).map(|i| inv[(i, i)] * factor).collect::<Vec<f64>>())
        .filter(|d| d.iter().all(|v| v.is_finite() && *v >= 0.0));

    FitResult {
        params: params
            .iter()
            .zip(&p)
            .map(|(s, v)| (s.name.clone(), *v))
            .collect(),
        residual_norm: cost.sqrt(),
        converged,
        iterations,
        covariance_diag,
        residual_history: history,
    }
}

/// Central-difference Jacobian.
fn jacobian<F: Fn(&[f64], &mut [f64])>(
    f: &F,
    p: &[f64],
    params: &[Param],
    m: usize,
    jac: &mut DMatrix<f64>,
) {
    let mut plus = vec![0.0; m];
    let mut minus = vec![0.0; m];
    let mut probe = p.to_vec();
    for (j, spec) in params.iter().enumerate() {
        let h = 1e-6 * p[j].abs().max(spec.scale);
        probe[j] = p[j] + h;
        f(&probe, &mut plus);
        probe[j] = p[j] - h;
        f(&probe, &mut minus);
        probe[j] = p[j];
        for i in 0..m {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
}
