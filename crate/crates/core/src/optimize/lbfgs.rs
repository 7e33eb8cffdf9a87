use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{MpfError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Stop when `‖∇f‖∞` falls below this.
    pub grad_tol: f64,
    /// Number of curvature pairs kept.
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            grad_tol: 1e-6,
            memory: 10,
            c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 40,
        }
    }
}

impl OptimizerConfig {
    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn with_grad_tol(mut self, tol: f64) -> Self {
        self.grad_tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0
            && self.c1 > 0.0
            && self.c1 < 1.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.memory >= 1)
        {
            return Err(MpfError::InvalidArgument(format!(
                "invalid optimizer configuration {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbfgsStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub grad_inf: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: LbfgsStatus,
    /// Objective value at the start and after every accepted step.
    pub trace: Vec<f64>,
}

/// Slope reduction below which an accepted step is kept without refinement.
const CURVATURE: f64 = 0.01;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Two-loop recursion: returns `-H g`.
fn direction(g: &[f64], pairs: &VecDeque<Pair>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for p in pairs.iter().rev() {
        let a = p.rho * dot(&p.s, &q);
        q.iter_mut().zip(&p.y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some(last) = pairs.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (p, a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = p.rho * dot(&p.y, &q);
        q.iter_mut()
            .zip(&p.s)
            .for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimises `f` with limited-memory BFGS, a backtracking Armijo line search
/// and one secant refinement of the accepted step.
///
/// The callback writes the gradient into its second argument and returns the value.
pub fn lbfgs_minimize<F>(mut f: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<LbfgsResult>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    cfg.validate()?;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(MpfError::NonFinite("objective at the initial point".into()));
    }
    let mut trace = vec![fx];
    let mut pairs: VecDeque<Pair> = VecDeque::with_capacity(cfg.memory);
    let mut status = LbfgsStatus::MaxIterations;
    let mut iterations = 0;

    if inf_norm(&g) <= cfg.grad_tol {
        status = LbfgsStatus::Converged;
    } else {
        let mut x_new = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        let mut x_try = vec![0.0; n];
        let mut g_try = vec![0.0; n];
        while iterations < cfg.max_iters {
            let mut d = direction(&g, &pairs);
            let mut gd = dot(&g, &d);
            if !(gd < 0.0) {
                pairs.clear();
                d = g.iter().map(|v| -v).collect();
                gd = dot(&g, &d);
            }
            let mut step = if pairs.is_empty() {
                (1.0 / dot(&g, &g).sqrt()).min(1.0)
            } else {
                1.0
            };

            let mut accepted = None;
            for _ in 0..=cfg.max_backtracks {
                for i in 0..n {
                    x_new[i] = x[i] + step * d[i];
                }
                let f_new = f(&x_new, &mut g_new);
                evaluations += 1;
                if f_new.is_finite()
                    && g_new.iter().all(|v| v.is_finite())
                    && f_new <= fx + cfg.c1 * step * gd
                {
                    accepted = Some(f_new);
                    break;
                }
                step *= cfg.backtrack;
            }
            let Some(mut f_new) = accepted else {
                status = LbfgsStatus::LineSearchFailed;
                break;
            };

            // secant refinement along d when the slope has not dropped enough
            let gd_new = dot(&g_new, &d);
            if gd_new.abs() > CURVATURE * gd.abs() && gd_new > gd {
                let refined = step * gd / (gd - gd_new);
                for i in 0..n {
                    x_try[i] = x[i] + refined * d[i];
                }
                let f_try = f(&x_try, &mut g_try);
                evaluations += 1;
                if f_try.is_finite() && g_try.iter().all(|v| v.is_finite()) && f_try <= f_new {
                    std::mem::swap(&mut x_new, &mut x_try);
                    std::mem::swap(&mut g_new, &mut g_try);
                    f_new = f_try;
                }
            }

            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > f64::EPSILON * dot(&y, &y) {
                if pairs.len() == cfg.memory {
                    pairs.pop_front();
                }
                pairs.push_back(Pair {
                    s,
                    y,
                    rho: 1.0 / sy,
                });
            }
            std::mem::swap(&mut x, &mut x_new);
            std::mem::swap(&mut g, &mut g_new);
            fx = f_new;
            trace.push(fx);
            iterations += 1;
            if inf_norm(&g) <= cfg.grad_tol {
                status = LbfgsStatus::Converged;
                break;
            }
        }
    }

    Ok(LbfgsResult {
        grad_inf: inf_norm(&g),
        x,
        f: fx,
        grad: g,
        iterations,
        evaluations,
        status,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use nalgebra::DMatrix;
    use rand::Rng;

    #[test]
    fn shifted_quadratic() {
        let c = [1.5, -2.0, 0.25, 4.0];
        let r = lbfgs_minimize(
            |x, g| {
                let mut f = 0.0;
                for i in 0..4 {
                    g[i] = 2.0 * (x[i] - c[i]);
                    f += (x[i] - c[i]).powi(2);
                }
                f
            },
            &[0.0; 4],
            &OptimizerConfig::default().with_grad_tol(1e-11),
        )
        .unwrap();
        assert_eq!(r.status, LbfgsStatus::Converged);
        assert!(r.iterations <= 20);
        for i in 0..4 {
            assert!((r.x[i] - c[i]).abs() < 1e-10);
        }
    }

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let r = lbfgs_minimize(
            rosenbrock,
            &[-1.2, 1.0],
            &OptimizerConfig::default().with_grad_tol(1e-9),
        )
        .unwrap();
        let err = ((r.x[0] - 1.0).powi(2) + (r.x[1] - 1.0).powi(2)).sqrt();
        assert!(err < 1e-6, "{r:?}");
    }

    #[test]
    fn zero_gradient_returns_immediately() {
        let r = lbfgs_minimize(
            |x, g| {
                g[0] = 2.0 * x[0];
                x[0] * x[0]
            },
            &[0.0],
            &OptimizerConfig::default(),
        )
        .unwrap();
        assert_eq!(r.status, LbfgsStatus::Converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let r = lbfgs_minimize(|_, _| f64::NAN, &[0.0], &OptimizerConfig::default());
        assert!(matches!(r, Err(MpfError::NonFinite(_))));
    }

    #[test]
    fn monotone_trace_and_armijo() {
        let r = lbfgs_minimize(rosenbrock, &[-1.2, 1.0], &OptimizerConfig::default()).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn line_search_failure_is_reported() {
        // gradient points the wrong way: no step can decrease f
        let r = lbfgs_minimize(
            |x, g| {
                g[0] = -1.0;
                x[0]
            },
            &[0.0],
            &OptimizerConfig::default(),
        )
        .unwrap();
        assert_eq!(r.status, LbfgsStatus::LineSearchFailed);
    }

    #[test]
    fn convex_quadratics_converge_within_dim_plus_five() {
        let mut rng = seeded(21);
        for trial in 0..30 {
            let n = 2 + trial % 9;
            let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let a = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = lbfgs_minimize(
                |x, g| {
                    let xv = nalgebra::DVector::from_row_slice(x);
                    let ax = &a * &xv;
                    let mut f = 0.0;
                    for i in 0..n {
                        g[i] = ax[i] - b[i];
                        f += 0.5 * x[i] * ax[i] - b[i] * x[i];
                    }
                    f
                },
                &vec![0.0; n],
                &OptimizerConfig::default().with_grad_tol(1e-8),
            )
            .unwrap();
            assert_eq!(r.status, LbfgsStatus::Converged, "n={n} {r:?}");
            assert!(r.iterations <= n + 5, "n={n}: {} iterations", r.iterations);
        }
    }
}
