use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{MpfError, Result};

fn step(theta_k: f64, h: Option<f64>) -> f64 {
    h.unwrap_or(1e-5 * (1.0 + theta_k.abs()))
}

/// Central-difference gradient. The default step is `1e-5 (1 + |θ_k|)`.
pub fn fd_gradient<F>(mut f: F, theta: &[f64], h: Option<f64>) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|k| {
            let hk = step(theta[k], h);
            t[k] = theta[k] + hk;
            let up = f(&t);
            t[k] = theta[k] - hk;
            let down = f(&t);
            t[k] = theta[k];
            (up - down) / (2.0 * hk)
        })
        .collect()
}

/// `‖a - b‖₂ / max(‖a‖₂, ‖b‖₂)`, zero when both vanish.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Hessian from central differences of an analytic gradient, symmetrised.
pub fn fd_hessian<G>(mut grad: G, theta: &[f64], h: Option<f64>) -> Result<DMatrix<f64>>
where
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let n = theta.len();
    let mut hess = DMatrix::zeros(n, n);
    let mut t = theta.to_vec();
    for k in 0..n {
        let hk = step(theta[k], h);
        t[k] = theta[k] + hk;
        let up = grad(&t);
        t[k] = theta[k] - hk;
        let down = grad(&t);
        t[k] = theta[k];
        if up.len() != n || down.len() != n {
            return Err(MpfError::DimensionMismatch {
                expected: n,
                got: up.len(),
            });
        }
        for i in 0..n {
            let v = (up[i] - down[i]) / (2.0 * hk);
            if !v.is_finite() {
                return Err(MpfError::NonFinite(format!(
                    "gradient component {i} near parameter {k}"
                )));
            }
            hess[(i, k)] = v;
        }
    }
    Ok((&hess + hess.transpose()) * 0.5)
}

/// Smallest eigenvalue of [`fd_hessian`].
pub fn hessian_min_eig<G>(grad: G, theta: &[f64], h: Option<f64>) -> Result<f64>
where
    G: FnMut(&[f64]) -> Vec<f64>,
{
    let hess = fd_hessian(grad, theta, h)?;
    Ok(SymmetricEigen::new(hess)
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn quadratic_form_gradient() {
        let mut rng = seeded(3);
        let n = 4;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let theta: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f = |t: &[f64]| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += t[i] * a[i * n + j] * t[j];
                }
            }
            s
        };
        let g = fd_gradient(f, &theta, None);
        for i in 0..n {
            let exact: f64 = 2.0 * (0..n).map(|j| a[i * n + j] * theta[j]).sum::<f64>();
            assert!((g[i] - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn hessian_of_quadratic() {
        let grad = |t: &[f64]| vec![2.0 * t[0] + t[1], t[0] + 4.0 * t[1]];
        let h = fd_hessian(grad, &[0.3, -0.2], None).unwrap();
        assert!((h[(0, 1)] - 1.0).abs() < 1e-9);
        let min = hessian_min_eig(grad, &[0.3, -0.2], None).unwrap();
        let exact = 3.0 - 2f64.sqrt();
        assert!((min - exact).abs() < 1e-8);
    }

    #[test]
    fn non_convex_reports_negative() {
        let grad = |t: &[f64]| vec![-2.0 * t[0]];
        assert!(hessian_min_eig(grad, &[1.0], None).unwrap() < -1.0);
    }

    #[test]
    fn rel_error_cases() {
        assert_eq!(rel_error(&[0.0], &[0.0]), 0.0);
        assert!(
            (rel_error(&[1.0, 0.0], &[1.0, 1e-3]) - 1e-3 / (1.0f64 + 1e-6).sqrt()).abs() < 1e-15
        );
    }
}
