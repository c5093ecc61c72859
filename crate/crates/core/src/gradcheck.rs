//! Finite-difference checks for the derivative oracles.
//!
//! The gradient check only calls `objective_value`; the Hessian check only
//! calls `objective_gradient`. Neither touches the analytic path it verifies.

use crate::error::Result;
use crate::linalg::norm;
use crate::problems::Objective;

/// `‖a − b‖ / max(‖a‖, ‖b‖, 1e-6)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-6)
}

/// Central differences of the objective value along each coordinate.
pub fn finite_difference_gradient<O: Objective + ?Sized>(obj: &O, w: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut probe = w.to_vec();
    let mut g = Vec::with_capacity(w.len());
    for j in 0..w.len() {
        probe[j] = w[j] + h;
        let fp = obj.objective_value(&probe)?;
        probe[j] = w[j] - h;
        let fm = obj.objective_value(&probe)?;
        probe[j] = w[j];
        g.push((fp - fm) / (2.0 * h));
    }
    Ok(g)
}

/// `(∇F(w + εv) − ∇F(w − εv)) / 2ε`.
pub fn finite_difference_hvp<O: Objective + ?Sized>(obj: &O, w: &[f64], v: &[f64], eps: f64) -> Result<Vec<f64>> {
    let plus: Vec<f64> = w.iter().zip(v).map(|(a, b)| a + eps * b).collect();
    let minus: Vec<f64> = w.iter().zip(v).map(|(a, b)| a - eps * b).collect();
    let gp = obj.objective_gradient(&plus)?;
    let gm = obj.objective_gradient(&minus)?;
    Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * eps)).collect())
}

pub fn gradient_error<O: Objective + ?Sized>(obj: &O, w: &[f64]) -> Result<f64> {
    let analytic = obj.objective_gradient(w)?;
    let fd = finite_difference_gradient(obj, w, 1e-5)?;
    Ok(relative_error(&analytic, &fd))
}

pub fn hvp_error<O: Objective + ?Sized>(obj: &O, w: &[f64], v: &[f64]) -> Result<f64> {
    let analytic = obj.hessian_vector_product(w, v, crate::problems::Samples::All)?;
    let fd = finite_difference_hvp(obj, w, v, 1e-5)?;
    Ok(relative_error(&analytic, &fd))
}
