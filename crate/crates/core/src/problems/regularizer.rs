use crate::error::{Error, Result};

/// `λ r(w)` with `r ∈ {0, ‖w‖², ‖w‖₁}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    None,
    L2(f64),
    L1(f64),
}

impl Regularizer {
    pub fn validate(self) -> Result<Self> {
        let lambda = self.lambda();
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("regularization weight {lambda} must be >= 0")));
        }
        Ok(self)
    }

    pub fn lambda(self) -> f64 {
        match self {
            Regularizer::None => 0.0,
            Regularizer::L2(l) | Regularizer::L1(l) => l,
        }
    }

    pub fn value(self, w: &[f64]) -> f64 {
        match self {
            Regularizer::None => 0.0,
            Regularizer::L2(l) => l * w.iter().map(|x| x * x).sum::<f64>(),
            Regularizer::L1(l) => l * w.iter().map(|x| x.abs()).sum::<f64>(),
        }
    }

    /// Adds the gradient of the smooth part (`2λw` for l2); l1 is left to the prox.
    pub fn add_gradient(self, w: &[f64], out: &mut [f64]) {
        if let Regularizer::L2(l) = self {
            for (o, x) in out.iter_mut().zip(w) {
                *o += 2.0 * l * x;
            }
        }
    }

    pub fn add_hessian_vector(self, v: &[f64], out: &mut [f64]) {
        if let Regularizer::L2(l) = self {
            for (o, x) in out.iter_mut().zip(v) {
                *o += 2.0 * l * x;
            }
        }
    }

    pub fn is_smooth(self) -> bool {
        !matches!(self, Regularizer::L1(_))
    }
}

/// Proximal map of `t λ r` evaluated at `v`.
pub fn prox_step(reg: Regularizer, v: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("prox step {t} must be positive")));
    }
    Ok(match reg {
        Regularizer::None => v.to_vec(),
        Regularizer::L2(l) => v.iter().map(|x| x / (1.0 + 2.0 * t * l)).collect(),
        Regularizer::L1(l) => {
            let thr = t * l;
            v.iter().map(|&x| x.signum() * (x.abs() - thr).max(0.0)).collect()
        }
    })
}
