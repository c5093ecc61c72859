use std::fmt;
use std::str::FromStr;

use super::activation::sigmoid;
use crate::error::Error;

/// Loss `ℓ(p, y)` on a scalar prediction and a `±1` label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Logistic,
    Hinge,
    LeastSquares,
    ZeroOne,
}

/// `ln(1 + e^{-m})` without overflow.
#[inline]
pub fn log1p_exp_neg(m: f64) -> f64 {
    (-m).max(0.0) + (-m.abs()).exp().ln_1p()
}

impl Loss {
    #[inline]
    pub fn value(self, p: f64, y: f64) -> f64 {
        match self {
            Loss::Logistic => log1p_exp_neg(y * p),
            Loss::Hinge => (1.0 - y * p).max(0.0),
            Loss::LeastSquares => (p - y) * (p - y),
            Loss::ZeroOne => {
                if y * p <= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `∂ℓ/∂p`; `None` for the 0-1 loss. The hinge uses subgradient 0 at margin 1.
    #[inline]
    pub fn derivative(self, p: f64, y: f64) -> Option<f64> {
        match self {
            Loss::Logistic => Some(-y * sigmoid(-y * p)),
            Loss::Hinge => Some(if y * p < 1.0 { -y } else { 0.0 }),
            Loss::LeastSquares => Some(2.0 * (p - y)),
            Loss::ZeroOne => None,
        }
    }

    /// `∂²ℓ/∂p²` for twice-differentiable losses.
    #[inline]
    pub fn second_derivative(self, p: f64, y: f64) -> Option<f64> {
        match self {
            Loss::Logistic => {
                let m = y * p;
                Some(sigmoid(m) * sigmoid(-m) * y * y)
            }
            Loss::LeastSquares => Some(2.0),
            Loss::Hinge | Loss::ZeroOne => None,
        }
    }

    pub fn is_differentiable(self) -> bool {
        !matches!(self, Loss::ZeroOne)
    }

    pub fn is_twice_differentiable(self) -> bool {
        matches!(self, Loss::Logistic | Loss::LeastSquares)
    }

    pub fn name(self) -> &'static str {
        match self {
            Loss::Logistic => "logistic",
            Loss::Hinge => "hinge",
            Loss::LeastSquares => "least_squares",
            Loss::ZeroOne => "zero_one",
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "logistic" => Ok(Loss::Logistic),
            "hinge" => Ok(Loss::Hinge),
            "least_squares" => Ok(Loss::LeastSquares),
            "zero_one" => Ok(Loss::ZeroOne),
            other => Err(Error::invalid(format!("unknown loss '{other}'"))),
        }
    }
}
