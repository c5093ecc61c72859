use super::objective::{Objective, Samples};
use super::params::ShapeMap;
use super::regularizer::Regularizer;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// `F(w) = ½ wᵀAw − bᵀw` treated as a single-sample finite sum.
#[derive(Debug, Clone)]
pub struct Quadratic {
    a: Matrix,
    b: Vec<f64>,
    shape: ShapeMap,
}

impl Quadratic {
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self> {
        if a.rows() != a.cols() || a.rows() != b.len() {
            return Err(Error::invalid("quadratic needs square A and matching b"));
        }
        if a.max_asymmetry() > 1e-12 {
            return Err(Error::invalid("quadratic matrix must be symmetric"));
        }
        let shape = ShapeMap::linear(b.len());
        Ok(Quadratic { a, b, shape })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn linear_term(&self) -> &[f64] {
        &self.b
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn shape(&self) -> &ShapeMap {
        &self.shape
    }

    fn num_samples(&self) -> usize {
        1
    }

    fn regularizer(&self) -> Regularizer {
        Regularizer::None
    }

    fn loss_sum(&self, w: &[f64], samples: Samples<'_>) -> Result<f64> {
        let f = 0.5 * self.a.quadratic_form(w) - dot(&self.b, w);
        Ok(f * samples.count(1) as f64)
    }

    fn loss_gradient_sum(&self, w: &[f64], samples: Samples<'_>, out: &mut [f64]) -> Result<()> {
        let aw = self.a.matvec(w);
        samples.for_each(1, |_| {
            for ((o, a), b) in out.iter_mut().zip(&aw).zip(&self.b) {
                *o += a - b;
            }
            Ok(())
        })
    }

    fn loss_hessian_vector_sum(&self, _w: &[f64], v: &[f64], samples: Samples<'_>, out: &mut [f64]) -> Result<()> {
        let av = self.a.matvec(v);
        samples.for_each(1, |_| {
            for (o, a) in out.iter_mut().zip(&av) {
                *o += a;
            }
            Ok(())
        })
    }
}
