use std::sync::Arc;

use rand::Rng;

use super::dataset::Dataset;
use super::loss::Loss;
use super::mlp::{ForwardCache, Mlp};
use super::objective::{Objective, Samples};
use super::params::{ParamVector, ShapeMap};
use super::regularizer::Regularizer;
use crate::error::{Error, Result};
use crate::linalg::{dot, power_iteration};

/// Prediction model `p(w, x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// `p(w, x) = wᵀx`; any bias comes from an augmented constant feature.
    Linear,
    Mlp(Mlp),
}

/// Predicted label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    /// `+1` or `-1`.
    Binary(i8),
    Class(usize),
}

/// Sign rule with ties mapped to `+1`.
pub fn sign_label(p: f64) -> Label {
    Label::Binary(if p >= 0.0 { 1 } else { -1 })
}

/// Index of the largest entry; lowest index wins ties.
pub fn argmax_label(outputs: &[f64]) -> Label {
    let mut best = 0;
    for (i, v) in outputs.iter().enumerate() {
        if *v > outputs[best] {
            best = i;
        }
    }
    Label::Class(best)
}

/// Regularized empirical-risk problem: model, loss, regularizer and data.
#[derive(Debug, Clone)]
pub struct Problem {
    model: Model,
    loss: Loss,
    regularizer: Regularizer,
    data: Arc<Dataset>,
    shape: ShapeMap,
}

impl Problem {
    pub fn new(model: Model, loss: Loss, regularizer: Regularizer, data: impl Into<Arc<Dataset>>) -> Result<Self> {
        let regularizer = regularizer.validate()?;
        let data = data.into();
        let shape = match &model {
            Model::Linear => ShapeMap::linear(data.d()),
            Model::Mlp(net) => {
                if net.input_dim() != data.d() {
                    return Err(Error::invalid(format!(
                        "network input size {} does not match feature dimension {}",
                        net.input_dim(),
                        data.d()
                    )));
                }
                if data.is_binary() && net.output_dim() != 1 {
                    return Err(Error::invalid("binary labels need a single network output"));
                }
                net.shape().clone()
            }
        };
        Ok(Problem {
            model,
            loss,
            regularizer,
            data,
            shape,
        })
    }

    /// Logistic regression with a linear model.
    pub fn logistic(data: impl Into<Arc<Dataset>>, regularizer: Regularizer) -> Result<Self> {
        Problem::new(Model::Linear, Loss::Logistic, regularizer, data)
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn shared_data(&self) -> Arc<Dataset> {
        Arc::clone(&self.data)
    }

    /// The same model, loss and regularizer on different samples.
    pub fn with_data(&self, data: impl Into<Arc<Dataset>>) -> Result<Self> {
        Problem::new(self.model.clone(), self.loss, self.regularizer, data)
    }

    pub fn with_loss(&self, loss: Loss) -> Self {
        Problem { loss, ..self.clone() }
    }

    pub fn param_vector(&self, values: Vec<f64>) -> Result<ParamVector> {
        ParamVector::new(values, self.shape.clone())
    }

    /// Zero for linear models; uniform in `±1/√fan_in` per layer for networks.
    pub fn initial_point<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        match &self.model {
            Model::Linear => ParamVector::zeros(self.shape.clone()),
            Model::Mlp(net) => {
                let mut values = Vec::with_capacity(self.shape.total());
                for win in net.sizes().windows(2) {
                    let bound = 1.0 / (win[0] as f64).sqrt();
                    for _ in 0..(win[0] * win[1] + win[1]) {
                        values.push(rng.random_range(-bound..=bound));
                    }
                }
                ParamVector::new(values, self.shape.clone()).expect("layout built from shape")
            }
        }
    }

    /// Raw model output at `x`.
    pub fn predict(&self, w: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.shape.check(w.len())?;
        match &self.model {
            Model::Linear => {
                if x.len() != w.len() {
                    return Err(Error::Shape {
                        expected: w.len(),
                        found: x.len(),
                    });
                }
                Ok(vec![dot(w, x)])
            }
            Model::Mlp(net) => Ok(net.forward(w, x)?.post.pop().unwrap()),
        }
    }

    /// Forward pass through a network model with all cached activations.
    pub fn mlp_forward(&self, w: &[f64], x: &[f64]) -> Result<ForwardCache> {
        match &self.model {
            Model::Mlp(net) => net.forward(w, x),
            Model::Linear => Err(Error::unsupported("mlp_forward on a linear model")),
        }
    }

    /// Sign rule for scalar outputs, argmax for vector outputs.
    pub fn predict_label(&self, w: &[f64], x: &[f64]) -> Result<Label> {
        let out = self.predict(w, x)?;
        Ok(if out.len() == 1 { sign_label(out[0]) } else { argmax_label(&out) })
    }

    #[inline]
    fn scalar_output(&self, w: &[f64], x: &[f64]) -> f64 {
        match &self.model {
            Model::Linear => dot(w, x),
            Model::Mlp(net) => net.forward_unchecked(w, x).output()[0],
        }
    }

    /// Mean of `loss` over `data` (no regularizer).
    pub fn mean_loss_on(&self, w: &[f64], data: &Dataset, loss: Loss) -> Result<f64> {
        self.shape.check(w.len())?;
        let y = data
            .binary_labels()
            .ok_or_else(|| Error::unsupported("loss evaluation needs binary labels"))?;
        if data.d() != self.data.d() {
            return Err(Error::Shape {
                expected: self.data.d(),
                found: data.d(),
            });
        }
        let mut s = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            s += loss.value(self.scalar_output(w, data.row(i)), yi);
        }
        Ok(s / data.n() as f64)
    }

    fn labels(&self) -> Result<&[f64]> {
        self.data
            .binary_labels()
            .ok_or_else(|| Error::unsupported("derivative oracles are wired for binary labels only"))
    }

    fn need_gradient(&self) -> Result<()> {
        if !self.loss.is_differentiable() {
            return Err(Error::unsupported(format!("{} loss has no gradient", self.loss)));
        }
        Ok(())
    }

    fn need_curvature(&self) -> Result<()> {
        if !self.loss.is_twice_differentiable() {
            return Err(Error::unsupported(format!("{} loss has no curvature oracle", self.loss)));
        }
        Ok(())
    }

    /// Bound `c · max_i ‖x_i‖² + 2λ` on every per-sample gradient Lipschitz
    /// constant of a linear model (`c = 1/4` logistic, `2` least squares,
    /// `0` otherwise).
    pub fn lipschitz_bound(&self) -> f64 {
        let max_sq = (0..self.data.n())
            .map(|i| dot(self.data.row(i), self.data.row(i)))
            .fold(0.0, f64::max);
        self.loss_curvature_cap() * max_sq + self.l2_curvature()
    }

    /// Tighter estimate `c · λ_max(XᵀX/n) + 2λ` using power iteration, with
    /// `c = 1/4` for logistic and `2` for least squares.
    pub fn smoothness_estimate(&self) -> f64 {
        let n = self.data.n() as f64;
        let d = self.data.d();
        let x = self.data.features();
        let top = power_iteration(d, 500, |v| {
            let xv = x.matvec(v);
            let mut out = vec![0.0; d];
            for (i, s) in xv.iter().enumerate() {
                for (o, xi) in out.iter_mut().zip(x.row(i)) {
                    *o += s * xi / n;
                }
            }
            out
        });
        self.loss_curvature_cap() * top + self.l2_curvature()
    }

    fn loss_curvature_cap(&self) -> f64 {
        match self.loss {
            Loss::Logistic => 0.25,
            Loss::LeastSquares => 2.0,
            Loss::Hinge | Loss::ZeroOne => 0.0,
        }
    }

    fn l2_curvature(&self) -> f64 {
        match self.regularizer {
            Regularizer::L2(l) => 2.0 * l,
            _ => 0.0,
        }
    }
}

impl Objective for Problem {
    fn dim(&self) -> usize {
        self.shape.total()
    }

    fn shape(&self) -> &ShapeMap {
        &self.shape
    }

    fn num_samples(&self) -> usize {
        self.data.n()
    }

    fn regularizer(&self) -> Regularizer {
        self.regularizer
    }

    fn loss_sum(&self, w: &[f64], samples: Samples<'_>) -> Result<f64> {
        let y = self.labels()?;
        let mut s = 0.0;
        samples.for_each(self.data.n(), |i| {
            s += self.loss.value(self.scalar_output(w, self.data.row(i)), y[i]);
            Ok(())
        })?;
        Ok(s)
    }

    fn loss_gradient_sum(&self, w: &[f64], samples: Samples<'_>, out: &mut [f64]) -> Result<()> {
        self.need_gradient()?;
        let y = self.labels()?;
        let loss = self.loss;
        match &self.model {
            Model::Linear => samples.for_each(self.data.n(), |i| {
                let x = self.data.row(i);
                let g = loss.derivative(dot(w, x), y[i]).expect("checked differentiable");
                for (o, xi) in out.iter_mut().zip(x) {
                    *o += g * xi;
                }
                Ok(())
            }),
            Model::Mlp(net) => samples.for_each(self.data.n(), |i| {
                let cache = net.forward_unchecked(w, self.data.row(i));
                let g = loss.derivative(cache.output()[0], y[i]).expect("checked differentiable");
                net.backward(w, &cache, &[g], out);
                Ok(())
            }),
        }
    }

    fn loss_hessian_vector_sum(&self, w: &[f64], v: &[f64], samples: Samples<'_>, out: &mut [f64]) -> Result<()> {
        self.need_curvature()?;
        let y = self.labels()?;
        let loss = self.loss;
        match &self.model {
            Model::Linear => self.linear_curvature_sum(w, v, y, samples, out),
            Model::Mlp(net) => samples.for_each(self.data.n(), |i| {
                let cache = net.forward_unchecked(w, self.data.row(i));
                let p = cache.output()[0];
                let g = loss.derivative(p, y[i]).expect("checked");
                let c = loss.second_derivative(p, y[i]).expect("checked");
                net.hessian_vector(w, v, &cache, &[g], &[c], out)
            }),
        }
    }

    fn loss_gauss_newton_vector_sum(
        &self,
        w: &[f64],
        v: &[f64],
        samples: Samples<'_>,
        out: &mut [f64],
    ) -> Result<()> {
        self.need_curvature()?;
        let y = self.labels()?;
        let loss = self.loss;
        match &self.model {
            Model::Linear => self.linear_curvature_sum(w, v, y, samples, out),
            Model::Mlp(net) => samples.for_each(self.data.n(), |i| {
                let cache = net.forward_unchecked(w, self.data.row(i));
                let c = loss.second_derivative(cache.output()[0], y[i]).expect("checked");
                net.gauss_newton_vector(w, v, &cache, &[c], out)
            }),
        }
    }
}

impl Problem {
    // For a linear model the Hessian and Gauss-Newton matrices coincide.
    fn linear_curvature_sum(&self, w: &[f64], v: &[f64], y: &[f64], samples: Samples<'_>, out: &mut [f64]) -> Result<()> {
        let loss = self.loss;
        samples.for_each(self.data.n(), |i| {
            let x = self.data.row(i);
            let c = loss.second_derivative(dot(w, x), y[i]).expect("checked");
            let s = c * dot(x, v);
            for (o, xi) in out.iter_mut().zip(x) {
                *o += s * xi;
            }
            Ok(())
        })
    }
}
