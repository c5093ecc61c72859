use super::params::ShapeMap;
use super::regularizer::Regularizer;
use crate::error::{Error, Result};

/// A subset of sample indices an oracle is evaluated on.
#[derive(Debug, Clone, Copy)]
pub enum Samples<'a> {
    All,
    /// Indices may repeat; each occurrence is weighted equally.
    Batch(&'a [usize]),
}

impl<'a> Samples<'a> {
    pub fn count(&self, n: usize) -> usize {
        match self {
            Samples::All => n,
            Samples::Batch(b) => b.len(),
        }
    }

    pub(crate) fn for_each<F: FnMut(usize) -> Result<()>>(&self, n: usize, mut f: F) -> Result<()> {
        match self {
            Samples::All => (0..n).try_for_each(f),
            Samples::Batch(b) => b.iter().try_for_each(|&i| f(i)),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if let Samples::Batch(b) = self {
            if b.is_empty() {
                return Err(Error::invalid("batch must be nonempty"));
            }
            if let Some(bad) = b.iter().find(|&&i| i >= n) {
                return Err(Error::invalid(format!("batch index {bad} out of range for n = {n}")));
            }
        }
        Ok(())
    }
}

/// Finite-sum objective `F(w) = (1/n) Σ ℓ_i(w) + λ r(w)`.
///
/// Implementors supply unnormalized sums over the loss terms; the provided
/// methods add the averaging and the (smooth part of the) regularizer. With
/// an l1 regularizer the gradient and curvature oracles cover the smooth
/// part only; the nonsmooth term is handled by [`prox_step`](super::prox_step).
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn shape(&self) -> &ShapeMap;

    fn num_samples(&self) -> usize;

    fn regularizer(&self) -> Regularizer;

    fn loss_sum(&self, w: &[f64], samples: Samples<'_>) -> Result<f64>;

    /// Adds `Σ ∇ℓ_i(w)` into `out`.
    fn loss_gradient_sum(&self, w: &[f64], samples: Samples<'_>, out: &mut [f64]) -> Result<()>;

    /// Adds `Σ ∇²ℓ_i(w) v` into `out`.
    fn loss_hessian_vector_sum(&self, w: &[f64], v: &[f64], samples: Samples<'_>, out: &mut [f64])
        -> Result<()>;

    /// Adds `Σ G_i(w) v` into `out`; defaults to the exact Hessian.
    fn loss_gauss_newton_vector_sum(
        &self,
        w: &[f64],
        v: &[f64],
        samples: Samples<'_>,
        out: &mut [f64],
    ) -> Result<()> {
        self.loss_hessian_vector_sum(w, v, samples, out)
    }

    fn check_point(&self, w: &[f64]) -> Result<()> {
        self.shape().check(w.len())
    }

    fn objective_value(&self, w: &[f64]) -> Result<f64> {
        self.check_point(w)?;
        let n = self.num_samples();
        Ok(self.loss_sum(w, Samples::All)? / n as f64 + self.regularizer().value(w))
    }

    fn objective_gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.gradient_on(w, Samples::All)
    }

    fn minibatch_gradient(&self, w: &[f64], batch: &[usize]) -> Result<Vec<f64>> {
        self.gradient_on(w, Samples::Batch(batch))
    }

    fn gradient_on(&self, w: &[f64], samples: Samples<'_>) -> Result<Vec<f64>> {
        self.check_point(w)?;
        let n = self.num_samples();
        samples.validate(n)?;
        let mut g = vec![0.0; w.len()];
        self.loss_gradient_sum(w, samples, &mut g)?;
        let inv = samples.count(n) as f64;
        for gi in g.iter_mut() {
            *gi /= inv;
        }
        self.regularizer().add_gradient(w, &mut g);
        Ok(g)
    }

    fn hessian_vector_product(&self, w: &[f64], v: &[f64], samples: Samples<'_>) -> Result<Vec<f64>> {
        self.curvature_product(w, v, samples, false)
    }

    fn gauss_newton_vector_product(&self, w: &[f64], v: &[f64], samples: Samples<'_>) -> Result<Vec<f64>> {
        self.curvature_product(w, v, samples, true)
    }

    #[doc(hidden)]
    fn curvature_product(&self, w: &[f64], v: &[f64], samples: Samples<'_>, gauss_newton: bool) -> Result<Vec<f64>> {
        self.check_point(w)?;
        self.check_point(v)?;
        let n = self.num_samples();
        samples.validate(n)?;
        let mut hv = vec![0.0; w.len()];
        if gauss_newton {
            self.loss_gauss_newton_vector_sum(w, v, samples, &mut hv)?;
        } else {
            self.loss_hessian_vector_sum(w, v, samples, &mut hv)?;
        }
        let cnt = samples.count(n) as f64;
        for h in hv.iter_mut() {
            *h /= cnt;
        }
        self.regularizer().add_hessian_vector(v, &mut hv);
        Ok(hv)
    }
}
