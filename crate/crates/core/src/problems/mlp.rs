//! Fully connected feed-forward networks `x⁽ʲ⁺¹⁾ = s_j(W_j x⁽ʲ⁾ + ω_j)`.
//!
//! Gradients come from ordinary back propagation. Hessian-vector products
//! use the forward/backward directional-derivative pass (the "R-operator"),
//! so no parameter-sized square matrix is ever formed. Gauss-Newton products
//! reuse the forward directional pass and then back propagate the loss
//! curvature times the output perturbation.

use super::activation::Activation;
use super::params::ShapeMap;
use crate::error::{Error, Result};

const KINK_TOL: f64 = 1e-12;

/// Number of weights plus shifts for the given layer sizes.
pub fn mlp_parameter_count(layer_sizes: &[usize]) -> Result<usize> {
    if layer_sizes.len() < 2 {
        return Err(Error::invalid("a network needs at least two layers"));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::invalid("layer sizes must be >= 1"));
    }
    Ok(layer_sizes
        .windows(2)
        .map(|w| w[1] * w[0] + w[1])
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    activations: Vec<Activation>,
    // (weight offset, shift offset) per layer
    offsets: Vec<(usize, usize)>,
    shape: ShapeMap,
}

/// Pre- and post-activations from a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// `z_j = W_j a_j + ω_j` for each layer transition.
    pub pre: Vec<Vec<f64>>,
    /// `a_0 = x, a_{j+1} = s_j(z_j)`.
    pub post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("forward cache always holds the input")
    }
}

impl Mlp {
    pub fn new(sizes: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        mlp_parameter_count(&sizes)?;
        if activations.len() != sizes.len() - 1 {
            return Err(Error::invalid(format!(
                "{} layer transitions need {} activations, got {}",
                sizes.len() - 1,
                sizes.len() - 1,
                activations.len()
            )));
        }
        let mut offsets = Vec::with_capacity(activations.len());
        let mut at = 0;
        for w in sizes.windows(2) {
            let wo = at;
            at += w[0] * w[1];
            offsets.push((wo, at));
            at += w[1];
        }
        let shape = ShapeMap::mlp(&sizes);
        Ok(Mlp {
            sizes,
            activations,
            offsets,
            shape,
        })
    }

    /// Same activation on every hidden layer and a separate one on the output.
    pub fn with_hidden(sizes: Vec<usize>, hidden: Activation, output: Activation) -> Result<Self> {
        let l = sizes.len().saturating_sub(1);
        let mut acts = vec![hidden; l];
        if let Some(last) = acts.last_mut() {
            *last = output;
        }
        Mlp::new(sizes, acts)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn shape(&self) -> &ShapeMap {
        &self.shape
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.activations.len()
    }

    fn weights<'a>(&self, w: &'a [f64], j: usize) -> (&'a [f64], &'a [f64]) {
        let (wo, so) = self.offsets[j];
        let rows = self.sizes[j + 1];
        (&w[wo..so], &w[so..so + rows])
    }

    fn check(&self, w: &[f64], x: &[f64]) -> Result<()> {
        self.shape.check(w.len())?;
        if x.len() != self.sizes[0] {
            return Err(Error::Shape {
                expected: self.sizes[0],
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, w: &[f64], x: &[f64]) -> Result<ForwardCache> {
        self.check(w, x)?;
        Ok(self.forward_unchecked(w, x))
    }

    pub(crate) fn forward_unchecked(&self, w: &[f64], x: &[f64]) -> ForwardCache {
        let l = self.num_layers();
        let mut pre = Vec::with_capacity(l);
        let mut post = Vec::with_capacity(l + 1);
        post.push(x.to_vec());
        for j in 0..l {
            let z = self.affine(w, j, &post[j]);
            let act = self.activations[j];
            post.push(z.iter().map(|&v| act.value(v)).collect());
            pre.push(z);
        }
        ForwardCache { pre, post }
    }

    /// `W_j a + ω_j`.
    pub fn affine(&self, w: &[f64], j: usize, a: &[f64]) -> Vec<f64> {
        let (wm, shift) = self.weights(w, j);
        let cols = self.sizes[j];
        shift
            .iter()
            .enumerate()
            .map(|(r, s)| {
                let row = &wm[r * cols..(r + 1) * cols];
                row.iter().zip(a).map(|(x, y)| x * y).sum::<f64>() + s
            })
            .collect()
    }

    /// Accumulates the back-propagated gradient `Jᵀ upstream` into `out`.
    pub(crate) fn backward(&self, w: &[f64], cache: &ForwardCache, upstream: &[f64], out: &mut [f64]) {
        let mut ga = upstream.to_vec();
        for j in (0..self.num_layers()).rev() {
            let act = self.activations[j];
            let delta: Vec<f64> = ga
                .iter()
                .zip(&cache.pre[j])
                .map(|(g, &z)| g * act.derivative(z))
                .collect();
            let (wo, so) = self.offsets[j];
            let cols = self.sizes[j];
            let a = &cache.post[j];
            for (r, dr) in delta.iter().enumerate() {
                let row = &mut out[wo + r * cols..wo + (r + 1) * cols];
                for (o, av) in row.iter_mut().zip(a) {
                    *o += dr * av;
                }
                out[so + r] += dr;
            }
            if j > 0 {
                ga = self.transpose_apply(w, j, &delta);
            }
        }
    }

    /// `W_jᵀ δ`.
    fn transpose_apply(&self, w: &[f64], j: usize, delta: &[f64]) -> Vec<f64> {
        let (wm, _) = self.weights(w, j);
        let cols = self.sizes[j];
        let mut out = vec![0.0; cols];
        for (r, dr) in delta.iter().enumerate() {
            for (o, wv) in out.iter_mut().zip(&wm[r * cols..(r + 1) * cols]) {
                *o += wv * dr;
            }
        }
        out
    }

    fn check_kinks(&self, cache: &ForwardCache) -> Result<()> {
        for (j, z) in cache.pre.iter().enumerate() {
            if self.activations[j] == Activation::Relu {
                if let Some(&v) = z.iter().find(|v| v.abs() < KINK_TOL) {
                    return Err(Error::ReluKink { value: v });
                }
            }
        }
        Ok(())
    }

    /// Directional derivatives of the pre- and post-activations along `v`.
    fn r_forward(&self, w: &[f64], v: &[f64], cache: &ForwardCache) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let l = self.num_layers();
        let mut rz = Vec::with_capacity(l);
        let mut ra = Vec::with_capacity(l + 1);
        ra.push(vec![0.0; self.sizes[0]]);
        for j in 0..l {
            // R(z_j) = V_j a_j + W_j R(a_j) + R(ω_j)
            let mut z = self.affine(v, j, &cache.post[j]);
            if j > 0 {
                let (wm, _) = self.weights(w, j);
                let cols = self.sizes[j];
                for (r, zr) in z.iter_mut().enumerate() {
                    *zr += wm[r * cols..(r + 1) * cols]
                        .iter()
                        .zip(&ra[j])
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                }
            }
            let act = self.activations[j];
            ra.push(
                z.iter()
                    .zip(&cache.pre[j])
                    .map(|(rzv, &zv)| act.derivative(zv) * rzv)
                    .collect(),
            );
            rz.push(z);
        }
        (rz, ra)
    }

    /// Accumulates the Hessian-vector product of `ℓ(p(w, x))` along `v`.
    ///
    /// `loss_grad` and `loss_curv` are `∂ℓ/∂p` and the (diagonal) `∂²ℓ/∂p²`
    /// evaluated at the cached output.
    pub(crate) fn hessian_vector(
        &self,
        w: &[f64],
        v: &[f64],
        cache: &ForwardCache,
        loss_grad: &[f64],
        loss_curv: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        self.check_kinks(cache)?;
        let (rz, ra) = self.r_forward(w, v, cache);
        let l = self.num_layers();
        let mut ga = loss_grad.to_vec();
        let mut rga: Vec<f64> = loss_curv.iter().zip(&ra[l]).map(|(c, r)| c * r).collect();
        for j in (0..l).rev() {
            let act = self.activations[j];
            let z = &cache.pre[j];
            let delta: Vec<f64> = ga.iter().zip(z).map(|(g, &zv)| g * act.derivative(zv)).collect();
            let rdelta: Vec<f64> = (0..z.len())
                .map(|r| rga[r] * act.derivative(z[r]) + ga[r] * act.second_derivative(z[r]) * rz[j][r])
                .collect();
            let (wo, so) = self.offsets[j];
            let cols = self.sizes[j];
            let a = &cache.post[j];
            let a_dot = &ra[j];
            for r in 0..delta.len() {
                let row = &mut out[wo + r * cols..wo + (r + 1) * cols];
                for c in 0..cols {
                    row[c] += rdelta[r] * a[c] + delta[r] * a_dot[c];
                }
                out[so + r] += rdelta[r];
            }
            if j > 0 {
                let mut next_rga = self.transpose_apply(v, j, &delta);
                let wt_rdelta = self.transpose_apply(w, j, &rdelta);
                for (a, b) in next_rga.iter_mut().zip(&wt_rdelta) {
                    *a += b;
                }
                ga = self.transpose_apply(w, j, &delta);
                rga = next_rga;
            }
        }
        Ok(())
    }

    /// Accumulates `Jᵀ diag(loss_curv) J v` (Gauss-Newton product).
    pub(crate) fn gauss_newton_vector(
        &self,
        w: &[f64],
        v: &[f64],
        cache: &ForwardCache,
        loss_curv: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        self.check_kinks(cache)?;
        let (_, ra) = self.r_forward(w, v, cache);
        let jv = &ra[self.num_layers()];
        let u: Vec<f64> = loss_curv.iter().zip(jv).map(|(c, r)| c * r).collect();
        self.backward(w, cache, &u, out);
        Ok(())
    }
}
