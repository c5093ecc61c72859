use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, Matrix};

/// Step `s = w_{k+1} − w_k` and displacement `y` with `sᵀy > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePair {
    s: Vec<f64>,
    y: Vec<f64>,
    sy: f64,
}

impl CurvaturePair {
    pub fn new(s: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if s.len() != y.len() {
            return Err(Error::Shape {
                expected: s.len(),
                found: y.len(),
            });
        }
        let sy = dot(&s, &y);
        if !(sy > 0.0) {
            return Err(Error::Curvature { sy });
        }
        Ok(CurvaturePair { s, y, sy })
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sy(&self) -> f64 {
        self.sy
    }
}

/// `(I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ` with `ρ = 1 / sᵀy`.
pub fn bfgs_update_inverse(binv: &Matrix, s: &[f64], y: &[f64]) -> Result<Matrix> {
    let d = s.len();
    if binv.rows() != d || binv.cols() != d || y.len() != d {
        return Err(Error::Shape {
            expected: d,
            found: binv.rows(),
        });
    }
    let sy = dot(s, y);
    if !(sy > 0.0) {
        return Err(Error::Curvature { sy });
    }
    let rho = 1.0 / sy;
    let hy = binv.matvec(y);
    let yhy = dot(y, &hy);
    let coef = rho * rho * yhy + rho;
    let entry = |i: usize, j: usize| binv.get(i, j) - rho * (s[i] * hy[j] + hy[i] * s[j]) + coef * s[i] * s[j];
    let mut out = Matrix::zeros(d, d);
    for i in 0..d {
        out.set(i, i, entry(i, i));
        for j in i + 1..d {
            let v = 0.5 * (entry(i, j) + entry(j, i));
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    Ok(out)
}

/// `‖H y − s‖ / (1 + ‖s‖)`.
pub fn secant_residual(hy: &[f64], s: &[f64]) -> f64 {
    let diff: Vec<f64> = hy.iter().zip(s).map(|(a, b)| a - b).collect();
    norm(&diff) / (1.0 + norm(s))
}

/// Ring of the `m` most recent curvature pairs, applied by the two-loop
/// recursion.
#[derive(Debug, Clone)]
pub struct LbfgsMemory {
    capacity: usize,
    pairs: VecDeque<CurvaturePair>,
    /// Scale the seed matrix by `sᵀy / yᵀy` of the newest pair; otherwise `I`.
    scaling: bool,
}

impl LbfgsMemory {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("L-BFGS memory must hold at least one pair"));
        }
        Ok(LbfgsMemory {
            capacity,
            pairs: VecDeque::with_capacity(capacity),
            scaling: true,
        })
    }

    pub fn without_scaling(mut self) -> Self {
        self.scaling = false;
        self
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn pairs(&self) -> impl Iterator<Item = &CurvaturePair> {
        self.pairs.iter()
    }

    pub fn push(&mut self, pair: CurvaturePair) {
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back(pair);
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Seed scale `γ`.
    pub fn gamma(&self) -> f64 {
        match (self.scaling, self.pairs.back()) {
            (true, Some(p)) => p.sy / dot(&p.y, &p.y),
            _ => 1.0,
        }
    }

    /// `H v` for the implicit inverse Hessian approximation.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut q = v.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for p in self.pairs.iter().rev() {
            let a = dot(&p.s, &q) / p.sy;
            axpy(-a, &p.y, &mut q);
            alphas.push(a);
        }
        let gamma = self.gamma();
        q.iter_mut().for_each(|x| *x *= gamma);
        for (p, a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = dot(&p.y, &q) / p.sy;
            axpy(a - b, &p.s, &mut q);
        }
        q
    }

    /// `−H g`.
    pub fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut d = self.apply(g);
        d.iter_mut().for_each(|x| *x = -*x);
        d
    }
}
