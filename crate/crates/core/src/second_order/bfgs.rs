use super::line_search::{wolfe_search, WolfeParams};
use super::quasi_newton::{bfgs_update_inverse, secant_residual, CurvaturePair, LbfgsMemory};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub, Matrix};
use crate::problems::Objective;
use crate::run::{Diagnostics, Recorder, RunControl, RunResult, Termination};

/// Inverse-Hessian storage: an explicit matrix or the `m` latest pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Memory {
    Full,
    Limited(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub memory: Memory,
    /// Seed scaling `γ = sᵀy / yᵀy`; for the full matrix it rescales `I`
    /// before the first update.
    pub scaling: bool,
    pub line_search: WolfeParams,
    pub record_pairs: bool,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            memory: Memory::Limited(10),
            scaling: true,
            line_search: WolfeParams::default(),
            record_pairs: false,
        }
    }
}

impl BfgsOptions {
    pub fn full() -> Self {
        BfgsOptions {
            memory: Memory::Full,
            ..BfgsOptions::default()
        }
    }

    pub fn limited(m: usize) -> Self {
        BfgsOptions {
            memory: Memory::Limited(m),
            ..BfgsOptions::default()
        }
    }

    pub fn without_scaling(mut self) -> Self {
        self.scaling = false;
        self
    }
}

enum Inverse {
    Full { h: Matrix, updated: bool },
    Limited(LbfgsMemory),
}

impl Inverse {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Inverse::Full { h, .. } => h.matvec(v),
            Inverse::Limited(m) => m.apply(v),
        }
    }

    fn reset(&mut self) {
        match self {
            Inverse::Full { h, updated } => {
                *h = Matrix::identity(h.rows());
                *updated = false;
            }
            Inverse::Limited(m) => m.clear(),
        }
    }

    fn update(&mut self, pair: CurvaturePair, scaling: bool) -> Result<()> {
        match self {
            Inverse::Full { h, updated } => {
                if scaling && !*updated {
                    let gamma = pair.sy() / dot(pair.y(), pair.y());
                    *h = Matrix::diagonal(&vec![gamma; h.rows()]);
                }
                *h = bfgs_update_inverse(h, pair.s(), pair.y())?;
                *updated = true;
            }
            Inverse::Limited(m) => m.push(pair),
        }
        Ok(())
    }
}

/// BFGS or L-BFGS with a strong-Wolfe line search along `−H∇F`.
pub fn bfgs<O: Objective + ?Sized>(obj: &O, w0: &[f64], opts: BfgsOptions, control: &RunControl) -> Result<RunResult> {
    obj.check_point(w0)?;
    if !obj.regularizer().is_smooth() {
        return Err(Error::invalid("quasi-Newton methods need a smooth objective"));
    }
    let params = opts.line_search.validate()?;
    let dim = w0.len();
    let mut inv = match opts.memory {
        Memory::Full => Inverse::Full {
            h: Matrix::identity(dim),
            updated: false,
        },
        Memory::Limited(m) => {
            let mem = LbfgsMemory::new(m)?;
            Inverse::Limited(if opts.scaling { mem } else { mem.without_scaling() })
        }
    };

    let mut rec = Recorder::new(obj, control);
    let mut diag = Diagnostics::default();
    let mut w = w0.to_vec();
    let mut f = obj.objective_value(&w)?;
    let mut g = obj.objective_gradient(&w)?;
    rec.charge_full();
    let mut step = 0.0;
    let mut k = 0usize;
    let termination = loop {
        let gnorm = norm(&g);
        rec.record(k, f, gnorm, step);
        if let Some(term) = rec.check(k, f, gnorm, true) {
            break term;
        }
        if gnorm == 0.0 {
            break Termination::GradTol;
        }

        let mut d: Vec<f64> = inv.apply(&g).iter().map(|v| -v).collect();
        if !(dot(&d, &g) < 0.0) {
            inv.reset();
            d = g.iter().map(|v| -v).collect();
        }
        let ls = if k == 0 {
            // The first direction is −∇F; start from a step of at most unit length.
            WolfeParams {
                alpha_init: (1.0 / norm(&d)).min(params.alpha_init),
                ..params
            }
        } else {
            params
        };
        let outcome = match wolfe_search(obj, &w, f, &g, &d, ls) {
            Ok(o) => o,
            Err(Error::LineSearch(msg)) => break Termination::LineSearchFailed(msg),
            Err(e) => return Err(e),
        };
        for _ in 0..outcome.evals {
            rec.charge_full();
        }
        let mut w_new = w.clone();
        for (wi, di) in w_new.iter_mut().zip(&d) {
            *wi += outcome.alpha * di;
        }
        let s = sub(&w_new, &w);
        let y = sub(&outcome.g, &g);
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if opts.record_pairs {
                diag.pairs.push((s.clone(), y.clone()));
            }
            let pair = CurvaturePair::new(s.clone(), y.clone())?;
            inv.update(pair, opts.scaling)?;
            diag.curvature_products.push(sy);
            diag.secant_residuals.push(secant_residual(&inv.apply(&y), &s));
        } else {
            diag.pairs_skipped += 1;
        }
        step = norm(&s);
        w = w_new;
        f = outcome.f;
        g = outcome.g;
        k += 1;
    };
    rec.finish(w, termination, diag)
}
