use super::cg::{cg_solve, CgStatus};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm};
use crate::problems::{Objective, Samples};
use crate::run::{CgAudit, Diagnostics, Recorder, RunControl, RunResult, Termination};

/// Which curvature operator `B_k` the inner solver sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Curvature {
    #[default]
    Hessian,
    GaussNewton,
}

impl Curvature {
    pub(crate) fn is_gauss_newton(self) -> bool {
        self == Curvature::GaussNewton
    }
}

/// Relative CG tolerance `η_k`, so that the exit residual is `≤ η_k ‖∇F‖`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Forcing {
    /// `η_k = min(0.5, √‖∇F(w_k)‖)`.
    #[default]
    Adaptive,
    Fixed(f64),
}

impl Forcing {
    pub fn eta(self, gnorm: f64) -> f64 {
        match self {
            Forcing::Adaptive => gnorm.sqrt().min(0.5),
            Forcing::Fixed(eta) => eta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonCgOptions {
    pub curvature: Curvature,
    /// `γ` in `(B_k + γI) s = −∇F`.
    pub damping: f64,
    pub forcing: Forcing,
    pub max_cg: usize,
}

impl Default for NewtonCgOptions {
    fn default() -> Self {
        NewtonCgOptions {
            curvature: Curvature::Hessian,
            damping: 1e-4,
            forcing: Forcing::Adaptive,
            max_cg: 30,
        }
    }
}

impl NewtonCgOptions {
    pub fn gauss_newton() -> Self {
        NewtonCgOptions {
            curvature: Curvature::GaussNewton,
            ..NewtonCgOptions::default()
        }
    }
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 30;

/// Hessian-free inexact Newton with a backtracking Armijo search.
///
/// Every curvature product over the full sample set charges `n` sample
/// evaluations; objective values probed by the backtracking are free.
pub fn newton_cg<O: Objective + ?Sized>(
    obj: &O,
    w0: &[f64],
    opts: NewtonCgOptions,
    control: &RunControl,
) -> Result<RunResult> {
    obj.check_point(w0)?;
    if !obj.regularizer().is_smooth() {
        return Err(Error::invalid("Newton-CG needs a smooth objective"));
    }
    if !(opts.damping >= 0.0) || opts.max_cg == 0 {
        return Err(Error::invalid("Newton-CG needs damping >= 0 and a positive CG budget"));
    }
    if let Forcing::Fixed(eta) = opts.forcing {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::invalid(format!("forcing term must lie in (0, 1), got {eta}")));
        }
    }
    let n = obj.num_samples();
    let gn = opts.curvature.is_gauss_newton();
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

        let eta = opts.forcing.eta(gnorm);
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut products = 0usize;
        let cg = cg_solve(
            |v| {
                products += 1;
                let mut bv = obj.curvature_product(&w, v, Samples::All, gn)?;
                axpy(opts.damping, v, &mut bv);
                Ok(bv)
            },
            &rhs,
            eta,
            opts.max_cg,
        )?;
        for _ in 0..products {
            rec.charge_hvp(n);
        }
        let negative = cg.status == CgStatus::NegativeCurvature;
        if negative {
            diag.negative_curvature_events += 1;
        }
        diag.cg.push(CgAudit {
            iterations: cg.iterations,
            residual: cg.residual,
            tolerance: eta * gnorm,
            negative_curvature: negative,
        });

        let mut d = cg.x;
        if !(dot(&d, &g) < 0.0) {
            d = rhs;
        }
        let slope = dot(&d, &g);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = w.clone();
            axpy(alpha, &d, &mut trial);
            let ft = obj.objective_value(&trial)?;
            if ft <= f + ARMIJO_C1 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((w_new, f_new)) = accepted else {
            break Termination::LineSearchFailed(format!("no Armijo step after {MAX_HALVINGS} halvings"));
        };
        step = alpha * norm(&d);
        w = w_new;
        f = f_new;
        g = obj.objective_gradient(&w)?;
        rec.charge_full();
        k += 1;
    };
    rec.finish(w, termination, diag)
}
