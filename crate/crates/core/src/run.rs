use std::time::Instant;

use crate::error::Result;
use crate::linalg::norm;
use crate::problems::{Objective, ParamVector};

/// One row of a convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: u64,
    /// Sample-gradient (and sample-Hessian-product) evaluations divided by `n`.
    pub eff_grad_evals: f64,
    pub fval: f64,
    pub gnorm: f64,
    pub step: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub f_star: f64,
    pub gap: f64,
}

/// Stopping rules and trace sampling shared by all solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct RunControl {
    pub max_iter: usize,
    /// Gradient-norm tolerance for deterministic methods; `0` disables it.
    pub grad_tol: f64,
    pub target: Option<Target>,
    /// Budget in effective gradient evaluations (units of `n`).
    pub max_epochs: Option<f64>,
    /// Stochastic solvers record a trace row every `log_every` iterations.
    pub log_every: usize,
    /// Record elapsed wall time; off by default so traces are reproducible.
    pub wall_clock: bool,
}

impl Default for RunControl {
    fn default() -> Self {
        RunControl {
            max_iter: 1000,
            grad_tol: 1e-8,
            target: None,
            max_epochs: None,
            log_every: 1,
            wall_clock: false,
        }
    }
}

impl RunControl {
    pub fn iterations(max_iter: usize) -> Self {
        RunControl {
            max_iter,
            grad_tol: 0.0,
            ..RunControl::default()
        }
    }

    pub fn with_grad_tol(mut self, tol: f64) -> Self {
        self.grad_tol = tol;
        self
    }

    pub fn with_target(mut self, f_star: f64, gap: f64) -> Self {
        self.target = Some(Target { f_star, gap });
        self
    }

    pub fn with_epochs(mut self, epochs: f64) -> Self {
        self.max_epochs = Some(epochs);
        self
    }

    pub fn with_log_every(mut self, every: usize) -> Self {
        self.log_every = every.max(1);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    MaxIter,
    GradTol,
    TargetGap,
    /// Effective-evaluation budget exhausted.
    Budget,
    LineSearchFailed(String),
    Stalled(String),
}

/// One inexact linear solve inside Newton-CG.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgAudit {
    pub iterations: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub negative_curvature: bool,
}

/// Solver-specific measurements; fields a solver does not use stay empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Sample-level Hessian (or Gauss-Newton) vector products.
    pub hvp_evals: u64,
    pub cg: Vec<CgAudit>,
    /// `‖B⁻¹y − s‖ / (1 + ‖s‖)` after each quasi-Newton update.
    pub secant_residuals: Vec<f64>,
    /// `sᵀy` of every accepted curvature pair.
    pub curvature_products: Vec<f64>,
    pub pairs_skipped: usize,
    /// Accepted `(s, y)` pairs, when recording is switched on.
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    /// Cosine between the quasi-Newton direction and `−∇F`.
    pub direction_cosines: Vec<f64>,
    /// Trust-region actual/predicted reduction ratios.
    pub ratios: Vec<f64>,
    pub radii: Vec<f64>,
    /// Per-iteration curvature sample sizes or batch sizes.
    pub sample_sizes: Vec<usize>,
    pub negative_curvature_events: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_w: ParamVector,
    pub trace: Vec<TraceRecord>,
    pub termination: Termination,
    pub diagnostics: Diagnostics,
}

impl RunResult {
    pub fn final_record(&self) -> &TraceRecord {
        self.trace.last().expect("trace is never empty")
    }

    pub fn iterations(&self) -> u64 {
        self.final_record().iter
    }
}

/// Effective evaluations at the first trace row with `fval − f_star ≤ gap`.
pub fn evals_to_gap(trace: &[TraceRecord], f_star: f64, gap: f64) -> Option<f64> {
    trace.iter().find(|r| r.fval - f_star <= gap).map(|r| r.eff_grad_evals)
}

/// Iteration index of the first trace row with `fval − f_star ≤ gap`.
pub fn iterations_to_gap(trace: &[TraceRecord], f_star: f64, gap: f64) -> Option<u64> {
    trace.iter().find(|r| r.fval - f_star <= gap).map(|r| r.iter)
}

/// Shared bookkeeping: evaluation counter, trace rows, stop checks.
pub(crate) struct Recorder<'a, O: Objective + ?Sized> {
    obj: &'a O,
    control: &'a RunControl,
    n: f64,
    start: Instant,
    trace: Vec<TraceRecord>,
    grad_samples: u64,
    hvp_samples: u64,
}

impl<'a, O: Objective + ?Sized> Recorder<'a, O> {
    pub fn new(obj: &'a O, control: &'a RunControl) -> Self {
        Recorder {
            obj,
            control,
            n: obj.num_samples() as f64,
            start: Instant::now(),
            trace: Vec::new(),
            grad_samples: 0,
            hvp_samples: 0,
        }
    }

    pub fn charge(&mut self, samples: usize) {
        self.grad_samples += samples as u64;
    }

    pub fn charge_full(&mut self) {
        self.grad_samples += self.n as u64;
    }

    pub fn charge_hvp(&mut self, samples: usize) {
        self.hvp_samples += samples as u64;
    }



    pub fn effective(&self) -> f64 {
        (self.grad_samples + self.hvp_samples) as f64 / self.n
    }

    pub fn record(&mut self, iter: usize, fval: f64, gnorm: f64, step: f64) {
        let wall_ms = if self.control.wall_clock {
            self.start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        self.trace.push(TraceRecord {
            iter: iter as u64,
            eff_grad_evals: self.effective(),
            fval,
            gnorm,
            step,
            wall_ms,
        });
    }

    /// Records uncharged monitoring values of `F(w)` and `‖∇F(w)‖`.
    pub fn observe(&mut self, iter: usize, w: &[f64], step: f64) -> Result<(f64, f64)> {
        let f = self.obj.objective_value(w)?;
        let g = norm(&self.obj.objective_gradient(w)?);
        self.record(iter, f, g, step);
        Ok((f, g))
    }

    pub fn should_log(&self, iter: usize) -> bool {
        iter.is_multiple_of(self.control.log_every.max(1))
    }


    /// Stop checks after the state at iteration `iter` has been recorded.
    pub fn check(&self, iter: usize, fval: f64, gnorm: f64, use_grad_tol: bool) -> Option<Termination> {
        if use_grad_tol && self.control.grad_tol > 0.0 && gnorm <= self.control.grad_tol {
            return Some(Termination::GradTol);
        }
        if self.target_reached(fval) {
            return Some(Termination::TargetGap);
        }
        self.check_limits(iter)
    }

    pub fn target_reached(&self, fval: f64) -> bool {
        matches!(self.control.target, Some(t) if fval - t.f_star <= t.gap)
    }

    pub fn check_limits(&self, iter: usize) -> Option<Termination> {
        if iter >= self.control.max_iter {
            return Some(Termination::MaxIter);
        }
        if self.budget_exhausted() {
            return Some(Termination::Budget);
        }
        None
    }

    pub fn budget_exhausted(&self) -> bool {
        matches!(self.control.max_epochs, Some(e) if self.effective() >= e)
    }

    pub fn finish(self, w: Vec<f64>, termination: Termination, mut diagnostics: Diagnostics) -> Result<RunResult> {
        diagnostics.hvp_evals = self.hvp_samples;
        Ok(RunResult {
            final_w: ParamVector::new(w, self.obj.shape().clone())?,
            trace: self.trace,
            termination,
            diagnostics,
        })
    }
}
