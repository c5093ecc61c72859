//! Gradient descent (plain, Nesterov, ISTA, FISTA) and mini-batch SGD with
//! momentum.

use crate::error::{Error, Result};
use crate::linalg::{axpy, norm, sub};
use crate::problems::{prox_step, Objective, Regularizer};
use crate::run::{Diagnostics, Recorder, RunControl, RunResult, Termination};
use crate::sampling::{BatchSampler, SamplingMode};

#[cfg(test)]
mod tests;

/// Step-size sequence `α_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// `α_k = alpha0 / (1 + k / k0)`.
    Harmonic { alpha0: f64, k0: f64 },
}

impl StepSchedule {
    pub fn validate(self) -> Result<Self> {
        let ok = match self {
            StepSchedule::Constant(a) => a > 0.0 && a.is_finite(),
            StepSchedule::Harmonic { alpha0, k0 } => alpha0 > 0.0 && k0 > 0.0 && alpha0.is_finite() && k0.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::invalid(format!("step schedule {self:?} must have positive finite parameters")))
        }
    }

    pub fn step_size(self, k: u64) -> f64 {
        match self {
            StepSchedule::Constant(a) => a,
            StepSchedule::Harmonic { alpha0, k0 } => alpha0 / (1.0 + k as f64 / k0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GdVariant {
    #[default]
    Plain,
    Nesterov,
    Ista,
    Fista,
}

impl GdVariant {
    fn proximal(self) -> bool {
        matches!(self, GdVariant::Ista | GdVariant::Fista)
    }

    fn accelerated(self) -> bool {
        matches!(self, GdVariant::Nesterov | GdVariant::Fista)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdOptions {
    pub schedule: StepSchedule,
    pub variant: GdVariant,
}

/// Full-gradient descent. Row `k` of the trace describes `w_k`; its cost
/// column includes the gradient evaluated at iteration `k`.
pub fn gradient_descent<O: Objective + ?Sized>(
    obj: &O,
    w0: &[f64],
    opts: GdOptions,
    control: &RunControl,
) -> Result<RunResult> {
    obj.check_point(w0)?;
    let schedule = opts.schedule.validate()?;
    let reg = obj.regularizer();
    if opts.variant.proximal() && matches!(reg, Regularizer::L2(_)) {
        return Err(Error::invalid("proximal variants expect an l1 or no regularizer"));
    }
    if !opts.variant.proximal() && !reg.is_smooth() {
        return Err(Error::invalid("plain and Nesterov descent need a smooth regularizer; use ista or fista"));
    }

    let mut rec = Recorder::new(obj, control);
    let mut w = w0.to_vec();
    let mut w_prev = w.clone();
    let mut t = 1.0f64;
    let mut step = 0.0;
    let mut k = 0usize;
    let termination = loop {
        let alpha = schedule.step_size(k as u64);
        // Extrapolated point y_k; equals w_k for the non-accelerated variants.
        let y = if opts.variant.accelerated() && k > 0 {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            t = t_next;
            let mut y = w.clone();
            for ((yi, wi), pi) in y.iter_mut().zip(&w).zip(&w_prev) {
                *yi = wi + beta * (wi - pi);
            }
            y
        } else {
            w.clone()
        };
        let g = obj.objective_gradient(&y)?;
        rec.charge_full();

        let mut next = y.clone();
        axpy(-alpha, &g, &mut next);
        if opts.variant.proximal() {
            next = prox_step(reg, &next, alpha)?;
        }

        let fval = obj.objective_value(&w)?;
        let gnorm = if opts.variant.accelerated() {
            monitor_gnorm(obj, &w, opts.variant, alpha)?
        } else if opts.variant.proximal() {
            norm(&sub(&w, &next)) / alpha
        } else {
            norm(&g)
        };
        rec.record(k, fval, gnorm, step);
        if let Some(term) = rec.check(k, fval, gnorm, true) {
            break term;
        }
        if !fval.is_finite() {
            break Termination::Stalled("objective is not finite".into());
        }

        step = norm(&sub(&next, &w));
        w_prev = std::mem::replace(&mut w, next);
        k += 1;
    };
    rec.finish(w, termination, Diagnostics::default())
}

/// Gradient norm, or gradient-mapping norm for the proximal variants, at `w`.
fn monitor_gnorm<O: Objective + ?Sized>(obj: &O, w: &[f64], variant: GdVariant, alpha: f64) -> Result<f64> {
    let g = obj.objective_gradient(w)?;
    if !variant.proximal() {
        return Ok(norm(&g));
    }
    let mut trial = w.to_vec();
    axpy(-alpha, &g, &mut trial);
    let p = prox_step(obj.regularizer(), &trial, alpha)?;
    Ok(norm(&sub(w, &p)) / alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdOptions {
    pub schedule: StepSchedule,
    pub batch_size: usize,
    /// Momentum weight `η ∈ [0, 1)`; `0` is plain SGD.
    pub momentum: f64,
    pub seed: u64,
    pub sampling: SamplingMode,
}

impl SgdOptions {
    pub fn new(schedule: StepSchedule, batch_size: usize, seed: u64) -> Self {
        SgdOptions {
            schedule,
            batch_size,
            momentum: 0.0,
            seed,
            sampling: SamplingMode::WithReplacement,
        }
    }

    pub fn with_momentum(mut self, eta: f64) -> Self {
        self.momentum = eta;
        self
    }
}

pub(crate) fn check_batch_size(batch_size: usize, n: usize) -> Result<()> {
    if batch_size == 0 || batch_size > n {
        return Err(Error::invalid(format!("batch size {batch_size} outside [1, {n}]")));
    }
    Ok(())
}

/// Mini-batch SGD with momentum:
/// `v_k = η v_{k−1} + (1 − η) ∇_{S_k}F(w_k)`, `w_{k+1} = w_k − α_k v_k`.
///
/// Stops on `max_iter`, the evaluation budget, or the target gap; the
/// gradient tolerance is ignored. Trace rows carry uncharged monitoring
/// values every `log_every` iterations and at the final iterate.
pub fn sgd<O: Objective + ?Sized>(obj: &O, w0: &[f64], opts: SgdOptions, control: &RunControl) -> Result<RunResult> {
    obj.check_point(w0)?;
    let schedule = opts.schedule.validate()?;
    let n = obj.num_samples();
    check_batch_size(opts.batch_size, n)?;
    if !(0.0..1.0).contains(&opts.momentum) {
        return Err(Error::invalid(format!("momentum {} outside [0, 1)", opts.momentum)));
    }
    if !obj.regularizer().is_smooth() {
        return Err(Error::invalid("sgd needs a smooth regularizer"));
    }

    let eta = opts.momentum;
    let mut rec = Recorder::new(obj, control);
    let mut sampler = BatchSampler::new(n, opts.seed, opts.sampling);
    let mut batch = Vec::with_capacity(opts.batch_size);
    let mut w = w0.to_vec();
    let mut v = vec![0.0; w.len()];
    let mut step = 0.0;
    let mut k = 0usize;
    let termination = loop {
        let limit = rec.check_limits(k);
        if limit.is_some() || rec.should_log(k) {
            let (f, _) = rec.observe(k, &w, step)?;
            if rec.target_reached(f) {
                break Termination::TargetGap;
            }
            if !f.is_finite() {
                break Termination::Stalled("objective is not finite".into());
            }
        }
        if let Some(term) = limit {
            break term;
        }

        sampler.fill(opts.batch_size, &mut batch);
        let g = obj.minibatch_gradient(&w, &batch)?;
        rec.charge(batch.len());
        if eta == 0.0 {
            v = g;
        } else {
            for (vi, gi) in v.iter_mut().zip(&g) {
                *vi = eta * *vi + (1.0 - eta) * gi;
            }
        }
        let alpha = schedule.step_size(k as u64);
        axpy(-alpha, &v, &mut w);
        step = alpha * norm(&v);
        k += 1;
    };
    rec.finish(w, termination, Diagnostics::default())
}
