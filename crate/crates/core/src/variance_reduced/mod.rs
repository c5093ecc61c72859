//! Finite-sum variance reduction: SVRG, SARAH, SAGA and growing-batch SGD.

use rand::Rng;

use crate::error::{Error, Result};
use crate::first_order::check_batch_size;
use crate::linalg::{axpy, norm, sub};
use crate::problems::{Objective, Samples};
use crate::run::{Diagnostics, Recorder, RunControl, RunResult, Termination};
use crate::sampling::{BatchSampler, SamplingMode};


/// Which inner iterate becomes the next outer iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OuterChoice {
    /// `w_t` with `t` uniform on `{0, …, l}`.
    #[default]
    Uniform,
    /// The last inner iterate `w_l`.
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VrOptions {
    pub alpha: f64,
    pub batch_size: usize,
    /// Inner loop size `l`; `None` means `2n / s` (at least 1).
    pub inner_loop: Option<usize>,
    pub seed: u64,
    pub outer_choice: OuterChoice,
    pub sampling: SamplingMode,
}

impl VrOptions {
    pub fn new(alpha: f64, batch_size: usize, seed: u64) -> Self {
        VrOptions {
            alpha,
            batch_size,
            inner_loop: None,
            seed,
            outer_choice: OuterChoice::Uniform,
            sampling: SamplingMode::WithReplacement,
        }
    }

    pub fn with_inner_loop(mut self, l: usize) -> Self {
        self.inner_loop = Some(l);
        self
    }

    pub fn with_last_iterate(mut self) -> Self {
        self.outer_choice = OuterChoice::Last;
        self
    }

    pub fn inner_loop_size(&self, n: usize) -> usize {
        self.inner_loop.unwrap_or_else(|| (2 * n / self.batch_size.max(1)).max(1))
    }
}

/// SVRG inner direction `∇_S F(w_t) − ∇_S F(w_0) + v_0`.
pub fn svrg_direction<O: Objective + ?Sized>(
    obj: &O,
    w_t: &[f64],
    w_0: &[f64],
    v_0: &[f64],
    batch: &[usize],
) -> Result<Vec<f64>> {
    correction(obj, w_t, w_0, v_0, batch)
}

/// SARAH inner direction `∇_S F(w_t) − ∇_S F(w_{t−1}) + v_{t−1}`.
pub fn sarah_direction<O: Objective + ?Sized>(
    obj: &O,
    w_t: &[f64],
    w_prev: &[f64],
    v_prev: &[f64],
    batch: &[usize],
) -> Result<Vec<f64>> {
    correction(obj, w_t, w_prev, v_prev, batch)
}

fn correction<O: Objective + ?Sized>(obj: &O, w: &[f64], anchor: &[f64], base: &[f64], batch: &[usize]) -> Result<Vec<f64>> {
    let mut v = obj.minibatch_gradient(w, batch)?;
    let g_anchor = obj.minibatch_gradient(anchor, batch)?;
    for ((vi, ai), bi) in v.iter_mut().zip(&g_anchor).zip(base) {
        *vi = (*vi - ai) + bi;
    }
    Ok(v)
}

#[derive(Clone, Copy, PartialEq)]
enum Recursion {
    Svrg,
    Sarah,
}

/// SVRG. Trace row `k` describes the outer iterate `w̃_k`; `max_iter`
/// bounds the number of outer iterations. Each outer iteration costs
/// `n + 2 s (l − 1)` sample gradients.
pub fn svrg<O: Objective + ?Sized>(obj: &O, w0: &[f64], opts: VrOptions, control: &RunControl) -> Result<RunResult> {
    outer_loop(obj, w0, opts, control, Recursion::Svrg)
}

/// SARAH: SVRG's outer loop with the recursive inner direction.
pub fn sarah<O: Objective + ?Sized>(obj: &O, w0: &[f64], opts: VrOptions, control: &RunControl) -> Result<RunResult> {
    outer_loop(obj, w0, opts, control, Recursion::Sarah)
}

fn validate_vr<O: Objective + ?Sized>(obj: &O, w0: &[f64], alpha: f64) -> Result<()> {
    obj.check_point(w0)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("step size {alpha} must be positive")));
    }
    if !obj.regularizer().is_smooth() {
        return Err(Error::invalid("variance-reduced solvers need a smooth regularizer"));
    }
    Ok(())
}

fn outer_loop<O: Objective + ?Sized>(
    obj: &O,
    w_init: &[f64],
    opts: VrOptions,
    control: &RunControl,
    kind: Recursion,
) -> Result<RunResult> {
    validate_vr(obj, w_init, opts.alpha)?;
    let n = obj.num_samples();
    check_batch_size(opts.batch_size, n)?;
    let l = opts.inner_loop_size(n);
    if l == 0 {
        return Err(Error::invalid("inner loop size must be at least 1"));
    }
    let alpha = opts.alpha;
    let mut rec = Recorder::new(obj, control);
    let mut sampler = BatchSampler::new(n, opts.seed, opts.sampling);
    let mut batch = Vec::with_capacity(opts.batch_size);
    let mut w_tilde = w_init.to_vec();
    let mut step = 0.0;
    let mut k = 0usize;
    let termination = loop {
        let (f, g) = rec.observe(k, &w_tilde, step)?;
        if let Some(term) = rec.check(k, f, g, true) {
            break term;
        }
        if !f.is_finite() {
            break Termination::Stalled("objective is not finite".into());
        }

        let chosen_t = match opts.outer_choice {
            OuterChoice::Uniform => sampler.rng().random_range(0..=l),
            OuterChoice::Last => l,
        };
        let w_0 = w_tilde.clone();
        let v_0 = obj.objective_gradient(&w_0)?;
        rec.charge_full();
        let mut chosen = if chosen_t == 0 { Some(w_0.clone()) } else { None };
        let mut w_prev = w_0.clone();
        let mut v_prev = v_0.clone();
        let mut w = w_0.clone();
        axpy(-alpha, &v_0, &mut w);
        for t in 1..l {
            if chosen_t == t {
                chosen = Some(w.clone());
            }
            sampler.fill(opts.batch_size, &mut batch);
            let v = match kind {
                Recursion::Svrg => svrg_direction(obj, &w, &w_0, &v_0, &batch)?,
                Recursion::Sarah => sarah_direction(obj, &w, &w_prev, &v_prev, &batch)?,
            };
            rec.charge(2 * batch.len());
            w_prev.copy_from_slice(&w);
            axpy(-alpha, &v, &mut w);
            v_prev = v;
        }
        let next = chosen.unwrap_or(w);
        step = norm(&sub(&next, &w_tilde));
        w_tilde = next;
        k += 1;
    };
    rec.finish(w_tilde, termination, Diagnostics::default())
}

/// Stored per-sample loss gradients with an incrementally updated mean.
#[derive(Debug, Clone)]
pub struct GradientTable {
    rows: Vec<f64>,
    mean: Vec<f64>,
    n: usize,
    d: usize,
    refresh_every: usize,
    since_refresh: usize,
}

impl GradientTable {
    pub fn zeros(n: usize, d: usize) -> Self {
        GradientTable {
            rows: vec![0.0; n * d],
            mean: vec![0.0; d],
            n,
            d,
            refresh_every: n.max(1),
            since_refresh: 0,
        }
    }

    /// Table of `∇ℓ_i(w)` for every sample.
    pub fn at_point<O: Objective + ?Sized>(obj: &O, w: &[f64]) -> Result<Self> {
        let mut table = GradientTable::zeros(obj.num_samples(), w.len());
        for i in 0..table.n {
            let row = &mut table.rows[i * table.d..(i + 1) * table.d];
            obj.loss_gradient_sum(w, Samples::Batch(&[i]), row)?;
        }
        table.refresh();
        Ok(table)
    }

    /// Number of replacements between exact recomputations of the mean.
    pub fn with_refresh_every(mut self, every: usize) -> Self {
        self.refresh_every = every.max(1);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn replace(&mut self, i: usize, g: &[f64]) {
        let inv = 1.0 / self.n as f64;
        let row = &mut self.rows[i * self.d..(i + 1) * self.d];
        for ((m, r), gi) in self.mean.iter_mut().zip(row.iter_mut()).zip(g) {
            *m += (gi - *r) * inv;
            *r = *gi;
        }
        self.since_refresh += 1;
        if self.since_refresh >= self.refresh_every {
            self.refresh();
        }
    }

    /// Average of the stored rows, summed in row order.
    pub fn direct_mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for row in self.rows.chunks_exact(self.d) {
            for (mi, r) in m.iter_mut().zip(row) {
                *mi += r;
            }
        }
        let n = self.n as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    pub fn refresh(&mut self) {
        self.mean = self.direct_mean();
        self.since_refresh = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SagaOptions {
    pub alpha: f64,
    pub seed: u64,
}

/// SAGA with the table initialized at `w0` (charged as one full pass).
/// `max_iter` counts single-sample steps; rows follow `log_every`.
pub fn saga<O: Objective + ?Sized>(obj: &O, w0: &[f64], opts: SagaOptions, control: &RunControl) -> Result<RunResult> {
    validate_vr(obj, w0, opts.alpha)?;
    let n = obj.num_samples();
    let reg = obj.regularizer();
    let mut rec = Recorder::new(obj, control);
    let mut sampler = BatchSampler::new(n, opts.seed, SamplingMode::WithReplacement);
    let mut table = GradientTable::at_point(obj, w0)?;
    rec.charge_full();
    let mut w = w0.to_vec();
    let mut g = vec![0.0; w.len()];
    let mut step = 0.0;
    let mut k = 0usize;
    let termination = loop {
        let limit = rec.check_limits(k);
        if limit.is_some() || rec.should_log(k) {
            let (f, gn) = rec.observe(k, &w, step)?;
            if let Some(term) = rec.check(k, f, gn, true) {
                break term;
            }
            if !f.is_finite() {
                break Termination::Stalled("objective is not finite".into());
            }
        }

        let j = sampler.index();
        g.iter_mut().for_each(|v| *v = 0.0);
        obj.loss_gradient_sum(&w, Samples::Batch(&[j]), &mut g)?;
        rec.charge(1);
        let mut dir: Vec<f64> = g
            .iter()
            .zip(table.row(j))
            .zip(table.mean())
            .map(|((gi, ti), mi)| (gi - ti) + mi)
            .collect();
        reg.add_gradient(&w, &mut dir);
        table.replace(j, &g);
        axpy(-opts.alpha, &dir, &mut w);
        step = opts.alpha * norm(&dir);
        k += 1;
    };
    rec.finish(w, termination, Diagnostics::default())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicBatchOptions {
    pub alpha: f64,
    pub initial_batch: usize,
    /// Batch growth factor per epoch, `> 1`.
    pub growth: f64,
    /// SGD steps taken with each epoch's batch size.
    pub steps_per_epoch: usize,
    pub seed: u64,
    pub sampling: SamplingMode,
}

impl DynamicBatchOptions {
    pub fn new(alpha: f64, initial_batch: usize, growth: f64, seed: u64) -> Self {
        DynamicBatchOptions {
            alpha,
            initial_batch,
            growth,
            steps_per_epoch: 10,
            seed,
            sampling: SamplingMode::WithReplacement,
        }
    }
}

/// Batch size `min(n, ⌈s₀ γ^e⌉)` for epochs `e = 0, …, epochs − 1`.
pub fn dynamic_batch_sizes(initial: usize, growth: f64, n: usize, epochs: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(epochs);
    let mut size = initial as f64;
    for _ in 0..epochs {
        out.push(if size >= n as f64 { n } else { (size.ceil() as usize).min(n) });
        size *= growth;
    }
    out
}

/// SGD whose batch grows geometrically per epoch. Row `e` describes the
/// iterate after `e` epochs; `max_iter` bounds the number of epochs.
pub fn dynamic_batch_sgd<O: Objective + ?Sized>(
    obj: &O,
    w0: &[f64],
    opts: DynamicBatchOptions,
    control: &RunControl,
) -> Result<RunResult> {
    validate_vr(obj, w0, opts.alpha)?;
    if !(opts.growth > 1.0 && opts.growth.is_finite()) {
        return Err(Error::invalid(format!("batch growth {} must exceed 1", opts.growth)));
    }
    if opts.initial_batch == 0 || opts.steps_per_epoch == 0 {
        return Err(Error::invalid("initial batch and steps per epoch must be at least 1"));
    }
    let n = obj.num_samples();
    let mut rec = Recorder::new(obj, control);
    let mut sampler = BatchSampler::new(n, opts.seed, opts.sampling);
    let mut diag = Diagnostics::default();
    let mut batch = Vec::new();
    let mut w = w0.to_vec();
    let mut size = opts.initial_batch as f64;
    let mut step = 0.0;
    let mut e = 0usize;
    let termination = loop {
        let (f, _) = rec.observe(e, &w, step)?;
        if let Some(term) = rec.check(e, f, f64::INFINITY, false) {
            break term;
        }
        if !f.is_finite() {
            break Termination::Stalled("objective is not finite".into());
        }
        let s = if size >= n as f64 { n } else { (size.ceil() as usize).min(n) };
        diag.sample_sizes.push(s);
        let start = w.clone();
        for _ in 0..opts.steps_per_epoch {
            sampler.fill(s, &mut batch);
            let g = obj.minibatch_gradient(&w, &batch)?;
            rec.charge(batch.len());
            axpy(-opts.alpha, &g, &mut w);
        }
        step = norm(&sub(&w, &start));
        size *= opts.growth;
        e += 1;
    };
    rec.finish(w, termination, diag)
}
