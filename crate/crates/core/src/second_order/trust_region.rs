use super::cg::steihaug_cg;
use super::newton::Curvature;
use crate::error::{Error, Result};
use crate::linalg::{add, norm};
use crate::problems::{Objective, Samples};
use crate::run::{Diagnostics, Recorder, RunControl, RunResult, Termination};
use crate::sampling::{BatchSampler, SamplingMode};

/// Radius and acceptance rules. Invariants: `0 < η₁ < η₂ < 1`,
/// `0 < shrink < 1 < grow`, `Δ_min ≤ Δ ≤ Δ_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRegionState {
    pub radius: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub shrink: f64,
    pub grow: f64,
    pub radius_min: f64,
    pub radius_max: f64,
}

impl Default for TrustRegionState {
    fn default() -> Self {
        TrustRegionState {
            radius: 1.0,
            eta1: 0.1,
            eta2: 0.75,
            shrink: 0.5,
            grow: 2.0,
            radius_min: 1e-12,
            radius_max: 1e6,
        }
    }
}

impl TrustRegionState {
    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn validate(self) -> Result<Self> {
        if !(0.0 < self.eta1 && self.eta1 < self.eta2 && self.eta2 < 1.0) {
            return Err(Error::invalid(format!("acceptance thresholds need 0 < eta1 < eta2 < 1, got {} and {}", self.eta1, self.eta2)));
        }
        if !(0.0 < self.shrink && self.shrink < 1.0 && self.grow > 1.0) {
            return Err(Error::invalid("radius factors need 0 < shrink < 1 < grow"));
        }
        if !(0.0 < self.radius_min && self.radius_min <= self.radius && self.radius <= self.radius_max) {
            return Err(Error::invalid(format!(
                "radius {} outside [{}, {}]",
                self.radius, self.radius_min, self.radius_max
            )));
        }
        Ok(self)
    }

    /// Applies the ratio test and returns whether the step is accepted.
    pub fn update(&mut self, rho: f64, boundary_hit: bool) -> bool {
        if rho < self.eta1 {
            self.radius *= self.shrink;
        } else if rho >= self.eta2 && boundary_hit {
            self.radius = (self.radius * self.grow).min(self.radius_max);
        }
        rho >= self.eta1
    }
}

/// Curvature samples per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CurvatureSource {
    #[default]
    Exact,
    /// `|S_k| = min(n, ⌈c / Δ_k²⌉)`, redrawn every iteration.
    Subsampled { c: f64 },
}

/// `min(n, ⌈c / Δ²⌉)`, at least one.
pub fn radius_sample_size(c: f64, radius: f64, n: usize) -> usize {
    let s = (c / (radius * radius)).ceil();
    if s.is_finite() && s < n as f64 {
        (s as usize).max(1)
    } else {
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRegionOptions {
    pub state: TrustRegionState,
    pub source: CurvatureSource,
    pub curvature: Curvature,
    /// Relative residual at which the inner CG stops.
    pub cg_tol: f64,
    pub max_cg: usize,
    pub seed: u64,
}

impl Default for TrustRegionOptions {
    fn default() -> Self {
        TrustRegionOptions {
            state: TrustRegionState::default(),
            source: CurvatureSource::Exact,
            curvature: Curvature::Hessian,
            cg_tol: 1e-6,
            max_cg: 50,
            seed: 0,
        }
    }
}

/// Trust-region Newton with Steihaug CG on `m(s) = F + gᵀs + ½ sᵀB s`,
/// exact gradients and optionally subsampled curvature.
pub fn trust_region<O: Objective + ?Sized>(
    obj: &O,
    w0: &[f64],
    opts: TrustRegionOptions,
    control: &RunControl,
) -> Result<RunResult> {
    obj.check_point(w0)?;
    if !obj.regularizer().is_smooth() {
        return Err(Error::invalid("trust-region Newton needs a smooth objective"));
    }
    let mut state = opts.state.validate()?;
    if let CurvatureSource::Subsampled { c } = opts.source {
        if !(c > 0.0) {
            return Err(Error::invalid(format!("sampling constant must be positive, got {c}")));
        }
    }
    if !(opts.cg_tol > 0.0) || opts.max_cg == 0 {
        return Err(Error::invalid("trust-region CG needs a positive tolerance and budget"));
    }
    let n = obj.num_samples();
    let gn = opts.curvature.is_gauss_newton();
    let mut sampler = BatchSampler::new(n, opts.seed, SamplingMode::WithReplacement);
    let mut batch = Vec::new();
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
        if state.radius < state.radius_min {
            break Termination::Stalled(format!("trust radius {:e} fell below the minimum", state.radius));
        }

        let size = match opts.source {
            CurvatureSource::Exact => n,
            CurvatureSource::Subsampled { c } => radius_sample_size(c, state.radius, n),
        };
        let samples = if size == n {
            Samples::All
        } else {
            sampler.fill(size, &mut batch);
            Samples::Batch(&batch)
        };
        diag.sample_sizes.push(size);
        diag.radii.push(state.radius);
        let mut products = 0usize;
        let sub = steihaug_cg(
            |v| {
                products += 1;
                obj.curvature_product(&w, v, samples, gn)
            },
            &g,
            state.radius,
            opts.cg_tol,
            opts.max_cg,
        )?;
        for _ in 0..products {
            rec.charge_hvp(size);
        }
        if sub.negative_curvature {
            diag.negative_curvature_events += 1;
        }

        let trial = add(&w, &sub.step);
        let f_trial = obj.objective_value(&trial)?;
        let actual = f - f_trial;
        let rho = if sub.model_decrease > 0.0 { actual / sub.model_decrease } else { 0.0 };
        diag.ratios.push(rho);
        if state.update(rho, sub.boundary_hit) {
            step = norm(&sub.step);
            w = trial;
            f = f_trial;
            g = obj.objective_gradient(&w)?;
            rec.charge_full();
        } else {
            step = 0.0;
        }
        k += 1;
    };
    rec.finish(w, termination, diag)
}
