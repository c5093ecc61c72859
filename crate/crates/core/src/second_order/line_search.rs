use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};
use crate::problems::Objective;

/// Relative resolution below which objective differences are not trusted.
const NOISE_FLOOR: f64 = 1e-12;

/// Strong-Wolfe line-search parameters, `0 < c1 < c2 < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WolfeParams {
    pub c1: f64,
    pub c2: f64,
    pub alpha_init: f64,
    pub alpha_max: f64,
    /// Budget of function-and-gradient probes.
    pub max_evals: usize,
}

impl Default for WolfeParams {
    fn default() -> Self {
        WolfeParams {
            c1: 1e-4,
            c2: 0.9,
            alpha_init: 1.0,
            alpha_max: 1e10,
            max_evals: 50,
        }
    }
}

impl WolfeParams {
    pub fn validate(self) -> Result<Self> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::invalid(format!("Wolfe constants need 0 < c1 < c2 < 1, got {} and {}", self.c1, self.c2)));
        }
        if !(self.alpha_init > 0.0 && self.alpha_max >= self.alpha_init) || self.max_evals == 0 {
            return Err(Error::invalid("line search needs 0 < alpha_init <= alpha_max and a positive budget"));
        }
        Ok(self)
    }
}

/// Accepted step with the objective and gradient already evaluated there.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub f: f64,
    pub g: Vec<f64>,
    /// Number of function-and-gradient probes used.
    pub evals: usize,
}

struct Probe {
    alpha: f64,
    f: f64,
    dg: f64,
    g: Vec<f64>,
}

struct Search<'a, O: Objective + ?Sized> {
    obj: &'a O,
    w: &'a [f64],
    d: &'a [f64],
    f0: f64,
    dg0: f64,
    params: WolfeParams,
    evals: usize,
}

impl<O: Objective + ?Sized> Search<'_, O> {
    fn probe(&mut self, alpha: f64) -> Result<Probe> {
        if self.evals >= self.params.max_evals {
            return Err(Error::LineSearch(format!("no Wolfe step within {} probes", self.params.max_evals)));
        }
        self.evals += 1;
        let mut x = self.w.to_vec();
        axpy(alpha, self.d, &mut x);
        let f = self.obj.objective_value(&x)?;
        let g = self.obj.objective_gradient(&x)?;
        let dg = dot(&g, self.d);
        Ok(Probe { alpha, f, dg, g })
    }

    fn armijo(&self, p: &Probe) -> bool {
        p.f <= self.f0 + self.params.c1 * p.alpha * self.dg0
    }

    fn curvature(&self, p: &Probe) -> bool {
        p.dg.abs() <= -self.params.c2 * self.dg0
    }

    /// Strong Wolfe, with sufficient decrease relaxed to `f ≤ f0 + ε|f0|`
    /// when the required decrease `α|∇Fᵀd|` is itself below `ε|f0|`.
    fn acceptable(&self, p: &Probe) -> bool {
        let floor = NOISE_FLOOR * self.f0.abs();
        let unresolvable = -self.dg0 * p.alpha <= floor && p.f <= self.f0 + floor;
        p.f.is_finite() && self.curvature(p) && (self.armijo(p) || unresolvable)
    }

    fn done(&self, p: Probe) -> LineSearchOutcome {
        LineSearchOutcome {
            alpha: p.alpha,
            f: p.f,
            g: p.g,
            evals: self.evals,
        }
    }

    fn run(mut self) -> Result<LineSearchOutcome> {
        let mut prev = Probe {
            alpha: 0.0,
            f: self.f0,
            dg: self.dg0,
            g: Vec::new(),
        };
        let mut alpha = self.params.alpha_init;
        let mut first = true;
        loop {
            let cur = self.probe(alpha)?;
            if self.acceptable(&cur) {
                return Ok(self.done(cur));
            }
            if !cur.f.is_finite() || !self.armijo(&cur) || (!first && cur.f >= prev.f) {
                return self.zoom(prev, cur);
            }
            if cur.dg >= 0.0 {
                return self.zoom(cur, prev);
            }
            if alpha >= self.params.alpha_max {
                return Err(Error::LineSearch("step reached alpha_max without satisfying Wolfe".into()));
            }
            alpha = (2.0 * alpha).min(self.params.alpha_max);
            prev = cur;
            first = false;
        }
    }

    /// Shrinks the bracket between `lo` (Armijo-satisfying, lower value)
    /// and `hi` until a strong-Wolfe point is found.
    fn zoom(mut self, mut lo: Probe, mut hi: Probe) -> Result<LineSearchOutcome> {
        loop {
            let width = (hi.alpha - lo.alpha).abs();
            if width <= 1e-16 * lo.alpha.abs().max(hi.alpha.abs()).max(f64::MIN_POSITIVE) {
                return Err(Error::LineSearch("bracket collapsed".into()));
            }
            let alpha = interpolate(&lo, &hi);
            let cur = self.probe(alpha)?;
            if self.acceptable(&cur) {
                return Ok(self.done(cur));
            }
            if !cur.f.is_finite() || !self.armijo(&cur) || cur.f >= lo.f {
                hi = cur;
            } else {
                if cur.dg * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = std::mem::replace(&mut lo, cur);
                } else {
                    lo = cur;
                }
            }
        }
    }
}

/// Cubic interpolation minimizer, safeguarded to the inner 80% of the bracket.
fn interpolate(lo: &Probe, hi: &Probe) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let (left, right) = (a.min(b), a.max(b));
    let margin = 0.1 * (right - left);
    let mid = 0.5 * (a + b);
    if !hi.f.is_finite() || !lo.f.is_finite() {
        return mid;
    }
    let d1 = lo.dg + hi.dg - 3.0 * (lo.f - hi.f) / (a - b);
    let disc = d1 * d1 - lo.dg * hi.dg;
    if !(disc >= 0.0) {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * ((hi.dg + d2 - d1) / (hi.dg - lo.dg + 2.0 * d2));
    if t.is_finite() && t >= left + margin && t <= right - margin {
        t
    } else {
        mid
    }
}

/// Strong-Wolfe line search along a descent direction `d`, with `f0 = F(w)`
/// and `g0 = ∇F(w)` supplied by the caller.
pub fn wolfe_search<O: Objective + ?Sized>(
    obj: &O,
    w: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    params: WolfeParams,
) -> Result<LineSearchOutcome> {
    let params = params.validate()?;
    let dg0 = dot(g0, d);
    if !(dg0 < 0.0) {
        return Err(Error::invalid(format!("line search direction is not a descent direction (gᵀd = {dg0})")));
    }
    Search {
        obj,
        w,
        d,
        f0,
        dg0,
        params,
        evals: 0,
    }
    .run()
}

/// Step length satisfying both strong-Wolfe inequalities along `d`.
pub fn wolfe_line_search<O: Objective + ?Sized>(
    obj: &O,
    w: &[f64],
    d: &[f64],
    c1: f64,
    c2: f64,
    alpha_init: f64,
) -> Result<f64> {
    let f0 = obj.objective_value(w)?;
    let g0 = obj.objective_gradient(w)?;
    let params = WolfeParams {
        c1,
        c2,
        alpha_init,
        ..WolfeParams::default()
    };
    Ok(wolfe_search(obj, w, f0, &g0, d, params)?.alpha)
}
