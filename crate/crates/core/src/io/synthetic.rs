use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::problems::Dataset;

/// Generator families for binary classification data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    /// Unit-variance spherical classes centred at `±(margin/2) e₁`.
    TwoGaussians { margin: f64 },
    /// `x ~ N(0, I)`, `y = sign(w*ᵀx)` for a random `w*`, each label then
    /// flipped with probability `noise_rate`.
    GivenSeparator { noise_rate: f64 },
    /// As `GivenSeparator` with feature `j` scaled by a geometric sequence
    /// from `scale_max` down to `scale_min`, giving an ill-conditioned
    /// design.
    ScaledSeparator { noise_rate: f64, scale_max: f64, scale_min: f64 },
}

impl SyntheticKind {
    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::TwoGaussians { .. } => "two_gaussians",
            SyntheticKind::GivenSeparator { .. } => "given_separator",
            SyntheticKind::ScaledSeparator { .. } => "scaled_separator",
        }
    }

    pub fn validate(self) -> Result<Self> {
        let rate_ok = |r: f64| (0.0..=1.0).contains(&r);
        let ok = match self {
            SyntheticKind::TwoGaussians { margin } => margin.is_finite() && margin >= 0.0,
            SyntheticKind::GivenSeparator { noise_rate } => rate_ok(noise_rate),
            SyntheticKind::ScaledSeparator {
                noise_rate,
                scale_max,
                scale_min,
            } => rate_ok(noise_rate) && scale_min > 0.0 && scale_max >= scale_min && scale_max.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::invalid(format!("invalid parameters for generator {self}")))
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SyntheticKind::TwoGaussians { margin } => write!(f, "two_gaussians(margin={margin})"),
            SyntheticKind::GivenSeparator { noise_rate } => write!(f, "given_separator(noise_rate={noise_rate})"),
            SyntheticKind::ScaledSeparator {
                noise_rate,
                scale_max,
                scale_min,
            } => write!(f, "scaled_separator(noise_rate={noise_rate}, scale_max={scale_max}, scale_min={scale_min})"),
        }
    }
}

/// Parses a bare family name with default parameters.
impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_gaussians" => Ok(SyntheticKind::TwoGaussians { margin: 2.0 }),
            "given_separator" => Ok(SyntheticKind::GivenSeparator { noise_rate: 0.0 }),
            "scaled_separator" => Ok(SyntheticKind::ScaledSeparator {
                noise_rate: 0.0,
                scale_max: 1.0,
                scale_min: 0.1,
            }),
            other => Err(Error::invalid(format!("unknown generator `{other}`"))),
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn separator_data(rng: &mut ChaCha8Rng, n: usize, d: usize, noise_rate: f64, scales: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let w_star: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = scales.iter().map(|s| s * normal(rng)).collect();
        let mut label = if dot(&w_star, &row) >= 0.0 { 1.0 } else { -1.0 };
        if noise_rate > 0.0 && rng.random_bool(noise_rate) {
            label = -label;
        }
        x.extend(row);
        y.push(label);
    }
    (x, y)
}

/// Deterministic in `seed`.
pub fn gen_synthetic(kind: SyntheticKind, n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n < 2 || d < 1 {
        return Err(Error::invalid(format!("synthetic data needs n >= 2 and d >= 1, got n = {n}, d = {d}")));
    }
    let kind = kind.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, y) = match kind {
        SyntheticKind::TwoGaussians { margin } => {
            let mut x = Vec::with_capacity(n * d);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let label = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                for j in 0..d {
                    let mean = if j == 0 { 0.5 * margin * label } else { 0.0 };
                    x.push(mean + normal(&mut rng));
                }
                y.push(label);
            }
            (x, y)
        }
        SyntheticKind::GivenSeparator { noise_rate } => separator_data(&mut rng, n, d, noise_rate, &vec![1.0; d]),
        SyntheticKind::ScaledSeparator {
            noise_rate,
            scale_max,
            scale_min,
        } => {
            let ratio = if d > 1 { (scale_min / scale_max).powf(1.0 / (d - 1) as f64) } else { 1.0 };
            let scales: Vec<f64> = (0..d).map(|j| scale_max * ratio.powi(j as i32)).collect();
            separator_data(&mut rng, n, d, noise_rate, &scales)
        }
    };
    Dataset::binary(Matrix::from_vec(n, d, x)?, y)
}
