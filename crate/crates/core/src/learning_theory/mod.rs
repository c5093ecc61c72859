//! Affine separability, shattering, 0-1 error and the empirical
//! generalization gap at desk scale.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, solve_dense, Matrix};
use crate::problems::{Activation, Dataset, Loss, Mlp, Model, Objective, Problem, Regularizer};
use crate::run::RunControl;
use crate::second_order::{bfgs, BfgsOptions};


pub const MAX_POINTS: usize = 12;
pub const MAX_DIM: usize = 3;

/// Distinct points of a common dimension with `±1` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoints {
    points: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

impl LabeledPoints {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::Shape {
                expected: points.len(),
                found: labels.len(),
            });
        }
        check_points(&points)?;
        if let Some(bad) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
            return Err(Error::invalid(format!("label {bad} is not +1 or -1")));
        }
        Ok(LabeledPoints { points, labels })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

fn check_points(points: &[Vec<f64>]) -> Result<()> {
    let Some(first) = points.first() else {
        return Ok(());
    };
    let d = first.len();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::Shape {
            expected: d,
            found: p.len(),
        });
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("points must be finite"));
    }
    for (i, p) in points.iter().enumerate() {
        if points[..i].contains(p) {
            return Err(Error::invalid(format!("point {i} duplicates an earlier point")));
        }
    }
    Ok(())
}

fn check_scale(count: usize, d: usize) -> Result<()> {
    if count > MAX_POINTS || d > MAX_DIM {
        return Err(Error::invalid(format!(
            "separability search is limited to {MAX_POINTS} points in at most {MAX_DIM} dimensions, got {count} in {d}"
        )));
    }
    Ok(())
}

/// Affine rule `x ↦ w₀ + w₁ᵀx`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSeparator {
    pub bias: f64,
    pub weights: Vec<f64>,
}

impl AffineSeparator {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.bias + dot(&self.weights, x)
    }

    /// Smallest `yᵢ (w₀ + w₁ᵀxᵢ)`.
    pub fn min_margin(&self, instance: &LabeledPoints) -> f64 {
        instance
            .points
            .iter()
            .zip(&instance.labels)
            .map(|(x, y)| y * self.value(x))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Candidate from a hard-margin support set `S`: solves
/// `yⱼ(w·xⱼ + b) = 1` for `j ∈ S` with `w = Σ αᵢ yᵢ xᵢ` and `Σ αᵢ yᵢ = 0`.
fn support_candidate(instance: &LabeledPoints, support: &[usize]) -> Option<AffineSeparator> {
    let k = support.len();
    let (x, y) = (&instance.points, &instance.labels);
    let mut a = Matrix::zeros(k + 1, k + 1);
    let mut rhs = vec![1.0; k + 1];
    for (r, &j) in support.iter().enumerate() {
        for (c, &i) in support.iter().enumerate() {
            a.set(r, c, y[i] * y[j] * dot(&x[i], &x[j]));
        }
        a.set(r, k, y[j]);
        a.set(k, r, y[j]);
    }
    rhs[k] = 0.0;
    let sol = solve_dense(&a, &rhs)?;
    let mut weights = vec![0.0; instance.dim()];
    for (c, &i) in support.iter().enumerate() {
        for (w, xi) in weights.iter_mut().zip(&x[i]) {
            *w += sol[c] * y[i] * xi;
        }
    }
    Some(AffineSeparator { bias: sol[k], weights })
}

fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if cur.len() == k {
        return visit(cur);
    }
    for i in start..n {
        cur.push(i);
        if subsets(n, k, i + 1, cur, visit) {
            return true;
        }
        cur.pop();
    }
    false
}

fn perceptron(instance: &LabeledPoints, epochs: usize) -> AffineSeparator {
    let mut sep = AffineSeparator {
        bias: 0.0,
        weights: vec![0.0; instance.dim()],
    };
    for _ in 0..epochs {
        let mut clean = true;
        for (x, y) in instance.points.iter().zip(&instance.labels) {
            if y * sep.value(x) <= 0.0 {
                sep.bias += y;
                for (w, xi) in sep.weights.iter_mut().zip(x) {
                    *w += y * xi;
                }
                clean = false;
            }
        }
        if clean {
            break;
        }
    }
    sep
}

/// A strict affine separator (every margin `> 0`) if one exists.
///
/// Candidates come from hard-margin support sets of up to `d + 1` points,
/// with a capped perceptron as fallback; each is verified by a direct
/// margin check before it is returned.
pub fn separable_by_affine(instance: &LabeledPoints) -> Result<Option<AffineSeparator>> {
    let n = instance.len();
    let d = instance.dim();
    check_scale(n, d)?;
    if n == 0 {
        return Ok(Some(AffineSeparator {
            bias: 1.0,
            weights: vec![0.0; d],
        }));
    }
    let mut found = None;
    for k in 1..=(d + 1).min(n) {
        let mut visit = |support: &[usize]| {
            if let Some(sep) = support_candidate(instance, support) {
                if sep.min_margin(instance) > 0.0 {
                    found = Some(sep);
                    return true;
                }
            }
            false
        };
        if subsets(n, k, 0, &mut Vec::with_capacity(k), &mut visit) {
            return Ok(found);
        }
    }
    let sep = perceptron(instance, 10_000);
    Ok((sep.min_margin(instance) > 0.0).then_some(sep))
}

/// Outcome of enumerating every `±1` labeling of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct ShatterReport {
    pub shattered: bool,
    pub labelings: usize,
    pub separable: usize,
    /// Labelings with no strict affine separator, in enumeration order.
    pub failing: Vec<Vec<f64>>,
}

/// Labeling `mask` gives point `i` label `+1` when bit `i` is set.
pub fn labeling(mask: u32, count: usize) -> Vec<f64> {
    (0..count).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect()
}

pub fn shatter_check(points: &[Vec<f64>]) -> Result<ShatterReport> {
    check_points(points)?;
    let d = points.first().map_or(0, Vec::len);
    check_scale(points.len(), d)?;
    let total = 1usize << points.len();
    let mut failing = Vec::new();
    for mask in 0..total as u32 {
        let labels = labeling(mask, points.len());
        let instance = LabeledPoints {
            points: points.to_vec(),
            labels: labels.clone(),
        };
        if separable_by_affine(&instance)?.is_none() {
            failing.push(labels);
        }
    }
    Ok(ShatterReport {
        shattered: failing.is_empty(),
        labelings: total,
        separable: total - failing.len(),
        failing,
    })
}

/// Fraction of samples with `yᵢ p(w, xᵢ) ≤ 0`.
pub fn zero_one_error(problem: &Problem, w: &[f64], data: &Dataset) -> Result<f64> {
    problem.mean_loss_on(w, data, Loss::ZeroOne)
}

/// `(|train loss − test loss|, |train 0-1 error − test 0-1 error|)` using
/// the problem's own loss.
pub fn generalization_gap(problem: &Problem, w: &[f64], train: &Dataset, test: &Dataset) -> Result<(f64, f64)> {
    if train.d() != test.d() {
        return Err(Error::Shape {
            expected: train.d(),
            found: test.d(),
        });
    }
    let loss = problem.loss();
    let loss_gap = (problem.mean_loss_on(w, train, loss)? - problem.mean_loss_on(w, test, loss)?).abs();
    let err_gap = (zero_one_error(problem, w, train)? - zero_one_error(problem, w, test)?).abs();
    Ok((loss_gap, err_gap))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverfitReport {
    pub train_error: f64,
    pub test_error: f64,
    pub loss_gap: f64,
    pub error_gap: f64,
}

/// Fits a `[2, 16, 1]` tanh network to 40 points whose labels were shuffled
/// away from a linear rule, then scores it on 400 fresh points labeled the
/// same way.
pub fn overfit_demo(seed: u64) -> Result<OverfitReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |n: usize, rng: &mut ChaCha8Rng| -> Result<Dataset> {
        let rows: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let mut labels: Vec<f64> = rows.iter().map(|r| if r[0] + r[1] > 0.0 { 1.0 } else { -1.0 }).collect();
        labels.shuffle(rng);
        Dataset::from_rows(&rows, labels)
    };
    let train = draw(40, &mut rng)?;
    let test = draw(400, &mut rng)?;
    let net = Mlp::with_hidden(vec![2, 16, 1], Activation::Tanh, Activation::Identity)?;
    let problem = Problem::new(Model::Mlp(net), Loss::Logistic, Regularizer::None, train.clone())?;
    let w0 = problem.initial_point(&mut rng);
    let control = RunControl::iterations(2000).with_grad_tol(1e-8);
    let run = bfgs(&problem, &w0, BfgsOptions::default(), &control)?;
    let w = run.final_w.as_slice();
    debug_assert_eq!(w.len(), problem.dim());
    let (loss_gap, error_gap) = generalization_gap(&problem, w, &train, &test)?;
    Ok(OverfitReport {
        train_error: zero_one_error(&problem, w, &train)?,
        test_error: zero_one_error(&problem, w, &test)?,
        loss_gap,
        error_gap,
    })
}
