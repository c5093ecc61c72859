use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::linalg::Matrix;
use crate::problems::{Dataset, Problem, Quadratic, Samples, ShapeMap};

fn random_logistic(seed: u64, n: usize, d: usize, reg: Regularizer) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_true: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let m: f64 = row.iter().zip(&w_true).map(|(a, b)| a * b).sum();
        let flip = rng.random_bool(0.1);
        y.push(if (m >= 0.0) != flip { 1.0 } else { -1.0 });
        x.extend(row);
    }
    Problem::logistic(Dataset::binary(Matrix::from_vec(n, d, x).unwrap(), y).unwrap(), reg).unwrap()
}

/// `F(w) = λ‖w‖₁` with no loss term.
struct PureL1 {
    shape: ShapeMap,
    lambda: f64,
}

impl Objective for PureL1 {
    fn dim(&self) -> usize {
        self.shape.total()
    }
    fn shape(&self) -> &ShapeMap {
        &self.shape
    }
    fn num_samples(&self) -> usize {
        1
    }
    fn regularizer(&self) -> Regularizer {
        Regularizer::L1(self.lambda)
    }
    fn loss_sum(&self, _: &[f64], _: Samples<'_>) -> Result<f64> {
        Ok(0.0)
    }
    fn loss_gradient_sum(&self, _: &[f64], _: Samples<'_>, _: &mut [f64]) -> Result<()> {
        Ok(())
    }
    fn loss_hessian_vector_sum(&self, _: &[f64], _: &[f64], _: Samples<'_>, _: &mut [f64]) -> Result<()> {
        Ok(())
    }
}

fn plain(alpha: f64) -> GdOptions {
    GdOptions {
        schedule: StepSchedule::Constant(alpha),
        variant: GdVariant::Plain,
    }
}

#[test]
fn step_size_examples() {
    assert_eq!(StepSchedule::Constant(0.1).step_size(1_000_000), 0.1);
    let h = StepSchedule::Harmonic { alpha0: 1.0, k0: 1.0 };
    assert_eq!(h.step_size(0), 1.0);
    assert_eq!(h.step_size(3), 0.25);
}

#[test]
fn harmonic_schedule_satisfies_robbins_monro_witness() {
    let h = StepSchedule::Harmonic { alpha0: 1.0, k0: 1.0 };
    let mut sq = 0.0;
    for k in 0..1_000_000u64 {
        let a = h.step_size(k);
        sq += a * a;
        assert!(sq < 2.0);
    }
    let mut sum = 0.0;
    let mut k = 0u64;
    while sum <= 20.0 {
        sum += h.step_size(k);
        k += 1;
    }
    assert!(k > 1_000_000);
}

#[test]
fn invalid_schedules_are_rejected() {
    assert!(StepSchedule::Constant(0.0).validate().is_err());
    assert!(StepSchedule::Harmonic { alpha0: 1.0, k0: -1.0 }.validate().is_err());
    let p = random_logistic(1, 10, 2, Regularizer::None);
    let e = gradient_descent(&p, &[0.0, 0.0], plain(-1.0), &RunControl::iterations(3)).unwrap_err();
    assert!(e.is_validation());
}

#[test]
fn unit_curvature_step_lands_on_minimizer() {
    let a = vec![1.5, -2.0, 0.25];
    let q = Quadratic::new(Matrix::identity(3), a.clone()).unwrap();
    let r = gradient_descent(&q, &[0.0; 3], plain(1.0), &RunControl::iterations(1)).unwrap();
    assert_eq!(r.final_w.as_slice(), a.as_slice());
}

#[test]
fn ista_on_pure_l1_is_one_prox_step() {
    let obj = PureL1 {
        shape: ShapeMap::linear(4),
        lambda: 0.7,
    };
    let v = [1.2, -0.3, 0.0, -2.5];
    let alpha = 0.5;
    let opts = GdOptions {
        schedule: StepSchedule::Constant(alpha),
        variant: GdVariant::Ista,
    };
    let r = gradient_descent(&obj, &v, opts, &RunControl::iterations(1)).unwrap();
    let expect = prox_step(Regularizer::L1(0.7), &v, alpha * 1.0).unwrap();
    assert_eq!(r.final_w.as_slice(), expect.as_slice());
}

#[test]
fn proximal_variants_reject_l2() {
    let p = random_logistic(2, 10, 2, Regularizer::L2(0.1));
    let opts = GdOptions {
        schedule: StepSchedule::Constant(0.1),
        variant: GdVariant::Fista,
    };
    assert!(gradient_descent(&p, &[0.0, 0.0], opts, &RunControl::iterations(2)).is_err());
    let l1 = random_logistic(2, 10, 2, Regularizer::L1(0.1));
    assert!(gradient_descent(&l1, &[0.0, 0.0], plain(0.1), &RunControl::iterations(2)).is_err());
}

#[test]
fn gd_is_monotone_with_lipschitz_step() {
    let p = random_logistic(3, 120, 6, Regularizer::L2(0.05));
    let alpha = 1.0 / p.lipschitz_bound();
    let r = gradient_descent(&p, &[0.0; 6], plain(alpha), &RunControl::iterations(300)).unwrap();
    assert_eq!(r.trace.len(), 301);
    for pair in r.trace.windows(2) {
        assert!(pair[1].fval <= pair[0].fval + 1e-12);
        assert!(pair[1].eff_grad_evals > pair[0].eff_grad_evals);
    }
    assert_eq!(r.trace[0].eff_grad_evals, 1.0);
    assert_eq!(r.termination, Termination::MaxIter);
}

#[test]
fn gd_trace_follows_the_iteration_formula() {
    let p = random_logistic(4, 30, 3, Regularizer::L2(0.1));
    let alpha = 0.3;
    let r = gradient_descent(&p, &[0.1, -0.2, 0.3], plain(alpha), &RunControl::iterations(5)).unwrap();
    let mut w = vec![0.1, -0.2, 0.3];
    for rec in &r.trace {
        assert_eq!(rec.fval, p.objective_value(&w).unwrap());
        let g = p.objective_gradient(&w).unwrap();
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= alpha * gi;
        }
    }
}

#[test]
fn gd_stops_on_gradient_tolerance() {
    let p = random_logistic(5, 50, 3, Regularizer::L2(0.1));
    let control = RunControl::iterations(10_000).with_grad_tol(1e-6);
    let r = gradient_descent(&p, &[0.0; 3], plain(1.0 / p.lipschitz_bound()), &control).unwrap();
    assert_eq!(r.termination, Termination::GradTol);
    assert!(r.final_record().gnorm <= 1e-6);
}

#[test]
fn nesterov_beats_plain_on_ill_conditioned_quadratic() {
    let a = Matrix::diagonal(&[1.0, 0.01]);
    let q = Quadratic::new(a, vec![1.0, 1.0]).unwrap();
    let control = RunControl::iterations(200);
    let p = gradient_descent(&q, &[0.0, 0.0], plain(1.0), &control).unwrap();
    let acc = GdOptions {
        schedule: StepSchedule::Constant(1.0),
        variant: GdVariant::Nesterov,
    };
    let n = gradient_descent(&q, &[0.0, 0.0], acc, &control).unwrap();
    let f_star = -0.5 * (1.0 + 100.0);
    assert!(n.final_record().fval - f_star < 0.1 * (p.final_record().fval - f_star));
}

#[test]
fn fista_is_no_worse_than_ista_at_iteration_200() {
    let p = random_logistic(6, 200, 10, Regularizer::L1(0.02));
    let alpha = 1.0 / p.lipschitz_bound();
    let control = RunControl::iterations(200);
    let run = |variant| {
        let opts = GdOptions {
            schedule: StepSchedule::Constant(alpha),
            variant,
        };
        gradient_descent(&p, &[0.0; 10], opts, &control).unwrap()
    };
    let ista = run(GdVariant::Ista);
    let fista = run(GdVariant::Fista);
    assert!(fista.final_record().fval <= ista.final_record().fval + 1e-12);
    assert!(fista.final_w.contains(&0.0), "l1 prox should produce exact zeros");
}

#[test]
fn full_batch_sgd_reproduces_gd() {
    let p = random_logistic(7, 40, 4, Regularizer::L2(0.01));
    let alpha = 0.5;
    let control = RunControl::iterations(50);
    let gd = gradient_descent(&p, &[0.0; 4], plain(alpha), &control).unwrap();
    let s = sgd(&p, &[0.0; 4], SgdOptions::new(StepSchedule::Constant(alpha), 40, 11), &control).unwrap();
    assert_eq!(gd.trace.len(), s.trace.len());
    for (a, b) in gd.trace.iter().zip(&s.trace) {
        assert!((a.fval - b.fval).abs() <= 1e-14);
    }
    for (a, b) in gd.final_w.iter().zip(s.final_w.iter()) {
        assert!((a - b).abs() <= 1e-14);
    }
}

#[test]
fn momentum_on_zero_field_keeps_w_frozen() {
    let x = Matrix::zeros(5, 3);
    let data = Dataset::binary(x, vec![1.0, -1.0, 1.0, 1.0, -1.0]).unwrap();
    let p = Problem::logistic(data, Regularizer::None).unwrap();
    let w0 = [0.3, -1.0, 2.0];
    let opts = SgdOptions::new(StepSchedule::Constant(0.5), 2, 3).with_momentum(0.9);
    let r = sgd(&p, &w0, opts, &RunControl::iterations(100)).unwrap();
    assert_eq!(r.final_w.as_slice(), &w0);
}

#[test]
fn momentum_matches_the_two_line_recursion() {
    let p = random_logistic(8, 25, 3, Regularizer::L2(0.02));
    let (alpha, eta, s) = (0.2, 0.6, 4);
    let opts = SgdOptions::new(StepSchedule::Constant(alpha), s, 5).with_momentum(eta);
    let r = sgd(&p, &[0.0; 3], opts, &RunControl::iterations(30)).unwrap();
    let mut sampler = BatchSampler::new(25, 5, SamplingMode::WithReplacement);
    let mut w = vec![0.0; 3];
    let mut v = [0.0; 3];
    for _ in 0..30 {
        let b = sampler.batch(s);
        let g = p.minibatch_gradient(&w, &b).unwrap();
        for i in 0..3 {
            v[i] = eta * v[i] + (1.0 - eta) * g[i];
            w[i] -= alpha * v[i];
        }
    }
    assert_eq!(r.final_w.as_slice(), w.as_slice());
}

#[test]
fn sgd_is_deterministic_under_seed() {
    let p = random_logistic(9, 60, 3, Regularizer::L2(0.01));
    let opts = SgdOptions::new(StepSchedule::Harmonic { alpha0: 0.5, k0: 10.0 }, 3, 42).with_momentum(0.5);
    let control = RunControl::iterations(500).with_log_every(25);
    let a = sgd(&p, &[0.0; 3], opts, &control).unwrap();
    let b = sgd(&p, &[0.0; 3], opts, &control).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.trace.len(), 21);
    let c = sgd(&p, &[0.0; 3], SgdOptions { seed: 43, ..opts }, &control).unwrap();
    assert_ne!(a.trace, c.trace);
}

#[test]
fn sgd_rejects_bad_arguments() {
    let p = random_logistic(10, 10, 2, Regularizer::None);
    let control = RunControl::iterations(5);
    let sched = StepSchedule::Constant(0.1);
    assert!(sgd(&p, &[0.0; 2], SgdOptions::new(sched, 0, 1), &control).is_err());
    assert!(sgd(&p, &[0.0; 2], SgdOptions::new(sched, 11, 1), &control).is_err());
    assert!(sgd(&p, &[0.0; 2], SgdOptions::new(sched, 2, 1).with_momentum(1.0), &control).is_err());
}

#[test]
fn sgd_honours_epoch_budget() {
    let p = random_logistic(11, 100, 2, Regularizer::L2(0.1));
    let control = RunControl::iterations(usize::MAX).with_epochs(3.0).with_log_every(100);
    let r = sgd(&p, &[0.0; 2], SgdOptions::new(StepSchedule::Constant(0.1), 5, 1), &control).unwrap();
    assert_eq!(r.termination, Termination::Budget);
    assert_eq!(r.final_record().eff_grad_evals, 3.0);
    assert_eq!(r.iterations(), 60);
}
