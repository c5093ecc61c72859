use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::error::{Error, Result};
use crate::first_order::StepSchedule;
use crate::linalg::{axpy, dot, max_abs_diff, norm, sub, Matrix};
use crate::problems::{
    Activation, Dataset, Loss, Mlp, Model, Objective, Problem, Quadratic, Regularizer, Samples, ShapeMap,
};
use crate::run::{RunControl, Termination};

fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_logistic(seed: u64, n: usize, d: usize, lambda: f64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_vec(&mut rng, n * d);
    let y = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let data = Dataset::binary(Matrix::from_vec(n, d, x).unwrap(), y).unwrap();
    Problem::logistic(data, Regularizer::L2(lambda)).unwrap()
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize, shift: f64) -> Matrix {
    let m = Matrix::from_vec(d, d, random_vec(rng, d * d)).unwrap();
    let mut a = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let v: f64 = (0..d).map(|k| m.get(k, i) * m.get(k, j)).sum();
            a.set(i, j, v + if i == j { shift } else { 0.0 });
        }
    }
    a
}

fn to_nalgebra(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

fn solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let lu = to_nalgebra(a).lu();
    lu.solve(&nalgebra::DVector::from_column_slice(b)).unwrap().as_slice().to_vec()
}

fn tiny_mlp() -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let rows: Vec<Vec<f64>> = (0..32).map(|_| random_vec(&mut rng, 2)).collect();
    let y = rows.iter().map(|r| if r[0] * r[1] > 0.0 { 1.0 } else { -1.0 }).collect();
    let data = Dataset::from_rows(&rows, y).unwrap();
    let net = Mlp::with_hidden(vec![2, 4, 1], Activation::Tanh, Activation::Identity).unwrap();
    Problem::new(Model::Mlp(net), Loss::Logistic, Regularizer::L2(1e-3), data).unwrap()
}

#[test]
fn inverse_update_hand_example() {
    let h = bfgs_update_inverse(&Matrix::identity(2), &[0.0, 1.0], &[0.0, 2.0]).unwrap();
    assert_eq!(h, Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.5]]).unwrap());
    assert_eq!(h.matvec(&[0.0, 2.0]), vec![0.0, 1.0]);
    let same = bfgs_update_inverse(&Matrix::identity(2), &[1.0, 0.0], &[1.0, 0.0]).unwrap();
    assert_eq!(same, Matrix::identity(2));
}

#[test]
fn inverse_update_rejects_nonpositive_curvature() {
    let err = bfgs_update_inverse(&Matrix::identity(2), &[1.0, 0.0], &[-1.0, 0.0]).unwrap_err();
    assert!(matches!(err, Error::Curvature { sy } if sy == -1.0));
    assert!(CurvaturePair::new(vec![1.0, 0.0], vec![0.0, 1.0]).is_err());
}

#[test]
fn inverse_update_is_rank_two_symmetric_secant_and_pd() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let d = 6;
        let a = random_spd(&mut rng, d, 0.5);
        let mut h = Matrix::identity(d);
        for _ in 0..8 {
            let s = random_vec(&mut rng, d);
            let y = a.matvec(&s);
            let next = bfgs_update_inverse(&h, &s, &y).unwrap();
            assert!(next.max_asymmetry() <= 1e-12);
            assert!(secant_residual(&next.matvec(&y), &s) <= 1e-10);
            let diff = to_nalgebra(&next) - to_nalgebra(&h);
            let sv = diff.singular_values();
            let mut sorted: Vec<f64> = sv.iter().copied().collect();
            sorted.sort_by(|x, y| y.total_cmp(x));
            assert!(sorted[2..].iter().all(|v| *v <= 1e-10 * sorted[0].max(1.0)), "{sorted:?}");
            for _ in 0..100 {
                let mut v = random_vec(&mut rng, d);
                let len = norm(&v);
                v.iter_mut().for_each(|x| *x /= len);
                assert!(next.quadratic_form(&v) > 0.0);
            }
            h = next;
        }
    }
}

#[test]
fn two_loop_matches_explicit_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let d = 5;
    let a = random_spd(&mut rng, d, 1.0);
    for scaling in [false, true] {
        let mut mem = LbfgsMemory::new(10).unwrap();
        if !scaling {
            mem = mem.without_scaling();
        }
        let mut pairs = Vec::new();
        for _ in 0..7 {
            let s = random_vec(&mut rng, d);
            let y = a.matvec(&s);
            pairs.push((s.clone(), y.clone()));
            mem.push(CurvaturePair::new(s, y).unwrap());
        }
        let gamma = mem.gamma();
        let mut h = Matrix::diagonal(&vec![gamma; d]);
        for (s, y) in &pairs {
            h = bfgs_update_inverse(&h, s, y).unwrap();
        }
        let g = random_vec(&mut rng, d);
        let explicit: Vec<f64> = h.matvec(&g).iter().map(|v| -v).collect();
        assert!(max_abs_diff(&mem.direction(&g), &explicit) <= 1e-10);
    }
}

#[test]
fn memory_evicts_oldest_pair() {
    let mut mem = LbfgsMemory::new(2).unwrap();
    for k in 1..=3 {
        mem.push(CurvaturePair::new(vec![k as f64], vec![1.0]).unwrap());
    }
    assert_eq!(mem.len(), 2);
    let s: Vec<f64> = mem.pairs().map(|p| p.s()[0]).collect();
    assert_eq!(s, vec![2.0, 3.0]);
    assert!(LbfgsMemory::new(0).is_err());
}

#[test]
fn wolfe_accepts_exact_minimizer_on_quadratic() {
    let q = Quadratic::new(Matrix::identity(2), vec![0.0; 2]).unwrap();
    let alpha = wolfe_line_search(&q, &[1.0, 0.0], &[-1.0, 0.0], 1e-4, 0.9, 1.0).unwrap();
    assert_eq!(alpha, 1.0);
    let err = wolfe_line_search(&q, &[1.0, 0.0], &[1.0, 0.0], 1e-4, 0.9, 1.0).unwrap_err();
    assert!(err.is_validation());
    assert!(wolfe_line_search(&q, &[1.0, 0.0], &[-1.0, 0.0], 0.5, 0.1, 1.0).is_err());
}

#[test]
fn wolfe_conditions_hold_post_hoc() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for trial in 0..100 {
        let p = random_logistic(1000 + trial, 40, 4, 0.01);
        let w = random_vec(&mut rng, 4);
        let g = p.objective_gradient(&w).unwrap();
        let mut d = random_vec(&mut rng, 4);
        if dot(&d, &g) >= 0.0 {
            d.iter_mut().for_each(|v| *v = -*v);
        }
        let alpha_init = 10f64.powf(rng.random_range(-2.0..2.0));
        let alpha = wolfe_line_search(&p, &w, &d, 1e-4, 0.9, alpha_init).unwrap();
        let mut x = w.clone();
        axpy(alpha, &d, &mut x);
        let f0 = p.objective_value(&w).unwrap();
        let dg0 = dot(&g, &d);
        assert!(p.objective_value(&x).unwrap() <= f0 + 1e-4 * alpha * dg0);
        let dg = dot(&p.objective_gradient(&x).unwrap(), &d);
        assert!(dg >= 0.9 * dg0);
        assert!(dg.abs() <= -0.9 * dg0);
        let s: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        let y = sub(&p.objective_gradient(&x).unwrap(), &g);
        assert!(dot(&s, &y) > 0.0);
    }
}

#[test]
fn bfgs_terminates_on_quadratic_within_d_plus_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let d = 5;
    let a = random_spd(&mut rng, d, 0.5);
    let b = random_vec(&mut rng, d);
    let q = Quadratic::new(a, b).unwrap();
    let mut opts = BfgsOptions::full();
    opts.line_search.c1 = 1e-8;
    opts.line_search.c2 = 1e-6;
    let r = bfgs(&q, &[0.0; 5], opts, &RunControl::iterations(d + 2).with_grad_tol(1e-10)).unwrap();
    assert_eq!(r.termination, Termination::GradTol, "{:?}", r.trace.last());
    assert!(r.iterations() as usize <= d + 2);
}

#[test]
fn full_and_limited_memory_agree_without_eviction() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let a = random_spd(&mut rng, 6, 0.2);
    let q = Quadratic::new(a, random_vec(&mut rng, 6)).unwrap();
    let p = random_logistic(16, 60, 4, 0.01);
    let control = RunControl::iterations(6);
    let pairs: [(&dyn Objective, usize); 2] = [(&q, 6), (&p, 4)];
    for (obj, d) in pairs {
        let w0 = vec![0.3; d];
        let full = bfgs(obj, &w0, BfgsOptions::full().without_scaling(), &control).unwrap();
        let lim = bfgs(obj, &w0, BfgsOptions::limited(10).without_scaling(), &control).unwrap();
        assert_eq!(full.trace.len(), lim.trace.len());
        assert!(max_abs_diff(&full.final_w, &lim.final_w) <= 1e-10);
        for (x, y) in full.trace.iter().zip(&lim.trace) {
            assert!((x.fval - y.fval).abs() <= 1e-10);
        }
    }
}

#[test]
fn bfgs_secant_identity_and_positive_pairs() {
    let p = random_logistic(17, 200, 8, 0.01);
    for opts in [BfgsOptions::full(), BfgsOptions::limited(5)] {
        let mut opts = opts;
        opts.record_pairs = true;
        let r = bfgs(&p, &[0.0; 8], opts, &RunControl::iterations(40).with_grad_tol(1e-12)).unwrap();
        assert!(!r.diagnostics.secant_residuals.is_empty());
        assert!(r.diagnostics.secant_residuals.iter().all(|e| *e <= 1e-10));
        assert!(r.diagnostics.pairs.iter().all(|(s, y)| dot(s, y) > 0.0));
        assert!(r.final_record().gnorm <= 1e-8);
    }
}

#[test]
fn bfgs_reaches_gradient_norms_below_objective_resolution() {
    // Near 1e-12 the decrease per step is far below one ulp of F.
    let p = random_logistic(17, 300, 8, 0.01);
    for opts in [BfgsOptions::full(), BfgsOptions::limited(10)] {
        let r = bfgs(&p, &[0.0; 8], opts, &RunControl::iterations(500).with_grad_tol(1e-12)).unwrap();
        assert_eq!(r.termination, Termination::GradTol, "{opts:?}");
        assert!(norm(&p.objective_gradient(&r.final_w).unwrap()) <= 1e-12);
    }
}

#[test]
fn bfgs_rejects_nonsmooth_objective() {
    let base = random_logistic(18, 10, 2, 0.0);
    let p = Problem::new(Model::Linear, Loss::Logistic, Regularizer::L1(0.1), base.shared_data()).unwrap();
    assert!(bfgs(&p, &[0.0; 2], BfgsOptions::default(), &RunControl::iterations(3)).is_err());
}

#[test]
fn same_batch_full_sample_uses_true_gradient_displacements() {
    let p = random_logistic(19, 30, 3, 0.05);
    let mut opts = StochasticLbfgsOptions::new(StepSchedule::Constant(0.5), 30, PairStrategy::SameBatch, 1);
    opts.record_pairs = true;
    let w0 = vec![0.1, -0.2, 0.3];
    let r = stochastic_lbfgs(&p, &w0, opts, &RunControl::iterations(10)).unwrap();
    let mut w = w0.clone();
    assert_eq!(r.diagnostics.pairs.len(), 10);
    for (s, y) in &r.diagnostics.pairs {
        let next: Vec<f64> = w.iter().zip(s).map(|(a, b)| a + b).collect();
        let truth = sub(&p.objective_gradient(&next).unwrap(), &p.objective_gradient(&w).unwrap());
        assert!(max_abs_diff(y, &truth) <= 1e-14);
        w = next;
    }
    assert_eq!(r.final_record().eff_grad_evals, 20.0);
}

#[test]
fn damped_blend_clamps_at_lower_bound() {
    let s = [0.6, -0.8, 1.5];
    let y: Vec<f64> = s.iter().map(|v| -v).collect();
    let (mu1, mu2) = (0.2, 10.0);
    let (v, beta) = damped_displacement(&s, &y, mu1, mu2);
    // sᵀv(β) = (2β − 1)‖s‖² = μ₁‖s‖² at β = (1 + μ₁)/2.
    assert!((beta - 0.6).abs() <= 1e-15);
    let ss = dot(&s, &s);
    assert!((dot(&s, &v) - mu1 * ss).abs() <= 1e-12 * ss);
    let (v, beta) = damped_displacement(&s, &[3.0 * s[0], 3.0 * s[1], 3.0 * s[2]], 0.2, 2.0);
    assert!(beta > 0.0 && (dot(&s, &v) - 2.0 * ss).abs() <= 1e-12 * ss);
    let (v, beta) = damped_displacement(&s, &s, 0.2, 2.0);
    assert_eq!(beta, 0.0);
    assert_eq!(v, s.to_vec());
}

#[test]
fn damped_strategy_repairs_every_pair() {
    let net = tiny_mlp();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let w0 = net.initial_point(&mut rng).into_values();
    let strategy = PairStrategy::Damped { mu1: 0.2, mu2: 50.0 };
    let opts = StochasticLbfgsOptions::new(StepSchedule::Constant(0.05), 4, strategy, 9);
    let r = stochastic_lbfgs(&net, &w0, opts, &RunControl::iterations(200)).unwrap();
    assert_eq!(r.diagnostics.pairs_skipped, 0);
    assert_eq!(r.diagnostics.curvature_products.len(), 200);
}

#[test]
fn hessian_action_pairs_are_exact_on_quadratics() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let d = 4;
    let a = random_spd(&mut rng, d, 1.0);
    let q = Quadratic::new(a.clone(), random_vec(&mut rng, d)).unwrap();
    let mut opts =
        StochasticLbfgsOptions::new(StepSchedule::Constant(0.05), 1, PairStrategy::HessianAction { batch: 1 }, 2);
    opts.record_pairs = true;
    let r = stochastic_lbfgs(&q, &[0.0; 4], opts, &RunControl::iterations(6)).unwrap();
    for (s, y) in &r.diagnostics.pairs {
        assert!(max_abs_diff(y, &a.matvec(s)) <= 1e-14);
    }

    // With A-conjugate steps the hereditary secant property makes H = A⁻¹.
    let eig = SymmetricEigen::new(to_nalgebra(&a));
    let mut mem = LbfgsMemory::new(10).unwrap();
    for j in 0..d {
        let s: Vec<f64> = eig.eigenvectors.column(j).iter().map(|v| (j as f64 + 1.0) * v).collect();
        let y = q.hessian_vector_product(&[0.0; 4], &s, Samples::Batch(&[0])).unwrap();
        mem.push(CurvaturePair::new(s, y).unwrap());
    }
    let g = random_vec(&mut rng, d);
    let expect: Vec<f64> = solve(&a, &g).iter().map(|v| -v).collect();
    assert!(max_abs_diff(&mem.direction(&g), &expect) <= 1e-8);
}

#[test]
fn overlap_charges_batch_plus_two_overlaps() {
    let p = random_logistic(22, 100, 3, 0.05);
    let opts = StochasticLbfgsOptions::new(StepSchedule::Constant(0.1), 10, PairStrategy::overlap(), 3);
    let r = stochastic_lbfgs(&p, &[0.0; 3], opts, &RunControl::iterations(7)).unwrap();
    assert_eq!(r.final_record().eff_grad_evals, 7.0 * (10.0 + 2.0 * 5.0) / 100.0);
    let hv = StochasticLbfgsOptions::new(StepSchedule::Constant(0.1), 10, PairStrategy::HessianAction { batch: 20 }, 3);
    let r = stochastic_lbfgs(&p, &[0.0; 3], hv, &RunControl::iterations(5)).unwrap();
    assert_eq!(r.diagnostics.hvp_evals, 100);
    assert_eq!(r.final_record().eff_grad_evals, 5.0 * 30.0 / 100.0);
}

#[test]
fn invalid_strategies_are_rejected() {
    let p = random_logistic(23, 20, 2, 0.05);
    let sched = StepSchedule::Constant(0.1);
    for strategy in [
        PairStrategy::Overlap { fraction: 0.0 },
        PairStrategy::Overlap { fraction: 1.5 },
        PairStrategy::Damped { mu1: 0.0, mu2: 2.0 },
        PairStrategy::Damped { mu1: 0.5, mu2: 0.9 },
        PairStrategy::HessianAction { batch: 0 },
        PairStrategy::HessianAction { batch: 21 },
    ] {
        let opts = StochasticLbfgsOptions::new(sched, 5, strategy, 0);
        let err = stochastic_lbfgs(&p, &[0.0; 2], opts, &RunControl::iterations(2)).unwrap_err();
        assert!(err.is_validation(), "{strategy:?}");
    }
}

#[test]
fn stochastic_lbfgs_is_deterministic_and_logs_cosines() {
    let p = random_logistic(24, 80, 3, 0.05);
    let opts = StochasticLbfgsOptions::new(StepSchedule::Constant(0.2), 8, PairStrategy::overlap(), 5);
    let control = RunControl::iterations(50).with_log_every(10);
    let a = stochastic_lbfgs(&p, &[0.0; 3], opts, &control).unwrap();
    let b = stochastic_lbfgs(&p, &[0.0; 3], opts, &control).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.diagnostics.direction_cosines.len(), 5);
    assert_eq!(a.trace.len(), 6);
    assert!(a.diagnostics.direction_cosines.iter().all(|c| c.abs() <= 1.0 + 1e-12));
}

fn matrix_op(a: &Matrix) -> impl FnMut(&[f64]) -> Result<Vec<f64>> + '_ {
    move |v| Ok(a.matvec(v))
}

#[test]
fn cg_closed_form_cases() {
    let id = Matrix::identity(3);
    let out = cg_solve(matrix_op(&id), &[1.0, -2.0, 0.5], 1e-12, 10).unwrap();
    assert_eq!(out.iterations, 1);
    assert_eq!(out.x, vec![1.0, -2.0, 0.5]);

    let a = Matrix::diagonal(&[1.0, 4.0]);
    let out = cg_solve(matrix_op(&a), &[1.0, 1.0], 1e-14, 10).unwrap();
    assert!(out.iterations <= 2);
    assert!(max_abs_diff(&out.x, &[1.0, 0.25]) <= 1e-12);

    let out = cg_solve(matrix_op(&a), &[0.0, 0.0], 1e-8, 10).unwrap();
    assert_eq!((out.iterations, out.status), (0, CgStatus::Converged));
}

#[test]
fn cg_random_spd_terminates_within_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..20 {
        let a = random_spd(&mut rng, 10, 1.0);
        let b = random_vec(&mut rng, 10);
        let out = cg_solve(matrix_op(&a), &b, 1e-8, 10).unwrap();
        assert_eq!(out.status, CgStatus::Converged);
        let res = norm(&sub(&b, &a.matvec(&out.x)));
        assert!(res <= 1e-8 * norm(&b) * 1.01, "{res}");
    }
}

#[test]
fn cg_reports_negative_curvature_with_current_iterate() {
    let a = Matrix::diagonal(&[1.0, -1.0]);
    let out = cg_solve(matrix_op(&a), &[0.0, 1.0], 1e-10, 10).unwrap();
    assert_eq!(out.status, CgStatus::NegativeCurvature);
    assert_eq!(out.x, vec![0.0, 0.0]);
    let a = Matrix::diagonal(&[2.0, -1.0]);
    let out = cg_solve(matrix_op(&a), &[1.0, 0.0], 0.0, 10).unwrap();
    assert_eq!(out.status, CgStatus::Converged);
    assert_eq!(out.x, vec![0.5, 0.0]);
}

#[test]
fn steihaug_examples() {
    let id = Matrix::identity(2);
    let out = steihaug_cg(matrix_op(&id), &[0.01, -0.02], 1e6, 1e-12, 10).unwrap();
    assert!(max_abs_diff(&out.step, &[-0.01, 0.02]) <= 1e-15);
    assert!(!out.boundary_hit);

    let out = steihaug_cg(matrix_op(&id), &[10.0, 0.0], 1.0, 1e-12, 10).unwrap();
    assert!(max_abs_diff(&out.step, &[-1.0, 0.0]) <= 1e-15);
    assert!(out.boundary_hit);

    let indefinite = Matrix::diagonal(&[1.0, -1.0]);
    let out = steihaug_cg(matrix_op(&indefinite), &[0.0, 1.0], 2.0, 1e-12, 10).unwrap();
    assert!(out.negative_curvature);
    assert!((norm(&out.step) - 2.0).abs() <= 1e-10);
    assert!(max_abs_diff(&out.step, &[0.0, -2.0]) <= 1e-15);
    assert_eq!(out.model_decrease, 4.0);

    assert!(steihaug_cg(matrix_op(&id), &[1.0, 0.0], 0.0, 1e-8, 10).is_err());
}

proptest! {
    #[test]
    fn steihaug_stays_in_ball_with_nonnegative_decrease(
        diag in prop::collection::vec(-5.0f64..5.0, 1..6),
        seed in any::<u64>(),
        log_radius in -3.0f64..3.0,
        dense in any::<bool>(),
    ) {
        let d = diag.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = if dense {
            let mut m = random_spd(&mut rng, d, 0.0);
            for (i, di) in diag.iter().enumerate() {
                m.set(i, i, m.get(i, i) + di);
            }
            m
        } else {
            Matrix::diagonal(&diag)
        };
        let g = random_vec(&mut rng, d);
        let radius = 10f64.powf(log_radius);
        let out = steihaug_cg(matrix_op(&a), &g, radius, 1e-10, 3 * d).unwrap();
        prop_assert!(norm(&out.step) <= radius * (1.0 + 1e-12));
        let decrease = -dot(&g, &out.step) - 0.5 * a.quadratic_form(&out.step);
        prop_assert!(decrease >= -1e-12 * (1.0 + decrease.abs()));
        prop_assert!(out.model_decrease >= 0.0);
        if out.negative_curvature {
            prop_assert!((norm(&out.step) - radius).abs() <= 1e-10 * radius.max(1.0));
        }
    }
}

#[test]
fn newton_solves_quadratic_in_one_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let a = random_spd(&mut rng, 6, 0.5);
    let b = random_vec(&mut rng, 6);
    let q = Quadratic::new(a.clone(), b.clone()).unwrap();
    let star = solve(&a, &b);
    let opts = NewtonCgOptions {
        damping: 0.0,
        forcing: Forcing::Fixed(1e-13),
        max_cg: 50,
        ..NewtonCgOptions::default()
    };
    let w0 = random_vec(&mut rng, 6);
    let r = newton_cg(&q, &w0, opts, &RunControl::iterations(1)).unwrap();
    assert!(max_abs_diff(&r.final_w, &star) <= 1e-10);
    assert_eq!(r.diagnostics.cg.len(), 1);
}

#[test]
fn gauss_newton_and_hessian_agree_for_linear_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let rows: Vec<Vec<f64>> = (0..40).map(|_| random_vec(&mut rng, 3)).collect();
    let y = (0..40).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let p = Problem::new(Model::Linear, Loss::LeastSquares, Regularizer::L2(0.01), Dataset::from_rows(&rows, y).unwrap())
        .unwrap();
    let control = RunControl::iterations(8);
    let h = newton_cg(&p, &[0.5; 3], NewtonCgOptions::default(), &control).unwrap();
    let gn = newton_cg(&p, &[0.5; 3], NewtonCgOptions::gauss_newton(), &control).unwrap();
    assert_eq!(h.trace.len(), gn.trace.len());
    for (a, b) in h.trace.iter().zip(&gn.trace) {
        assert!((a.fval - b.fval).abs() <= 1e-10);
    }
    assert!(max_abs_diff(&h.final_w, &gn.final_w) <= 1e-10);
}

#[test]
fn newton_on_convex_logistic_never_sees_negative_curvature() {
    let p = random_logistic(28, 200, 6, 0.01);
    let r = newton_cg(&p, &[0.0; 6], NewtonCgOptions::default(), &RunControl::iterations(30).with_grad_tol(1e-10))
        .unwrap();
    assert_eq!(r.termination, Termination::GradTol);
    assert_eq!(r.diagnostics.negative_curvature_events, 0);
    for audit in &r.diagnostics.cg {
        assert!(!audit.negative_curvature);
        assert!(audit.residual <= audit.tolerance, "{audit:?}");
    }
    assert_eq!(r.diagnostics.hvp_evals, 200 * r.diagnostics.cg.iter().map(|c| c.iterations as u64).sum::<u64>());
}

#[test]
fn newton_cg_trains_tiny_network() {
    let p = tiny_mlp();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let w0 = p.initial_point(&mut rng).into_values();
    for opts in [NewtonCgOptions::default(), NewtonCgOptions::gauss_newton()] {
        let r = newton_cg(&p, &w0, opts, &RunControl::iterations(100).with_grad_tol(1e-4)).unwrap();
        assert_eq!(r.termination, Termination::GradTol, "{opts:?} {:?}", r.final_record());
        assert!(r.diagnostics.cg.iter().all(|c| c.iterations <= 30));
    }
}

#[test]
fn trust_region_quadratic_step_has_unit_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let a = random_spd(&mut rng, 5, 0.5);
    let b = random_vec(&mut rng, 5);
    let q = Quadratic::new(a.clone(), b.clone()).unwrap();
    let opts = TrustRegionOptions {
        state: TrustRegionState::default().with_radius(1e4),
        cg_tol: 1e-14,
        ..TrustRegionOptions::default()
    };
    let r = trust_region(&q, &[0.0; 5], opts, &RunControl::iterations(1)).unwrap();
    assert!((r.diagnostics.ratios[0] - 1.0).abs() <= 1e-10);
    assert!(max_abs_diff(&r.final_w, &solve(&a, &b)) <= 1e-10);
}

/// `F(w) = ½w² + 10w⁴` whose curvature oracle always reports 1.
struct LyingQuartic {
    shape: ShapeMap,
}

impl Objective for LyingQuartic {
    fn dim(&self) -> usize {
        1
    }
    fn shape(&self) -> &ShapeMap {
        &self.shape
    }
    fn num_samples(&self) -> usize {
        1
    }
    fn regularizer(&self) -> Regularizer {
        Regularizer::None
    }
    fn loss_sum(&self, w: &[f64], _: Samples<'_>) -> Result<f64> {
        Ok(0.5 * w[0] * w[0] + 10.0 * w[0].powi(4))
    }
    fn loss_gradient_sum(&self, w: &[f64], _: Samples<'_>, out: &mut [f64]) -> Result<()> {
        out[0] += w[0] + 40.0 * w[0].powi(3);
        Ok(())
    }
    fn loss_hessian_vector_sum(&self, _: &[f64], v: &[f64], _: Samples<'_>, out: &mut [f64]) -> Result<()> {
        out[0] += v[0];
        Ok(())
    }
}

#[test]
fn trust_region_rejection_shrinks_radius_and_keeps_iterate() {
    let obj = LyingQuartic {
        shape: ShapeMap::linear(1),
    };
    let opts = TrustRegionOptions {
        state: TrustRegionState::default().with_radius(2.0),
        ..TrustRegionOptions::default()
    };
    let r = trust_region(&obj, &[1.0], opts, &RunControl::iterations(1)).unwrap();
    // m(s) = F + 41 s + ½ s², so s = −2 predicts 80 while F(−1) = F(1).
    assert_eq!(r.diagnostics.ratios, vec![0.0]);
    assert_eq!(r.final_w.as_slice(), &[1.0]);
    let r2 = trust_region(&obj, &[1.0], opts, &RunControl::iterations(2)).unwrap();
    assert_eq!(r2.diagnostics.radii, vec![2.0, 1.0]);
}

#[test]
fn trust_region_accepted_steps_decrease_objective() {
    let p = tiny_mlp();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let w0 = p.initial_point(&mut rng).into_values();
    let r = trust_region(&p, &w0, TrustRegionOptions::default(), &RunControl::iterations(60)).unwrap();
    for (k, pair) in r.trace.windows(2).enumerate() {
        if r.diagnostics.ratios[k] >= 0.1 {
            assert!(pair[1].fval < pair[0].fval);
        } else {
            assert_eq!(pair[1].fval, pair[0].fval);
        }
    }
    let state = TrustRegionState::default();
    assert!(r.diagnostics.radii.iter().all(|d| *d >= state.radius_min && *d <= state.radius_max));
}

#[test]
fn subsampled_curvature_couples_sample_size_to_radius() {
    assert_eq!(radius_sample_size(3.2, 1.0, 32), 4);
    assert_eq!(radius_sample_size(3.2, 0.1, 32), 32);
    assert_eq!(radius_sample_size(3.2, 100.0, 32), 1);
    let p = tiny_mlp();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let w0 = p.initial_point(&mut rng).into_values();
    let opts = TrustRegionOptions {
        source: CurvatureSource::Subsampled { c: 3.2 },
        seed: 4,
        ..TrustRegionOptions::default()
    };
    let r = trust_region(&p, &w0, opts, &RunControl::iterations(20)).unwrap();
    for (size, radius) in r.diagnostics.sample_sizes.iter().zip(&r.diagnostics.radii) {
        assert_eq!(*size, radius_sample_size(3.2, *radius, 32));
    }
}

#[test]
fn trust_region_state_validation() {
    let bad = TrustRegionState {
        eta1: 0.8,
        ..TrustRegionState::default()
    };
    assert!(bad.validate().is_err());
    assert!(TrustRegionState::default().with_radius(1e7).validate().is_err());
    let mut s = TrustRegionState::default();
    assert!(!s.update(0.05, true));
    assert_eq!(s.radius, 0.5);
    assert!(s.update(0.9, false));
    assert_eq!(s.radius, 0.5);
    assert!(s.update(0.9, true));
    assert_eq!(s.radius, 1.0);
}
