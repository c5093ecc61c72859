//! Optimization workbench for regularized empirical-risk minimization.
//!
//! The crate bundles
//!
//! * [`problems`]: datasets, linear and feed-forward models, losses,
//!   regularizers and their derivative oracles (gradients, Hessian-vector
//!   and Gauss-Newton-vector products, proximal maps);
//! * [`first_order`]: gradient descent (plain, Nesterov, ISTA, FISTA) and
//!   SGD with momentum;
//! * [`variance_reduced`]: SVRG, SARAH, SAGA and growing-batch SGD;
//! * [`second_order`]: BFGS and L-BFGS with Wolfe line search, stochastic
//!   L-BFGS variants, Newton-CG and trust-region Newton with Steihaug CG;
//! * [`learning_theory`]: affine separability, shattering and 0-1 error;
//! * [`io`] and [`cli`]: LIBSVM/CSV data, synthetic generators, run
//!   configuration, trace files and the `optlab` command line.
//!
//! Every solver returns a [`RunResult`] whose trace uses effective gradient
//! evaluations (one full gradient = `n` sample gradients) as its cost axis.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod first_order;
pub mod gradcheck;
pub mod io;
pub mod learning_theory;
pub mod linalg;
pub mod problems;
mod run;
mod sampling;
pub mod second_order;
pub mod variance_reduced;

pub use error::{Error, Result};
pub use problems::{Objective, ParamVector, Problem};
pub use run::{
    evals_to_gap, iterations_to_gap, CgAudit, Diagnostics, RunControl, RunResult, Target, Termination, TraceRecord,
};
pub use sampling::{BatchSampler, SamplingMode};
