//! Curvature-aware solvers: BFGS and L-BFGS with a strong-Wolfe search,
//! stochastic L-BFGS, Newton-CG and trust-region Newton.

mod bfgs;
mod cg;
mod line_search;
mod newton;
mod quasi_newton;
mod stochastic;
mod trust_region;

#[cfg(test)]
mod tests;

pub use bfgs::{bfgs, BfgsOptions, Memory};
pub use cg::{cg_solve, steihaug_cg, CgOutcome, CgStatus, SteihaugOutcome};
pub use line_search::{wolfe_line_search, wolfe_search, LineSearchOutcome, WolfeParams};
pub use newton::{newton_cg, Curvature, Forcing, NewtonCgOptions};
pub use quasi_newton::{bfgs_update_inverse, secant_residual, CurvaturePair, LbfgsMemory};
pub use stochastic::{damped_displacement, stochastic_lbfgs, PairStrategy, StochasticLbfgsOptions};
pub use trust_region::{radius_sample_size, trust_region, CurvatureSource, TrustRegionOptions, TrustRegionState};
