//! Datasets, prediction models, losses, regularizers and the derivative
//! oracles every solver consumes.

mod activation;
mod conv;
mod dataset;
mod loss;
mod mlp;
mod objective;
mod params;
mod problem;
mod quadratic;
mod regularizer;

pub use activation::{sigmoid, Activation};
pub use conv::{conv2d_valid, demo_inputs as conv_demo_inputs};
pub use dataset::{Dataset, Labels};
pub use loss::{log1p_exp_neg, Loss};
pub use mlp::{mlp_parameter_count, ForwardCache, Mlp};
pub use objective::{Objective, Samples};
pub use params::{ParamBlock, ParamVector, ShapeMap};
pub use problem::{argmax_label, sign_label, Label, Model, Problem};
pub use quadratic::Quadratic;
pub use regularizer::{prox_step, Regularizer};
