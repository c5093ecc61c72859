//! Data files, synthetic generators, trace files, run configuration and
//! the experiment driver shared by the command line.

mod config;
mod data;
mod experiment;
mod synthetic;
mod trace;


pub use config::{DataSource, ExperimentConfig, Init, ModelSpec, SolverKind, CONFIG_KEYS};
pub use data::{format_csv, format_libsvm, fmt_real, parse_csv, parse_libsvm, read_dataset, write_dataset, DataFormat};
pub use experiment::{build_problem, control_for, initial_point, load_data, reference_optimum, run_experiment, run_solver};
pub use synthetic::{gen_synthetic, SyntheticKind};
pub use trace::{format_trace, parse_trace, read_trace, write_trace, TRACE_HEADER};
