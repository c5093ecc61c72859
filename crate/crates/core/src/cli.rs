//! The `optlab` command line. [`run_cli`] returns the process exit code:
//! `0` on success, `1` for usage and validation errors, `2` for runtime
//! failures.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gradcheck::{gradient_error, hvp_error};
use crate::io::{
    build_problem, fmt_real, format_trace, gen_synthetic, load_data, read_trace, reference_optimum, run_solver,
    write_dataset, write_trace, DataFormat, DataSource, ExperimentConfig, SolverKind,
};
use crate::learning_theory::shatter_check;
use crate::linalg::Matrix;
use crate::problems::{conv2d_valid, conv_demo_inputs};
use crate::run::evals_to_gap;

/// Gaps reported by `compare`.
pub const COMPARE_GAPS: [f64; 4] = [1e-2, 1e-4, 1e-6, 1e-8];

/// Solvers compared when no `--solver` is given.
const DEFAULT_COMPARE: [SolverKind; 5] = [
    SolverKind::Gd,
    SolverKind::Svrg,
    SolverKind::Sarah,
    SolverKind::Saga,
    SolverKind::Bfgs,
];

#[derive(Parser, Debug)]
#[command(name = "optlab", version, about = "Optimization workbench for regularized empirical risk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Experiment configuration (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the configured synthetic dataset to a file.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "libsvm")]
        format: DataFormat,
    },
    /// Run one experiment and write its trace.
    Train {
        #[command(flatten)]
        common: Common,
        /// Trace path; defaults to the configured `out`, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several solvers on one problem; writes `NN_<solver>.csv` traces
    /// and `summary.csv` into the output directory.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Repeatable; defaults to gd, svrg, sarah, saga and bfgs.
        #[arg(long = "solver")]
        solvers: Vec<SolverKind>,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Report finite-difference errors of the gradient and HVP oracles.
    CheckGrad {
        #[command(flatten)]
        common: Common,
    },
    /// Check whether the points in a file are shattered by affine classifiers.
    Shatter {
        /// One point per line, coordinates separated by commas or spaces.
        points: PathBuf,
    },
    /// Print the 4x4 valid convolution demo.
    ConvDemo,
}

pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let mut stdout = String::new();
    match dispatch(cli.command, &mut stdout) {
        Ok(()) => {
            print!("{stdout}");
            0
        }
        Err(e) => {
            print!("{stdout}");
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(command: Command, out: &mut String) -> Result<()> {
    match command {
        Command::GenData { common, out: path, format } => gen_data(&common, &path, format, out),
        Command::Train { common, out: path } => train(&common, path, out),
        Command::Compare {
            common,
            solvers,
            out: dir,
        } => compare(&common, &solvers, &dir, out),
        Command::CheckGrad { common } => check_grad(&common, out),
        Command::Shatter { points } => shatter(&points, out),
        Command::ConvDemo => {
            let (data, filter) = conv_demo_inputs();
            out.push_str(&format_matrix(&conv2d_valid(&data, &filter)?));
            Ok(())
        }
    }
}

fn gen_data(common: &Common, path: &Path, format: DataFormat, out: &mut String) -> Result<()> {
    let cfg = load_config(common)?;
    let DataSource::Synthetic { kind, n, d, .. } = cfg.data else {
        return Err(Error::Config("gen-data needs a generator, not a `data` file".into()));
    };
    let data = gen_synthetic(kind, n, d, cfg.data_seed())?;
    write_dataset(&data, path, format)?;
    writeln!(out, "wrote {n} samples of {kind} with d = {d} to {}", path.display()).expect("writing to a String");
    Ok(())
}

fn train(common: &Common, path: Option<PathBuf>, out: &mut String) -> Result<()> {
    let cfg = load_config(common)?;
    let problem = build_problem(&cfg, load_data(&cfg)?)?;
    let w0 = crate::io::initial_point(&cfg, &problem);
    let result = run_solver(cfg.solver, &problem, &w0, &cfg, cfg.seed)?;
    let last = result.final_record();
    match path.or(cfg.out.clone()) {
        Some(path) => {
            write_trace(&result.trace, &path)?;
            writeln!(
                out,
                "{}: {:?} after {} iterations, fval {}, {} effective gradient evaluations; trace in {}",
                cfg.solver,
                result.termination,
                last.iter,
                fmt_real(last.fval),
                fmt_real(last.eff_grad_evals),
                path.display()
            )
            .expect("writing to a String");
        }
        None => out.push_str(&format_trace(&result.trace)?),
    }
    Ok(())
}

fn thread_cap() -> Result<usize> {
    match std::env::var("OPTLAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|t| *t > 0)
            .ok_or_else(|| Error::invalid(format!("OPTLAB_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn compare(common: &Common, solvers: &[SolverKind], dir: &Path, out: &mut String) -> Result<()> {
    let cfg = load_config(common)?;
    let solvers = if solvers.is_empty() { &DEFAULT_COMPARE[..] } else { solvers };
    let threads = thread_cap()?.min(solvers.len());
    let problem = build_problem(&cfg, load_data(&cfg)?)?;
    let w0 = crate::io::initial_point(&cfg, &problem);
    let f_star = match cfg.f_star {
        Some(f) => f,
        None => reference_optimum(&problem)?,
    };
    std::fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = solvers
        .iter()
        .enumerate()
        .map(|(i, s)| dir.join(format!("{i:02}_{s}.csv")))
        .collect();

    let next = AtomicUsize::new(0);
    let status: Vec<Mutex<Option<Result<()>>>> = solvers.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= solvers.len() {
                    break;
                }
                let seed = cfg.seed ^ i as u64;
                let r = run_solver(solvers[i], &problem, &w0, &cfg, seed).and_then(|r| write_trace(&r.trace, &paths[i]));
                *status[i].lock().expect("no worker panics while holding the lock") = Some(r);
            });
        }
    });
    for (s, st) in solvers.iter().zip(status) {
        st.into_inner()
            .expect("workers have finished")
            .expect("every index is claimed")
            .map_err(|e| match e {
                Error::LineSearch(m) => Error::LineSearch(format!("{s}: {m}")),
                other => other,
            })?;
    }

    // The summary is computed from the written traces only.
    let mut summary = String::from("solver");
    for g in COMPARE_GAPS {
        write!(summary, ",evals_to_{g:e}").expect("writing to a String");
    }
    summary.push_str(",final_fval\n");
    for (s, path) in solvers.iter().zip(&paths) {
        let trace = read_trace(path)?;
        summary.push_str(s.name());
        for g in COMPARE_GAPS {
            summary.push(',');
            if let Some(e) = evals_to_gap(&trace, f_star, g) {
                summary.push_str(&fmt_real(e));
            }
        }
        let last = trace.last().ok_or_else(|| Error::invalid("empty trace file"))?;
        writeln!(summary, ",{}", fmt_real(last.fval)).expect("writing to a String");
    }
    std::fs::write(dir.join("summary.csv"), &summary)?;
    writeln!(out, "f_star = {}", fmt_real(f_star)).expect("writing to a String");
    out.push_str(&summary);
    Ok(())
}

fn check_grad(common: &Common, out: &mut String) -> Result<()> {
    let cfg = load_config(common)?;
    let problem = build_problem(&cfg, load_data(&cfg)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut grad, mut hvp) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let w: Vec<f64> = (0..crate::Objective::dim(&problem)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..w.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        grad = grad.max(gradient_error(&problem, &w)?);
        hvp = hvp.max(hvp_error(&problem, &w, &v)?);
    }
    writeln!(out, "gradient max relative error: {grad:.3e}").expect("writing to a String");
    writeln!(out, "hvp max relative error: {hvp:.3e}").expect("writing to a String");
    Ok(())
}

fn parse_points(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let p = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("bad coordinate `{t}`"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        points.push(p);
    }
    Ok(points)
}

fn shatter(path: &Path, out: &mut String) -> Result<()> {
    let points = parse_points(&std::fs::read_to_string(path)?)?;
    let report = shatter_check(&points)?;
    writeln!(
        out,
        "{} points: {}/{} labelings separable; {}",
        points.len(),
        report.separable,
        report.labelings,
        if report.shattered { "shattered" } else { "not shattered" }
    )
    .expect("writing to a String");
    for labels in &report.failing {
        let signs: Vec<&str> = labels.iter().map(|y| if *y > 0.0 { "+" } else { "-" }).collect();
        writeln!(out, "  not separable: {}", signs.join(" ")).expect("writing to a String");
    }
    Ok(())
}

fn format_matrix(m: &Matrix) -> String {
    let mut s = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}
