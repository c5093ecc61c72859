use std::path::Path;
use std::process::{Command, Output};

use optlab::evals_to_gap;
use optlab::io::{parse_libsvm, read_trace};

fn optlab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_optlab"));
    cmd.args(args).env_remove("OPTLAB_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn conv_demo_prints_the_valid_convolution() {
    let out = optlab(&["conv-demo"], &[]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "17 1 9\n3 15 0\n9 0 17\n");
}

#[test]
fn check_grad_on_the_default_problem_is_accurate() {
    let out = optlab(&["check-grad"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for line in text.lines() {
        let err: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(err <= 1e-5, "{line}");
    }
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn unknown_config_key_exits_one_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "solver = gd\nstep_size = 0.1\n").unwrap();
    let out = optlab(&["train", "--config", path(&cfg)], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("step_size"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(optlab(&["frobnicate"], &[]).status.code(), Some(1));
    assert_eq!(optlab(&["train", "--bogus"], &[]).status.code(), Some(1));
    assert_eq!(optlab(&[], &[]).status.code(), Some(1));
    assert_eq!(optlab(&["gen-data", "--out", "x", "--format", "arff"], &[]).status.code(), Some(1));
    let help = optlab(&["--help"], &[]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("compare"));
}

#[test]
fn missing_data_file_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    std::fs::write(&cfg, format!("data = {}\n", path(&dir.path().join("absent.svm")))).unwrap();
    assert_eq!(optlab(&["train", "--config", path(&cfg)], &[]).status.code(), Some(2));
}

#[test]
fn gen_data_output_trains_from_a_file_config() {
    let dir = tempfile::tempdir().unwrap();
    let gen_cfg = dir.path().join("gen.cfg");
    std::fs::write(&gen_cfg, "generator = two_gaussians\nmargin = 3\nn = 60\nd = 3\n").unwrap();
    for (format, file) in [("libsvm", "d.svm"), ("csv", "d.csv")] {
        let data = dir.path().join(file);
        let out = optlab(&["gen-data", "--config", path(&gen_cfg), "--seed", "4", "--format", format, "--out", path(&data)], &[]);
        assert!(out.status.success(), "{}", stderr(&out));
        let train_cfg = dir.path().join("train.cfg");
        std::fs::write(&train_cfg, format!("data = {}\ndata_format = {format}\nsolver = lbfgs\n", path(&data))).unwrap();
        let trace = dir.path().join("trace.csv");
        let out = optlab(&["train", "--config", path(&train_cfg), "--out", path(&trace)], &[]);
        assert!(out.status.success(), "{}", stderr(&out));
        let records = read_trace(&trace).unwrap();
        assert!(records.last().unwrap().fval < records[0].fval);
    }
    let text = std::fs::read_to_string(dir.path().join("d.svm")).unwrap();
    assert_eq!(parse_libsvm(&text, false).unwrap().n(), 60);
}

#[test]
fn train_without_out_prints_the_trace() {
    let out = optlab(&["train", "--seed", "2"], &[]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("iter,eff_grad_evals,fval,gnorm,step,wall_ms\n"));
}

#[test]
fn seed_flag_changes_stochastic_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sgd.cfg");
    std::fs::write(&cfg, "solver = sgd\nmax_iter = 50\n").unwrap();
    let run = |seed: &str| stdout(&optlab(&["train", "--config", path(&cfg), "--seed", seed], &[]));
    assert_eq!(run("1"), run("1"));
    assert_ne!(run("1"), run("2"));
}

fn summary_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn compare_summary_matches_the_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cmp.cfg");
    std::fs::write(&cfg, "n = 150\nd = 4\nmax_iter = 400\ngrad_tol = 1e-10\n").unwrap();
    let run = |threads: &str, out: &Path| {
        let o = optlab(
            &["compare", "--config", path(&cfg), "--solver", "gd", "--solver", "svrg", "--solver", "saga", "--solver", "lbfgs", "--out", path(out)],
            &[("OPTLAB_THREADS", threads)],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    let one = dir.path().join("one");
    let many = dir.path().join("many");
    let printed = run("1", &one);
    run("3", &many);
    let summary = std::fs::read_to_string(one.join("summary.csv")).unwrap();
    assert_eq!(summary, std::fs::read_to_string(many.join("summary.csv")).unwrap());
    assert!(printed.ends_with(&summary));
    assert_eq!(
        summary.lines().next().unwrap(),
        "solver,evals_to_1e-2,evals_to_1e-4,evals_to_1e-6,evals_to_1e-8,final_fval"
    );

    let f_star: f64 = printed.lines().next().unwrap().trim_start_matches("f_star = ").parse().unwrap();
    let rows = summary_rows(&summary);
    assert_eq!(rows.len(), 4);
    for (i, row) in rows.iter().enumerate() {
        let trace = read_trace(&one.join(format!("{i:02}_{}.csv", row[0]))).unwrap();
        for (cell, gap) in row[1..5].iter().zip([1e-2, 1e-4, 1e-6, 1e-8]) {
            let expected = evals_to_gap(&trace, f_star, gap).map(|e| format!("{e:?}")).unwrap_or_default();
            assert_eq!(cell, &expected, "{} at {gap}", row[0]);
        }
        assert_eq!(row[5], format!("{:?}", trace.last().unwrap().fval));
    }
    // Deterministic solvers reach every gap on this well-conditioned problem.
    assert!(rows[0][1..5].iter().all(|c| !c.is_empty()));
}

#[test]
fn compare_rejects_a_bad_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let out = optlab(&["compare", "--out", path(dir.path())], &[("OPTLAB_THREADS", "zero")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn shatter_reports_a_triangle_and_the_square() {
    let dir = tempfile::tempdir().unwrap();
    let tri = dir.path().join("tri.txt");
    std::fs::write(&tri, "3,5\n7,3\n7,7\n").unwrap();
    let out = optlab(&["shatter", path(&tri)], &[]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("8/8 labelings separable; shattered"));

    let sq = dir.path().join("sq.txt");
    std::fs::write(&sq, "# unit square\n0 0\n1 1\n1 0\n0 1\n").unwrap();
    let text = stdout(&optlab(&["shatter", path(&sq)], &[]));
    assert!(text.contains("14/16"), "{text}");
    assert!(text.contains("not separable: + + - -"));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1,2\n3,x\n").unwrap();
    assert_eq!(optlab(&["shatter", path(&bad)], &[]).status.code(), Some(1));
}
