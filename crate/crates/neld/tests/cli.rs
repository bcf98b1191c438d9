//! Black-box tests of the command-line surface: exit codes, output
//! determinism, and report structure.

use std::fs;
use std::path::Path;

use neld::cli::{run_cli, EXIT_BLOWUP, EXIT_CONFIG, EXIT_OK};
use neld::output::Table;

fn cli(args: &[&str]) -> i32 {
    run_cli(std::iter::once("neld").chain(args.iter().copied()))
}

const SMALL_RUN: &str = "\
flow.kind = shear
flow.rate = 1.0
sim.gamma = 1.0
sim.beta = 1.0
sim.steps_per_period = 16
sim.n_particles = 1
sim.seed = 42
potential.kind = cosine
run.n_periods = 20
run.n_trajectories = 8
run.record_stride = 4
run.burn_in_fraction = 0.25
run.phase_bins = 4
run.observables = psq, px
";

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.conf");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SMALL_RUN);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    assert_eq!(cli(&["run", "--config", &conf, "--out", out_a.to_str().unwrap()]), EXIT_OK);
    assert_eq!(cli(&["run", "--config", &conf, "--out", out_b.to_str().unwrap()]), EXIT_OK);
    for name in ["chain.tsv", "profile.tsv", "summary.tsv"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert!(!a.is_empty());
    }
}

#[test]
fn seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SMALL_RUN);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    assert_eq!(cli(&["run", "--config", &conf, "--out", out_a.to_str().unwrap()]), EXIT_OK);
    assert_eq!(
        cli(&["run", "--config", &conf, "--seed", "7", "--out", out_b.to_str().unwrap()]),
        EXIT_OK
    );
    let a = fs::read(out_a.join("chain.tsv")).unwrap();
    let b = fs::read(out_b.join("chain.tsv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn zero_rate_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), &SMALL_RUN.replace("flow.rate = 1.0", "flow.rate = 0.0"));
    assert_eq!(cli(&["run", "--config", &conf]), EXIT_CONFIG);
}

#[test]
fn oversized_time_step_is_blowup() {
    let dir = tempfile::tempdir().unwrap();
    // gamma dt = 12.5 makes Euler-Maruyama linearly unstable.
    let conf = write_config(
        dir.path(),
        "\
flow.kind = shear
flow.rate = 1.0
sim.gamma = 50.0
sim.beta = 1.0
sim.steps_per_period = 4
sim.scheme = euler_maruyama
potential.kind = zero
run.n_periods = 300
run.n_trajectories = 1
run.record_stride = 0
",
    );
    let out = dir.path().join("out");
    assert_eq!(cli(&["run", "--config", &conf, "--out", out.to_str().unwrap()]), EXIT_BLOWUP);
}

#[test]
fn unknown_suite_is_usage_error() {
    assert_eq!(cli(&["verify", "bogus"]), EXIT_CONFIG);
}

#[test]
fn remap_suite_passes() {
    assert_eq!(cli(&["verify", "remap"]), EXIT_OK);
}

#[test]
fn missing_subcommand_is_usage_error() {
    assert_eq!(cli(&[]), EXIT_CONFIG);
    assert_eq!(cli(&["run"]), EXIT_CONFIG);
}

#[test]
fn report_summarizes_a_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SMALL_RUN);
    let out = dir.path().join("out");
    assert_eq!(cli(&["run", "--config", &conf, "--out", out.to_str().unwrap()]), EXIT_OK);
    assert_eq!(cli(&["report", out.to_str().unwrap()]), EXIT_OK);

    let report = Table::read(&out.join("report.tsv")).unwrap();
    // One row per (observable, phase bin): 2 observables x 4 bins.
    assert_eq!(report.rows.len(), 8);
    assert!(report.column_index("lambda_hat").is_some());
    assert!(report.column_index("drift_a_1").is_some());

    let long = Table::read(&out.join("long.tsv")).unwrap();
    assert!(!long.rows.is_empty());

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(cli(&["report", empty.to_str().unwrap()]), EXIT_CONFIG);
}

#[test]
fn threads_flag_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), SMALL_RUN);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    assert_eq!(cli(&["run", "--config", &conf, "--out", out_a.to_str().unwrap()]), EXIT_OK);
    assert_eq!(
        cli(&["run", "--config", &conf, "--threads", "2", "--out", out_b.to_str().unwrap()]),
        EXIT_OK
    );
    let a = fs::read(out_a.join("chain.tsv")).unwrap();
    let b = fs::read(out_b.join("chain.tsv")).unwrap();
    assert_eq!(a, b);
}
