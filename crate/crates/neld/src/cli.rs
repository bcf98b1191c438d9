//! Command-line entry points: `run` (simulate an ensemble and write
//! result tables), `verify` (property suites with measured residuals),
//! and `report` (condense a run directory into summary tables).
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or
//! usage error, 3 numerical blowup.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    convergence_rate, drift_estimate, ensemble_chain_series, limit_cycle, lln_average,
    moment_check, Observable, PhaseProfile,
};
use crate::config::{load_run_config, RunConfig};
use crate::dynamics::{advance_period, initial_state, run_ensemble, MomentumInit, Scheme, SimConfig};
use crate::error::{NeldError, Result};
use crate::flow::{cell_quality, make_flow, FlowKind, FlowSpec, LatticeFrame, remap_lattice};
use crate::output::{fmt_float, Column, Provenance, Table};
use crate::potential::{gradient, value as potential_value, PotentialSpec};
use crate::remap::{check_diagram, remap_position_eulerian, CoordFrame};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

#[derive(Parser)]
#[command(name = "neld", version, about = "Langevin dynamics under periodic background flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured ensemble and write result tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override sim.seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for trajectory parallelism.
        #[arg(long)]
        threads: Option<usize>,
        /// Override run.output_dir from the config file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named property suite and report residuals.
    Verify {
        /// remap | lattice | potential | ou | drift | convergence | all
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Summarize a run directory into report tables.
    Report {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parse arguments and dispatch; returns the process exit code.
pub fn run_cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are successful exits.
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run { config, seed, threads, out } => {
            with_threads(threads, || cmd_run(&config, seed, out.as_deref()))
        }
        Command::Verify { suite, seed, threads } => {
            with_threads(threads, || cmd_verify(&suite, seed.unwrap_or(0)))
        }
        Command::Report { dir, out } => cmd_report(&dir, out.as_deref()),
    }
}

fn with_threads(threads: Option<usize>, body: impl FnOnce() -> i32 + Send) -> i32 {
    match threads {
        None => body(),
        Some(n) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: cannot build thread pool: {e}");
                    return EXIT_CONFIG;
                }
            };
            pool.install(body)
        }
    }
}

fn exit_code_for(err: &NeldError) -> i32 {
    match err {
        NeldError::NonFinite { .. } => EXIT_BLOWUP,
        _ => EXIT_CONFIG,
    }
}

// ---------------------------------------------------------------- run --

pub fn cmd_run(config_path: &Path, seed: Option<u64>, out: Option<&Path>) -> i32 {
    let cfg = match load_run_config(config_path, seed, out) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute_run(&cfg) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Run the ensemble described by `cfg` and write chain.tsv, profile.tsv,
/// and summary.tsv into the output directory.
pub fn execute_run(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let sim = &cfg.sim;
    let period = sim.flow.period;

    let ensemble = run_ensemble(
        sim,
        cfg.n_periods,
        cfg.n_trajectories,
        &MomentumInit::thermal(sim.beta),
        cfg.record_stride,
    )?;

    // Chain records.
    let mut columns = vec![
        Column::new("trajectory", "1", Provenance::Measured),
        Column::new("period", "1", Provenance::Measured),
        Column::new("t", "time", Provenance::Measured),
    ];
    for obs in &cfg.observables {
        columns.push(Column::new(obs.name(), obs.unit(), Provenance::Measured));
    }
    let mut chain_table = Table::new(columns);
    for (traj, t) in ensemble.iter().enumerate() {
        for s in &t.chain {
            let mut row = vec![
                traj.to_string(),
                s.k.to_string(),
                fmt_float(s.k as f64 * period),
            ];
            for obs in &cfg.observables {
                row.push(fmt_float(obs.eval(&s.momenta)));
            }
            chain_table.push_row(row);
        }
    }
    chain_table.write(&cfg.output_dir.join("chain.tsv"))?;

    // Phase profiles.
    let burn_in = cfg.burn_in_fraction * cfg.n_periods as f64 * period;
    let mut profile_table = Table::new(vec![
        Column::new("observable", "name", Provenance::Measured),
        Column::new("bin", "1", Provenance::Measured),
        Column::new("theta", "time", Provenance::Measured),
        Column::new("mean", "mixed", Provenance::Measured),
        Column::new("stderr", "mixed", Provenance::Measured),
        Column::new("count", "1", Provenance::Measured),
    ]);
    for obs in &cfg.observables {
        let profile: PhaseProfile = if cfg.record_stride > 0 {
            limit_cycle(&ensemble, *obs, cfg.phase_bins, period, burn_in)?
        } else {
            // Without step records only the phase-0 chain samples exist.
            let mut p = PhaseProfile::new(cfg.phase_bins, period);
            let first = (cfg.burn_in_fraction * cfg.n_periods as f64).ceil() as u64;
            for t in &ensemble {
                for s in t.chain.iter().filter(|s| s.k >= first) {
                    p.add(0.0, obs.eval(&s.momenta));
                }
            }
            p
        };
        for b in 0..profile.n_bins {
            if profile.count[b] == 0 {
                continue;
            }
            profile_table.push_row(vec![
                obs.name().to_string(),
                b.to_string(),
                fmt_float((b as f64 + 0.5) * period / cfg.phase_bins as f64),
                fmt_float(profile.mean(b)),
                fmt_float(profile.stderr(b)),
                profile.count[b].to_string(),
            ]);
        }
    }
    profile_table.write(&cfg.output_dir.join("profile.tsv"))?;

    // Summary statistics.
    let mut summary = Table::new(vec![
        Column::new("quantity", "name", Provenance::Measured),
        Column::new("value", "mixed", Provenance::Fitted),
        Column::new("error", "mixed", Provenance::Fitted),
    ]);
    let mut push = |name: &str, value: f64, error: f64| {
        summary.push_row(vec![name.to_string(), fmt_float(value), fmt_float(error)]);
    };

    // Post burn-in chain samples pooled over trajectories.
    let first = (cfg.burn_in_fraction * cfg.n_periods as f64).ceil() as u64;
    let pooled: Vec<&crate::dynamics::ChainSample> = ensemble
        .iter()
        .flat_map(|t| t.chain.iter().filter(|s| s.k >= first))
        .collect();
    for obs in &cfg.observables {
        let vals: Vec<f64> = pooled.iter().map(|s| obs.eval(&s.momenta)).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        push(&format!("chain_mean_{}", obs.name()), mean, (var / n).sqrt());
    }

    // Lyapunov drift and moment bounds on the longest available chain.
    let longest = ensemble
        .iter()
        .max_by_key(|t| t.chain.len())
        .map(|t| t.chain.as_slice())
        .unwrap_or(&[]);
    for n in [1u32, 2u32] {
        match drift_estimate(longest, n) {
            Ok((a, b)) => {
                push(&format!("drift_a_{n}"), a, 0.0);
                push(&format!("drift_b_{n}"), b, 0.0);
            }
            Err(_) => {
                push(&format!("drift_a_{n}"), f64::NAN, 0.0);
                push(&format!("drift_b_{n}"), f64::NAN, 0.0);
            }
        }
        match moment_check(longest, n) {
            Ok((m, bounded)) => {
                push(&format!("moment_{n}"), m, 0.0);
                push(&format!("moment_{n}_bounded"), bounded as u64 as f64, 0.0);
            }
            Err(_) => push(&format!("moment_{n}"), f64::NAN, 0.0),
        }
    }

    // Convergence rate from a noise-coupled companion ensemble started
    // from a displaced momentum distribution.
    let hot = run_ensemble(
        sim,
        cfg.n_periods,
        cfg.n_trajectories,
        &MomentumInit::Fixed(Vector3::new(3.0 / sim.beta.sqrt(), 0.0, 0.0)),
        0,
    )?;
    let series = ensemble_chain_series(&ensemble, &hot, Observable::MomentumSq, period);
    match convergence_rate(&series) {
        Ok((lambda, r2)) => {
            push("lambda_hat", lambda, 0.0);
            push("lambda_r2", r2, 0.0);
        }
        Err(_) => {
            push("lambda_hat", f64::NAN, 0.0);
            push("lambda_r2", f64::NAN, 0.0);
        }
    }

    // Time-average diagnostics along trajectory 0.
    if cfg.record_stride > 0 {
        if let Some(t0) = ensemble.first() {
            let lln = lln_average(&t0.records, cfg.observables[0]);
            push("lln_final", lln.final_average, 0.0);
            push("lln_split_diff", (lln.first_half - lln.second_half).abs(), 0.0);
        }
    }

    summary.write(&cfg.output_dir.join("summary.tsv"))?;
    Ok(())
}

// ------------------------------------------------------------- verify --

/// Outcome of one verified property.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckResult {
    fn le(name: &str, measured: f64, threshold: f64) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            measured,
            threshold,
            pass: measured.is_finite() && measured <= threshold,
        }
    }

    fn ge(name: &str, measured: f64, threshold: f64) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            measured,
            threshold,
            pass: measured.is_finite() && measured >= threshold,
        }
    }
}

pub const SUITES: &[&str] = &["remap", "lattice", "potential", "ou", "drift", "convergence"];

pub fn cmd_verify(suite: &str, seed: u64) -> i32 {
    let suites: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&suite) {
        vec![suite]
    } else {
        eprintln!("error: unknown suite {suite} (choose from {} | all)", SUITES.join(" | "));
        return EXIT_CONFIG;
    };
    let mut all_pass = true;
    for s in suites {
        let results = match run_suite(s, seed) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: suite {s}: {e}");
                return exit_code_for(&e);
            }
        };
        for r in results {
            all_pass &= r.pass;
            println!(
                "{} {s}/{} measured={:.3e} threshold={:.3e}",
                if r.pass { "PASS" } else { "FAIL" },
                r.name,
                r.measured,
                r.threshold
            );
        }
    }
    if all_pass {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAIL
    }
}

pub fn run_suite(suite: &str, seed: u64) -> Result<Vec<CheckResult>> {
    match suite {
        "remap" => suite_remap(seed),
        "lattice" => suite_lattice(),
        "potential" => suite_potential(seed),
        "ou" => suite_ou(seed),
        "drift" => suite_drift(seed),
        "convergence" => suite_convergence(seed),
        other => Err(NeldError::Config(format!("unknown suite {other}"))),
    }
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(salt))
}

/// Commutative-diagram residuals over random phase-space points.
pub fn suite_remap(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (label, kind, rate) in [
        ("shear", FlowKind::Shear, 1.0),
        ("shear_neg", FlowKind::Shear, -0.7),
        ("pef", FlowKind::PlanarElongation, 1.0),
        ("pef_neg", FlowKind::PlanarElongation, -0.5),
    ] {
        let flow = make_flow(kind, rate)?;
        let l0 = flow.default_l0();
        let mut rng = rng_for(seed, 1);
        let mut worst = 0.0f64;
        let mut worst_idem = 0.0f64;
        for _ in 0..1000 {
            let t = rng.gen::<f64>() * 5.0 * flow.period;
            let q = Vector3::new(
                rng.gen::<f64>() * 4.0 - 2.0,
                rng.gen::<f64>() * 4.0 - 2.0,
                rng.gen::<f64>() * 4.0 - 2.0,
            );
            let p = Vector3::new(
                rng.gen::<f64>() * 4.0 - 2.0,
                rng.gen::<f64>() * 4.0 - 2.0,
                rng.gen::<f64>() * 4.0 - 2.0,
            );
            worst = worst.max(check_diagram(&flow, &l0, t, &q, &p));
            let once = remap_position_eulerian(&flow, &l0, t, &q);
            let twice = remap_position_eulerian(&flow, &l0, t, &once);
            worst_idem = worst_idem.max((twice - once).amax());
        }
        out.push(CheckResult::le(&format!("diagram_{label}"), worst, 1e-10));
        out.push(CheckResult::le(&format!("idempotent_{label}"), worst_idem, 1e-10));
    }
    Ok(out)
}

/// Stretch periodicity, remap closure, and cell-quality bounds.
pub fn suite_lattice() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (label, kind, rate) in [
        ("shear", FlowKind::Shear, 1.0),
        ("pef", FlowKind::PlanarElongation, 1.0),
    ] {
        let flow = make_flow(kind, rate)?;
        let l0 = flow.default_l0();

        // e^{[t]A} agrees at t and t + T.
        let mut worst = 0.0f64;
        for i in 0..50 {
            let t = i as f64 * flow.period / 50.0;
            let a = flow.stretch(flow.phase(t).0);
            let b = flow.stretch(flow.phase(t + flow.period).0);
            worst = worst.max((a - b).amax());
        }
        out.push(CheckResult::le(&format!("stretch_periodic_{label}"), worst, 1e-12));

        // One period plus remap returns the cell to L0.
        let mut frame = LatticeFrame::new(l0);
        frame.theta = flow.period;
        let frame = remap_lattice(&flow, &frame)?;
        out.push(CheckResult::le(
            &format!("remap_closure_{label}"),
            (frame.cell - l0).amax(),
            1e-10,
        ));

        // Remapped cells stay well-conditioned over many periods: walk
        // ten full periods, remapping at each boundary.
        let (base_min, _) = cell_quality(&l0)?;
        let mut min_image = f64::INFINITY;
        let mut walk = LatticeFrame::new(l0);
        for _ in 0..10 {
            for i in 0..20 {
                let theta = i as f64 * flow.period / 20.0;
                let cell = flow.deformed_lattice(theta, &walk.l0);
                let (mi, _) = cell_quality(&cell)?;
                min_image = min_image.min(mi);
            }
            walk.theta = flow.period;
            walk = remap_lattice(&flow, &walk)?;
        }
        out.push(CheckResult::ge(
            &format!("bounded_cell_{label}"),
            min_image / base_min,
            0.3,
        ));
    }

    // Without remapping the PEF cell degenerates: e^{tA} applied to the
    // cube shrinks the contracting axis as e^{-eps t}.
    let flow = make_flow(FlowKind::PlanarElongation, 1.0)?;
    let cell = flow.stretch(5.0 / flow.rate.abs());
    let (mi, _) = cell_quality(&cell)?;
    out.push(CheckResult::le("unremapped_degeneration", mi, 1e-2));
    Ok(out)
}

/// Analytic vs central finite-difference gradients, both potentials.
pub fn suite_potential(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let flow = make_flow(FlowKind::Shear, 1.0)?;
    let specs = [
        ("cosine", PotentialSpec::default_cosine(), 1usize),
        ("pair", PotentialSpec::smooth_pair(1.0, 0.3), 3usize),
    ];
    for (label, spec, n_particles) in specs {
        let mut rng = rng_for(seed, 7);
        let mut worst = 0.0f64;
        for i in 0..1000 {
            let theta = (i % 17) as f64 / 17.0 * flow.period;
            let cell = flow.deformed_lattice(theta, &flow.default_l0());
            let q: Vec<Vector3<f64>> = (0..n_particles)
                .map(|_| {
                    cell * Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>())
                })
                .collect();
            let grad = gradient(&spec, &cell, &q)?;
            let h = 1e-6;
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            for a in 0..n_particles {
                for c in 0..3 {
                    let mut qp = q.clone();
                    let mut qm = q.clone();
                    qp[a][c] += h;
                    qm[a][c] -= h;
                    let fd = (potential_value(&spec, &cell, &qp)?
                        - potential_value(&spec, &cell, &qm)?)
                        / (2.0 * h);
                    num += (fd - grad[a][c]).powi(2);
                    den += grad[a][c].powi(2);
                }
            }
            worst = worst.max(num.sqrt() / den.sqrt().max(1e-3));
        }
        out.push(CheckResult::le(&format!("gradient_{label}"), worst, 1e-6));
    }
    Ok(out)
}

/// Free-flow momentum chain against the exact Ornstein-Uhlenbeck law.
pub fn suite_ou(seed: u64) -> Result<Vec<CheckResult>> {
    let cfg = SimConfig::new(
        1.0,
        1.0,
        16,
        1,
        PotentialSpec::Zero,
        make_flow(FlowKind::Shear, 1.0)?,
        seed,
        Scheme::IntegratingFactor,
        CoordFrame::RemappedLagrangian,
    )?;
    let n_samples = 100_000u64;
    let n_traj = 50u64;
    let per_traj = n_samples / n_traj;
    let ens = run_ensemble(&cfg, per_traj, n_traj, &MomentumInit::thermal(cfg.beta), 0)?;

    let burn = 20;
    let mut p_vals = Vec::new();
    let mut g_vals = Vec::new();
    let decay = (-cfg.gamma * cfg.flow.period).exp();
    for t in &ens {
        for w in t.chain.windows(2) {
            if w[0].k < burn {
                continue;
            }
            for c in 0..3 {
                p_vals.push(w[1].momenta[0][c]);
                // Invert the recursion P_{k+1} = e^{-gamma T}(P_k + G_k).
                g_vals.push(w[1].momenta[0][c] / decay - w[0].momenta[0][c]);
            }
        }
    }
    let stat = |vals: &[f64]| {
        let n = vals.len() as f64;
        let var = vals.iter().map(|v| v * v).sum::<f64>() / n;
        // SE of a variance estimate from near-Gaussian samples.
        let se = var * (2.0 / n).sqrt();
        (var, se)
    };
    let (pv, pse) = stat(&p_vals);
    let (gv, gse) = stat(&g_vals);
    let g_expect = ((2.0 * cfg.gamma * cfg.flow.period).exp() - 1.0) / cfg.beta;
    Ok(vec![
        CheckResult::le("stationary_variance_dev", (pv - 1.0 / cfg.beta).abs(), 3.0 * pse),
        CheckResult::le("increment_variance_dev", (gv - g_expect).abs(), 3.0 * gse),
    ])
}

/// Drift contraction a_n < 1 on both flows with the cosine potential.
pub fn suite_drift(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (label, kind) in [("shear", FlowKind::Shear), ("pef", FlowKind::PlanarElongation)] {
        let cfg = SimConfig::new(
            1.0,
            1.0,
            32,
            1,
            PotentialSpec::default_cosine(),
            make_flow(kind, 1.0)?,
            seed,
            Scheme::IntegratingFactor,
            CoordFrame::RemappedLagrangian,
        )?;
        let mut state = initial_state(&cfg, 0, &MomentumInit::thermal(cfg.beta));
        let mut chain = Vec::with_capacity(10_000);
        for k in 0..10_000u64 {
            chain.push(advance_period(&cfg, &mut state, 0, k)?);
        }
        for n in [1u32, 2u32] {
            let (a, _b) = drift_estimate(&chain, n)?;
            out.push(CheckResult::le(&format!("a_{n}_{label}"), a, 1.0 - 1e-9));
        }
    }
    Ok(out)
}

/// Analytic-control convergence rate: with V = 0 and A = 0 the ensemble
/// mean of p_x from displaced starts relaxes at exactly gamma.
pub fn suite_convergence(seed: u64) -> Result<Vec<CheckResult>> {
    let mk = |s: u64| {
        SimConfig::new(
            1.0,
            1.0,
            16,
            1,
            PotentialSpec::Zero,
            FlowSpec::rest(),
            s,
            Scheme::IntegratingFactor,
            CoordFrame::RemappedLagrangian,
        )
    };
    let cfg_a = mk(seed)?;
    let cfg_b = mk(seed.wrapping_add(1))?;
    let n_traj = 4000;
    let ens_a = run_ensemble(&cfg_a, 8, n_traj, &MomentumInit::Fixed(Vector3::new(2.0, 0.0, 0.0)), 0)?;
    let ens_b = run_ensemble(&cfg_b, 8, n_traj, &MomentumInit::Fixed(Vector3::new(-2.0, 0.0, 0.0)), 0)?;
    let series = ensemble_chain_series(&ens_a, &ens_b, Observable::Px, cfg_a.flow.period);
    let (lambda, r2) = convergence_rate(&series)?;
    Ok(vec![
        CheckResult::le("lambda_vs_gamma", (lambda - cfg_a.gamma).abs() / cfg_a.gamma, 0.1),
        CheckResult::ge("fit_r2", r2, 0.9),
    ])
}

// ------------------------------------------------------------- report --

pub fn cmd_report(dir: &Path, out: Option<&Path>) -> i32 {
    match execute_report(dir, out.unwrap_or(dir)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

/// Join profile.tsv with the fitted constants of summary.tsv into
/// report.tsv (one row per observable and phase bin) and a long-format
/// long.tsv with one (group, name, index, value) row per number.
pub fn execute_report(dir: &Path, out_dir: &Path) -> Result<()> {
    let profile = Table::read(&dir.join("profile.tsv"))?;
    let summary = Table::read(&dir.join("summary.tsv"))?;
    std::fs::create_dir_all(out_dir)?;

    let qty_idx = summary
        .column_index("quantity")
        .ok_or_else(|| NeldError::Config("summary.tsv: missing quantity column".into()))?;
    let val_idx = summary
        .column_index("value")
        .ok_or_else(|| NeldError::Config("summary.tsv: missing value column".into()))?;
    let scalar = |name: &str| -> String {
        summary
            .rows
            .iter()
            .find(|r| r[qty_idx] == name)
            .map(|r| r[val_idx].clone())
            .unwrap_or_else(|| fmt_float(f64::NAN))
    };

    let mut report = Table::new(vec![
        Column::new("observable", "name", Provenance::Measured),
        Column::new("bin", "1", Provenance::Measured),
        Column::new("theta", "time", Provenance::Measured),
        Column::new("mean", "mixed", Provenance::Measured),
        Column::new("stderr", "mixed", Provenance::Measured),
        Column::new("lambda_hat", "1/time", Provenance::Fitted),
        Column::new("drift_a_1", "1", Provenance::Fitted),
        Column::new("drift_b_1", "1", Provenance::Fitted),
        Column::new("drift_a_2", "1", Provenance::Fitted),
        Column::new("drift_b_2", "1", Provenance::Fitted),
        Column::new("moment_1", "1", Provenance::Fitted),
        Column::new("moment_2", "1", Provenance::Fitted),
    ]);
    let fitted: Vec<String> = [
        "lambda_hat", "drift_a_1", "drift_b_1", "drift_a_2", "drift_b_2", "moment_1", "moment_2",
    ]
    .iter()
    .map(|n| scalar(n))
    .collect();
    let col = |name: &str| -> Result<usize> {
        profile
            .column_index(name)
            .ok_or_else(|| NeldError::Config(format!("profile.tsv: missing column {name}")))
    };
    let (oi, bi, ti, mi, si) = (col("observable")?, col("bin")?, col("theta")?, col("mean")?, col("stderr")?);
    if profile.rows.is_empty() {
        return Err(NeldError::Config("profile.tsv: no data rows".into()));
    }
    for row in &profile.rows {
        let mut cells = vec![
            row[oi].clone(),
            row[bi].clone(),
            row[ti].clone(),
            row[mi].clone(),
            row[si].clone(),
        ];
        cells.extend(fitted.iter().cloned());
        report.push_row(cells);
    }
    report.write(&out_dir.join("report.tsv"))?;

    let mut long = Table::new(vec![
        Column::new("group", "name", Provenance::Measured),
        Column::new("name", "name", Provenance::Measured),
        Column::new("index", "1", Provenance::Measured),
        Column::new("value", "mixed", Provenance::Measured),
    ]);
    for row in &profile.rows {
        long.push_row(vec![
            "profile".into(),
            format!("{}_mean", row[oi]),
            row[bi].clone(),
            row[mi].clone(),
        ]);
        long.push_row(vec![
            "profile".into(),
            format!("{}_stderr", row[oi]),
            row[bi].clone(),
            row[si].clone(),
        ]);
    }
    for row in &summary.rows {
        long.push_row(vec![
            "summary".into(),
            row[qty_idx].clone(),
            "0".into(),
            row[val_idx].clone(),
        ]);
    }
    long.write(&out_dir.join("long.tsv"))?;
    Ok(())
}
