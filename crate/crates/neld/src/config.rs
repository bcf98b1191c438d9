//! Flat key-value run configuration with dotted sections.
//!
//! The format is deliberately trivial: one `key = value` pair per line,
//! `#` comments, no nesting. Keys are grouped by dotted prefixes
//! (`flow.`, `sim.`, `potential.`, `run.`) so configs diff cleanly and
//! need no parser dependency.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::analysis::Observable;
use crate::dynamics::{Scheme, SimConfig};
use crate::error::{NeldError, Result};
use crate::flow::{make_flow, FlowKind, FlowSpec};
use crate::potential::PotentialSpec;
use crate::remap::CoordFrame;

/// Everything a `run` invocation needs: the simulation parameters plus
/// ensemble size, recording, and analysis settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub n_periods: u64,
    pub n_trajectories: u64,
    /// Record every `record_stride`-th step; 0 disables step records.
    pub record_stride: usize,
    /// Fraction of the run discarded before phase-profile accumulation.
    pub burn_in_fraction: f64,
    pub phase_bins: usize,
    pub observables: Vec<Observable>,
    pub output_dir: PathBuf,
}

/// Parsed key-value pairs with tracking of which keys were consumed, so
/// unknown keys can be reported by name.
struct KeyMap {
    pairs: BTreeMap<String, String>,
    used: std::cell::RefCell<Vec<String>>,
}

impl KeyMap {
    fn parse(text: &str) -> Result<KeyMap> {
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                NeldError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(NeldError::Config(format!("line {}: empty key", lineno + 1)));
            }
            if pairs.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(NeldError::Config(format!("duplicate key {key}")));
            }
        }
        Ok(KeyMap { pairs, used: std::cell::RefCell::new(Vec::new()) })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().push(key.to_string());
        self.pairs.get(key).map(|s| s.as_str())
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| NeldError::Config(format!("missing required key {key}")))
    }

    fn parse_f64(&self, key: &str) -> Result<f64> {
        let raw = self.require(key)?;
        raw.parse::<f64>()
            .map_err(|_| NeldError::Config(format!("{key}: not a number: {raw}")))
    }

    fn parse_f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse::<f64>()
                .map_err(|_| NeldError::Config(format!("{key}: not a number: {raw}"))),
        }
    }

    fn parse_u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse::<u64>()
                .map_err(|_| NeldError::Config(format!("{key}: not a nonnegative integer: {raw}"))),
        }
    }

    fn unknown_keys(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.pairs
            .keys()
            .filter(|k| !used.iter().any(|u| u == *k))
            .cloned()
            .collect()
    }
}

/// Parse a full run configuration from config-file text. `seed_override`
/// and `out_override` come from the CLI flags and win over file values.
pub fn parse_run_config(
    text: &str,
    seed_override: Option<u64>,
    out_override: Option<&Path>,
) -> Result<RunConfig> {
    let map = KeyMap::parse(text)?;

    let flow = parse_flow(&map)?;
    let potential = parse_potential(&map)?;

    let scheme = match map.get("sim.scheme").unwrap_or("integrating_factor") {
        "euler_maruyama" => Scheme::EulerMaruyama,
        "integrating_factor" => Scheme::IntegratingFactor,
        other => {
            return Err(NeldError::Config(format!(
                "sim.scheme: unknown scheme {other} (euler_maruyama | integrating_factor)"
            )))
        }
    };
    let frame = match map.get("sim.frame").unwrap_or("lagrangian") {
        "lagrangian" => CoordFrame::RemappedLagrangian,
        "eulerian" => CoordFrame::RemappedEulerian,
        other => {
            return Err(NeldError::Config(format!(
                "sim.frame: unknown frame {other} (lagrangian | eulerian)"
            )))
        }
    };
    let seed = match seed_override {
        Some(s) => {
            map.get("sim.seed");
            s
        }
        None => map.parse_u64_or("sim.seed", 0)?,
    };
    let steps_per_period = map.parse_u64_or("sim.steps_per_period", 64)? as usize;
    let n_particles = map.parse_u64_or("sim.n_particles", 1)? as usize;

    let sim = SimConfig::new(
        map.parse_f64("sim.gamma")?,
        map.parse_f64("sim.beta")?,
        steps_per_period,
        n_particles,
        potential,
        flow,
        seed,
        scheme,
        frame,
    )?;

    let n_periods = map.parse_u64_or("run.n_periods", 100)?;
    let n_trajectories = map.parse_u64_or("run.n_trajectories", 1)?;
    if n_trajectories < 1 {
        return Err(NeldError::Config("run.n_trajectories must be >= 1".into()));
    }
    let record_stride = map.parse_u64_or("run.record_stride", 1)? as usize;
    let burn_in_fraction = map.parse_f64_or("run.burn_in_fraction", 0.1)?;
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(NeldError::Config(
            "run.burn_in_fraction must be in [0, 1)".into(),
        ));
    }
    let phase_bins = map.parse_u64_or("run.phase_bins", 16)? as usize;
    if phase_bins == 0 {
        return Err(NeldError::Config("run.phase_bins must be >= 1".into()));
    }

    let mut observables = Vec::new();
    for name in map
        .get("run.observables")
        .unwrap_or("psq")
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
    {
        let obs = Observable::from_name(name).ok_or_else(|| {
            NeldError::Config(format!("run.observables: unknown observable {name}"))
        })?;
        observables.push(obs);
    }
    if observables.is_empty() {
        return Err(NeldError::Config("run.observables: list is empty".into()));
    }

    let output_dir = match out_override {
        Some(p) => {
            map.get("run.output_dir");
            p.to_path_buf()
        }
        None => PathBuf::from(map.get("run.output_dir").unwrap_or("out")),
    };

    let unknown = map.unknown_keys();
    if !unknown.is_empty() {
        return Err(NeldError::Config(format!(
            "unknown keys: {}",
            unknown.join(", ")
        )));
    }

    Ok(RunConfig {
        sim,
        n_periods,
        n_trajectories,
        record_stride,
        burn_in_fraction,
        phase_bins,
        observables,
        output_dir,
    })
}

fn parse_flow(map: &KeyMap) -> Result<FlowSpec> {
    match map.require("flow.kind")? {
        "rest" => {
            map.get("flow.rate");
            Ok(FlowSpec::rest())
        }
        "shear" => make_flow(FlowKind::Shear, map.parse_f64("flow.rate")?),
        "pef" => make_flow(FlowKind::PlanarElongation, map.parse_f64("flow.rate")?),
        other => Err(NeldError::Config(format!(
            "flow.kind: unknown kind {other} (rest | shear | pef)"
        ))),
    }
}

fn parse_potential(map: &KeyMap) -> Result<PotentialSpec> {
    match map.get("potential.kind").unwrap_or("cosine") {
        "zero" => Ok(PotentialSpec::Zero),
        "cosine" => {
            let c = map.parse_f64_or("potential.amplitude", 0.5)?;
            Ok(PotentialSpec::fractional_cosine(vec![
                ([1, 0, 0], c),
                ([0, 1, 0], c),
                ([0, 0, 1], c),
            ]))
        }
        "pair" => {
            let depth = map.parse_f64_or("potential.depth", 1.0)?;
            let cutoff = map.parse_f64_or("potential.cutoff", 0.4)?;
            if depth <= 0.0 || cutoff <= 0.0 {
                return Err(NeldError::Config(
                    "potential.depth and potential.cutoff must be positive".into(),
                ));
            }
            Ok(PotentialSpec::smooth_pair(depth, cutoff))
        }
        other => Err(NeldError::Config(format!(
            "potential.kind: unknown kind {other} (zero | cosine | pair)"
        ))),
    }
}

/// Load and parse a config file.
pub fn load_run_config(
    path: &Path,
    seed_override: Option<u64>,
    out_override: Option<&Path>,
) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_run_config(&text, seed_override, out_override)
}
