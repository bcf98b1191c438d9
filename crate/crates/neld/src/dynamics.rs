//! Integration of the flowing Langevin equations in remapped Lagrangian
//! coordinates (primary path) and remapped Eulerian coordinates
//! (cross-check path), with the end-of-period lattice remap.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{NeldError, Result};
use crate::flow::{remap_lattice, FlowSpec, LatticeFrame};
use crate::potential::{gradient, lagrangian_force, PotentialSpec};
use crate::remap::{CoordFrame, SystemState};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    EulerMaruyama,
    /// Solves the linear momentum drift exactly and discretizes only the
    /// force; the per-step stochastic integral is sampled with its exact
    /// variance, so the free-particle chain is distributionally exact.
    IntegratingFactor,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub gamma: f64,
    pub beta: f64,
    /// sqrt(2 gamma / beta), stored to keep fluctuation-dissipation explicit.
    pub sigma: f64,
    /// T / steps_per_period, exactly.
    pub dt: f64,
    pub steps_per_period: usize,
    pub n_particles: usize,
    pub potential: PotentialSpec,
    pub flow: FlowSpec,
    pub seed: u64,
    pub scheme: Scheme,
    pub frame: CoordFrame,
}

impl SimConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        gamma: f64,
        beta: f64,
        steps_per_period: usize,
        n_particles: usize,
        potential: PotentialSpec,
        flow: FlowSpec,
        seed: u64,
        scheme: Scheme,
        frame: CoordFrame,
    ) -> Result<SimConfig> {
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(NeldError::Config("sim.gamma must be positive".into()));
        }
        if beta <= 0.0 || !beta.is_finite() {
            return Err(NeldError::Config("sim.beta must be positive".into()));
        }
        if steps_per_period == 0 {
            return Err(NeldError::Config("sim.steps_per_period must be >= 1".into()));
        }
        if n_particles == 0 {
            return Err(NeldError::Config("sim.particles must be >= 1".into()));
        }
        if !matches!(frame, CoordFrame::RemappedLagrangian | CoordFrame::RemappedEulerian) {
            return Err(NeldError::Config(
                "sim.frame must be remapped-lagrangian or remapped-eulerian".into(),
            ));
        }
        Ok(SimConfig {
            gamma,
            beta,
            sigma: (2.0 * gamma / beta).sqrt(),
            dt: flow.period / steps_per_period as f64,
            steps_per_period,
            n_particles,
            potential,
            flow,
            seed,
            scheme,
            frame,
        })
    }
}

/// Particle coordinates sampled at the start of period `k`, in remapped
/// Lagrangian coordinates (which coincide with remapped Eulerian at phase 0).
#[derive(Debug, Clone)]
pub struct ChainSample {
    pub k: u64,
    pub positions: Vec<Vector3<f64>>,
    pub momenta: Vec<Vector3<f64>>,
}

#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: f64,
    pub theta: f64,
    pub positions: Vec<Vector3<f64>>,
    pub momenta: Vec<Vector3<f64>>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub chain: Vec<ChainSample>,
    pub records: Vec<StepRecord>,
}

#[derive(Debug, Clone)]
pub enum MomentumInit {
    /// i.i.d. N(0, sd^2) per component.
    Gaussian { sd: f64 },
    /// Same fixed vector for every particle.
    Fixed(Vector3<f64>),
}

impl MomentumInit {
    pub fn thermal(beta: f64) -> MomentumInit {
        MomentumInit::Gaussian { sd: (1.0 / beta).sqrt() }
    }
}

/// Default initial condition: positions uniform in the cell, momenta drawn
/// per `momentum`.
pub fn initial_state(cfg: &SimConfig, trajectory: u64, momentum: &MomentumInit) -> SystemState {
    let l0 = cfg.flow.default_l0();
    let fracs = rng::init_uniforms(cfg.seed, trajectory, cfg.n_particles);
    let positions: Vec<Vector3<f64>> = fracs.iter().map(|u| l0 * u).collect();
    let momenta = match momentum {
        MomentumInit::Gaussian { sd } => rng::init_gaussians(cfg.seed, trajectory, cfg.n_particles, *sd),
        MomentumInit::Fixed(p) => vec![*p; cfg.n_particles],
    };
    SystemState {
        coords: cfg.frame,
        positions,
        momenta,
        t: 0.0,
        frame: LatticeFrame::new(l0),
    }
}

fn require_frame(state: &SystemState, expected: CoordFrame) -> Result<()> {
    if state.coords != expected {
        return Err(NeldError::WrongFrame {
            expected: expected.to_string(),
            found: state.coords.to_string(),
        });
    }
    Ok(())
}

/// One time step of the remapped-Lagrangian equations at phase `theta`.
/// `dw` are Wiener increments, N(0, dt) per component.
pub fn step_lagrangian(
    cfg: &SimConfig,
    state: &mut SystemState,
    theta: f64,
    dw: &[Vector3<f64>],
) -> Result<()> {
    require_frame(state, CoordFrame::RemappedLagrangian)?;
    let flow = &cfg.flow;
    let dt = cfg.dt;
    let force = lagrangian_force(&cfg.potential, flow, theta, &state.frame.l0, &state.positions)?;
    match cfg.scheme {
        Scheme::EulerMaruyama => {
            for i in 0..state.positions.len() {
                let p = state.momenta[i];
                let gamma_p = cfg.gamma * p + flow.a * p;
                let noise = cfg.sigma * flow.stretch_vec(-theta, &dw[i]);
                state.positions[i] += p * dt;
                state.momenta[i] = p + (-force[i] - gamma_p) * dt + noise;
            }
        }
        Scheme::IntegratingFactor => {
            let decay = (-cfg.gamma * dt).exp();
            // Exact per-step variance of int e^{gamma s} dW, pulled back to
            // the end of the step; dw carries sd sqrt(dt).
            let zeta_per_dw =
                ((1.0 - (-2.0 * cfg.gamma * dt).exp()) / (2.0 * cfg.gamma)).sqrt() / dt.sqrt();
            // Symmetric splitting: half force kick, half drift, exact
            // friction-flow-noise update, half drift, closing half kick.
            // The force kicks vanish for V = 0, so the free-flow momentum
            // chain is distributionally exact.
            for i in 0..state.positions.len() {
                let p_half = state.momenta[i] - 0.5 * dt * force[i];
                state.positions[i] += 0.5 * dt * p_half;
                state.momenta[i] = p_half;
            }
            for i in 0..state.positions.len() {
                let noise =
                    cfg.sigma * flow.stretch_vec(-(theta + dt), &(zeta_per_dw * dw[i]));
                state.momenta[i] = decay * flow.stretch_vec(-dt, &state.momenta[i]) + noise;
                state.positions[i] += 0.5 * dt * state.momenta[i];
            }
            let force_end = lagrangian_force(
                &cfg.potential,
                flow,
                theta + dt,
                &state.frame.l0,
                &state.positions,
            )?;
            for i in 0..state.positions.len() {
                state.momenta[i] -= 0.5 * dt * force_end[i];
            }
        }
    }
    if !state.finite() {
        return Err(NeldError::NonFinite {
            context: format!("lagrangian step at theta {theta}"),
        });
    }
    Ok(())
}

/// One time step of the remapped-Eulerian equations at phase `theta`:
/// same coefficients as the absolute dynamics, constant noise.
pub fn step_eulerian(
    cfg: &SimConfig,
    state: &mut SystemState,
    theta: f64,
    dw: &[Vector3<f64>],
) -> Result<()> {
    require_frame(state, CoordFrame::RemappedEulerian)?;
    let flow = &cfg.flow;
    let dt = cfg.dt;
    let cell = flow.deformed_lattice(theta, &state.frame.l0);
    let grad = gradient(&cfg.potential, &cell, &state.positions)?;
    match cfg.scheme {
        Scheme::EulerMaruyama => {
            for i in 0..state.positions.len() {
                let q = state.positions[i];
                let p = state.momenta[i];
                state.positions[i] = q + (p + flow.a * q) * dt;
                state.momenta[i] = p + (-grad[i] - cfg.gamma * p) * dt + cfg.sigma * dw[i];
            }
        }
        Scheme::IntegratingFactor => {
            let decay = (-cfg.gamma * dt).exp();
            let zeta_per_dw =
                ((1.0 - (-2.0 * cfg.gamma * dt).exp()) / (2.0 * cfg.gamma)).sqrt() / dt.sqrt();
            // Same symmetric splitting as the Lagrangian branch; here the
            // friction update is a plain scalar decay and the cell drift
            // A q rides along with the position halves.
            for i in 0..state.positions.len() {
                let p_half = state.momenta[i] - 0.5 * dt * grad[i];
                let q = state.positions[i];
                state.positions[i] = q + 0.5 * dt * (p_half + flow.a * q);
                state.momenta[i] = p_half;
            }
            for i in 0..state.positions.len() {
                let p_new = decay * state.momenta[i] + cfg.sigma * zeta_per_dw * dw[i];
                let q = state.positions[i];
                state.positions[i] = q + 0.5 * dt * (p_new + flow.a * q);
                state.momenta[i] = p_new;
            }
            let cell_end = flow.deformed_lattice(theta + dt, &state.frame.l0);
            let grad_end = gradient(&cfg.potential, &cell_end, &state.positions)?;
            for i in 0..state.positions.len() {
                state.momenta[i] -= 0.5 * dt * grad_end[i];
            }
        }
    }
    if !state.finite() {
        return Err(NeldError::NonFinite {
            context: format!("eulerian step at theta {theta}"),
        });
    }
    Ok(())
}

/// Integrate one full period from phase 0 and apply the boundary maps:
/// lattice remap, position wrap into the initial cell, momentum
/// multiplication by `exp(T A)` (Lagrangian frame only).
pub fn advance_period(
    cfg: &SimConfig,
    state: &mut SystemState,
    trajectory: u64,
    period_index: u64,
) -> Result<ChainSample> {
    let ns = cfg.steps_per_period as u64;
    for j in 0..ns {
        let theta = j as f64 * cfg.dt;
        let dw = rng::step_gaussians(
            cfg.seed,
            trajectory,
            period_index * ns + j,
            cfg.n_particles,
            cfg.dt.sqrt(),
        );
        let stepped = match cfg.frame {
            CoordFrame::RemappedLagrangian => step_lagrangian(cfg, state, theta, &dw),
            CoordFrame::RemappedEulerian => step_eulerian(cfg, state, theta, &dw),
            _ => unreachable!("SimConfig::new validates the frame"),
        };
        stepped.map_err(|e| match e {
            NeldError::NonFinite { context } => NeldError::NonFinite {
                context: format!("step {}: {context}", period_index * ns + j),
            },
            other => other,
        })?;
    }

    // Period boundary.
    let mut frame = state.frame.clone();
    frame.theta = cfg.flow.period;
    frame = remap_lattice(&cfg.flow, &frame)?;
    let l0 = frame.l0;
    let l0_inv = l0.try_inverse().ok_or(NeldError::SingularCell)?;
    for q in state.positions.iter_mut() {
        let frac = crate::remap::wrap_unit(&(l0_inv * *q))?;
        *q = l0 * frac;
    }
    if state.coords == CoordFrame::RemappedLagrangian {
        for p in state.momenta.iter_mut() {
            *p = cfg.flow.stretch_vec(cfg.flow.period, p);
        }
    }
    state.frame = frame;
    state.t = (period_index + 1) as f64 * cfg.flow.period;

    Ok(ChainSample {
        k: period_index + 1,
        positions: state.positions.clone(),
        momenta: state.momenta.clone(),
    })
}

/// Run `n_periods` periods from `initial`, returning the period-sampled
/// chain (including the initial sample) and, for `record_stride > 0`, a
/// per-step trace at that stride.
pub fn run(
    cfg: &SimConfig,
    n_periods: u64,
    initial: SystemState,
    trajectory: u64,
    record_stride: usize,
) -> Result<Trajectory> {
    require_frame(&initial, cfg.frame)?;
    let mut state = initial;
    let mut chain = Vec::with_capacity(n_periods as usize + 1);
    chain.push(ChainSample {
        k: 0,
        positions: state.positions.clone(),
        momenta: state.momenta.clone(),
    });
    let mut records = Vec::new();
    let ns = cfg.steps_per_period as u64;

    for k in 0..n_periods {
        if record_stride > 0 {
            // Record within the period at the given step stride.
            for j in 0..ns {
                let theta = j as f64 * cfg.dt;
                if (k * ns + j) % record_stride as u64 == 0 {
                    records.push(StepRecord {
                        t: k as f64 * cfg.flow.period + theta,
                        theta,
                        positions: state.positions.clone(),
                        momenta: state.momenta.clone(),
                    });
                }
                let dw = rng::step_gaussians(
                    cfg.seed,
                    trajectory,
                    k * ns + j,
                    cfg.n_particles,
                    cfg.dt.sqrt(),
                );
                match cfg.frame {
                    CoordFrame::RemappedLagrangian => step_lagrangian(cfg, &mut state, theta, &dw)?,
                    CoordFrame::RemappedEulerian => step_eulerian(cfg, &mut state, theta, &dw)?,
                    _ => unreachable!(),
                }
            }
            // Boundary maps, shared with advance_period.
            let mut frame = state.frame.clone();
            frame.theta = cfg.flow.period;
            frame = remap_lattice(&cfg.flow, &frame)?;
            let l0_inv = frame.l0.try_inverse().ok_or(NeldError::SingularCell)?;
            for q in state.positions.iter_mut() {
                *q = frame.l0 * crate::remap::wrap_unit(&(l0_inv * *q))?;
            }
            if state.coords == CoordFrame::RemappedLagrangian {
                for p in state.momenta.iter_mut() {
                    *p = cfg.flow.stretch_vec(cfg.flow.period, p);
                }
            }
            state.frame = frame;
            state.t = (k + 1) as f64 * cfg.flow.period;
            chain.push(ChainSample {
                k: k + 1,
                positions: state.positions.clone(),
                momenta: state.momenta.clone(),
            });
        } else {
            chain.push(advance_period(cfg, &mut state, trajectory, k)?);
        }
    }
    Ok(Trajectory { chain, records })
}

/// Embarrassingly parallel ensemble with per-trajectory noise streams;
/// results are ordered by trajectory id regardless of scheduling.
pub fn run_ensemble(
    cfg: &SimConfig,
    n_periods: u64,
    n_trajectories: u64,
    momentum: &MomentumInit,
    record_stride: usize,
) -> Result<Vec<Trajectory>> {
    (0..n_trajectories)
        .into_par_iter()
        .map(|traj| {
            let init = initial_state(cfg, traj, momentum);
            run(cfg, n_periods, init, traj, record_stride).map_err(|e| match e {
                NeldError::NonFinite { context } => NeldError::NonFinite {
                    context: format!("trajectory {traj}: {context}"),
                },
                other => other,
            })
        })
        .collect()
}
