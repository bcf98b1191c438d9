//! Estimators for the convergence theory: Lyapunov drift of the
//! period-sampled chain, generator evaluation on smooth observables,
//! phase-resolved limit-cycle profiles, exponential convergence rates,
//! and long-run averages.

use nalgebra::Vector3;

use crate::dynamics::{ChainSample, SimConfig, StepRecord, Trajectory};
use crate::error::{NeldError, Result};
use crate::potential::gradient;

/// Named observables available to the run config and the report tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// Constant 1 (marginal normalization check).
    One,
    /// Total squared momentum, summed over particles.
    MomentumSq,
    /// Sum of p_x over particles.
    Px,
    /// Sum of p_x p_y over particles.
    PxPy,
    /// Mean squared momentum per degree of freedom.
    KineticPerDof,
}

impl Observable {
    pub fn from_name(name: &str) -> Option<Observable> {
        match name {
            "one" => Some(Observable::One),
            "psq" => Some(Observable::MomentumSq),
            "px" => Some(Observable::Px),
            "pxpy" => Some(Observable::PxPy),
            "ke_per_dof" => Some(Observable::KineticPerDof),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Observable::One => "one",
            Observable::MomentumSq => "psq",
            Observable::Px => "px",
            Observable::PxPy => "pxpy",
            Observable::KineticPerDof => "ke_per_dof",
        }
    }

    /// Unit string for output-table headers.
    pub fn unit(&self) -> &'static str {
        match self {
            Observable::One => "1",
            Observable::MomentumSq => "momentum^2",
            Observable::Px => "momentum",
            Observable::PxPy => "momentum^2",
            Observable::KineticPerDof => "momentum^2",
        }
    }

    pub fn eval(&self, momenta: &[Vector3<f64>]) -> f64 {
        match self {
            Observable::One => 1.0,
            Observable::MomentumSq => momenta.iter().map(|p| p.norm_squared()).sum(),
            Observable::Px => momenta.iter().map(|p| p.x).sum(),
            Observable::PxPy => momenta.iter().map(|p| p.x * p.y).sum(),
            Observable::KineticPerDof => {
                momenta.iter().map(|p| p.norm_squared()).sum::<f64>()
                    / (3.0 * momenta.len() as f64)
            }
        }
    }

    /// Weight class: smallest n with |f| bounded by a multiple of
    /// `1 + |p|^{2n}`.
    pub fn weight_class(&self) -> u32 {
        1
    }
}

/// Lyapunov function `1 + |p|^{2n}` with the total momentum norm over all
/// particles.
pub fn lyapunov(n: u32, momenta: &[Vector3<f64>]) -> f64 {
    let p2: f64 = momenta.iter().map(|p| p.norm_squared()).sum();
    1.0 + p2.powi(n as i32)
}

/// General-exponent variant `1 + |p|^m`, covering both exponent
/// conventions (`m = 2n` and `m = n`).
pub fn lyapunov_exponent(m: f64, momenta: &[Vector3<f64>]) -> f64 {
    let p2: f64 = momenta.iter().map(|p| p.norm_squared()).sum();
    1.0 + p2.powf(m / 2.0)
}

/// Empirical geometric-drift estimate for the period-sampled chain.
///
/// Bins consecutive pairs by the current Lyapunov value, estimates the
/// conditional mean of the next value per bin, and returns the line
/// `a K + b` that dominates every bin mean plus one standard error.
/// `a < 1` signals that the drift condition holds on the sampled data.
pub fn drift_estimate(chain: &[ChainSample], n: u32) -> Result<(f64, f64)> {
    if chain.len() < 1000 {
        return Err(NeldError::InsufficientData {
            context: format!("drift_estimate needs >= 1000 samples, got {}", chain.len()),
        });
    }
    let mut pairs: Vec<(f64, f64)> = chain
        .windows(2)
        .map(|w| (lyapunov(n, &w[0].momenta), lyapunov(n, &w[1].momenta)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let spread = pairs.last().unwrap().0 - pairs.first().unwrap().0;
    if spread <= 1e-12 {
        return Err(NeldError::InsufficientData {
            context: "drift_estimate: no spread in Lyapunov values".to_string(),
        });
    }

    let n_bins = 20.min(pairs.len() / 50);
    let per_bin = pairs.len() / n_bins;
    let mut pts = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let lo = b * per_bin;
        let hi = if b + 1 == n_bins { pairs.len() } else { lo + per_bin };
        let m = (hi - lo) as f64;
        let x = pairs[lo..hi].iter().map(|p| p.0).sum::<f64>() / m;
        let y = pairs[lo..hi].iter().map(|p| p.1).sum::<f64>() / m;
        let var = pairs[lo..hi].iter().map(|p| (p.1 - y).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        pts.push((x, y + (var / m).sqrt()));
    }

    // Least-squares slope through the padded bin means, then lift the
    // intercept so the line dominates every bin.
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 1e-12 {
        return Err(NeldError::InsufficientData {
            context: "drift_estimate: degenerate bin spread".to_string(),
        });
    }
    let a = (sxy / sxx).max(0.0);
    let b = pts
        .iter()
        .map(|p| p.1 - a * p.0)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((a, b))
}

/// Smooth observable with the analytic derivatives the generator needs.
pub trait SmoothObservable {
    fn value(&self, q: &[Vector3<f64>], p: &[Vector3<f64>]) -> f64;
    fn grad_q(&self, q: &[Vector3<f64>], p: &[Vector3<f64>]) -> Vec<Vector3<f64>>;
    fn grad_p(&self, q: &[Vector3<f64>], p: &[Vector3<f64>]) -> Vec<Vector3<f64>>;
    fn laplacian_p(&self, q: &[Vector3<f64>], p: &[Vector3<f64>]) -> f64;
}

pub struct ConstantObs(pub f64);

impl SmoothObservable for ConstantObs {
    fn value(&self, _q: &[Vector3<f64>], _p: &[Vector3<f64>]) -> f64 {
        self.0
    }
    fn grad_q(&self, q: &[Vector3<f64>], _p: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        vec![Vector3::zeros(); q.len()]
    }
    fn grad_p(&self, q: &[Vector3<f64>], _p: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        vec![Vector3::zeros(); q.len()]
    }
    fn laplacian_p(&self, _q: &[Vector3<f64>], _p: &[Vector3<f64>]) -> f64 {
        0.0
    }
}

pub struct MomentumSquaredObs;

impl SmoothObservable for MomentumSquaredObs {
    fn value(&self, _q: &[Vector3<f64>], p: &[Vector3<f64>]) -> f64 {
        p.iter().map(|v| v.norm_squared()).sum()
    }
    fn grad_q(&self, q: &[Vector3<f64>], _p: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        vec![Vector3::zeros(); q.len()]
    }
    fn grad_p(&self, _q: &[Vector3<f64>], p: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        p.iter().map(|v| 2.0 * v).collect()
    }
    fn laplacian_p(&self, _q: &[Vector3<f64>], p: &[Vector3<f64>]) -> f64 {
        2.0 * 3.0 * p.len() as f64
    }
}

/// `1 + |p|^m` over the stacked momentum vector, for a real exponent
/// `m >= 2` (derivatives are singular at p = 0 for smaller exponents).
pub struct LyapunovObs {
    pub m: f64,
}

impl SmoothObservable for LyapunovObs {
    fn value(&self, _q: &[Vector3<f64>], p: &[Vector3<f64>]) -> f64 {
        lyapunov_exponent(self.m, p)
    }
    fn grad_q(&self, q: &[Vector3<f64>], _p: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        vec![Vector3::zeros(); q.len()]
    }
    fn grad_p(&self, _q: &[Vector3<f64>], p: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        let p2: f64 = p.iter().map(|v| v.norm_squared()).sum();
        if p2 == 0.0 {
            return vec![Vector3::zeros(); p.len()];
        }
        let c = self.m * p2.powf(self.m / 2.0 - 1.0);
        p.iter().map(|v| c * v).collect()
    }
    fn laplacian_p(&self, _q: &[Vector3<f64>], p: &[Vector3<f64>]) -> f64 {
        let p2: f64 = p.iter().map(|v| v.norm_squared()).sum();
        let dim = 3.0 * p.len() as f64;
        if p2 == 0.0 {
            return 0.0;
        }
        self.m * (self.m + dim - 2.0) * p2.powf(self.m / 2.0 - 1.0)
    }
}

/// Apply the remapped-Eulerian generator to `f` at a phase-space point:
/// `<p + Aq, grad_q f> + <-grad V(q), grad_p f> - gamma <p, grad_p f>
///  + (sigma^2/2) lap_p f`.
pub fn generator_apply(
    cfg: &SimConfig,
    theta: f64,
    q_hat: &[Vector3<f64>],
    p_hat: &[Vector3<f64>],
    f: &dyn SmoothObservable,
) -> Result<f64> {
    let cell = cfg.flow.deformed_lattice(theta, &cfg.flow.default_l0());
    let grad_v = gradient(&cfg.potential, &cell, q_hat)?;
    let gq = f.grad_q(q_hat, p_hat);
    let gp = f.grad_p(q_hat, p_hat);
    let mut out = 0.0;
    for i in 0..q_hat.len() {
        out += (p_hat[i] + cfg.flow.a * q_hat[i]).dot(&gq[i]);
        out += (-grad_v[i]).dot(&gp[i]);
        out -= cfg.gamma * p_hat[i].dot(&gp[i]);
    }
    out += 0.5 * cfg.sigma * cfg.sigma * f.laplacian_p(q_hat, p_hat);
    Ok(out)
}

/// Per-phase-bin statistics approximating the limit cycle.
#[derive(Debug, Clone)]
pub struct PhaseProfile {
    pub n_bins: usize,
    pub period: f64,
    pub count: Vec<u64>,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl PhaseProfile {
    pub fn new(n_bins: usize, period: f64) -> PhaseProfile {
        PhaseProfile {
            n_bins,
            period,
            count: vec![0; n_bins],
            sum: vec![0.0; n_bins],
            sum_sq: vec![0.0; n_bins],
        }
    }

    pub fn add(&mut self, theta: f64, value: f64) {
        let mut b = ((theta / self.period) * self.n_bins as f64).floor() as usize;
        if b >= self.n_bins {
            b = self.n_bins - 1;
        }
        self.count[b] += 1;
        self.sum[b] += value;
        self.sum_sq[b] += value * value;
    }

    pub fn mean(&self, bin: usize) -> f64 {
        self.sum[bin] / self.count[bin] as f64
    }

    pub fn stderr(&self, bin: usize) -> f64 {
        let n = self.count[bin] as f64;
        if n < 2.0 {
            return f64::INFINITY;
        }
        let mean = self.mean(bin);
        let var = (self.sum_sq[bin] / n - mean * mean).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Phase-binned observable means over an ensemble of recorded
/// trajectories, discarding an initial burn-in.
pub fn limit_cycle(
    trajectories: &[Trajectory],
    observable: Observable,
    n_bins: usize,
    period: f64,
    burn_in_time: f64,
) -> Result<PhaseProfile> {
    let mut profile = PhaseProfile::new(n_bins, period);
    for traj in trajectories {
        for rec in traj.records.iter().filter(|r| r.t >= burn_in_time) {
            profile.add(rec.theta, observable.eval(&rec.momenta));
        }
    }
    if profile.count.iter().any(|&c| c < 2) {
        return Err(NeldError::InsufficientData {
            context: "limit_cycle: empty phase bin".to_string(),
        });
    }
    Ok(profile)
}

/// One point of an ensemble-difference decay curve.
#[derive(Debug, Clone, Copy)]
pub struct DecayPoint {
    pub t: f64,
    pub mean_a: f64,
    pub se_a: f64,
    pub mean_b: f64,
    pub se_b: f64,
}

/// Per-period ensemble means of an observable over the sampled chains of
/// two ensembles recorded on the same period grid.
pub fn ensemble_chain_series(
    ens_a: &[Trajectory],
    ens_b: &[Trajectory],
    observable: Observable,
    period: f64,
) -> Vec<DecayPoint> {
    let n_periods = ens_a
        .iter()
        .chain(ens_b.iter())
        .map(|t| t.chain.len())
        .min()
        .unwrap_or(0);
    (0..n_periods)
        .map(|k| {
            let (ma, sa) = mean_se(ens_a.iter().map(|t| observable.eval(&t.chain[k].momenta)));
            let (mb, sb) = mean_se(ens_b.iter().map(|t| observable.eval(&t.chain[k].momenta)));
            DecayPoint {
                t: k as f64 * period,
                mean_a: ma,
                se_a: sa,
                mean_b: mb,
                se_b: sb,
            }
        })
        .collect()
}

/// Like [`ensemble_chain_series`] but on the per-step records, giving
/// sub-period time resolution. Both ensembles must share the recording
/// grid (same dt and stride).
pub fn ensemble_record_series(
    ens_a: &[Trajectory],
    ens_b: &[Trajectory],
    observable: Observable,
) -> Vec<DecayPoint> {
    let n_records = ens_a
        .iter()
        .chain(ens_b.iter())
        .map(|t| t.records.len())
        .min()
        .unwrap_or(0);
    (0..n_records)
        .map(|i| {
            let t = ens_a[0].records[i].t;
            let (ma, sa) = mean_se(ens_a.iter().map(|tr| observable.eval(&tr.records[i].momenta)));
            let (mb, sb) = mean_se(ens_b.iter().map(|tr| observable.eval(&tr.records[i].momenta)));
            DecayPoint { t, mean_a: ma, se_a: sa, mean_b: mb, se_b: sb }
        })
        .collect()
}

fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let vals: Vec<f64> = values.collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Fit `log |mean_a - mean_b| = log C - lambda t` over the window where the
/// difference exceeds three times its Monte-Carlo noise floor.
pub fn convergence_rate(series: &[DecayPoint]) -> Result<(f64, f64)> {
    let mut pts = Vec::new();
    for p in series {
        let delta = (p.mean_a - p.mean_b).abs();
        let floor = 3.0 * (p.se_a * p.se_a + p.se_b * p.se_b).sqrt();
        if delta > floor && delta > 0.0 {
            pts.push((p.t, delta.ln()));
        } else if !pts.is_empty() {
            break;
        }
    }
    if pts.len() < 3 {
        return Err(NeldError::NoDecayWindow);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(NeldError::NoDecayWindow);
    }
    let slope = sxy / sxx;
    let r2 = (sxy * sxy) / (sxx * syy);
    Ok((-slope, r2))
}

/// Running trapezoid average of an observable along one recorded
/// trajectory, with a split-half consistency diagnostic.
#[derive(Debug, Clone)]
pub struct LlnSeries {
    pub times: Vec<f64>,
    pub running: Vec<f64>,
    pub final_average: f64,
    pub first_half: f64,
    pub second_half: f64,
}

pub fn lln_average(records: &[StepRecord], observable: Observable) -> LlnSeries {
    let values: Vec<f64> = records.iter().map(|r| observable.eval(&r.momenta)).collect();
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let mut running = Vec::with_capacity(values.len());
    let mut integral = 0.0;
    running.push(values.first().copied().unwrap_or(0.0));
    for i in 1..values.len() {
        integral += 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
        running.push(integral / (times[i] - times[0]));
    }
    let final_average = *running.last().unwrap_or(&0.0);
    let half = values.len() / 2;
    let avg = |lo: usize, hi: usize| -> f64 {
        if hi <= lo + 1 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in (lo + 1)..hi {
            s += 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
        }
        s / (times[hi - 1] - times[lo])
    };
    LlnSeries {
        first_half: avg(0, half.max(2)),
        second_half: avg(half, values.len()),
        times,
        running,
        final_average,
    }
}

/// Empirical moment bound: estimate of `E[K_n]` over the chain after
/// burn-in, with a stabilization flag (last quarter within 10% of the
/// full-run estimate).
pub fn moment_check(chain: &[ChainSample], n: u32) -> Result<(f64, bool)> {
    if chain.len() < 1000 {
        return Err(NeldError::InsufficientData {
            context: format!("moment_check needs >= 1000 samples, got {}", chain.len()),
        });
    }
    let vals: Vec<f64> = chain.iter().map(|s| lyapunov(n, &s.momenta)).collect();
    let full = vals.iter().sum::<f64>() / vals.len() as f64;
    let q = vals.len() * 3 / 4;
    let last = vals[q..].iter().sum::<f64>() / (vals.len() - q) as f64;
    let bounded = (last - full).abs() <= 0.1 * full.abs();
    Ok((full, bounded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        advance_period, initial_state, run, run_ensemble, MomentumInit, Scheme, SimConfig,
    };
    use crate::flow::{make_flow, FlowKind, FlowSpec};
    use crate::potential::PotentialSpec;
    use crate::remap::CoordFrame;
    use approx::assert_abs_diff_eq;

    fn free_cfg(seed: u64) -> SimConfig {
        SimConfig::new(
            1.0,
            1.0,
            16,
            1,
            PotentialSpec::Zero,
            make_flow(FlowKind::Shear, 1.0).unwrap(),
            seed,
            Scheme::IntegratingFactor,
            CoordFrame::RemappedLagrangian,
        )
        .unwrap()
    }

    #[test]
    fn lyapunov_examples() {
        let p = vec![Vector3::new(1.0, 2.0, 2.0)];
        assert_eq!(lyapunov(1, &[Vector3::zeros()]), 1.0);
        assert_eq!(lyapunov(1, &p), 10.0);
        assert_eq!(lyapunov(2, &p), 82.0);
        assert_abs_diff_eq!(lyapunov_exponent(2.0, &p), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lyapunov_exponent(1.0, &p), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn generator_annihilates_constants() {
        let cfg = free_cfg(0);
        let q = vec![Vector3::new(0.3, 0.2, 0.4)];
        let p = vec![Vector3::new(1.0, -1.0, 0.5)];
        let v = generator_apply(&cfg, 0.3, &q, &p, &ConstantObs(5.0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn generator_momentum_squared_hand_formula() {
        // A = 0, V = 0: U |p|^2 = -2 gamma |p|^2 + 3 d sigma^2.
        let cfg = SimConfig::new(
            1.5,
            2.0,
            16,
            2,
            PotentialSpec::Zero,
            FlowSpec::rest(),
            0,
            Scheme::EulerMaruyama,
            CoordFrame::RemappedLagrangian,
        )
        .unwrap();
        let q = vec![Vector3::zeros(); 2];
        let p = vec![Vector3::new(1.0, 0.5, -0.25), Vector3::new(0.0, 2.0, 1.0)];
        let psq: f64 = p.iter().map(|v| v.norm_squared()).sum();
        let got = generator_apply(&cfg, 0.0, &q, &p, &MomentumSquaredObs).unwrap();
        let want = -2.0 * cfg.gamma * psq + 3.0 * 2.0 * cfg.sigma * cfg.sigma;
        assert_abs_diff_eq!(got, want, epsilon = 1e-12);
    }

    #[test]
    fn generator_lyapunov_drift_rate() {
        // For K = 1 + |p|^m the fitted asymptotic rate approaches m gamma.
        let cfg = free_cfg(0);
        for m in [2.0, 4.0] {
            let obs = LyapunovObs { m };
            let mut worst_ratio = f64::NEG_INFINITY;
            for r in [10.0, 15.0, 20.0] {
                let p = vec![Vector3::new(r / 3.0_f64.sqrt(), r / 3.0_f64.sqrt(), r / 3.0_f64.sqrt())];
                let q = vec![Vector3::zeros()];
                let k = obs.value(&q, &p);
                let uk = generator_apply(&cfg, 0.1, &q, &p, &obs).unwrap();
                worst_ratio = worst_ratio.max(uk / k);
            }
            // Empirical rate: at least 80% of m gamma far from the origin.
            assert!(worst_ratio <= -0.8 * m * cfg.gamma, "m {m}: ratio {worst_ratio}");
        }
    }

    #[test]
    fn generator_weak_taylor_consistency() {
        // (E[f(X_h)] - f(x))/h -> U f at first order in h, by Monte Carlo
        // over one Euler-Maruyama step.
        let cfg = SimConfig::new(
            1.0,
            1.0,
            256,
            1,
            PotentialSpec::default_cosine(),
            make_flow(FlowKind::Shear, 1.0).unwrap(),
            99,
            Scheme::EulerMaruyama,
            CoordFrame::RemappedEulerian,
        )
        .unwrap();
        let q0 = Vector3::new(0.31, 0.47, 0.11);
        let p0 = Vector3::new(0.8, -0.4, 0.2);
        let obs = MomentumSquaredObs;
        let expected = generator_apply(&cfg, 0.0, &[q0], &[p0], &obs).unwrap();
        let h = cfg.dt;
        let n_mc = 200_000u64;
        let mut acc = 0.0;
        for i in 0..n_mc {
            let mut state = crate::remap::SystemState {
                coords: CoordFrame::RemappedEulerian,
                positions: vec![q0],
                momenta: vec![p0],
                t: 0.0,
                frame: crate::flow::LatticeFrame::new(cfg.flow.default_l0()),
            };
            let dw = crate::rng::step_gaussians(cfg.seed, i, 0, 1, h.sqrt());
            crate::dynamics::step_eulerian(&cfg, &mut state, 0.0, &dw).unwrap();
            acc += obs.value(&state.positions, &state.momenta);
        }
        let f0 = obs.value(&[q0], &[p0]);
        let rate = (acc / n_mc as f64 - f0) / h;
        // MC error ~ sigma 2|p| sqrt(h)/sqrt(n) /h; allow order-h bias too.
        assert!((rate - expected).abs() < 0.5, "rate {rate} vs {expected}");
    }

    #[test]
    fn drift_estimate_contracts_for_free_chain() {
        let cfg = free_cfg(21);
        let mut state = initial_state(&cfg, 0, &MomentumInit::thermal(cfg.beta));
        let mut chain = Vec::new();
        for k in 0..6000u64 {
            chain.push(advance_period(&cfg, &mut state, 0, k).unwrap());
        }
        let (a, b) = drift_estimate(&chain, 1).unwrap();
        // Analytic contraction oracle: slope e^{-2 gamma T} ~ 0.135.
        assert!(a < 1.0, "a = {a}");
        assert!(a < (-2.0 * cfg.gamma * cfg.flow.period).exp() + 0.25);
        assert!(b > 0.0);
    }

    #[test]
    fn drift_estimate_degenerate_input() {
        let sample = ChainSample {
            k: 0,
            positions: vec![Vector3::zeros()],
            momenta: vec![Vector3::new(1.0, 0.0, 0.0)],
        };
        let chain = vec![sample; 2000];
        assert!(matches!(
            drift_estimate(&chain, 1),
            Err(NeldError::InsufficientData { .. })
        ));
        assert!(matches!(
            drift_estimate(&chain[..10], 1),
            Err(NeldError::InsufficientData { .. })
        ));
    }

    #[test]
    fn limit_cycle_constant_observable_is_one() {
        let cfg = free_cfg(3);
        let ens = run_ensemble(&cfg, 12, 8, &MomentumInit::thermal(1.0), 1).unwrap();
        let profile = limit_cycle(&ens, Observable::One, 8, cfg.flow.period, 2.0).unwrap();
        for b in 0..profile.n_bins {
            assert_eq!(profile.mean(b), 1.0);
        }
    }

    #[test]
    fn limit_cycle_flat_at_equilibrium() {
        let cfg = SimConfig::new(
            1.0,
            1.0,
            16,
            2,
            PotentialSpec::Zero,
            FlowSpec::rest(),
            17,
            Scheme::IntegratingFactor,
            CoordFrame::RemappedLagrangian,
        )
        .unwrap();
        let ens = run_ensemble(&cfg, 60, 64, &MomentumInit::thermal(1.0), 1).unwrap();
        let profile = limit_cycle(&ens, Observable::MomentumSq, 8, cfg.flow.period, 10.0).unwrap();
        let expect = 3.0 * 2.0 / cfg.beta;
        for b in 0..profile.n_bins {
            let dev = (profile.mean(b) - expect).abs();
            assert!(dev <= 4.0 * profile.stderr(b), "bin {b}: {} +- {}", profile.mean(b), profile.stderr(b));
        }
    }

    #[test]
    fn convergence_rate_recovers_ou_relaxation() {
        // V = 0, A = 0, observable p_x from +2 vs -2: the mean decays as
        // e^{-gamma t}.
        let mk = |seed: u64| {
            SimConfig::new(
                1.0,
                1.0,
                16,
                1,
                PotentialSpec::Zero,
                FlowSpec::rest(),
                seed,
                Scheme::IntegratingFactor,
                CoordFrame::RemappedLagrangian,
            )
            .unwrap()
        };
        let cfg_a = mk(100);
        let cfg_b = mk(200);
        let ens_a = run_ensemble(
            &cfg_a,
            8,
            4000,
            &MomentumInit::Fixed(Vector3::new(2.0, 0.0, 0.0)),
            0,
        )
        .unwrap();
        let ens_b = run_ensemble(
            &cfg_b,
            8,
            4000,
            &MomentumInit::Fixed(Vector3::new(-2.0, 0.0, 0.0)),
            0,
        )
        .unwrap();
        let series = ensemble_chain_series(&ens_a, &ens_b, Observable::Px, cfg_a.flow.period);
        let (lambda, r2) = convergence_rate(&series).unwrap();
        assert!((lambda - 1.0).abs() < 0.1, "lambda {lambda}");
        assert!(r2 >= 0.9, "r2 {r2}");
    }

    #[test]
    fn convergence_rate_identical_ensembles() {
        let cfg = free_cfg(5);
        let ens = run_ensemble(&cfg, 6, 200, &MomentumInit::thermal(1.0), 0).unwrap();
        let series = ensemble_chain_series(&ens, &ens, Observable::Px, cfg.flow.period);
        assert!(matches!(convergence_rate(&series), Err(NeldError::NoDecayWindow)));
    }

    #[test]
    fn lln_constant_observable() {
        let cfg = free_cfg(9);
        let traj = run(
            &cfg,
            10,
            initial_state(&cfg, 0, &MomentumInit::thermal(1.0)),
            0,
            1,
        )
        .unwrap();
        let series = lln_average(&traj.records, Observable::One);
        for v in series.running.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn moment_check_free_chain() {
        let cfg = free_cfg(30);
        let mut state = initial_state(&cfg, 0, &MomentumInit::thermal(cfg.beta));
        let mut chain = Vec::new();
        for k in 0..8000u64 {
            chain.push(advance_period(&cfg, &mut state, 0, k).unwrap());
        }
        // Fixed point of the momentum recursion: per-component variance
        // 1/beta, so E[K_1] = 1 + 3/beta for one particle.
        let (k1, bounded) = moment_check(&chain[800..], 1).unwrap();
        assert!(bounded);
        assert!((k1 - 4.0).abs() < 0.3, "E[K_1] = {k1}");
        // Gaussian fourth-moment oracle: E|p|^4 = 15/beta^2 for 3 iid
        // components, plus cross terms: (3d)(3d+2)/beta^2 with d=1 -> 15.
        let (k2, _) = moment_check(&chain[800..], 2).unwrap();
        assert!((k2 - 16.0).abs() < 3.0, "E[K_2] = {k2}");
        assert!(matches!(
            moment_check(&[], 1),
            Err(NeldError::InsufficientData { .. })
        ));
    }
}
