//! Cell-periodic potentials with bounded, analytic gradients.
//!
//! Potentials are defined in fractional coordinates of the current cell, so
//! they stay exactly periodic under the deforming lattice and the
//! automorphism remap acts as a symmetry (a lattice basis change).

use nalgebra::{Matrix3, Vector3};

use crate::error::{NeldError, Result};
use crate::flow::{cell_quality, FlowSpec};

pub const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone)]
pub enum PotentialSpec {
    Zero,
    /// Sum of cosine modes in fractional coordinates:
    /// `V = sum_i sum_m c_m cos(2 pi m . (cell^{-1} q_i))`.
    FractionalCosine {
        modes: Vec<([i64; 3], f64)>,
        grad_bound: f64,
    },
    /// Compactly supported C^2 polynomial bump pair potential
    /// `phi(r) = depth (1 - (r/cutoff)^2)^3` on minimum-image distances.
    SmoothPair {
        depth: f64,
        cutoff: f64,
        grad_bound: f64,
    },
}

impl PotentialSpec {
    pub fn fractional_cosine(modes: Vec<([i64; 3], f64)>) -> PotentialSpec {
        // sup|grad| per mode is 2 pi |c| |cell^{-T} m|; the factor 4 covers
        // cell deformation within a remapped period.
        let bound: f64 = modes
            .iter()
            .map(|(m, c)| {
                let mm = Vector3::new(m[0] as f64, m[1] as f64, m[2] as f64).norm();
                TAU * c.abs() * mm
            })
            .sum();
        PotentialSpec::FractionalCosine {
            modes,
            grad_bound: 4.0 * bound,
        }
    }

    /// Default test potential: one mode per axis with amplitude 0.5.
    pub fn default_cosine() -> PotentialSpec {
        PotentialSpec::fractional_cosine(vec![
            ([1, 0, 0], 0.5),
            ([0, 1, 0], 0.5),
            ([0, 0, 1], 0.5),
        ])
    }

    pub fn smooth_pair(depth: f64, cutoff: f64) -> PotentialSpec {
        // sup|phi'| = 6 depth/cutoff * max_u u(1-u^2)^2; generous neighbor
        // multiplicity factor for the array bound.
        let per_pair = 6.0 * depth.abs() / cutoff * 0.2863;
        PotentialSpec::SmoothPair {
            depth,
            cutoff,
            grad_bound: 16.0 * per_pair,
        }
    }

    pub fn grad_bound(&self) -> f64 {
        match self {
            PotentialSpec::Zero => 1.0,
            PotentialSpec::FractionalCosine { grad_bound, .. }
            | PotentialSpec::SmoothPair { grad_bound, .. } => *grad_bound,
        }
    }
}

fn checked_inverse(cell: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    if cell.determinant().abs() < 1e-12 {
        return Err(NeldError::SingularCell);
    }
    cell.try_inverse().ok_or(NeldError::SingularCell)
}

/// Minimum-image displacement of `delta` under `cell`. Requires the caller
/// to keep interaction ranges under half the cell's minimum image distance.
fn min_image_disp(cell: &Matrix3<f64>, inv: &Matrix3<f64>, delta: &Vector3<f64>) -> Vector3<f64> {
    let s = (inv * delta).map(|x| x - x.round());
    let mut best = cell * s;
    let mut best_n = best.norm_squared();
    for i in -1i64..=1 {
        for j in -1i64..=1 {
            for k in -1i64..=1 {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                let cand = cell * (s + Vector3::new(i as f64, j as f64, k as f64));
                let n = cand.norm_squared();
                if n < best_n {
                    best_n = n;
                    best = cand;
                }
            }
        }
    }
    best
}

pub fn value(spec: &PotentialSpec, cell: &Matrix3<f64>, positions: &[Vector3<f64>]) -> Result<f64> {
    match spec {
        PotentialSpec::Zero => Ok(0.0),
        PotentialSpec::FractionalCosine { modes, .. } => {
            let inv = checked_inverse(cell)?;
            let mut v = 0.0;
            for q in positions {
                let f = inv * q;
                for (m, c) in modes {
                    let phase = TAU * (m[0] as f64 * f.x + m[1] as f64 * f.y + m[2] as f64 * f.z);
                    v += c * phase.cos();
                }
            }
            Ok(v)
        }
        PotentialSpec::SmoothPair { depth, cutoff, .. } => {
            let inv = checked_inverse(cell)?;
            check_cutoff(cell, *cutoff)?;
            let mut v = 0.0;
            for i in 0..positions.len() {
                for j in (i + 1)..positions.len() {
                    let d = min_image_disp(cell, &inv, &(positions[i] - positions[j]));
                    let r2 = d.norm_squared();
                    if r2 < cutoff * cutoff {
                        let u2 = 1.0 - r2 / (cutoff * cutoff);
                        v += depth * u2 * u2 * u2;
                    }
                }
            }
            Ok(v)
        }
    }
}

fn check_cutoff(cell: &Matrix3<f64>, cutoff: f64) -> Result<()> {
    let (min_image, _) = cell_quality(cell)?;
    if cutoff > 0.5 * min_image {
        return Err(NeldError::CutoffViolation { cutoff, min_image });
    }
    Ok(())
}

/// Analytic gradient of [`value`] with respect to the Eulerian positions.
pub fn gradient(
    spec: &PotentialSpec,
    cell: &Matrix3<f64>,
    positions: &[Vector3<f64>],
) -> Result<Vec<Vector3<f64>>> {
    match spec {
        PotentialSpec::Zero => Ok(vec![Vector3::zeros(); positions.len()]),
        PotentialSpec::FractionalCosine { modes, .. } => {
            let inv = checked_inverse(cell)?;
            let inv_t = inv.transpose();
            let mut out = vec![Vector3::zeros(); positions.len()];
            for (q, g) in positions.iter().zip(out.iter_mut()) {
                let f = inv * q;
                for (m, c) in modes {
                    let mv = Vector3::new(m[0] as f64, m[1] as f64, m[2] as f64);
                    let phase = TAU * mv.dot(&f);
                    *g += -(c * TAU * phase.sin()) * (inv_t * mv);
                }
            }
            Ok(out)
        }
        PotentialSpec::SmoothPair { depth, cutoff, .. } => {
            let inv = checked_inverse(cell)?;
            check_cutoff(cell, *cutoff)?;
            let mut out = vec![Vector3::zeros(); positions.len()];
            let c2 = cutoff * cutoff;
            for i in 0..positions.len() {
                for j in (i + 1)..positions.len() {
                    let d = min_image_disp(cell, &inv, &(positions[i] - positions[j]));
                    let r2 = d.norm_squared();
                    if r2 < c2 {
                        let u2 = 1.0 - r2 / c2;
                        // phi'(r)/r, finite as r -> 0.
                        let dphi_over_r = -6.0 * depth / c2 * u2 * u2;
                        out[i] += dphi_over_r * d;
                        out[j] -= dphi_over_r * d;
                    }
                }
            }
            Ok(out)
        }
    }
}

/// The drift term of the remapped-Lagrangian equations of motion:
/// `exp(-theta A) grad V` evaluated at Eulerian points `exp(theta A) q_bar`
/// in the cell `exp(theta A) L0`.
pub fn lagrangian_force(
    spec: &PotentialSpec,
    flow: &FlowSpec,
    theta: f64,
    l0: &Matrix3<f64>,
    q_bar: &[Vector3<f64>],
) -> Result<Vec<Vector3<f64>>> {
    let cell = flow.deformed_lattice(theta, l0);
    let eulerian: Vec<Vector3<f64>> = q_bar.iter().map(|q| flow.stretch_vec(theta, q)).collect();
    let grad = gradient(spec, &cell, &eulerian)?;
    Ok(grad.iter().map(|g| flow.stretch_vec(-theta, g)).collect())
}
