//! Background flows, deforming lattices and their remapping automorphisms.
//!
//! A flow is a constant traceless matrix `A`; the simulation cell deforms as
//! `L_t = exp(t A) L_0`. Shear flow is kept bounded by the Lees-Edwards
//! automorphism, planar elongational flow by a Kraynik-Reinelt automorphism
//! with the cell aligned to its eigenbasis.

use nalgebra::{Matrix3, Vector3};

use crate::error::{NeldError, Result};

/// Tolerance on `theta == T` when a lattice remap is requested.
pub const REMAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    /// No background flow (equilibrium Langevin dynamics).
    Rest,
    Shear,
    PlanarElongation,
}

#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub kind: FlowKind,
    /// Strain rate. Zero only for `Rest`.
    pub rate: f64,
    /// Background flow matrix A (traceless).
    pub a: Matrix3<f64>,
    /// Remap period T.
    pub period: f64,
    /// Lattice automorphism M (integer entries, det 1).
    pub automorphism: [[i64; 3]; 3],
    /// Eigenbasis S of M (identity for shear and rest).
    pub eigenbasis: Matrix3<f64>,
    /// Leading eigenvalue of M (> 1 for elongation, 1 otherwise).
    pub lambda: f64,
    /// log(lambda).
    pub eta: f64,
}

/// Fixed Kraynik-Reinelt construction: the smallest-trace hyperbolic
/// SL(2,Z) block embedded in 3D.
///
/// Returns `(M, S, lambda, eta)` with `M S = S diag(lambda, 1/lambda, 1)`,
/// unit eigenvector columns with positive first component, and
/// `lambda = (3 + sqrt 5)/2`.
pub fn kr_basis() -> ([[i64; 3]; 3], Matrix3<f64>, f64, f64) {
    let m = [[2, 1, 0], [1, 1, 0], [0, 0, 1]];
    let lambda = (3.0 + 5.0_f64.sqrt()) / 2.0;
    // Eigenvectors of the 2x2 block [[2,1],[1,1]]: (1, mu - 2) for mu in {lambda, 1/lambda}.
    let col = |mu: f64| Vector3::new(1.0, mu - 2.0, 0.0).normalize();
    let v1 = col(lambda);
    let v2 = col(1.0 / lambda);
    let s = Matrix3::from_columns(&[v1, v2, Vector3::z()]);
    (m, s, lambda, lambda.ln())
}

pub fn make_flow(kind: FlowKind, eps: f64) -> Result<FlowSpec> {
    match kind {
        FlowKind::Rest => Ok(FlowSpec::rest()),
        FlowKind::Shear | FlowKind::PlanarElongation if eps == 0.0 => Err(NeldError::ZeroRate),
        FlowKind::Shear => {
            let mut a = Matrix3::zeros();
            a[(0, 1)] = eps;
            Ok(FlowSpec {
                kind,
                rate: eps,
                a,
                period: 1.0 / eps.abs(),
                automorphism: [[1, -1, 0], [0, 1, 0], [0, 0, 1]],
                eigenbasis: Matrix3::identity(),
                lambda: 1.0,
                eta: 0.0,
            })
        }
        FlowKind::PlanarElongation => {
            let (m, s, lambda, eta) = kr_basis();
            let a = Matrix3::from_diagonal(&Vector3::new(eps, -eps, 0.0));
            Ok(FlowSpec {
                kind,
                rate: eps,
                a,
                period: eta / eps.abs(),
                automorphism: m,
                eigenbasis: s,
                lambda,
                eta,
            })
        }
    }
}

impl FlowSpec {
    /// Equilibrium placeholder flow: A = 0 with a unit sampling period.
    pub fn rest() -> FlowSpec {
        FlowSpec {
            kind: FlowKind::Rest,
            rate: 0.0,
            a: Matrix3::zeros(),
            period: 1.0,
            automorphism: [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
            eigenbasis: Matrix3::identity(),
            lambda: 1.0,
            eta: 0.0,
        }
    }

    /// Exact matrix exponential `exp(s A)`.
    ///
    /// Shear A is nilpotent so the exponential is affine; elongation A is
    /// diagonal so it is three scalar exponentials. No series needed.
    pub fn stretch(&self, s: f64) -> Matrix3<f64> {
        match self.kind {
            FlowKind::Rest => Matrix3::identity(),
            FlowKind::Shear => Matrix3::identity() + self.a * s,
            FlowKind::PlanarElongation => Matrix3::from_diagonal(&Vector3::new(
                (s * self.rate).exp(),
                (-s * self.rate).exp(),
                1.0,
            )),
        }
    }

    /// Apply `exp(s A)` to a vector without forming the matrix.
    pub fn stretch_vec(&self, s: f64, v: &Vector3<f64>) -> Vector3<f64> {
        match self.kind {
            FlowKind::Rest => *v,
            FlowKind::Shear => Vector3::new(v.x + s * self.rate * v.y, v.y, v.z),
            FlowKind::PlanarElongation => Vector3::new(
                v.x * (s * self.rate).exp(),
                v.y * (-s * self.rate).exp(),
                v.z,
            ),
        }
    }

    /// Deformed cell `exp(t A) L0`.
    pub fn deformed_lattice(&self, t: f64, l0: &Matrix3<f64>) -> Matrix3<f64> {
        self.stretch(t) * l0
    }

    /// Split `t >= 0` into a period count and phase: `t = k T + theta`,
    /// `theta in [0, T)`.
    pub fn phase(&self, t: f64) -> (f64, u64) {
        let k = (t / self.period).floor();
        let mut theta = t - k * self.period;
        let mut k = k as i64;
        if theta >= self.period {
            theta -= self.period;
            k += 1;
        }
        if theta < 0.0 {
            theta = 0.0;
        }
        (theta, k.max(0) as u64)
    }

    /// Centered display normalization of the stretch: phase in [-T/2, T/2)
    /// via round-to-nearest instead of floor. Presentation only; all
    /// dynamics use [`FlowSpec::phase`].
    pub fn centered_phase(&self, t: f64) -> f64 {
        t - (t / self.period).round() * self.period
    }

    /// Automorphism power that closes one period: `exp(T A) L0 M_eff = L0`
    /// for the default initial cell.
    pub fn remap_automorphism(&self) -> [[i64; 3]; 3] {
        match self.kind {
            FlowKind::Rest => self.automorphism,
            // LE: the stored M undoes one period of positive-rate shear;
            // its inverse undoes negative-rate shear.
            FlowKind::Shear => {
                if self.rate > 0.0 {
                    self.automorphism
                } else {
                    int_inverse(&self.automorphism)
                }
            }
            // KR: S^{-1} M = Lambda S^{-1}, so M^{-1} cancels the stretch
            // accumulated under a positive rate.
            FlowKind::PlanarElongation => {
                if self.rate > 0.0 {
                    int_inverse(&self.automorphism)
                } else {
                    self.automorphism
                }
            }
        }
    }

    /// Default initial cell: identity, except the KR eigenbasis inverse for
    /// elongational flow.
    pub fn default_l0(&self) -> Matrix3<f64> {
        match self.kind {
            FlowKind::PlanarElongation => self
                .eigenbasis
                .try_inverse()
                .expect("KR eigenbasis is invertible"),
            _ => Matrix3::identity(),
        }
    }
}

/// Inverse of an integer matrix with determinant 1 (the adjugate).
pub fn int_inverse(m: &[[i64; 3]; 3]) -> [[i64; 3]; 3] {
    let det = int_det(m);
    assert_eq!(det, 1, "automorphism must have determinant 1");
    let cof = |r: usize, c: usize| {
        let rs: Vec<usize> = (0..3).filter(|&i| i != r).collect();
        let cs: Vec<usize> = (0..3).filter(|&j| j != c).collect();
        let minor = m[rs[0]][cs[0]] * m[rs[1]][cs[1]] - m[rs[0]][cs[1]] * m[rs[1]][cs[0]];
        if (r + c) % 2 == 0 {
            minor
        } else {
            -minor
        }
    };
    let mut adj = [[0i64; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            adj[r][c] = cof(c, r);
        }
    }
    adj
}

pub fn int_det(m: &[[i64; 3]; 3]) -> i64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn int_to_matrix(m: &[[i64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| m[r][c] as f64)
}

/// Current simulation cell: phase within the period plus remap bookkeeping.
#[derive(Debug, Clone)]
pub struct LatticeFrame {
    pub l0: Matrix3<f64>,
    pub theta: f64,
    pub remap_count: u64,
    pub cell: Matrix3<f64>,
}

impl LatticeFrame {
    pub fn new(l0: Matrix3<f64>) -> LatticeFrame {
        LatticeFrame {
            l0,
            theta: 0.0,
            remap_count: 0,
            cell: l0,
        }
    }

    /// Frame at a given phase. `theta = T` is allowed transiently so a
    /// period boundary can be represented before the remap fires.
    pub fn at_phase(flow: &FlowSpec, l0: Matrix3<f64>, theta: f64) -> LatticeFrame {
        LatticeFrame {
            l0,
            theta,
            remap_count: 0,
            cell: flow.deformed_lattice(theta, &l0),
        }
    }
}

/// Apply the end-of-period automorphism: the cell returns to `L0` and the
/// phase resets to zero.
pub fn remap_lattice(flow: &FlowSpec, frame: &LatticeFrame) -> Result<LatticeFrame> {
    if (frame.theta - flow.period).abs() > REMAP_TOL {
        return Err(NeldError::NotAtBoundary {
            theta: frame.theta,
            period: flow.period,
        });
    }
    let m_eff = int_to_matrix(&flow.remap_automorphism());
    let cell = flow.deformed_lattice(frame.theta, &frame.l0) * m_eff;
    Ok(LatticeFrame {
        l0: frame.l0,
        theta: 0.0,
        remap_count: frame.remap_count + 1,
        cell,
    })
}

/// Geometric health of a cell: the shortest nonzero lattice vector over
/// integer combinations in {-2..2}^3, and the 2-norm condition number.
pub fn cell_quality(cell: &Matrix3<f64>) -> Result<(f64, f64)> {
    if cell.determinant().abs() < 1e-12 {
        return Err(NeldError::SingularCell);
    }
    let mut min_image = f64::INFINITY;
    for i in -2i64..=2 {
        for j in -2i64..=2 {
            for k in -2i64..=2 {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                let v = cell * Vector3::new(i as f64, j as f64, k as f64);
                min_image = min_image.min(v.norm());
            }
        }
    }
    let sv = cell.svd(false, false).singular_values;
    let cond = sv.max() / sv.min();
    Ok((min_image, cond))
}
