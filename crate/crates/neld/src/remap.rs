//! Coordinate maps between absolute/remapped and Eulerian/Lagrangian frames,
//! for both particle positions and momenta.

use nalgebra::{Matrix3, Vector3};

use crate::error::{NeldError, Result};
use crate::flow::{FlowSpec, LatticeFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordFrame {
    AbsoluteLagrangian,
    RemappedLagrangian,
    AbsoluteEulerian,
    RemappedEulerian,
}

impl std::fmt::Display for CoordFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CoordFrame::AbsoluteLagrangian => "absolute-lagrangian",
            CoordFrame::RemappedLagrangian => "remapped-lagrangian",
            CoordFrame::AbsoluteEulerian => "absolute-eulerian",
            CoordFrame::RemappedEulerian => "remapped-eulerian",
        };
        f.write_str(s)
    }
}

/// Particle positions and momenta in a tagged coordinate system.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub coords: CoordFrame,
    pub positions: Vec<Vector3<f64>>,
    pub momenta: Vec<Vector3<f64>>,
    /// Absolute simulation clock.
    pub t: f64,
    pub frame: LatticeFrame,
}

impl SystemState {
    pub fn finite(&self) -> bool {
        self.positions.iter().chain(self.momenta.iter()).all(|v| {
            v.x.is_finite() && v.y.is_finite() && v.z.is_finite()
        })
    }
}

/// Componentwise mod 1, mapping into [0, 1). Values within 1e-15 of 1 snap
/// to 0 so the half-open convention survives rounding.
pub fn wrap_unit(x: &Vector3<f64>) -> Result<Vector3<f64>> {
    if !(x.x.is_finite() && x.y.is_finite() && x.z.is_finite()) {
        return Err(NeldError::NonFinite {
            context: "wrap_unit input".to_string(),
        });
    }
    Ok(x.map(wrap_scalar))
}

fn wrap_scalar(v: f64) -> f64 {
    let mut w = v - v.floor();
    if w >= 1.0 - 1e-15 {
        w = 0.0;
    }
    w
}

/// Position remap in Eulerian coordinates: fold an absolute Eulerian point
/// into the remapped cell `exp([t]A) L0`.
pub fn remap_position_eulerian(
    flow: &FlowSpec,
    l0: &Matrix3<f64>,
    t: f64,
    q_tilde: &Vector3<f64>,
) -> Vector3<f64> {
    let (theta, _) = flow.phase(t);
    let l0_inv = l0.try_inverse().expect("L0 must be invertible");
    let frac = l0_inv * flow.stretch_vec(-theta, q_tilde);
    let wrapped = frac.map(wrap_scalar);
    flow.stretch_vec(theta, &(l0 * wrapped))
}

/// Position remap in Lagrangian coordinates:
/// `exp(-[t]A)` after the Eulerian remap of `exp(tA) q`.
pub fn remap_position_lagrangian(
    flow: &FlowSpec,
    l0: &Matrix3<f64>,
    t: f64,
    q: &Vector3<f64>,
) -> Vector3<f64> {
    let (theta, _) = flow.phase(t);
    let q_tilde = flow.stretch_vec(t, q);
    flow.stretch_vec(-theta, &remap_position_eulerian(flow, l0, t, &q_tilde))
}

/// Momentum remap in Lagrangian coordinates: multiplication by
/// `exp(floor(t/T) T A)`.
pub fn remap_momentum_lagrangian(flow: &FlowSpec, t: f64, p: &Vector3<f64>) -> Vector3<f64> {
    let (_, k) = flow.phase(t);
    flow.stretch_vec(k as f64 * flow.period, p)
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

/// The block-diagonal linear map `exp([t]A)` on positions and momenta,
/// taking remapped Lagrangian to remapped Eulerian coordinates.
pub fn to_remapped_eulerian(flow: &FlowSpec, t: f64, state: &SystemState) -> Result<SystemState> {
    require_frame(state, CoordFrame::RemappedLagrangian)?;
    let (theta, _) = flow.phase(t);
    Ok(SystemState {
        coords: CoordFrame::RemappedEulerian,
        positions: state.positions.iter().map(|q| flow.stretch_vec(theta, q)).collect(),
        momenta: state.momenta.iter().map(|p| flow.stretch_vec(theta, p)).collect(),
        t: state.t,
        frame: state.frame.clone(),
    })
}

/// Exact inverse of [`to_remapped_eulerian`].
pub fn from_remapped_eulerian(flow: &FlowSpec, t: f64, state: &SystemState) -> Result<SystemState> {
    require_frame(state, CoordFrame::RemappedEulerian)?;
    let (theta, _) = flow.phase(t);
    Ok(SystemState {
        coords: CoordFrame::RemappedLagrangian,
        positions: state.positions.iter().map(|q| flow.stretch_vec(-theta, q)).collect(),
        momenta: state.momenta.iter().map(|p| flow.stretch_vec(-theta, p)).collect(),
        t: state.t,
        frame: state.frame.clone(),
    })
}

/// The block-diagonal map `exp(tA)` taking absolute Lagrangian to absolute
/// Eulerian coordinates.
pub fn to_absolute_eulerian(flow: &FlowSpec, t: f64, state: &SystemState) -> Result<SystemState> {
    require_frame(state, CoordFrame::AbsoluteLagrangian)?;
    Ok(SystemState {
        coords: CoordFrame::AbsoluteEulerian,
        positions: state.positions.iter().map(|q| flow.stretch_vec(t, q)).collect(),
        momenta: state.momenta.iter().map(|p| flow.stretch_vec(t, p)).collect(),
        t: state.t,
        frame: state.frame.clone(),
    })
}

/// Residual of the commutative diagram tying the four frames together,
/// evaluated for a single absolute-Lagrangian sample `(q, p)` at time `t`.
///
/// Path one applies the Lagrangian remap then the phase map; path two
/// applies the absolute change of variables then the Eulerian remap. The
/// two must agree exactly in the continuum.
pub fn check_diagram(
    flow: &FlowSpec,
    l0: &Matrix3<f64>,
    t: f64,
    q: &Vector3<f64>,
    p: &Vector3<f64>,
) -> f64 {
    let (theta, _) = flow.phase(t);

    // Phi_t(R_t(x)): remap in Lagrangian frame, then stretch by exp(theta A).
    let q_bar = remap_position_lagrangian(flow, l0, t, q);
    let p_bar = remap_momentum_lagrangian(flow, t, p);
    let q_path1 = flow.stretch_vec(theta, &q_bar);
    let p_path1 = flow.stretch_vec(theta, &p_bar);

    // R~_t(Phi~_t(x)): absolute change of variables, then Eulerian remap
    // (which is the identity on momenta).
    let q_tilde = flow.stretch_vec(t, q);
    let p_tilde = flow.stretch_vec(t, p);
    let q_path2 = remap_position_eulerian(flow, l0, t, &q_tilde);
    let p_path2 = p_tilde;

    (q_path1 - q_path2)
        .amax()
        .max((p_path1 - p_path2).amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{make_flow, FlowKind};
    use approx::assert_abs_diff_eq;
    use nalgebra::Matrix3;
    use proptest::prelude::*;

    fn state(coords: CoordFrame, q: Vector3<f64>, p: Vector3<f64>) -> SystemState {
        SystemState {
            coords,
            positions: vec![q],
            momenta: vec![p],
            t: 0.0,
            frame: LatticeFrame::new(Matrix3::identity()),
        }
    }

    #[test]
    fn wrap_unit_examples() {
        let w = wrap_unit(&Vector3::new(1.25, -0.5, 0.0)).unwrap();
        assert_abs_diff_eq!(w, Vector3::new(0.25, 0.5, 0.0), epsilon = 1e-15);
        assert_eq!(wrap_unit(&Vector3::zeros()).unwrap(), Vector3::zeros());
        assert_eq!(
            wrap_unit(&Vector3::new(1.0, 1.0, 1.0)).unwrap(),
            Vector3::zeros()
        );
        assert!(wrap_unit(&Vector3::new(f64::NAN, 0.0, 0.0)).is_err());
        // Near-boundary snap.
        assert_eq!(wrap_unit(&Vector3::new(1.0 - 5e-16, 0.0, 0.0)).unwrap().x, 0.0);
    }

    #[test]
    fn eulerian_position_remap_hand_case() {
        let f = make_flow(FlowKind::Shear, 1.0).unwrap();
        let id = Matrix3::identity();
        // Point already inside the cell at t = 0.
        let q = Vector3::new(0.3, 0.4, 0.5);
        assert_abs_diff_eq!(
            remap_position_eulerian(&f, &id, 0.0, &q),
            q,
            epsilon = 1e-15
        );
        // Hand arithmetic: exp(-0.5 A) q = (1.5, 0.2, 0); wrap -> (0.5, 0.2, 0);
        // exp(0.5 A) -> (0.6, 0.2, 0).
        let q = Vector3::new(1.6, 0.2, 0.0);
        assert_abs_diff_eq!(
            remap_position_eulerian(&f, &id, 0.5, &q),
            Vector3::new(0.6, 0.2, 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn lagrangian_position_remap_composition() {
        let f = make_flow(FlowKind::Shear, 1.0).unwrap();
        let id = Matrix3::identity();
        let q = Vector3::new(0.2, 0.3, 0.0);
        assert_abs_diff_eq!(remap_position_lagrangian(&f, &id, 0.0, &q), q, epsilon = 1e-15);
        // Direct matrix-evaluation oracle of the defining composition.
        let t = 1.5;
        let (theta, _) = f.phase(t);
        let want = f.stretch_vec(
            -theta,
            &remap_position_eulerian(&f, &id, t, &f.stretch_vec(t, &q)),
        );
        assert_abs_diff_eq!(remap_position_lagrangian(&f, &id, t, &q), want, epsilon = 0.0);
        // Lattice points map to the origin image.
        let z = Vector3::new(2.0, -1.0, 3.0);
        assert_abs_diff_eq!(
            remap_position_lagrangian(&f, &id, 0.7, &z),
            Vector3::zeros(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn momentum_remap_examples() {
        let f = make_flow(FlowKind::Shear, 1.0).unwrap();
        let p = Vector3::new(0.0, 1.0, 0.0);
        assert_eq!(remap_momentum_lagrangian(&f, 0.5, &p), p);
        // exp(TA) = [[1,1,0],[0,1,0],[0,0,1]].
        assert_abs_diff_eq!(
            remap_momentum_lagrangian(&f, 1.2, &p),
            Vector3::new(1.0, 1.0, 0.0),
            epsilon = 1e-14
        );

        let pef = make_flow(FlowKind::PlanarElongation, 1.0).unwrap();
        let p = Vector3::new(1.0, 1.0, 1.0);
        let t = 1.5 * pef.period;
        // Matrix-exponential oracle in the standard frame: exp(TA) is
        // diag(lambda, 1/lambda, 1) since T eps = eta.
        let want = Vector3::new(pef.lambda, 1.0 / pef.lambda, 1.0);
        assert_abs_diff_eq!(remap_momentum_lagrangian(&pef, t, &p), want, epsilon = 1e-12);
    }

    #[test]
    fn phase_map_round_trip_and_hand_case() {
        let f = make_flow(FlowKind::Shear, 1.0).unwrap();
        let s = state(
            CoordFrame::RemappedLagrangian,
            Vector3::new(0.1, 0.2, 0.3),
            Vector3::new(0.0, 1.0, 0.0),
        );
        let t = 0.25;
        let e = to_remapped_eulerian(&f, t, &s).unwrap();
        assert_abs_diff_eq!(e.momenta[0], Vector3::new(0.25, 1.0, 0.0), epsilon = 1e-15);
        let back = from_remapped_eulerian(&f, t, &e).unwrap();
        assert!((back.positions[0] - s.positions[0]).amax() <= 1e-14);
        assert!((back.momenta[0] - s.momenta[0]).amax() <= 1e-14);
        // Identity at phase zero.
        let e0 = to_remapped_eulerian(&f, 0.0, &s).unwrap();
        assert_eq!(e0.positions[0], s.positions[0]);
        // Wrong frame is rejected.
        assert!(to_remapped_eulerian(&f, t, &e).is_err());
    }

    #[test]
    fn absolute_change_of_variables() {
        let f = make_flow(FlowKind::Shear, 1.0).unwrap();
        let s = state(
            CoordFrame::AbsoluteLagrangian,
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::zeros(),
        );
        let e = to_absolute_eulerian(&f, 2.0, &s).unwrap();
        assert_abs_diff_eq!(e.positions[0], Vector3::new(2.0, 1.0, 0.0), epsilon = 1e-14);

        let pef = make_flow(FlowKind::PlanarElongation, 1.0).unwrap();
        let s = state(
            CoordFrame::AbsoluteLagrangian,
            Vector3::zeros(),
            Vector3::new(1.0, 0.0, 0.0),
        );
        let e = to_absolute_eulerian(&pef, 1.0, &s).unwrap();
        assert_abs_diff_eq!(e.momenta[0].x, 1.0_f64.exp(), epsilon = 1e-14);
    }

    #[test]
    fn diagram_zero_time() {
        let f = make_flow(FlowKind::Shear, 1.0).unwrap();
        let r = check_diagram(
            &f,
            &Matrix3::identity(),
            0.0,
            &Vector3::new(0.4, 0.6, 0.1),
            &Vector3::new(1.0, -2.0, 0.5),
        );
        assert_eq!(r, 0.0);
    }

    proptest! {
        #[test]
        fn diagram_commutes_shear(
            t in 0.0..8.0f64,
            qx in -3.0..3.0f64, qy in -3.0..3.0f64, qz in -3.0..3.0f64,
            px in -3.0..3.0f64, py in -3.0..3.0f64, pz in -3.0..3.0f64,
        ) {
            let f = make_flow(FlowKind::Shear, 1.0).unwrap();
            let r = check_diagram(&f, &Matrix3::identity(), t,
                &Vector3::new(qx, qy, qz), &Vector3::new(px, py, pz));
            prop_assert!(r <= 1e-10);
        }

        #[test]
        fn diagram_commutes_pef(
            t in 0.0..8.0f64,
            qx in -3.0..3.0f64, qy in -3.0..3.0f64, qz in -3.0..3.0f64,
            px in -3.0..3.0f64, py in -3.0..3.0f64, pz in -3.0..3.0f64,
        ) {
            let f = make_flow(FlowKind::PlanarElongation, 1.0).unwrap();
            let l0 = f.default_l0();
            let r = check_diagram(&f, &l0, t,
                &Vector3::new(qx, qy, qz), &Vector3::new(px, py, pz));
            prop_assert!(r <= 1e-10);
        }

        #[test]
        fn eulerian_remap_idempotent(
            t in 0.0..5.0f64,
            qx in -4.0..4.0f64, qy in -4.0..4.0f64, qz in -4.0..4.0f64,
        ) {
            let f = make_flow(FlowKind::Shear, 1.0).unwrap();
            let id = Matrix3::identity();
            let q = Vector3::new(qx, qy, qz);
            let once = remap_position_eulerian(&f, &id, t, &q);
            let twice = remap_position_eulerian(&f, &id, t, &once);
            prop_assert!((once - twice).amax() <= 1e-12);
        }

        #[test]
        fn lattice_equivariance(
            t in 0.0..5.0f64,
            qx in -2.0..2.0f64, qy in -2.0..2.0f64, qz in -2.0..2.0f64,
            zx in -2i64..3, zy in -2i64..3, zz in -2i64..3,
        ) {
            let f = make_flow(FlowKind::PlanarElongation, 1.0).unwrap();
            let l0 = f.default_l0();
            let q = Vector3::new(qx, qy, qz);
            let lt = f.deformed_lattice(t, &l0);
            let shifted = q + lt * Vector3::new(zx as f64, zy as f64, zz as f64);
            let a = remap_position_eulerian(&f, &l0, t, &q);
            let b = remap_position_eulerian(&f, &l0, t, &shifted);
            prop_assert!((a - b).amax() <= 1e-10);
        }

        #[test]
        fn momentum_consistency(
            t in 0.0..6.0f64,
            px in -3.0..3.0f64, py in -3.0..3.0f64, pz in -3.0..3.0f64,
        ) {
            // exp([t]A) hbar_t(exp(-tA) p~) recovers p~.
            for f in [
                make_flow(FlowKind::Shear, 1.0).unwrap(),
                make_flow(FlowKind::PlanarElongation, 1.0).unwrap(),
            ] {
                let p_tilde = Vector3::new(px, py, pz);
                let (theta, _) = f.phase(t);
                let back = f.stretch_vec(
                    theta,
                    &remap_momentum_lagrangian(&f, t, &f.stretch_vec(-t, &p_tilde)),
                );
                prop_assert!((back - p_tilde).amax() <= 1e-10);
            }
        }
    }
}
