//! 6-DOF rigid-body tiltrotor plant: gravity, rotor thrust (tilt-dependent),
//! rotor drag torque, and a configurable affine aerodynamic model.
//!
//! Conventions: body axes are x forward, y right, z down; Euler angles are
//! the aerospace roll/pitch/yaw sequence; world position is (north, east,
//! altitude), altitude positive up. The front rotor pair (1, 3) tilts by
//! `delta` about the body y axis (`delta = 0` hover, `delta = pi/2` forward
//! flight); the rear pair (2, 4) is fixed. Rotor layout: 1 front-right,
//! 2 rear-left, 3 front-left, 4 rear-right, each at moment arm `d_arm`.
//!
//! The angular dynamics assume a diagonal inertia tensor. The Euler
//! kinematics carry the usual 1/cos(theta) singularity; every operation
//! that touches it is guarded by [`TOL_SINGULARITY`].

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Guard band around |theta| = pi/2 (rad). Nominal scenarios keep the
/// attitude within a degree of level, so tripping the guard indicates
/// divergence, not a modelling regime.
pub const TOL_SINGULARITY: f64 = 1e-3;

/// Full 12-dimensional rigid-body state.
///
/// Linear velocities are body-frame (m/s), angular rates body-frame
/// (rad/s), attitude as Euler angles (rad), position world-frame (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodyState {
    pub u: f64, // body x velocity [m/s]
    pub v: f64, // body y velocity [m/s]
    pub w: f64, // body z velocity [m/s]
    pub p: f64, // roll rate [rad/s]
    pub q: f64, // pitch rate [rad/s]
    pub r: f64, // yaw rate [rad/s]
    pub phi: f64,   // roll [rad]
    pub theta: f64, // pitch [rad]
    pub psi: f64,   // yaw [rad]
    pub pn: f64, // north position [m]
    pub pe: f64, // east position [m]
    pub h: f64,  // altitude, positive up [m]
}

impl Default for BodyState {
    fn default() -> Self {
        BodyState::ZERO
    }
}

impl BodyState {
    pub const ZERO: BodyState = BodyState {
        u: 0.0, v: 0.0, w: 0.0,
        p: 0.0, q: 0.0, r: 0.0,
        phi: 0.0, theta: 0.0, psi: 0.0,
        pn: 0.0, pe: 0.0, h: 0.0,
    };

    /// Attitude triple (phi, theta, psi).
    pub fn euler(&self) -> Vector3<f64> {
        Vector3::new(self.phi, self.theta, self.psi)
    }

    /// Body angular rate triple (p, q, r).
    pub fn rates(&self) -> Vector3<f64> {
        Vector3::new(self.p, self.q, self.r)
    }

    pub fn is_finite(&self) -> bool {
        [
            self.u, self.v, self.w, self.p, self.q, self.r,
            self.phi, self.theta, self.psi, self.pn, self.pe, self.h,
        ]
        .iter()
        .all(|x| x.is_finite())
    }

    /// Pointwise `self + scale * other`, the only arithmetic the fixed-step
    /// integrator needs.
    pub fn add_scaled(&self, other: &BodyState, scale: f64) -> BodyState {
        BodyState {
            u: self.u + scale * other.u,
            v: self.v + scale * other.v,
            w: self.w + scale * other.w,
            p: self.p + scale * other.p,
            q: self.q + scale * other.q,
            r: self.r + scale * other.r,
            phi: self.phi + scale * other.phi,
            theta: self.theta + scale * other.theta,
            psi: self.psi + scale * other.psi,
            pn: self.pn + scale * other.pn,
            pe: self.pe + scale * other.pe,
            h: self.h + scale * other.h,
        }
    }
}

/// Vehicle constants. Mass, gravity, inertias and wing geometry follow the
/// published model; the rotor constants (`kt`, `kd`, `d_arm`) are not
/// published anywhere and carry documented placeholder defaults — every
/// allocation property in this crate holds for any positive values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub m: f64,   // mass [kg]
    pub g: f64,   // gravity [m/s^2]
    pub ix: f64,  // roll inertia [kg m^2]
    pub iy: f64,  // pitch inertia [kg m^2]
    pub iz: f64,  // yaw inertia [kg m^2]
    pub s_wing: f64, // wing area [m^2]
    pub cbar: f64,   // mean chord [m]
    pub span: f64,   // wing span [m]
    pub kt: f64,     // rotor thrust coefficient [N s^2/rad^2] (placeholder)
    pub kd: f64,     // rotor drag-torque coefficient [N m s^2/rad^2] (placeholder)
    pub d_arm: f64,  // rotor moment arm [m] (placeholder)
    pub rho_air: f64, // air density [kg/m^3]
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            m: 6.0,
            g: 9.81,
            ix: 0.876,
            iy: 0.166,
            iz: 0.115,
            s_wing: 0.48,
            cbar: 0.25,
            span: 2.1,
            kt: 1.0e-5,
            kd: 2.0e-7,
            d_arm: 0.5,
            rho_air: 1.225,
        }
    }
}

impl VehicleParams {
    /// All physical constants must be strictly positive.
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.m, "m"), (self.g, "g"),
            (self.ix, "ix"), (self.iy, "iy"), (self.iz, "iz"),
            (self.s_wing, "s_wing"), (self.kt, "kt"), (self.kd, "kd"),
            (self.d_arm, "d_arm"), (self.rho_air, "rho_air"),
        ];
        for (value, name) in checks {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SimError::Config(format!(
                    "vehicle parameter {name} must be strictly positive, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Gravity-balancing total thrust command (z-down convention: thrust
    /// that exactly opposes weight is negative).
    pub fn hover_thrust(&self) -> f64 {
        -self.m * self.g
    }
}

/// One aerodynamic coefficient as an affine function of angle of attack,
/// sideslip, and body rates. The published model names the coefficients but
/// withholds every value, so all defaults are zero: aerodynamics then enter
/// the attitude loop only through the injected lumped disturbance, which is
/// exactly how the controller models them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffineCoeff {
    pub bias: f64,
    pub per_alpha: f64, // per rad of angle of attack
    pub per_beta: f64,  // per rad of sideslip
    pub per_p: f64,     // per rad/s of roll rate
    pub per_q: f64,     // per rad/s of pitch rate
    pub per_r: f64,     // per rad/s of yaw rate
}

impl AffineCoeff {
    pub fn eval(&self, alpha: f64, beta: f64, p: f64, q: f64, r: f64) -> f64 {
        self.bias
            + self.per_alpha * alpha
            + self.per_beta * beta
            + self.per_p * p
            + self.per_q * q
            + self.per_r * r
    }
}

/// The six aerodynamic coefficients: forces (cx, cy, cz) and moments
/// (cl, cm, cn), each affine in flow state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeroCoefficients {
    pub cx: AffineCoeff,
    pub cy: AffineCoeff,
    pub cz: AffineCoeff,
    pub cl: AffineCoeff,
    pub cm: AffineCoeff,
    pub cn: AffineCoeff,
}

/// Commanded rotor condition: four speeds plus the common front-pair tilt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorSet {
    pub omega: [f64; 4], // rotation speeds [rad/s], non-negative
    pub delta: f64,      // front-pair tilt [rad], 0 = hover, pi/2 = forward
}

impl RotorSet {
    pub const STOPPED: RotorSet = RotorSet { omega: [0.0; 4], delta: 0.0 };

    /// Per-rotor thrust magnitudes T_i = kt * omega_i^2 [N].
    pub fn thrusts(&self, params: &VehicleParams) -> [f64; 4] {
        self.omega.map(|o| params.kt * o * o)
    }

    /// Per-rotor drag torque magnitudes tau_i = kd * omega_i^2 [N m].
    pub fn drag_torques(&self, params: &VehicleParams) -> [f64; 4] {
        self.omega.map(|o| params.kd * o * o)
    }
}

/// Rotation matrix from world (earth) axes to body axes for the aerospace
/// roll/pitch/yaw Euler sequence.
///
/// Errors when |theta| enters the guard band around pi/2.
pub fn rotation_eb(phi: f64, theta: f64, psi: f64) -> Result<Matrix3<f64>> {
    guard_theta(theta, f64::NAN)?;
    let (sphi, cphi) = phi.sin_cos();
    let (sth, cth) = theta.sin_cos();
    let (spsi, cpsi) = psi.sin_cos();
    Ok(Matrix3::new(
        cth * cpsi,
        cth * spsi,
        -sth,
        sphi * sth * cpsi - cphi * spsi,
        sphi * sth * spsi + cphi * cpsi,
        sphi * cth,
        cphi * sth * cpsi + sphi * spsi,
        cphi * sth * spsi - sphi * cpsi,
        cphi * cth,
    ))
}

/// Euler-angle rates (phi', theta', psi') from body rates at the given
/// attitude. Errors inside the pitch guard band where the kinematics lose
/// rank.
pub fn euler_rates(phi: f64, theta: f64, p: f64, q: f64, r: f64) -> Result<Vector3<f64>> {
    guard_theta(theta, f64::NAN)?;
    let (sphi, cphi) = phi.sin_cos();
    let (sth, cth) = theta.sin_cos();
    let tth = sth / cth;
    Ok(Vector3::new(
        p + sphi * tth * q + cphi * tth * r,
        cphi * q - sphi * r,
        sphi / cth * q + cphi / cth * r,
    ))
}

/// Inertia-coupling angular accelerations on the diagonal tensor, one per
/// axis, for a rate triple `(a, b, c)`:
///
/// ```text
/// [(iy - iz)/ix * b * c,  (iz - ix)/iy * a * c,  (ix - iy)/iz * a * b]
/// ```
///
/// The plant evaluates this on body rates; the controller and observer
/// evaluate the same coupling on Euler-angle rates, which is the model they
/// are designed against (the difference lands in the lumped disturbance).
pub fn gyro_accels(params: &VehicleParams, a: f64, b: f64, c: f64) -> [f64; 3] {
    [
        (params.iy - params.iz) / params.ix * b * c,
        (params.iz - params.ix) / params.iy * a * c,
        (params.ix - params.iy) / params.iz * a * b,
    ]
}

/// Rotation from the rotor frame of rotor `index` (1-based) into the body
/// frame: identity for the fixed rear pair (2, 4), a tilt about body y for
/// the front pair (1, 3).
pub fn rotor_rotation(index: usize, delta: f64) -> Matrix3<f64> {
    assert!((1..=4).contains(&index), "rotor index must be 1..=4");
    match index {
        1 | 3 => {
            let (sd, cd) = delta.sin_cos();
            Matrix3::new(
                cd, 0.0, -sd,
                0.0, 1.0, 0.0,
                sd, 0.0, cd,
            )
        }
        _ => Matrix3::identity(),
    }
}

/// Total body-frame force [N]: gravity + rotor thrust + aerodynamics.
pub fn total_force(
    state: &BodyState,
    rotors: &RotorSet,
    params: &VehicleParams,
    aero: &AeroCoefficients,
) -> Vector3<f64> {
    let (sphi, cphi) = state.phi.sin_cos();
    let (sth, cth) = state.theta.sin_cos();

    // Gravity resolved into body axes (z down).
    let fg = Vector3::new(-sth, cth * sphi, cth * cphi) * (params.m * params.g);

    // Rotor thrust: front pair tilted by delta, rear pair straight down.
    let t = rotors.thrusts(params);
    let (sd, cd) = rotors.delta.sin_cos();
    let fp = Vector3::new(
        (t[0] + t[2]) * sd,
        0.0,
        -(t[0] + t[2]) * cd - t[1] - t[3],
    );

    let fa = aero_force(state, params, aero);
    fg + fp + fa
}

/// Total body-frame moment [N m]: thrust-offset torque + rotor drag
/// reaction + aerodynamics.
pub fn total_moment(
    state: &BodyState,
    rotors: &RotorSet,
    params: &VehicleParams,
    aero: &AeroCoefficients,
) -> Vector3<f64> {
    let t = rotors.thrusts(params);
    let tau = rotors.drag_torques(params);
    let d = params.d_arm;
    let (sd, cd) = rotors.delta.sin_cos();

    // Thrust moments about the CG (rotors coplanar with the CG, arm d).
    let m_pt = Vector3::new(
        -d * t[0] * cd + d * t[1] + d * t[2] * cd - d * t[3],
        d * t[0] * cd - d * t[1] + d * t[2] * cd - d * t[3],
        -d * t[0] * sd + d * t[2] * sd,
    );

    // Drag reaction along each (possibly tilted) rotor axis. Spin pattern:
    // rotors 1, 2 one way, rotors 3, 4 the other.
    let m_pd = Vector3::new(
        tau[0] * sd - tau[2] * sd,
        0.0,
        -tau[0] * cd - tau[1] + tau[2] * cd + tau[3],
    );

    let m_a = aero_moment(state, params, aero);
    m_pt + m_pd + m_a
}

/// Lumped angular-acceleration disturbance, one entry per body axis
/// [rad/s^2]. This is the d_i the observer estimates.
pub type AxisDisturbance = [f64; 3];

/// Time derivative of the full 12-state under the given rotor condition and
/// lumped angular disturbance.
///
/// The returned `BodyState` holds derivatives field-for-field. Errors when
/// pitch enters the Euler-singularity guard band.
pub fn state_derivative(
    state: &BodyState,
    rotors: &RotorSet,
    params: &VehicleParams,
    aero: &AeroCoefficients,
    external_disturbance: &AxisDisturbance,
) -> Result<BodyState> {
    let f = total_force(state, rotors, params, aero);
    let m = total_moment(state, rotors, params, aero);
    state_derivative_from_wrench(state, f, m, params, external_disturbance)
}

/// Time derivative of the full 12-state under an explicit body wrench. This
/// is the entry point the closed loop uses: the attitude channels are driven
/// by the commanded virtual torques directly (the model the controller and
/// its published validation are built on), while forces still come from
/// [`total_force`].
pub fn state_derivative_from_wrench(
    state: &BodyState,
    f: Vector3<f64>,
    m: Vector3<f64>,
    params: &VehicleParams,
    external_disturbance: &AxisDisturbance,
) -> Result<BodyState> {
    guard_theta(state.theta, f64::NAN)?;

    let (u, v, w) = (state.u, state.v, state.w);
    let (p, q, r) = (state.p, state.q, state.r);

    // Translational dynamics with Coriolis coupling.
    let u_dot = r * v - q * w + f.x / params.m;
    let v_dot = p * w - r * u + f.y / params.m;
    let w_dot = q * u - p * v + f.z / params.m;

    // Euler gyroscopic terms on a diagonal inertia tensor, plus the lumped
    // per-axis disturbance.
    let gyro = gyro_accels(params, p, q, r);
    let p_dot = gyro[0] + m.x / params.ix + external_disturbance[0];
    let q_dot = gyro[1] + m.y / params.iy + external_disturbance[1];
    let r_dot = gyro[2] + m.z / params.iz + external_disturbance[2];

    let (sphi, cphi) = state.phi.sin_cos();
    let (sth, cth) = state.theta.sin_cos();
    let (spsi, cpsi) = state.psi.sin_cos();

    // Euler-angle kinematics.
    let angle_rates = euler_rates(state.phi, state.theta, p, q, r)?;
    let (phi_dot, theta_dot, psi_dot) = (angle_rates.x, angle_rates.y, angle_rates.z);

    // Position kinematics: north/east rows transform body velocity to the
    // world frame; the altitude row is positive up.
    let pn_dot = u * (cth * cpsi)
        + v * (sphi * sth * cpsi - cphi * spsi)
        + w * (cphi * sth * cpsi + sphi * spsi);
    let pe_dot = u * (cth * spsi)
        + v * (sphi * sth * spsi + cphi * cpsi)
        + w * (cphi * sth * spsi - sphi * cpsi);
    let h_dot = u * sth - v * sphi * cth - w * cphi * cth;

    Ok(BodyState {
        u: u_dot,
        v: v_dot,
        w: w_dot,
        p: p_dot,
        q: q_dot,
        r: r_dot,
        phi: phi_dot,
        theta: theta_dot,
        psi: psi_dot,
        pn: pn_dot,
        pe: pe_dot,
        h: h_dot,
    })
}

/// Angular momentum resolved in the world frame [kg m^2/s]. Conserved
/// exactly by torque-free rigid-body motion — the integration-hygiene
/// yardstick used by the plant-only tests and example.
pub fn world_angular_momentum(state: &BodyState, params: &VehicleParams) -> Result<Vector3<f64>> {
    let h_body = Vector3::new(
        params.ix * state.p,
        params.iy * state.q,
        params.iz * state.r,
    );
    // rotation_eb maps world to body; its transpose takes the body-frame
    // momentum back to world axes.
    Ok(rotation_eb(state.phi, state.theta, state.psi)?.transpose() * h_body)
}

/// Angle of attack and sideslip from body velocity; both zero at rest.
fn flow_angles(state: &BodyState) -> (f64, f64, f64) {
    let v_air = (state.u * state.u + state.v * state.v + state.w * state.w).sqrt();
    if v_air < 1e-12 {
        return (0.0, 0.0, 0.0);
    }
    let alpha = state.w.atan2(state.u);
    let beta = (state.v / v_air).asin();
    (alpha, beta, v_air)
}

fn aero_force(state: &BodyState, params: &VehicleParams, aero: &AeroCoefficients) -> Vector3<f64> {
    let (alpha, beta, v_air) = flow_angles(state);
    let qbar = 0.5 * params.rho_air * v_air * v_air;
    let cx = aero.cx.eval(alpha, beta, state.p, state.q, state.r);
    let cy = aero.cy.eval(alpha, beta, state.p, state.q, state.r);
    let cz = aero.cz.eval(alpha, beta, state.p, state.q, state.r);
    Vector3::new(-cx, cy, -cz) * (qbar * params.s_wing)
}

fn aero_moment(state: &BodyState, params: &VehicleParams, aero: &AeroCoefficients) -> Vector3<f64> {
    let (alpha, beta, v_air) = flow_angles(state);
    let qbar = 0.5 * params.rho_air * v_air * v_air;
    let cl = aero.cl.eval(alpha, beta, state.p, state.q, state.r);
    let cm = aero.cm.eval(alpha, beta, state.p, state.q, state.r);
    let cn = aero.cn.eval(alpha, beta, state.p, state.q, state.r);
    Vector3::new(cl, cm, cn) * (qbar * params.s_wing)
}

fn guard_theta(theta: f64, t: f64) -> Result<()> {
    if theta.abs() >= std::f64::consts::FRAC_PI_2 - TOL_SINGULARITY {
        Err(SimError::Singularity { t, theta_abs: theta.abs() })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn defaults() -> (VehicleParams, AeroCoefficients) {
        (VehicleParams::default(), AeroCoefficients::default())
    }

    #[test]
    fn rotation_eb_identity_at_zero() {
        let r = rotation_eb(0.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(r, Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn rotation_eb_yaw_only_first_row() {
        let r = rotation_eb(0.0, 0.0, std::f64::consts::FRAC_PI_6).unwrap();
        assert_abs_diff_eq!(r[(0, 0)], 0.8660254037844387, epsilon = 1e-12);
        assert_abs_diff_eq!(r[(0, 1)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r[(0, 2)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_eb_is_orthonormal() {
        // Deterministic coverage of the angle box |theta| < 1.4.
        let mut vals = Vec::new();
        let mut x = 0.123_f64;
        for _ in 0..1000 {
            // Weyl sequence — cheap deterministic quasi-random angles.
            x = (x + 0.754_877_666_246_693) % 1.0;
            vals.push(x);
        }
        for chunk in vals.chunks(3) {
            if chunk.len() < 3 {
                break;
            }
            let phi = (chunk[0] - 0.5) * 6.0;
            let theta = (chunk[1] - 0.5) * 2.8;
            let psi = (chunk[2] - 0.5) * 6.0;
            let r = rotation_eb(phi, theta, psi).unwrap();
            let gram = r.transpose() * r;
            assert_abs_diff_eq!(gram, Matrix3::identity(), epsilon = 1e-12);
            assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_eb_rejects_pitch_near_singularity() {
        assert!(rotation_eb(0.0, std::f64::consts::FRAC_PI_2, 0.0).is_err());
        assert!(rotation_eb(0.0, -(std::f64::consts::FRAC_PI_2 - 1e-4), 0.0).is_err());
        assert!(rotation_eb(0.0, 1.4, 0.0).is_ok());
    }

    #[test]
    fn rear_rotors_never_tilt() {
        for delta in [0.0, 0.3, 1.0, std::f64::consts::FRAC_PI_2] {
            assert_eq!(rotor_rotation(2, delta), Matrix3::identity());
            assert_eq!(rotor_rotation(4, delta), Matrix3::identity());
        }
    }

    #[test]
    fn front_rotor_tilt_maps_lift_into_forward_thrust() {
        assert_abs_diff_eq!(
            rotor_rotation(1, 0.0),
            Matrix3::identity(),
            epsilon = 1e-15
        );
        // At delta = pi/2 a rotor-frame lift vector (0,0,-T) must point
        // along +x (forward) in the body frame.
        let r = rotor_rotation(1, std::f64::consts::FRAC_PI_2);
        let lift = Vector3::new(0.0, 0.0, -1.0);
        let body = r * lift;
        assert_abs_diff_eq!(body, Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn gravity_at_rest_is_straight_down() {
        let (params, aero) = defaults();
        let f = total_force(&BodyState::ZERO, &RotorSet::STOPPED, &params, &aero);
        assert_abs_diff_eq!(f, Vector3::new(0.0, 0.0, 58.86), epsilon = 1e-12);
    }

    #[test]
    fn gravity_tips_forward_with_pitch() {
        let (params, aero) = defaults();
        let state = BodyState { theta: 1.4, ..BodyState::ZERO };
        let f = total_force(&state, &RotorSet::STOPPED, &params, &aero);
        let mg = 58.86_f64;
        assert_abs_diff_eq!(f.x, -mg * 1.4_f64.sin(), epsilon = 1e-12);
        assert_abs_diff_eq!(f.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.z, mg * 1.4_f64.cos(), epsilon = 1e-12);
    }

    #[test]
    fn untilted_equal_rotors_thrust_straight_up() {
        let (params, aero) = defaults();
        let rotors = RotorSet { omega: [800.0; 4], delta: 0.0 };
        let f = total_force(&BodyState::ZERO, &rotors, &params, &aero);
        let expected_z = 58.86 - 4.0 * params.kt * 800.0 * 800.0;
        assert_abs_diff_eq!(f.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.z, expected_z, epsilon = 1e-9);
    }

    #[test]
    fn equal_rotors_produce_zero_moment() {
        let (params, aero) = defaults();
        // Thrust terms cancel pairwise at delta=0, and the drag pattern
        // (-, -, +, +) cancels for equal speeds.
        let rotors = RotorSet { omega: [650.0; 4], delta: 0.0 };
        let m = total_moment(&BodyState::ZERO, &rotors, &params, &aero);
        assert_abs_diff_eq!(m, Vector3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn zero_airspeed_means_zero_aero_moment() {
        let (params, _) = defaults();
        let mut aero = AeroCoefficients::default();
        aero.cm.bias = 0.4;
        aero.cl.per_alpha = 1.0;
        let state = BodyState { q: 0.5, ..BodyState::ZERO };
        let m = aero_moment(&state, &params, &aero);
        assert_abs_diff_eq!(m, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn moment_is_continuous_in_tilt() {
        let (params, aero) = defaults();
        let rotors = |delta: f64| RotorSet { omega: [700.0, 640.0, 610.0, 730.0], delta };
        let mut prev = total_moment(&BodyState::ZERO, &rotors(0.0), &params, &aero);
        let n = 2000;
        for i in 1..=n {
            let delta = std::f64::consts::FRAC_PI_2 * i as f64 / n as f64;
            let m = total_moment(&BodyState::ZERO, &rotors(delta), &params, &aero);
            // Lipschitz-style bound: the sweep step is ~7.9e-4 rad and all
            // coefficients are O(d*kt*omega^2) ~ 2.7 N m, so per-step jumps
            // stay tiny.
            assert!((m - prev).norm() < 5e-3, "jump at delta = {delta}");
            prev = m;
        }
    }

    #[test]
    fn euler_kinematics_is_identity_at_level_attitude() {
        let (params, aero) = defaults();
        let state = BodyState { p: 0.1, q: 0.2, r: 0.3, ..BodyState::ZERO };
        let dot = state_derivative(&state, &RotorSet::STOPPED, &params, &aero, &[0.0; 3]).unwrap();
        assert_abs_diff_eq!(dot.phi, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(dot.theta, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(dot.psi, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn unit_torque_gives_inverse_inertia_acceleration() {
        let (params, aero) = defaults();
        // Injected disturbance is additive angular acceleration, so a pure
        // 1/ix "torque" arrives as exactly that.
        let dot = state_derivative(
            &BodyState::ZERO,
            &RotorSet::STOPPED,
            &params,
            &aero,
            &[1.0, 0.0, 0.0],
        )
        .unwrap();
        assert_abs_diff_eq!(dot.p, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dot.q, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gyroscopic_coupling_matches_closed_form() {
        let (params, aero) = defaults();
        let state = BodyState { q: 0.7, r: -0.4, ..BodyState::ZERO };
        let dot = state_derivative(&state, &RotorSet::STOPPED, &params, &aero, &[0.0; 3]).unwrap();
        let expected = (params.iy - params.iz) / params.ix * 0.7 * (-0.4);
        assert_abs_diff_eq!(dot.p, expected, epsilon = 1e-15);
    }

    #[test]
    fn angular_block_equals_simplified_attitude_model() {
        // The plant's angular block must coincide with the three-channel
        // model the controller assumes (gyro coupling + torque/inertia + d)
        // whenever d is supplied externally.
        let (params, aero) = defaults();
        let mut x = 0.37_f64;
        let mut next = || {
            x = (x + 0.754_877_666_246_693) % 1.0;
            x - 0.5
        };
        for _ in 0..100 {
            let state = BodyState {
                u: next() * 10.0,
                v: next() * 10.0,
                w: next() * 10.0,
                p: next() * 2.0,
                q: next() * 2.0,
                r: next() * 2.0,
                phi: next() * 1.0,
                theta: next() * 1.0,
                psi: next() * 3.0,
                pn: next() * 100.0,
                pe: next() * 100.0,
                h: next() * 100.0,
            };
            let d = [next() * 5.0, next() * 5.0, next() * 5.0];
            let rotors = RotorSet {
                omega: [next().abs() * 900.0, next().abs() * 900.0,
                        next().abs() * 900.0, next().abs() * 900.0],
                delta: next().abs() * 1.5,
            };
            let dot = state_derivative(&state, &rotors, &params, &aero, &d).unwrap();
            let m = total_moment(&state, &rotors, &params, &aero);
            let p_dot = (params.iy - params.iz) / params.ix * state.q * state.r
                + m.x / params.ix + d[0];
            let q_dot = (params.iz - params.ix) / params.iy * state.p * state.r
                + m.y / params.iy + d[1];
            let r_dot = (params.ix - params.iy) / params.iz * state.p * state.q
                + m.z / params.iz + d[2];
            assert_abs_diff_eq!(dot.p, p_dot, epsilon = 1e-13);
            assert_abs_diff_eq!(dot.q, q_dot, epsilon = 1e-13);
            assert_abs_diff_eq!(dot.r, r_dot, epsilon = 1e-13);
        }
    }

    #[test]
    fn altitude_rate_is_positive_up() {
        let (params, aero) = defaults();
        // Climbing: body z velocity negative (z down) at level attitude.
        let state = BodyState { w: -2.0, ..BodyState::ZERO };
        let dot = state_derivative(&state, &RotorSet::STOPPED, &params, &aero, &[0.0; 3]).unwrap();
        assert_abs_diff_eq!(dot.h, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn euler_rates_reduce_to_body_rates_when_level() {
        let rates = euler_rates(0.0, 0.0, 0.11, -0.22, 0.33).unwrap();
        assert_abs_diff_eq!(rates, Vector3::new(0.11, -0.22, 0.33), epsilon = 1e-15);
        assert!(euler_rates(0.0, 1.571, 0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn euler_rates_match_the_kinematic_matrix() {
        // Independent check against the standard kinematic matrix
        // [1 s_phi*t_th c_phi*t_th; 0 c_phi -s_phi; 0 s_phi/c_th c_phi/c_th].
        let (phi, theta) = (0.4, -0.6);
        let (p, q, r) = (0.3, -0.5, 0.8);
        let rates = euler_rates(phi, theta, p, q, r).unwrap();
        let expected = Vector3::new(
            p + phi.sin() * theta.tan() * q + phi.cos() * theta.tan() * r,
            phi.cos() * q - phi.sin() * r,
            phi.sin() / theta.cos() * q + phi.cos() / theta.cos() * r,
        );
        assert_abs_diff_eq!(rates, expected, epsilon = 1e-14);
    }

    #[test]
    fn gyro_accels_arithmetic() {
        let p = VehicleParams::default();
        let g = gyro_accels(&p, 0.5, -0.3, 0.2);
        assert_abs_diff_eq!(g[0], (0.166 - 0.115) / 0.876 * (-0.3) * 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], (0.115 - 0.876) / 0.166 * 0.5 * 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(g[2], (0.876 - 0.166) / 0.115 * 0.5 * (-0.3), epsilon = 1e-15);
    }

    #[test]
    fn world_momentum_is_attitude_invariant_in_magnitude() {
        let params = VehicleParams::default();
        let state = BodyState { p: 1.0, q: 0.02, r: -0.01, phi: 0.7, theta: 0.3, psi: -1.2, ..BodyState::ZERO };
        let h = world_angular_momentum(&state, &params).unwrap();
        let h_body_norm = Vector3::new(
            params.ix * state.p,
            params.iy * state.q,
            params.iz * state.r,
        )
        .norm();
        assert_abs_diff_eq!(h.norm(), h_body_norm, epsilon = 1e-12);
        // At level attitude the world and body components coincide.
        let level = BodyState { p: 1.0, q: 0.02, r: -0.01, ..BodyState::ZERO };
        let h0 = world_angular_momentum(&level, &params).unwrap();
        assert_abs_diff_eq!(h0.x, params.ix * 1.0, epsilon = 1e-15);
    }

    #[test]
    fn wrench_entry_point_matches_rotor_entry_point() {
        let (params, aero) = defaults();
        let state = BodyState { u: 3.0, q: 0.2, phi: 0.1, theta: -0.2, ..BodyState::ZERO };
        let rotors = RotorSet { omega: [700.0, 650.0, 620.0, 710.0], delta: 0.4 };
        let d = [0.3, -0.2, 0.1];
        let via_rotors = state_derivative(&state, &rotors, &params, &aero, &d).unwrap();
        let f = total_force(&state, &rotors, &params, &aero);
        let m = total_moment(&state, &rotors, &params, &aero);
        let via_wrench = state_derivative_from_wrench(&state, f, m, &params, &d).unwrap();
        assert_eq!(via_rotors, via_wrench);
    }

    #[test]
    fn params_validation_rejects_nonpositive() {
        let p = VehicleParams { kt: 0.0, ..VehicleParams::default() };
        assert!(p.validate().is_err());
        let p = VehicleParams { m: -1.0, ..VehicleParams::default() };
        assert!(p.validate().is_err());
        assert!(VehicleParams::default().validate().is_ok());
    }
}
