//! Rotor-level control allocation for the transition regime, plus the tilt
//! schedule that drives it.
//!
//! The square mixer maps the four squared rotor speeds to the virtual
//! wrench `[u1, u2, u3, T]` (roll, pitch, yaw torque; total z thrust) as a
//! tilt-dependent 4x4 matrix. Every force and torque is quadratic in rotor
//! speed, so the linear solve runs on squared speeds and square roots are
//! taken last; negative solutions are physically unreachable and are
//! clamped to zero with a saturation flag.
//!
//! A note on the drag-sign column: the determinant closed form this mixer
//! is validated against,
//!
//! ```text
//! |R| = 8 d kt^2 [ d^2 kt^2 sin(d) cos(d) + d kt kd cos(d)^2 ]
//! ```
//!
//! is only attainable when the four rotor drag-reaction signs do NOT cancel
//! pairwise (here rotor 4 carries the same sign as rotors 1 and 2). A
//! balanced spin pattern — which the plant model in [`crate::rigid_body`]
//! uses — yields a different closed form. Two consequences are documented
//! rather than hidden: the hover solution concentrates thrust on a diagonal
//! rotor pair instead of four equal speeds, and the simulation kernel
//! drives the angular dynamics with the commanded virtual torques (the
//! three-channel model the controller is designed against) while rotor
//! speeds are carried as trace-level bookkeeping.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::rigid_body::VehicleParams;

/// Normalized-determinant floor below which the mixer is declared
/// singular. The raw determinant scales as kt^3*kd*d^2 (~1e-22 for the
/// default constants), so the guard tests the determinant relative to its
/// angle-independent coefficient scale.
pub const DET_FLOOR: f64 = 1e-9;

/// Virtual control instruction: total thrust plus the three body torques.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VirtualCommand {
    pub thrust: f64, // total z-axis thrust T [N]; gravity-balancing is -m*g
    pub u1: f64,     // roll torque [N m]
    pub u2: f64,     // pitch torque [N m]
    pub u3: f64,     // yaw torque [N m]
}

impl VirtualCommand {
    /// Wrench vector in mixer row order `[u1, u2, u3, T]`.
    pub fn wrench(&self) -> Vector4<f64> {
        Vector4::new(self.u1, self.u2, self.u3, self.thrust)
    }

    pub fn from_wrench(w: &Vector4<f64>) -> Self {
        VirtualCommand { u1: w[0], u2: w[1], u3: w[2], thrust: w[3] }
    }
}

/// The tilt-dependent mixer: matrix, cached tilt, and determinant.
#[derive(Debug, Clone, Copy)]
pub struct MixerMatrix {
    pub matrix: Matrix4<f64>,
    pub delta: f64,
    pub det: f64,
}

/// Raw mixer matrix at tilt `delta` (no singularity guard). Rows are
/// roll, pitch, yaw, thrust; columns rotors 1..4; the solve variable is the
/// squared speed vector.
pub fn mixer_matrix(delta: f64, params: &VehicleParams) -> Matrix4<f64> {
    let (sd, cd) = delta.sin_cos();
    let dkt = params.d_arm * params.kt;
    let kd = params.kd;
    let kt = params.kt;
    Matrix4::new(
        -dkt * cd + kd * sd, dkt, dkt * cd - kd * sd, -dkt,
        dkt * cd, -dkt, dkt * cd, -dkt,
        -dkt * sd - kd * cd, -kd, dkt * sd + kd * cd, -kd,
        -kt * cd, -kt, -kt * cd, -kt,
    )
}

/// Closed-form mixer determinant; the brute-force determinant of
/// [`mixer_matrix`] equals this identically in (delta, kt, kd, d_arm).
pub fn det_closed_form(delta: f64, params: &VehicleParams) -> f64 {
    let (sd, cd) = delta.sin_cos();
    let dkt = params.d_arm * params.kt;
    8.0 * params.d_arm
        * params.kt
        * params.kt
        * (dkt * dkt * sd * cd + dkt * params.kd * cd * cd)
}

/// Determinant magnitude normalized by the angle-independent coefficient
/// scale, used for the singularity guard.
pub fn normalized_det(delta: f64, params: &VehicleParams) -> f64 {
    let dkt = params.d_arm * params.kt;
    let scale = 8.0 * params.d_arm * params.kt * params.kt * (dkt * dkt + dkt * params.kd);
    (det_closed_form(delta, params) / scale).abs()
}

/// Build the mixer at `delta`, rejecting (near-)singular tilts. The
/// determinant vanishes exactly at delta = pi/2, where pitch torque and
/// total thrust both depend only on the rear rotor pair.
pub fn mixer(delta: f64, params: &VehicleParams) -> Result<MixerMatrix> {
    let matrix = mixer_matrix(delta, params);
    let det = det_closed_form(delta, params);
    if normalized_det(delta, params) <= DET_FLOOR {
        return Err(SimError::SingularMixer { t: f64::NAN, delta, det_abs: det.abs() });
    }
    Ok(MixerMatrix { matrix, delta, det })
}

/// Result of one allocation call.
#[derive(Debug, Clone, Copy)]
pub struct Allocation {
    /// Physical rotor speeds, sqrt of the clamped squared solution [rad/s].
    pub omega: [f64; 4],
    /// Pre-clamp squared-speed solution of the linear system [rad^2/s^2].
    pub squared: [f64; 4],
    /// True when any squared-speed component was negative and clamped.
    pub saturated: bool,
    /// Wrench actually produced by the clamped speeds.
    pub achieved: VirtualCommand,
}

/// Solve the mixer for rotor speeds producing `cmd` at tilt `delta`.
///
/// The pre-clamp solution reproduces the command exactly (round trip
/// through the mixer matrix); when clamping activates, `achieved` reports
/// the realizable wrench instead.
pub fn allocate(cmd: &VirtualCommand, delta: f64, params: &VehicleParams) -> Result<Allocation> {
    let mx = mixer(delta, params)?;
    let lu = mx.matrix.lu();
    let squared_v = lu.solve(&cmd.wrench()).ok_or(SimError::SingularMixer {
        t: f64::NAN,
        delta,
        det_abs: mx.det.abs(),
    })?;
    let squared = [squared_v[0], squared_v[1], squared_v[2], squared_v[3]];
    let clamped = squared.map(|w| w.max(0.0));
    let saturated = squared.iter().any(|&w| w < 0.0);
    let achieved_w = mx.matrix * Vector4::new(clamped[0], clamped[1], clamped[2], clamped[3]);
    Ok(Allocation {
        omega: clamped.map(f64::sqrt),
        squared,
        saturated,
        achieved: VirtualCommand::from_wrench(&achieved_w),
    })
}

/// Forward-mode placeholder: map torque commands onto normalized control
/// surface deflections. Fixed-wing surface allocation is out of scope; this
/// linear-through-a-reference-torque map with a [-1, 1] clamp exists so a
/// full transition timeline can execute and be traced.
pub fn forward_mode_stub(cmd: &VirtualCommand, torque_ref: f64) -> [f64; 3] {
    debug_assert!(torque_ref > 0.0);
    [cmd.u1, cmd.u2, cmd.u3].map(|u| (u / torque_ref).clamp(-1.0, 1.0))
}

/// Which endpoint a tilt phase starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiltDirection {
    /// Hover to forward: delta sweeps 0 -> pi/2.
    Conversion,
    /// Forward to hover: delta sweeps pi/2 -> 0.
    Reconversion,
}

/// One tilt phase as a symmetric trapezoidal-rate profile: the tilt rate
/// ramps linearly to `peak_rate`, coasts, and ramps back down, covering
/// exactly pi/2 of tilt in `duration` seconds.
///
/// Feasibility requires `peak_rate` in (pi/(2 duration), pi/duration]; the
/// lower bound is the mean rate (no room to ramp), the upper the triangular
/// profile (no coast).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiltSchedule {
    pub direction: TiltDirection,
    pub t0: f64,       // phase start [s]
    pub duration: f64, // phase length [s]
    pub peak_rate: f64, // coast tilt rate [rad/s]
}

impl TiltSchedule {
    /// Default ramp shape: peak rate 1.5x the mean, i.e. equal thirds of
    /// ramp-up, coast, ramp-down.
    pub fn with_default_rate(direction: TiltDirection, t0: f64, duration: f64) -> Self {
        let peak_rate = 0.75 * std::f64::consts::PI / duration;
        TiltSchedule { direction, t0, duration, peak_rate }
    }

    pub fn validate(&self) -> Result<()> {
        let quarter = std::f64::consts::FRAC_PI_2;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(SimError::Config(format!(
                "tilt schedule duration must be positive, got {}",
                self.duration
            )));
        }
        let mean = quarter / self.duration;
        if self.peak_rate.is_nan() || self.peak_rate <= mean {
            return Err(SimError::Config(format!(
                "tilt peak rate {} cannot cover pi/2 in {} s (needs > {mean})",
                self.peak_rate, self.duration
            )));
        }
        if self.peak_rate > 2.0 * mean {
            return Err(SimError::Config(format!(
                "tilt peak rate {} overshoots: ramp time would exceed half the phase",
                self.peak_rate
            )));
        }
        Ok(())
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.duration
    }

    /// Progress distance through the trapezoid and its rate at local time
    /// `tau` in [0, duration]; distance runs 0 -> pi/2.
    fn progress(&self, tau: f64) -> (f64, f64) {
        let total = std::f64::consts::FRAC_PI_2;
        let t_ramp = self.duration - total / self.peak_rate;
        let accel = self.peak_rate / t_ramp;
        if tau <= 0.0 {
            (0.0, 0.0)
        } else if tau < t_ramp {
            (0.5 * accel * tau * tau, accel * tau)
        } else if tau < self.duration - t_ramp {
            (0.5 * self.peak_rate * t_ramp + self.peak_rate * (tau - t_ramp), self.peak_rate)
        } else if tau < self.duration {
            let remain = self.duration - tau;
            (total - 0.5 * accel * remain * remain, accel * remain)
        } else {
            (total, 0.0)
        }
    }
}

/// Tilt angle and rate at time `t`. Before `t0` the phase's initial
/// endpoint holds; after completion, the terminal endpoint.
pub fn tilt_at(schedule: &TiltSchedule, t: f64) -> (f64, f64) {
    let (dist, rate) = schedule.progress(t - schedule.t0);
    match schedule.direction {
        TiltDirection::Conversion => (dist, rate),
        TiltDirection::Reconversion => (std::f64::consts::FRAC_PI_2 - dist, -rate),
    }
}

/// The full mission tilt profile: hover, conversion, forward flight,
/// reconversion, hover. Either phase may be absent: no conversion means the
/// rotors stay vertical for the whole run, no reconversion means the
/// vehicle stays in forward flight once converted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TiltTimeline {
    pub conversion: Option<TiltSchedule>,
    pub reconversion: Option<TiltSchedule>,
}

impl TiltTimeline {
    pub fn validate(&self) -> Result<()> {
        if let Some(conv) = &self.conversion {
            conv.validate()?;
            if conv.direction != TiltDirection::Conversion {
                return Err(SimError::Config(
                    "tilt timeline `conversion` phase has the wrong direction".into(),
                ));
            }
        }
        if let Some(reconv) = &self.reconversion {
            reconv.validate()?;
            if reconv.direction != TiltDirection::Reconversion {
                return Err(SimError::Config(
                    "tilt timeline `reconversion` phase has the wrong direction".into(),
                ));
            }
            let conv = self.conversion.as_ref().ok_or_else(|| {
                SimError::Config("a reconversion phase requires a conversion first".into())
            })?;
            if conv.end() > reconv.t0 {
                return Err(SimError::Config(format!(
                    "conversion ends at {} s, after reconversion starts at {} s",
                    conv.end(),
                    reconv.t0
                )));
            }
        }
        Ok(())
    }

    /// Tilt angle and rate anywhere on the mission timeline.
    pub fn tilt_at(&self, t: f64) -> (f64, f64) {
        let Some(conv) = &self.conversion else {
            return (0.0, 0.0);
        };
        if t < conv.t0 {
            return (0.0, 0.0);
        }
        match &self.reconversion {
            Some(reconv) if t > reconv.t0 => tilt_at(reconv, t),
            _ => tilt_at(conv, t),
        }
    }
}
