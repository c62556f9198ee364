//! Closed-loop transition simulation.
//!
//! One simulation step advances four coupled pieces on a fixed grid:
//!
//! 1. read the measured Euler angles and rates from the plant state;
//! 2. take the observers' current disturbance estimates;
//! 3. compute the per-axis control torques (algebraic in the current
//!    augmented state — no surface-rate feedback loop at evaluation time);
//! 4. look up the rotor tilt angle and rate from the mission timeline;
//! 5. allocate rotor speeds for the commanded wrench (or hand off to the
//!    forward-mode surface stub beyond the tilt threshold);
//! 6. evaluate the injected disturbance;
//! 7. integrate plant, observers and controller auxiliary states over one
//!    step of classical fixed-step 4th-order Runge-Kutta, with the control
//!    torque and rotor speeds held (zero-order hold);
//! 8. append a trace record.
//!
//! Within (7) the rigid body and the controller auxiliary integrals take a
//! single 4th-order step, while the observers run on a finer sub-grid
//! (fixed substep width `observer.substep`, still classical 4th order):
//! the discontinuous super-twisting correction needs finer time resolution
//! than the smooth dynamics, and sub-stepping keeps its sliding ripple
//! `h3 * h_sub` small without touching the published gain ladder. Pinning
//! the substep *width* rather than a per-step count also keeps the
//! correction's discretization behavior unchanged when the control step is
//! refined, so step-halving comparisons see the same observer grid. The
//! sub-grid sees a cubic-Hermite interpolation of the plant angles built
//! from the step's endpoint values and exact derivatives, so measurements
//! stay C^1-continuous and 4th-order consistent across the step.
//!
//! All loops are pure fixed-order f64 arithmetic: reruns of the same
//! scenario are byte-identical.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::allocation::{self, VirtualCommand};
use crate::arsmc::{
    adaptation_rates, ftsmc_axis_control, model_s_rate, recursive_axis_control, surface_eval,
    switching_integrand, AxisInputs, ControllerChannel, ControllerKind, SurfaceGains,
};
use crate::config::ScenarioConfig;
use crate::error::{Result, SimError};
use crate::math::sig_pow;
use crate::rigid_body::{self, BodyState, RotorSet};
use crate::steso::{observer_derivative, ObserverChannel};

/// Scripted per-axis angular-acceleration disturbance, evaluated from time
/// alone. `Sum` composes arbitrary stacks of the primitives.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceProfile {
    /// No injected disturbance.
    #[default]
    Zero,
    /// Constant offset on each axis [rad/s^2].
    Constant { value: [f64; 3] },
    /// `amplitude * sin(angular_frequency * (t - t_on))` inside the window
    /// `[t_on, t_off]`, zero outside — the standard rejection test signal.
    WindowedSine {
        amplitude: [f64; 3],
        angular_frequency: f64,
        t_on: f64,
        t_off: f64,
    },
    /// Pointwise sum of the parts.
    Sum { parts: Vec<DisturbanceProfile> },
}

impl DisturbanceProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            DisturbanceProfile::Zero => Ok(()),
            DisturbanceProfile::Constant { value } => {
                if value.iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(SimError::Config(
                        "constant disturbance value must be finite".into(),
                    ))
                }
            }
            DisturbanceProfile::WindowedSine {
                amplitude,
                angular_frequency,
                t_on,
                t_off,
            } => {
                if !amplitude.iter().all(|v| v.is_finite()) || !angular_frequency.is_finite() {
                    return Err(SimError::Config(
                        "windowed sine amplitude/frequency must be finite".into(),
                    ));
                }
                if !(t_on.is_finite() && t_off.is_finite() && t_off >= t_on) {
                    return Err(SimError::Config(format!(
                        "windowed sine needs t_off >= t_on, got [{t_on}, {t_off}]"
                    )));
                }
                Ok(())
            }
            DisturbanceProfile::Sum { parts } => parts.iter().try_for_each(|p| p.validate()),
        }
    }
}

/// Injected disturbance at time `t` [rad/s^2 per axis].
pub fn disturbance_at(profile: &DisturbanceProfile, t: f64) -> [f64; 3] {
    match profile {
        DisturbanceProfile::Zero => [0.0; 3],
        DisturbanceProfile::Constant { value } => *value,
        DisturbanceProfile::WindowedSine {
            amplitude,
            angular_frequency,
            t_on,
            t_off,
        } => {
            if t >= *t_on && t <= *t_off {
                let s = (angular_frequency * (t - t_on)).sin();
                [amplitude[0] * s, amplitude[1] * s, amplitude[2] * s]
            } else {
                [0.0; 3]
            }
        }
        DisturbanceProfile::Sum { parts } => {
            let mut acc = [0.0; 3];
            for p in parts {
                let d = disturbance_at(p, t);
                for i in 0..3 {
                    acc[i] += d[i];
                }
            }
            acc
        }
    }
}

/// Tilt-coupled disturbance model: the aerodynamic upset of swinging the
/// rotor axes, `amp_angle * sin(delta) + amp_rate * delta_dot` per axis.
/// The angle term captures the steady thrust-line/propwash asymmetry at
/// tilt `delta`; the rate term the transient while the nacelles move. It
/// acts whenever the timeline tilts the rotors, independent of any
/// injected test signal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitionEffect {
    pub amp_angle: [f64; 3],
    pub amp_rate: [f64; 3],
}

impl TransitionEffect {
    pub fn validate(&self) -> Result<()> {
        if self
            .amp_angle
            .iter()
            .chain(self.amp_rate.iter())
            .all(|v| v.is_finite())
        {
            Ok(())
        } else {
            Err(SimError::Config(
                "transition-effect amplitudes must be finite".into(),
            ))
        }
    }
}

/// Transition-coupled disturbance at tilt state `(delta, delta_dot)`.
pub fn transition_disturbance(effect: &TransitionEffect, delta: f64, delta_dot: f64) -> [f64; 3] {
    let s = delta.sin();
    [
        effect.amp_angle[0] * s + effect.amp_rate[0] * delta_dot,
        effect.amp_angle[1] * s + effect.amp_rate[1] * delta_dot,
        effect.amp_angle[2] * s + effect.amp_rate[2] * delta_dot,
    ]
}

/// One trace row: the full augmented state plus everything the step
/// computed from it. Axis arrays are ordered roll, pitch, yaw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: f64,
    pub body: BodyState,
    /// Tracking error `angle - reference` [rad].
    pub e: [f64; 3],
    /// Observer angle estimates [rad].
    pub angle_hat: [f64; 3],
    /// Observer rate estimates [rad/s].
    pub rate_hat: [f64; 3],
    /// Observer disturbance estimates [rad/s^2].
    pub d_hat: [f64; 3],
    /// Disturbance estimates as consumed by the control law: the low-pass
    /// filtered values when the feedforward filter is enabled, the raw
    /// estimates otherwise [rad/s^2].
    pub d_hat_f: [f64; 3],
    /// Disturbance actually injected into the plant at this instant
    /// (scripted profile plus transition effect) [rad/s^2].
    pub d_injected: [f64; 3],
    /// Fast terminal sliding variable per axis.
    pub sigma: [f64; 3],
    /// Recursive sliding variable per axis (equals sigma for the
    /// fast-terminal baseline).
    pub s: [f64; 3],
    /// Model-based sliding-variable rate per axis.
    pub s_dot: [f64; 3],
    /// Recursion state per axis.
    pub eta: [f64; 3],
    /// Proportional switching gain per axis (adaptive for the cascade).
    pub xi1: [f64; 3],
    /// Integral switching gain per axis.
    pub xi2: [f64; 3],
    /// Commanded torque per axis [N m].
    pub torque: [f64; 3],
    /// Commanded collective thrust [N], body-z sign convention.
    pub thrust_cmd: f64,
    /// Rotor tilt angle [rad] and rate [rad/s].
    pub delta: f64,
    pub delta_dot: f64,
    /// Allocated rotor speeds [rad/s]; zero in forward mode.
    pub rotor: [f64; 4],
    /// Normalized control-surface commands (forward mode only).
    pub surface_cmd: [f64; 3],
    /// True when the rotor-speed solution clamped a negative square.
    pub allocation_saturated: bool,
    /// True when tilt passed the forward-mode threshold and torque demands
    /// were handed to the surface stub.
    pub forward_mode: bool,
}

impl Record {
    /// All-zero record; a scaffold for building synthetic traces in tests
    /// and checks.
    pub fn zeroed() -> Record {
        Record {
            t: 0.0,
            body: BodyState::ZERO,
            e: [0.0; 3],
            angle_hat: [0.0; 3],
            rate_hat: [0.0; 3],
            d_hat: [0.0; 3],
            d_hat_f: [0.0; 3],
            d_injected: [0.0; 3],
            sigma: [0.0; 3],
            s: [0.0; 3],
            s_dot: [0.0; 3],
            eta: [0.0; 3],
            xi1: [0.0; 3],
            xi2: [0.0; 3],
            torque: [0.0; 3],
            thrust_cmd: 0.0,
            delta: 0.0,
            delta_dot: 0.0,
            rotor: [0.0; 4],
            surface_cmd: [0.0; 3],
            allocation_saturated: false,
            forward_mode: false,
        }
    }
}

/// Fixed-grid simulation output: record `k` is at time `k * step`, with
/// one record per step plus the initial state (a zero-duration run yields
/// exactly one record).
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub step: f64,
    pub records: Vec<Record>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_record(&self) -> &Record {
        self.records.last().expect("a trace always has records")
    }

    /// Records with `t` in `[t_start, t_end]`, compared with a small
    /// grid-relative tolerance so window edges that coincide with grid
    /// points are kept regardless of rounding in `k * step`.
    pub fn window(&self, t_start: f64, t_end: f64) -> &[Record] {
        if self.records.is_empty() || t_start.is_nan() || t_end.is_nan() || t_end < t_start {
            return &[];
        }
        let tol = self.step * 1e-6;
        let lo = ((t_start - tol) / self.step).ceil().max(0.0) as usize;
        let hi_f = ((t_end + tol) / self.step).floor();
        if hi_f < lo as f64 {
            return &[];
        }
        let hi = (hi_f as usize).min(self.records.len() - 1);
        if lo > hi {
            return &[];
        }
        &self.records[lo..=hi]
    }
}

/// Control/actuation outputs held constant over one integration step.
#[derive(Debug, Clone, Copy)]
struct Held {
    torque: [f64; 3],
    rotors: RotorSet,
}

/// Cubic Hermite interpolant of the three Euler angles across one plant
/// step, built from endpoint values and exact endpoint derivatives. Serves
/// the observer sub-grid and the controller auxiliary integrals a C^1
/// measurement trajectory consistent with the plant integration.
struct AngleInterp {
    h: f64,
    y0: [f64; 3],
    m0: [f64; 3],
    y1: [f64; 3],
    m1: [f64; 3],
}

impl AngleInterp {
    /// Angles and angle rates at fraction `xi` in [0, 1] of the step.
    fn eval(&self, xi: f64) -> ([f64; 3], [f64; 3]) {
        let x2 = xi * xi;
        let x3 = x2 * xi;
        let c_y0 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let c_m0 = x3 - 2.0 * x2 + xi;
        let c_y1 = -2.0 * x3 + 3.0 * x2;
        let c_m1 = x3 - x2;
        let d_y0 = (6.0 * x2 - 6.0 * xi) / self.h;
        let d_m0 = 3.0 * x2 - 4.0 * xi + 1.0;
        let d_y1 = -d_y0;
        let d_m1 = 3.0 * x2 - 2.0 * xi;
        let mut y = [0.0; 3];
        let mut m = [0.0; 3];
        for i in 0..3 {
            y[i] = c_y0 * self.y0[i]
                + self.h * (c_m0 * self.m0[i] + c_m1 * self.m1[i])
                + c_y1 * self.y1[i];
            m[i] = d_y0 * self.y0[i] + d_m0 * self.m0[i] + d_y1 * self.y1[i] + d_m1 * self.m1[i];
        }
        (y, m)
    }
}

/// Give a propagated error the time stamp of the step that raised it.
fn stamp_time(err: SimError, t: f64) -> SimError {
    match err {
        SimError::Singularity { theta_abs, .. } => SimError::Singularity { t, theta_abs },
        SimError::SingularMixer { delta, det_abs, .. } => SimError::SingularMixer {
            t,
            delta,
            det_abs,
        },
        SimError::NonFinite { what, .. } => SimError::NonFinite { t, what },
        other => other,
    }
}

/// The advancing closed-loop state. Use [`run`] for whole scenarios;
/// construct one of these directly to drive or inspect the loop step by
/// step.
pub struct Simulation {
    cfg: ScenarioConfig,
    t_index: usize,
    pub body: BodyState,
    pub observers: [ObserverChannel; 3],
    pub channels: [ControllerChannel; 3],
    /// Low-pass filtered disturbance estimates (the values the control law
    /// consumes when the feedforward filter is enabled).
    pub dhat_f: [f64; 3],
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let body = cfg.initial;
        let angles = body.euler();
        let rates = rigid_body::euler_rates(body.phi, body.theta, body.p, body.q, body.r)
            .map_err(|e| stamp_time(e, 0.0))?;

        let mut observers = [ObserverChannel::new(cfg.observer.gains); 3];
        for i in 0..3 {
            observers[i] = ObserverChannel::with_initial_angle(cfg.observer.gains, angles[i]);
            if cfg.observer.correction == crate::steso::Correction::Sat {
                observers[i] = observers[i].use_sat(cfg.observer.sat_delta);
            }
        }

        let kind = cfg.controller;
        let g = active_surface(cfg);
        let (xi1_0, xi2_0) = match kind {
            ControllerKind::Sac => (cfg.sac.adaptation.xi1_init, cfg.sac.adaptation.xi2_init),
            ControllerKind::Rsmc => (cfg.rsmc.switching.xi1, cfg.rsmc.switching.xi2),
            _ => (0.0, 0.0),
        };
        let mut channels = [ControllerChannel::init(0.0, 1.0, 0.0, 0.0); 3];
        if kind != ControllerKind::None {
            for i in 0..3 {
                let e0 = angles[i] - cfg.reference[i].angle;
                let ed0 = rates[i] - cfg.reference[i].rate;
                let (sigma0, _) = surface_eval(e0, ed0, 0.0, 0.0, &g);
                channels[i] = ControllerChannel::init(sigma0, g.lambda, xi1_0, xi2_0);
            }
        }

        Ok(Simulation {
            cfg: cfg.clone(),
            t_index: 0,
            body,
            observers,
            channels,
            dhat_f: [0.0; 3],
        })
    }

    /// Disturbance estimate as the control law sees it for one axis.
    fn visible_estimate(&self, i: usize) -> f64 {
        if self.cfg.sac.feedforward_tau > 0.0 {
            self.dhat_f[i]
        } else {
            self.observers[i].d_hat
        }
    }

    /// [`Self::visible_estimate`] for all three axes at once.
    fn visible_estimates(&self) -> [f64; 3] {
        [self.visible_estimate(0), self.visible_estimate(1), self.visible_estimate(2)]
    }

    /// Current grid time, formed as `index * step` (not accumulated) so
    /// long runs carry no additive rounding drift.
    pub fn time(&self) -> f64 {
        self.t_index as f64 * self.cfg.step
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    /// Compute everything the loop produces at the current instant: the
    /// control torques, allocation, injected disturbance, and the trace
    /// record capturing them. Refreshes the channels' traced surface
    /// values but does not advance time.
    fn evaluate(&mut self) -> Result<(Record, Held)> {
        let t = self.time();
        let p = self.cfg.vehicle;
        let inertia = [p.ix, p.iy, p.iz];
        let kind = self.cfg.controller;

        let angles = self.body.euler();
        let rates =
            rigid_body::euler_rates(self.body.phi, self.body.theta, self.body.p, self.body.q, self.body.r)
                .map_err(|e| stamp_time(e, t))?;
        let gyro = rigid_body::gyro_accels(&p, rates.x, rates.y, rates.z);
        let (delta, delta_dot) = self.cfg.tilt.tilt_at(t);

        let g = active_surface(&self.cfg);
        let mut torque = [0.0; 3];
        for i in 0..3 {
            let d_hat_ctrl = match kind {
                ControllerKind::Sac => self.visible_estimate(i),
                _ => 0.0,
            };
            let inp = AxisInputs {
                angle: angles[i],
                rate: rates[i],
                d_hat: d_hat_ctrl,
                reference: self.cfg.reference[i],
                inertia: inertia[i],
                gyro_accel: gyro[i],
            };
            let raw = match kind {
                ControllerKind::Sac => {
                    recursive_axis_control(&mut self.channels[i], &inp, &self.cfg.sac.surface)
                }
                ControllerKind::Rsmc => {
                    recursive_axis_control(&mut self.channels[i], &inp, &self.cfg.rsmc.surface)
                }
                ControllerKind::Ftsmc => ftsmc_axis_control(
                    &mut self.channels[i],
                    &inp,
                    &self.cfg.ftsmc.surface,
                    &self.cfg.ftsmc.reaching,
                ),
                ControllerKind::None => 0.0,
            };
            torque[i] = crate::arsmc::clamp_torque(raw, self.cfg.torque_limit);
            self.channels[i].s_dot = if kind == ControllerKind::None {
                0.0
            } else {
                model_s_rate(&inp, torque[i], self.channels[i].sigma, &g)
            };
        }

        let thrust_cmd = match kind {
            ControllerKind::None => 0.0,
            _ => p.hover_thrust(),
        };
        let cmd = VirtualCommand {
            thrust: thrust_cmd,
            u1: torque[0],
            u2: torque[1],
            u3: torque[2],
        };

        let forward_mode =
            kind != ControllerKind::None && delta > self.cfg.forward_mode_threshold;
        let (rotors, allocation_saturated, surface_cmd) = if kind == ControllerKind::None {
            // Plant-only coast: rotors stopped, no allocation.
            (RotorSet { omega: [0.0; 4], delta }, false, [0.0; 3])
        } else if forward_mode {
            // Beyond the handoff tilt the (near-singular) rotor mixer is
            // not consulted; torque demands map to surface deflections.
            let surf = allocation::forward_mode_stub(&cmd, self.cfg.forward_mode_torque_ref);
            (RotorSet { omega: [0.0; 4], delta }, false, surf)
        } else {
            let alloc =
                allocation::allocate(&cmd, delta, &p).map_err(|e| stamp_time(e, t))?;
            (
                RotorSet { omega: alloc.omega, delta },
                alloc.saturated,
                [0.0; 3],
            )
        };

        let mut d_injected = disturbance_at(&self.cfg.disturbance, t);
        let d_trans = transition_disturbance(&self.cfg.transition_effect, delta, delta_dot);
        for i in 0..3 {
            d_injected[i] += d_trans[i];
        }

        let record = Record {
            t,
            body: self.body,
            e: [
                angles[0] - self.cfg.reference[0].angle,
                angles[1] - self.cfg.reference[1].angle,
                angles[2] - self.cfg.reference[2].angle,
            ],
            angle_hat: [
                self.observers[0].x1_hat,
                self.observers[1].x1_hat,
                self.observers[2].x1_hat,
            ],
            rate_hat: [
                self.observers[0].x2_hat,
                self.observers[1].x2_hat,
                self.observers[2].x2_hat,
            ],
            d_hat: [
                self.observers[0].d_hat,
                self.observers[1].d_hat,
                self.observers[2].d_hat,
            ],
            d_hat_f: [
                self.visible_estimate(0),
                self.visible_estimate(1),
                self.visible_estimate(2),
            ],
            d_injected,
            sigma: [
                self.channels[0].sigma,
                self.channels[1].sigma,
                self.channels[2].sigma,
            ],
            s: [self.channels[0].s, self.channels[1].s, self.channels[2].s],
            s_dot: [
                self.channels[0].s_dot,
                self.channels[1].s_dot,
                self.channels[2].s_dot,
            ],
            eta: [
                self.channels[0].eta,
                self.channels[1].eta,
                self.channels[2].eta,
            ],
            xi1: [
                self.channels[0].xi1_hat,
                self.channels[1].xi1_hat,
                self.channels[2].xi1_hat,
            ],
            xi2: [
                self.channels[0].xi2_hat,
                self.channels[1].xi2_hat,
                self.channels[2].xi2_hat,
            ],
            torque,
            thrust_cmd,
            delta,
            delta_dot,
            rotor: rotors.omega,
            surface_cmd,
            allocation_saturated,
            forward_mode,
        };
        Ok((record, Held { torque, rotors }))
    }

    /// Plant derivative under held actuation, with the time-continuous
    /// injected disturbance evaluated at the substage instant.
    fn plant_derivative(&self, tau: f64, body: &BodyState, held: &Held) -> Result<BodyState> {
        let (delta, delta_dot) = self.cfg.tilt.tilt_at(tau);
        let mut d = disturbance_at(&self.cfg.disturbance, tau);
        let d_trans = transition_disturbance(&self.cfg.transition_effect, delta, delta_dot);
        for i in 0..3 {
            d[i] += d_trans[i];
        }
        let force = rigid_body::total_force(body, &held.rotors, &self.cfg.vehicle, &self.cfg.aero);
        rigid_body::state_derivative_from_wrench(
            body,
            force,
            Vector3::new(held.torque[0], held.torque[1], held.torque[2]),
            &self.cfg.vehicle,
            &d,
        )
        .map_err(|e| stamp_time(e, tau))
    }

    /// Advance the observers over one control step on their sub-grid,
    /// reading measurements from the interpolant, and run the feedforward
    /// filter on the same sub-grid (exact first-order update per substep).
    /// Returns the control-law-visible disturbance estimates sampled at
    /// the step's start, midpoint and end for the auxiliary integrals.
    ///
    /// The sub-grid is defined by the configured substep *width*: the
    /// number of substeps is whatever fits into the control step. When
    /// that count is odd the midpoint sample is the average of the two
    /// bracketing substep boundaries.
    fn advance_observers(&mut self, interp: &AngleInterp, held: &Held) -> [[f64; 3]; 3] {
        let p = self.cfg.vehicle;
        let inertia = [p.ix, p.iy, p.iz];
        let k_sub = ((self.cfg.step / self.cfg.observer.substep).round() as usize).max(1);
        let h_sub = self.cfg.step / k_sub as f64;
        // Substep counts (completed) bracketing the control-step midpoint.
        let mid_lo = k_sub / 2;
        let mid_hi = k_sub - mid_lo;
        let tau = self.cfg.sac.feedforward_tau;
        let filter_gain = if tau > 0.0 { 1.0 - (-h_sub / tau).exp() } else { 0.0 };

        let mut d_snap = [[0.0; 3]; 3];
        d_snap[0] = self.visible_estimates();
        d_snap[1] = d_snap[0];

        for j in 0..k_sub {
            let xi_a = j as f64 / k_sub as f64;
            let xi_b = (j as f64 + 0.5) / k_sub as f64;
            let xi_c = (j + 1) as f64 / k_sub as f64;
            let (y_a, m_a) = interp.eval(xi_a);
            let (y_b, m_b) = interp.eval(xi_b);
            let (y_c, m_c) = interp.eval(xi_c);
            let g_a = rigid_body::gyro_accels(&p, m_a[0], m_a[1], m_a[2]);
            let g_b = rigid_body::gyro_accels(&p, m_b[0], m_b[1], m_b[2]);
            let g_c = rigid_body::gyro_accels(&p, m_c[0], m_c[1], m_c[2]);

            for i in 0..3 {
                let ca = held.torque[i] / inertia[i];
                let ch = self.observers[i];
                let k1 = observer_derivative(&ch, y_a[i], g_a[i], ca);
                let k2 = observer_derivative(&shift(&ch, &k1, h_sub / 2.0), y_b[i], g_b[i], ca);
                let k3 = observer_derivative(&shift(&ch, &k2, h_sub / 2.0), y_b[i], g_b[i], ca);
                let k4 = observer_derivative(&shift(&ch, &k3, h_sub), y_c[i], g_c[i], ca);
                let ch = &mut self.observers[i];
                ch.x1_hat += h_sub / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                ch.x2_hat += h_sub / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
                ch.d_hat += h_sub / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
            }

            if tau > 0.0 {
                for i in 0..3 {
                    self.dhat_f[i] += filter_gain * (self.observers[i].d_hat - self.dhat_f[i]);
                }
            }

            let done = j + 1;
            if done == mid_lo {
                d_snap[1] = self.visible_estimates();
            }
            if done == mid_hi {
                let now = self.visible_estimates();
                for (held, fresh) in d_snap[1].iter_mut().zip(now) {
                    *held = 0.5 * (*held + fresh);
                }
            }
        }
        d_snap[2] = self.visible_estimates();
        d_snap
    }

    /// Advance the controller auxiliary integrals (terminal integral,
    /// recursion state, switching integral, adaptive gains) over one step
    /// of classical 4th order, with errors read from the interpolant and
    /// the torque held.
    fn advance_aux(&mut self, interp: &AngleInterp, held: &Held, d_snap: &[[f64; 3]; 3]) {
        let kind = self.cfg.controller;
        if kind == ControllerKind::None {
            return;
        }
        let h = self.cfg.step;
        let p = self.cfg.vehicle;
        let inertia = [p.ix, p.iy, p.iz];
        let g = active_surface(&self.cfg);
        let reference = self.cfg.reference;
        let adaptation = self.cfg.sac.adaptation;
        let rsmc_sat = self.cfg.rsmc.switching.sat_delta;

        // Shared interpolant evaluations for the three RK4 abscissae.
        let (y_0, m_0) = interp.eval(0.0);
        let (y_m, m_m) = interp.eval(0.5);
        let (y_1, m_1) = interp.eval(1.0);
        let gy = [
            rigid_body::gyro_accels(&p, m_0[0], m_0[1], m_0[2]),
            rigid_body::gyro_accels(&p, m_m[0], m_m[1], m_m[2]),
            rigid_body::gyro_accels(&p, m_1[0], m_1[1], m_1[2]),
        ];
        let angles = [y_0, y_m, y_1];
        let rates = [m_0, m_m, m_1];

        for i in 0..3 {
            let ch = &self.channels[i];
            let a0 = [ch.term_integral, ch.eta, ch.sw_integral, ch.xi1_hat, ch.xi2_hat];
            let u = held.torque[i];

            let deriv = |stage: usize, a: &[f64; 5]| -> [f64; 5] {
                let d_ctrl = match kind {
                    ControllerKind::Sac => d_snap[stage][i],
                    _ => 0.0,
                };
                let inp = AxisInputs {
                    angle: angles[stage][i],
                    rate: rates[stage][i],
                    d_hat: d_ctrl,
                    reference: reference[i],
                    inertia: inertia[i],
                    gyro_accel: gy[stage][i],
                };
                let e = inp.e();
                let (sigma, _) = surface_eval(e, inp.e_dot(), a[0], a[1], &g);
                let term_rate = sig_pow(e, g.alpha);
                match kind {
                    ControllerKind::Ftsmc => [term_rate, 0.0, 0.0, 0.0, 0.0],
                    ControllerKind::Rsmc => {
                        let s_dot = model_s_rate(&inp, u, sigma, &g);
                        [
                            term_rate,
                            sig_pow(sigma, g.beta),
                            switching_integrand(s_dot, rsmc_sat),
                            0.0,
                            0.0,
                        ]
                    }
                    ControllerKind::Sac => {
                        let s_dot = model_s_rate(&inp, u, sigma, &g);
                        let (r1, r2) = adaptation_rates(s_dot, e, &adaptation);
                        [
                            term_rate,
                            sig_pow(sigma, g.beta),
                            switching_integrand(s_dot, Some(adaptation.sat_delta)),
                            r1,
                            r2,
                        ]
                    }
                    ControllerKind::None => unreachable!(),
                }
            };

            let k1 = deriv(0, &a0);
            let k2 = deriv(1, &add5(&a0, &k1, h / 2.0));
            let k3 = deriv(1, &add5(&a0, &k2, h / 2.0));
            let k4 = deriv(2, &add5(&a0, &k3, h));
            let ch = &mut self.channels[i];
            ch.term_integral += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            ch.eta += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            ch.sw_integral += h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
            ch.xi1_hat += h / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]);
            ch.xi2_hat += h / 6.0 * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4]);
        }
    }

    /// Integrate everything from the current grid time to the next under
    /// the held actuation.
    fn advance(&mut self, held: &Held) -> Result<()> {
        let t = self.time();
        let h = self.cfg.step;

        let k1 = self.plant_derivative(t, &self.body, held)?;
        let mid1 = self.body.add_scaled(&k1, h / 2.0);
        let k2 = self.plant_derivative(t + h / 2.0, &mid1, held)?;
        let mid2 = self.body.add_scaled(&k2, h / 2.0);
        let k3 = self.plant_derivative(t + h / 2.0, &mid2, held)?;
        let end = self.body.add_scaled(&k3, h);
        let k4 = self.plant_derivative(t + h, &end, held)?;
        let sum = k1
            .add_scaled(&k2, 2.0)
            .add_scaled(&k3, 2.0)
            .add_scaled(&k4, 1.0);
        let new_body = self.body.add_scaled(&sum, h / 6.0);
        if !new_body.is_finite() {
            return Err(SimError::NonFinite {
                t: t + h,
                what: "rigid-body state",
            });
        }
        let end_deriv = self.plant_derivative(t + h, &new_body, held)?;

        let interp = AngleInterp {
            h,
            y0: [self.body.phi, self.body.theta, self.body.psi],
            m0: [k1.phi, k1.theta, k1.psi],
            y1: [new_body.phi, new_body.theta, new_body.psi],
            m1: [end_deriv.phi, end_deriv.theta, end_deriv.psi],
        };

        let d_snap = self.advance_observers(&interp, held);
        self.advance_aux(&interp, held, &d_snap);

        for i in 0..3 {
            let o = &self.observers[i];
            if !(o.x1_hat.is_finite()
                && o.x2_hat.is_finite()
                && o.d_hat.is_finite()
                && self.dhat_f[i].is_finite())
            {
                return Err(SimError::NonFinite {
                    t: t + h,
                    what: "observer state",
                });
            }
            let c = &self.channels[i];
            if !(c.term_integral.is_finite()
                && c.eta.is_finite()
                && c.sw_integral.is_finite()
                && c.xi1_hat.is_finite()
                && c.xi2_hat.is_finite())
            {
                return Err(SimError::NonFinite {
                    t: t + h,
                    what: "controller state",
                });
            }
        }

        self.body = new_body;
        self.t_index += 1;
        Ok(())
    }

    /// One full loop iteration: record the current instant, then integrate
    /// to the next grid time. Returns the record at the pre-step time.
    pub fn step_once(&mut self) -> Result<Record> {
        let (record, held) = self.evaluate()?;
        self.advance(&held)?;
        Ok(record)
    }

    /// Record the current instant without advancing (used for the final
    /// grid point).
    pub fn snapshot(&mut self) -> Result<Record> {
        let (record, _) = self.evaluate()?;
        Ok(record)
    }
}

fn active_surface(cfg: &ScenarioConfig) -> SurfaceGains {
    match cfg.controller {
        ControllerKind::Ftsmc => cfg.ftsmc.surface,
        ControllerKind::Rsmc => cfg.rsmc.surface,
        _ => cfg.sac.surface,
    }
}

fn shift(ch: &ObserverChannel, k: &(f64, f64, f64), a: f64) -> ObserverChannel {
    ObserverChannel {
        x1_hat: ch.x1_hat + a * k.0,
        x2_hat: ch.x2_hat + a * k.1,
        d_hat: ch.d_hat + a * k.2,
        ..*ch
    }
}

fn add5(a: &[f64; 5], k: &[f64; 5], scale: f64) -> [f64; 5] {
    [
        a[0] + scale * k[0],
        a[1] + scale * k[1],
        a[2] + scale * k[2],
        a[3] + scale * k[3],
        a[4] + scale * k[4],
    ]
}

/// Number of whole integration steps a scenario takes.
pub fn step_count(cfg: &ScenarioConfig) -> usize {
    (cfg.duration / cfg.step + 1e-9).floor() as usize
}

/// Run a whole scenario: `step_count` integration steps, one record per
/// grid time including both endpoints.
pub fn run(cfg: &ScenarioConfig) -> Result<SimTrace> {
    let mut sim = Simulation::new(cfg)?;
    let n = step_count(cfg);
    let mut records = Vec::with_capacity(n + 1);
    for _ in 0..n {
        records.push(sim.step_once()?);
    }
    records.push(sim.snapshot()?);
    Ok(SimTrace {
        step: cfg.step,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use approx::assert_abs_diff_eq;

    /// A quiet scenario: level start, no injected disturbance, no tilt,
    /// no transition effect.
    fn quiet(duration: f64) -> ScenarioConfig {
        ScenarioConfig {
            duration,
            initial: BodyState::ZERO,
            disturbance: DisturbanceProfile::Zero,
            transition_effect: TransitionEffect::default(),
            tilt: crate::allocation::TiltTimeline::default(),
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn zero_duration_yields_only_the_initial_record() {
        let cfg = quiet(0.0);
        let trace = run(&cfg).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.records[0].t, 0.0);
    }

    #[test]
    fn equilibrium_is_a_fixed_point_of_the_step() {
        let cfg = quiet(0.01);
        let trace = run(&cfg).unwrap();
        assert_eq!(trace.len(), 11);
        let fin = trace.final_record().body;
        for v in [
            fin.u, fin.v, fin.w, fin.p, fin.q, fin.r, fin.phi, fin.theta, fin.psi, fin.pn,
            fin.pe, fin.h,
        ] {
            assert!(v.abs() < 1e-9, "state component drifted to {v}");
        }
    }

    #[test]
    fn windowed_sine_is_zero_outside_and_sums_compose() {
        let w = DisturbanceProfile::WindowedSine {
            amplitude: [5.0, 5.0, 5.0],
            angular_frequency: std::f64::consts::PI,
            t_on: 9.0,
            t_off: 11.0,
        };
        assert_eq!(disturbance_at(&w, 8.999), [0.0; 3]);
        assert_eq!(disturbance_at(&w, 11.001), [0.0; 3]);
        let mid = disturbance_at(&w, 9.5);
        assert_abs_diff_eq!(mid[1], 5.0, epsilon = 1e-12);

        let sum = DisturbanceProfile::Sum {
            parts: vec![
                w.clone(),
                DisturbanceProfile::Constant { value: [1.0, -1.0, 0.5] },
            ],
        };
        let s = disturbance_at(&sum, 9.5);
        assert_abs_diff_eq!(s[0], mid[0] + 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s[1], mid[1] - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s[2], mid[2] + 0.5, epsilon = 1e-12);
    }

    #[test]
    fn transition_effect_vanishes_with_level_rotors() {
        let eff = TransitionEffect {
            amp_angle: [0.1, 0.8, 0.2],
            amp_rate: [0.05, 0.4, 0.1],
        };
        assert_eq!(transition_disturbance(&eff, 0.0, 0.0), [0.0; 3]);
        let d = transition_disturbance(&eff, std::f64::consts::FRAC_PI_2, 0.0);
        assert_abs_diff_eq!(d[1], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let mut cfg = quiet(0.25);
        cfg.initial.phi = 0.01;
        cfg.initial.q = 0.05;
        cfg.disturbance = DisturbanceProfile::Constant { value: [0.3, -0.2, 0.1] };
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn closed_loop_estimates_a_constant_disturbance() {
        let mut cfg = quiet(2.5);
        cfg.disturbance = DisturbanceProfile::Constant { value: [0.0, 2.0, 0.0] };
        let trace = run(&cfg).unwrap();
        let fin = trace.final_record();
        assert!(
            (fin.d_hat[1] - 2.0).abs() < 0.1,
            "pitch estimate {} should approach 2",
            fin.d_hat[1]
        );
        assert!(fin.d_hat[0].abs() < 0.1);
        // And the controller holds attitude against it.
        assert!(fin.e[1].abs() < 2e-3);
    }

    #[test]
    fn forward_mode_zeroes_rotors_beyond_the_threshold() {
        use crate::allocation::{TiltDirection, TiltSchedule, TiltTimeline};
        let mut cfg = quiet(3.0);
        cfg.tilt = TiltTimeline {
            conversion: Some(TiltSchedule::with_default_rate(
                TiltDirection::Conversion,
                0.5,
                2.0,
            )),
            reconversion: None,
        };
        let trace = run(&cfg).unwrap();
        let fin = trace.final_record();
        assert!(fin.forward_mode, "tilt {} should be past handoff", fin.delta);
        assert_eq!(fin.rotor, [0.0; 4]);
        assert!(fin.surface_cmd.iter().all(|s| s.is_finite()));
        // Before the conversion the loop was in rotor mode.
        assert!(!trace.records[0].forward_mode);
        assert!(trace.records[0].rotor.iter().any(|&w| w > 0.0));
    }

    #[test]
    fn none_controller_coasts_torque_free() {
        let mut cfg = quiet(1.0);
        cfg.controller = ControllerKind::None;
        cfg.initial.p = 0.4;
        let trace = run(&cfg).unwrap();
        for rec in &trace.records {
            assert_eq!(rec.torque, [0.0; 3]);
            assert_eq!(rec.rotor, [0.0; 4]);
            assert_eq!(rec.thrust_cmd, 0.0);
        }
        // The body actually rolls.
        assert!(trace.final_record().body.phi > 0.3);
    }

    #[test]
    fn window_selection_keeps_edge_grid_points() {
        let cfg = quiet(0.02);
        let trace = run(&cfg).unwrap();
        let w = trace.window(0.005, 0.015);
        assert_eq!(w.len(), 11);
        assert_abs_diff_eq!(w[0].t, 0.005, epsilon = 1e-12);
        assert_abs_diff_eq!(w[10].t, 0.015, epsilon = 1e-12);
        assert!(trace.window(0.019, 0.5).len() == 2);
        assert!(trace.window(0.5, 1.0).is_empty());
    }
}
