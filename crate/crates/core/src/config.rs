//! Scenario configuration: the single struct that fully determines a run,
//! its TOML file format (versioned by a schema tag), and the built-in
//! default scenario.
//!
//! The default scenario is the reference transition mission: a small
//! initial attitude offset, conversion from hover to forward flight over
//! 3-13 s, a hold, reconversion over 20-22 s, the tilt-coupled transition
//! disturbance throughout, and a two-second sinusoidal gust injected at
//! 9-11 s. Controller and observer gains are the frozen reference tuning.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::allocation::{TiltDirection, TiltSchedule, TiltTimeline};
use crate::arsmc::{
    AdaptationConfig, AxisReference, ControllerKind, FtsmcGains, RsmcGains, SurfaceGains,
};
use crate::error::{Result, SimError};
use crate::rigid_body::{AeroCoefficients, BodyState, VehicleParams, TOL_SINGULARITY};
use crate::simkernel::{DisturbanceProfile, TransitionEffect};
use crate::steso::{Correction, ObserverGains};

/// Version tag every scenario file must carry as its `schema` key.
pub const SCHEMA_TAG: &str = "tiltsim/scenario@1";

/// Adaptive-cascade controller configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    pub surface: SurfaceGains,
    pub adaptation: AdaptationConfig,
    /// Time constant of the first-order low-pass applied to the observer's
    /// disturbance estimate before it enters the control law [s]; 0 feeds
    /// the raw estimate through. The discontinuous correction leaves
    /// sub-millisecond switching ripple on the estimate; the filter keeps
    /// that ripple out of the torque command while passing the actual
    /// disturbance band (well below 1 Hz in the shipped scenarios).
    pub feedforward_tau: f64,
}

impl Default for SacConfig {
    fn default() -> Self {
        SacConfig {
            surface: SurfaceGains::default(),
            adaptation: AdaptationConfig::default(),
            feedforward_tau: 0.04,
        }
    }
}

/// Fast-terminal baseline configuration. Its surface gains are tuned
/// independently of the cascade (a fixed-gain reaching law wants a softer
/// surface).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FtsmcConfig {
    pub surface: SurfaceGains,
    pub reaching: FtsmcGains,
}

impl Default for FtsmcConfig {
    fn default() -> Self {
        FtsmcConfig {
            surface: SurfaceGains {
                k_lin: 2.0,
                k_term: 1.0,
                alpha: 1.5,
                lambda: 5.0,
                beta: 0.6,
            },
            reaching: FtsmcGains::default(),
        }
    }
}

/// Fixed-gain recursive baseline configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RsmcConfig {
    pub surface: SurfaceGains,
    pub switching: RsmcGains,
}

impl Default for RsmcConfig {
    fn default() -> Self {
        RsmcConfig {
            surface: SurfaceGains {
                k_lin: 1.5,
                k_term: 0.8,
                alpha: 1.5,
                lambda: 2.0,
                beta: 0.6,
            },
            switching: RsmcGains::default(),
        }
    }
}

/// Observer configuration: the gain ladder, the correction shape, and the
/// integration sub-grid width (the discontinuous correction needs finer
/// time resolution than the smooth dynamics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverConfig {
    pub gains: ObserverGains,
    pub correction: Correction,
    /// Boundary-layer width when `correction = "sat"` [rad].
    pub sat_delta: f64,
    /// Target width of one observer integration substep [s]. The kernel
    /// fits a whole number of substeps into each control step
    /// (`round(step/substep)`, at least one). Configured as a width, not a
    /// count, so refining the control step does not alter the observer's
    /// sub-grid: the switching stage's discretization behavior stays
    /// identical and cancels out of step-refinement comparisons.
    pub substep: f64,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        ObserverConfig {
            gains: ObserverGains::default(),
            correction: Correction::Sign,
            sat_delta: 0.01,
            substep: 1e-4,
        }
    }
}

/// Everything that determines a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Run length [s]; zero means "initial record only".
    pub duration: f64,
    /// Control/integration step [s].
    pub step: f64,
    /// Reserved for future stochastic extensions (sensor noise); carried
    /// in the schema so files stay forward-compatible. Unused today.
    pub seed: u64,
    /// Initial rigid-body state.
    pub initial: BodyState,
    /// Attitude reference per axis (roll, pitch, yaw).
    pub reference: [AxisReference; 3],
    /// Which control law closes the loop.
    pub controller: ControllerKind,
    pub sac: SacConfig,
    pub ftsmc: FtsmcConfig,
    pub rsmc: RsmcConfig,
    /// Optional symmetric per-axis torque clamp [N m].
    pub torque_limit: Option<f64>,
    pub observer: ObserverConfig,
    /// Rotor tilt mission timeline.
    pub tilt: TiltTimeline,
    /// Tilt angle beyond which torque demands hand off to the fixed-wing
    /// surface stub and the rotor mixer is no longer consulted [rad].
    pub forward_mode_threshold: f64,
    /// Torque that maps to full surface deflection in forward mode [N m].
    pub forward_mode_torque_ref: f64,
    /// Scripted disturbance injection (the test signal; switchable from
    /// the command line).
    pub disturbance: DisturbanceProfile,
    /// Tilt-coupled disturbance, active whenever the rotors tilt.
    pub transition_effect: TransitionEffect,
    pub vehicle: VehicleParams,
    pub aero: AeroCoefficients,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        ScenarioConfig {
            duration: 24.0,
            step: 1e-3,
            seed: 0,
            initial: BodyState {
                phi: 0.57 * deg,
                theta: 0.57 * deg,
                psi: 1.14 * deg,
                ..BodyState::ZERO
            },
            reference: [AxisReference::default(); 3],
            controller: ControllerKind::Sac,
            sac: SacConfig::default(),
            ftsmc: FtsmcConfig::default(),
            rsmc: RsmcConfig::default(),
            torque_limit: None,
            observer: ObserverConfig::default(),
            tilt: TiltTimeline {
                conversion: Some(TiltSchedule::with_default_rate(
                    TiltDirection::Conversion,
                    3.0,
                    10.0,
                )),
                reconversion: Some(TiltSchedule::with_default_rate(
                    TiltDirection::Reconversion,
                    20.0,
                    2.0,
                )),
            },
            forward_mode_threshold: 1.45,
            forward_mode_torque_ref: 1.0,
            disturbance: DisturbanceProfile::WindowedSine {
                amplitude: [5.0, 5.0, 5.0],
                angular_frequency: std::f64::consts::PI,
                t_on: 9.0,
                t_off: 11.0,
            },
            transition_effect: TransitionEffect {
                amp_angle: [0.02, 0.8, 0.15],
                amp_rate: [0.01, 0.4, 0.05],
            },
            vehicle: VehicleParams::default(),
            aero: AeroCoefficients::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(SimError::Config(format!(
                "step must be positive and finite, got {}",
                self.step
            )));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(SimError::Config(format!(
                "duration must be non-negative and finite, got {}",
                self.duration
            )));
        }
        if self.duration > 0.0 && self.duration < self.step {
            return Err(SimError::Config(format!(
                "a non-zero duration ({}) must cover at least one step ({})",
                self.duration, self.step
            )));
        }
        if !self.initial.is_finite() {
            return Err(SimError::Config("initial state must be finite".into()));
        }
        if self.initial.theta.abs() >= std::f64::consts::FRAC_PI_2 - TOL_SINGULARITY {
            return Err(SimError::Config(format!(
                "initial pitch {} rad sits in the attitude-representation singularity",
                self.initial.theta
            )));
        }
        for r in &self.reference {
            if ![r.angle, r.rate, r.accel, r.jerk]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(SimError::Config("attitude reference must be finite".into()));
            }
        }
        self.vehicle.validate()?;
        self.sac.surface.validate()?;
        self.sac.adaptation.validate()?;
        if !(self.sac.feedforward_tau >= 0.0 && self.sac.feedforward_tau.is_finite()) {
            return Err(SimError::Config(format!(
                "feedforward filter time constant must be non-negative and finite, got {}",
                self.sac.feedforward_tau
            )));
        }
        self.ftsmc.surface.validate()?;
        self.ftsmc.reaching.validate()?;
        self.rsmc.surface.validate()?;
        self.rsmc.switching.validate()?;
        if let Some(l) = self.torque_limit {
            if !(l > 0.0 && l.is_finite()) {
                return Err(SimError::Config(format!(
                    "torque limit must be positive and finite, got {l}"
                )));
            }
        }
        self.observer.gains.validate()?;
        if !(self.observer.sat_delta > 0.0 && self.observer.sat_delta.is_finite()) {
            return Err(SimError::Config(format!(
                "observer sat_delta must be positive, got {}",
                self.observer.sat_delta
            )));
        }
        if !(self.observer.substep > 0.0 && self.observer.substep.is_finite()) {
            return Err(SimError::Config(format!(
                "observer substep width must be positive, got {}",
                self.observer.substep
            )));
        }
        self.tilt.validate()?;
        if !(self.forward_mode_threshold > 0.0
            && self.forward_mode_threshold <= std::f64::consts::FRAC_PI_2)
        {
            return Err(SimError::Config(format!(
                "forward-mode threshold must lie in (0, pi/2], got {}",
                self.forward_mode_threshold
            )));
        }
        if !(self.forward_mode_torque_ref > 0.0 && self.forward_mode_torque_ref.is_finite()) {
            return Err(SimError::Config(format!(
                "forward-mode torque reference must be positive, got {}",
                self.forward_mode_torque_ref
            )));
        }
        self.disturbance.validate()?;
        self.transition_effect.validate()?;
        Ok(())
    }

    /// The default scenario with the scripted disturbance removed (the
    /// transition effect stays: it is part of the plant, not a test
    /// signal).
    pub fn without_injected_disturbance(mut self) -> Self {
        self.disturbance = DisturbanceProfile::Zero;
        self
    }

    /// Same scenario with another controller closing the loop.
    pub fn with_controller(mut self, kind: ControllerKind) -> Self {
        self.controller = kind;
        self
    }
}

/// Parse a scenario from TOML text. The top-level `schema` key must equal
/// [`SCHEMA_TAG`]; every other key must belong to the schema.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| SimError::Config(format!("scenario file is not valid TOML: {e}")))?;
    let schema = table
        .remove("schema")
        .ok_or_else(|| SimError::Config("scenario file is missing the `schema` key".into()))?;
    match schema.as_str() {
        Some(SCHEMA_TAG) => {}
        Some(other) => {
            return Err(SimError::Config(format!(
                "unsupported scenario schema `{other}` (this build reads `{SCHEMA_TAG}`)"
            )))
        }
        None => {
            return Err(SimError::Config(
                "scenario `schema` key must be a string".into(),
            ))
        }
    }
    let cfg: ScenarioConfig = table
        .try_into()
        .map_err(|e| SimError::Config(format!("scenario does not match the schema: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serialize a scenario to TOML text carrying the schema tag.
pub fn scenario_to_toml(cfg: &ScenarioConfig) -> Result<String> {
    let table = toml::Table::try_from(cfg)
        .map_err(|e| SimError::Config(format!("scenario cannot be serialized: {e}")))?;
    let mut out = toml::Table::new();
    out.insert("schema".into(), toml::Value::String(SCHEMA_TAG.into()));
    for (k, v) in table {
        out.insert(k, v);
    }
    toml::to_string_pretty(&out)
        .map_err(|e| SimError::Config(format!("scenario cannot be rendered: {e}")))
}

/// Load and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_scenario(&text)
}

/// Write a scenario file.
pub fn save_scenario(path: &Path, cfg: &ScenarioConfig) -> Result<()> {
    let text = scenario_to_toml(cfg)?;
    fs::write(path, text).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
