//! Attitude sliding-mode controllers: the adaptive recursive design (the
//! observer-fed cascade is what the comparison tables call SAC) plus two
//! fixed-gain baselines, a fast-terminal SMC (FTSMC) and a non-adaptive
//! recursive SMC (RSMC).
//!
//! All three act per axis on the simplified attitude model
//!
//! ```text
//! angle'' = gyro_accel + u / inertia + d
//! ```
//!
//! where `gyro_accel` is the inertia-coupling term evaluated on Euler-angle
//! rates, `u` the axis torque, and `d` the lumped disturbance. Working
//! pieces:
//!
//! * fast terminal surface  `sigma = e' + k_lin e + k_term ∫ sig^alpha(e)`
//! * recursive surface      `s = sigma + lambda * eta`, `eta' = sig^beta(sigma)`
//!   with `eta(0) = -sigma(0)/lambda`, so `s(0) = 0` and there is no
//!   reaching phase;
//! * equivalent control `u0` derived from the defining condition `s' = 0`
//!   (the printed expression for it is inconsistent with the surface
//!   derivative and is re-derived here);
//! * switching control `u1 = -I [xi1 s + xi2 ∫ sig^(1/2)(s')]` with the
//!   sign inside the integrand optionally sat-smoothed;
//! * adaptive gains `xi1' = rho s'^2`, `xi2' = rho |s'|^(1/2)`, frozen
//!   whenever `|e| <= epsilon`. The printed adaptation law carries a minus
//!   sign, which walks the gains away from the targets its own stability
//!   argument requires; the default here adapts upward and the literal sign
//!   remains selectable.
//!
//! `s'` is always computed from the model (never by differencing `s`),
//! using the controller's best disturbance knowledge: the observer estimate
//! for the adaptive cascade, zero for the baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::math::{sat, sig_pow, sign};

/// Which control law closes the attitude loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// Adaptive recursive sliding mode fed by the disturbance observer.
    Sac,
    /// Fast terminal sliding mode, fixed reaching gains, no observer.
    Ftsmc,
    /// Recursive sliding mode, fixed switching gains, no observer.
    Rsmc,
    /// Open loop (zero torque) — plant-only runs.
    None,
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ControllerKind::Sac => "sac",
            ControllerKind::Ftsmc => "ftsmc",
            ControllerKind::Rsmc => "rsmc",
            ControllerKind::None => "none",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sac" => Ok(ControllerKind::Sac),
            "ftsmc" => Ok(ControllerKind::Ftsmc),
            "rsmc" => Ok(ControllerKind::Rsmc),
            "none" => Ok(ControllerKind::None),
            other => Err(SimError::Config(format!(
                "unknown controller '{other}' (expected sac, ftsmc, rsmc, or none)"
            ))),
        }
    }
}

/// Sliding-surface shape parameters (shared by all three controllers; each
/// controller carries its own values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceGains {
    pub k_lin: f64,  // linear error gain
    pub k_term: f64, // terminal-integral gain
    pub alpha: f64,  // terminal exponent, > 1
    pub lambda: f64, // recursion gain, > 0
    pub beta: f64,   // recursion exponent, in (0, 1)
}

impl Default for SurfaceGains {
    fn default() -> Self {
        SurfaceGains { k_lin: 8.0, k_term: 4.0, alpha: 1.5, lambda: 5.0, beta: 0.6 }
    }
}

impl SurfaceGains {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [(self.k_lin, "k_lin"), (self.k_term, "k_term"), (self.lambda, "lambda")]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!(
                    "surface gain {name} must be strictly positive, got {v}"
                )));
            }
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(SimError::Config(format!(
                "terminal exponent alpha must exceed 1, got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(SimError::Config(format!(
                "recursion exponent beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Adaptation behavior of the switching gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptationConfig {
    pub rho: f64,       // adaptation rate, > 0
    pub epsilon: f64,   // tracking-error gate [rad]; adaptation runs while |e| > epsilon
    pub sat_delta: f64, // boundary layer for the smoothed switching integrand
    pub xi1_init: f64,  // initial proportional switching gain
    pub xi2_init: f64,  // initial integral switching gain
    /// +1 grows the gains with sliding activity (default; required by the
    /// stability argument), -1 reproduces the literal printed law.
    pub adaptation_sign: f64,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        AdaptationConfig {
            rho: 1.0,
            epsilon: 1e-4,
            sat_delta: 0.01,
            xi1_init: 1.0,
            xi2_init: 1.0,
            adaptation_sign: 1.0,
        }
    }
}

impl AdaptationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(SimError::Config(format!(
                "adaptation rate rho must be strictly positive, got {}",
                self.rho
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(SimError::Config(format!(
                "adaptation gate epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if !(self.sat_delta > 0.0 && self.sat_delta.is_finite()) {
            return Err(SimError::Config(format!(
                "sat boundary must be strictly positive, got {}",
                self.sat_delta
            )));
        }
        if self.adaptation_sign != 1.0 && self.adaptation_sign != -1.0 {
            return Err(SimError::Config(format!(
                "adaptation_sign must be +1 or -1, got {}",
                self.adaptation_sign
            )));
        }
        Ok(())
    }
}

/// Reaching-law gains of the fast-terminal baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FtsmcGains {
    pub k_s: f64,       // proportional reaching gain
    pub k_w: f64,       // robust (sat) reaching gain
    pub sat_delta: f64, // boundary layer of the robust term
}

impl Default for FtsmcGains {
    fn default() -> Self {
        FtsmcGains { k_s: 2.0, k_w: 0.5, sat_delta: 0.01 }
    }
}

impl FtsmcGains {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [(self.k_s, "k_s"), (self.k_w, "k_w"), (self.sat_delta, "sat_delta")] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!(
                    "reaching gain {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Fixed switching gains of the recursive baseline. `sat_delta = None`
/// keeps the discontinuous sign inside the switching integrand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RsmcGains {
    pub xi1: f64,
    pub xi2: f64,
    pub sat_delta: Option<f64>,
}

impl Default for RsmcGains {
    fn default() -> Self {
        RsmcGains { xi1: 1.0, xi2: 1.0, sat_delta: None }
    }
}

impl RsmcGains {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [(self.xi1, "xi1"), (self.xi2, "xi2")] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!(
                    "switching gain {name} must be strictly positive, got {v}"
                )));
            }
        }
        if let Some(d) = self.sat_delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(SimError::Config(format!(
                    "switching sat boundary must be strictly positive, got {d}"
                )));
            }
        }
        Ok(())
    }
}

/// Reference motion for one axis: desired angle and its derivatives. The
/// shipped scenarios hold constant references (all derivatives zero); the
/// derivative fields exist for time-varying use and for the analytic tests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxisReference {
    pub angle: f64, // [rad]
    pub rate: f64,  // [rad/s]
    pub accel: f64, // [rad/s^2]
    pub jerk: f64,  // [rad/s^3]
}

impl AxisReference {
    pub fn constant(angle: f64) -> Self {
        AxisReference { angle, ..Default::default() }
    }
}

/// Everything one axis controller reads at a step: measurements (Euler
/// angle and Euler-angle rate), the disturbance estimate it is allowed to
/// use, its reference, and the plant constants of its channel.
#[derive(Debug, Clone, Copy)]
pub struct AxisInputs {
    pub angle: f64,      // measured Euler angle [rad]
    pub rate: f64,       // measured Euler-angle rate [rad/s]
    pub d_hat: f64,      // disturbance estimate [rad/s^2]; 0 for the baselines
    pub reference: AxisReference,
    pub inertia: f64,    // axis moment of inertia [kg m^2]
    pub gyro_accel: f64, // inertia-coupling acceleration [rad/s^2]
}

impl AxisInputs {
    /// Tracking error, actual minus desired.
    pub fn e(&self) -> f64 {
        self.angle - self.reference.angle
    }

    pub fn e_dot(&self) -> f64 {
        self.rate - self.reference.rate
    }
}

/// Per-axis controller state: the accumulators the step loop integrates,
/// plus the last evaluated surface values kept for tracing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ControllerChannel {
    pub term_integral: f64, // ∫ sig^alpha(e) dt
    pub eta: f64,           // recursion state
    pub sw_integral: f64,   // ∫ sig^(1/2)(s') dt (smoothed per config)
    pub xi1_hat: f64,       // adaptive proportional gain
    pub xi2_hat: f64,       // adaptive integral gain
    pub sigma: f64,         // last fast terminal surface value
    pub s: f64,             // last recursive surface value
    pub s_dot: f64,         // last model-based surface rate
}

impl ControllerChannel {
    /// Channel starting on the sliding surface: `eta(0) = -sigma(0)/lambda`
    /// makes `s(0) = 0` for any initial tracking error.
    pub fn init(sigma0: f64, lambda: f64, xi1_init: f64, xi2_init: f64) -> Self {
        ControllerChannel {
            term_integral: 0.0,
            eta: init_eta(sigma0, lambda),
            sw_integral: 0.0,
            xi1_hat: xi1_init,
            xi2_hat: xi2_init,
            sigma: sigma0,
            s: 0.0,
            s_dot: 0.0,
        }
    }
}

/// Recursion-state seed that places the initial condition on the surface:
/// `eta0 = -sigma0 / lambda`, hence `s(0) = sigma0 + lambda eta0 = 0`.
pub fn init_eta(sigma0: f64, lambda: f64) -> f64 {
    debug_assert!(lambda > 0.0);
    -sigma0 / lambda
}

/// Fast terminal surface and recursive surface at the current errors:
/// `sigma = e' + k_lin e + k_term * term_integral`, `s = sigma + lambda eta`.
pub fn surface_eval(
    e: f64,
    e_dot: f64,
    term_integral: f64,
    eta: f64,
    g: &SurfaceGains,
) -> (f64, f64) {
    let sigma = e_dot + g.k_lin * e + g.k_term * term_integral;
    (sigma, sigma + g.lambda * eta)
}

/// Analytic surface rate `sigma' = e'' + k_lin e' + k_term sig^alpha(e)`.
pub fn sigma_rate(e: f64, e_dot: f64, e_ddot: f64, g: &SurfaceGains) -> f64 {
    e_ddot + g.k_lin * e_dot + g.k_term * sig_pow(e, g.alpha)
}

/// Analytic recursive-surface rate `s' = sigma' + lambda sig^beta(sigma)`.
pub fn s_rate(sigma: f64, sigma_dot: f64, g: &SurfaceGains) -> f64 {
    sigma_dot + g.lambda * sig_pow(sigma, g.beta)
}

/// Model-based tracking-error acceleration under an applied torque:
/// `e'' = gyro + u/I + d_hat - ref_accel`.
pub fn model_e_ddot(inp: &AxisInputs, u: f64) -> f64 {
    inp.gyro_accel + u / inp.inertia + inp.d_hat - inp.reference.accel
}

/// Model-based `s'` under an applied torque — the only way this crate ever
/// produces `s'` (no numerical differencing).
pub fn model_s_rate(inp: &AxisInputs, u: f64, sigma: f64, g: &SurfaceGains) -> f64 {
    let sigma_dot = sigma_rate(inp.e(), inp.e_dot(), model_e_ddot(inp, u), g);
    s_rate(sigma, sigma_dot, g)
}

/// Equivalent control of the recursive surface, derived from `s' = 0` with
/// the disturbance replaced by its estimate:
///
/// ```text
/// u0 = I [ref_accel - k_lin e' - k_term sig^alpha(e)
///         - lambda sig^beta(sigma) - d_hat - gyro_accel]
/// ```
///
/// Substituting back gives `s' = d - d_hat`: the surface rate equals the
/// estimation residual exactly.
pub fn equivalent_control(inp: &AxisInputs, sigma: f64, g: &SurfaceGains) -> f64 {
    inp.inertia
        * (inp.reference.accel
            - g.k_lin * inp.e_dot()
            - g.k_term * sig_pow(inp.e(), g.alpha)
            - g.lambda * sig_pow(sigma, g.beta)
            - inp.d_hat
            - inp.gyro_accel)
}

/// Switching control `u1 = -I [xi1 s + xi2 sw_integral]`, the adaptive
/// robustifying term (with the integral accumulated by the step loop).
pub fn switching_control(ch: &ControllerChannel, s: f64, inertia: f64) -> f64 {
    -inertia * (ch.xi1_hat * s + ch.xi2_hat * ch.sw_integral)
}

/// Integrand of the switching integral: `sig^(1/2)(s')` with the sign
/// factor either discontinuous (`sat_delta = None`) or sat-smoothed.
pub fn switching_integrand(s_dot: f64, sat_delta: Option<f64>) -> f64 {
    let shape = match sat_delta {
        None => sign(s_dot),
        Some(delta) => sat(s_dot, delta),
    };
    s_dot.abs().sqrt() * shape
}

/// Growth rates of the adaptive gains: `(rho s'^2, rho |s'|^(1/2))` times
/// the configured sign while the tracking-error gate `|e| > epsilon` is
/// open, zero otherwise.
pub fn adaptation_rates(s_dot: f64, e: f64, cfg: &AdaptationConfig) -> (f64, f64) {
    if e.abs() > cfg.epsilon {
        let k = cfg.adaptation_sign * cfg.rho;
        (k * s_dot * s_dot, k * s_dot.abs().sqrt())
    } else {
        (0.0, 0.0)
    }
}

/// One explicit discrete update of the adaptive gains over `step` seconds.
/// The simulation kernel integrates [`adaptation_rates`] with the same
/// scheme as the plant; this form is the single-step API.
pub fn adapt_gains(
    xi1: f64,
    xi2: f64,
    s_dot: f64,
    e: f64,
    step: f64,
    cfg: &AdaptationConfig,
) -> (f64, f64) {
    let (r1, r2) = adaptation_rates(s_dot, e, cfg);
    (xi1 + r1 * step, xi2 + r2 * step)
}

/// Recursive-surface control value `u = u0 + u1` for one axis. Shared by
/// the adaptive cascade (observer's `d_hat` in `inp`) and the RSMC baseline
/// (`d_hat = 0`, gains never adapted); also refreshes the channel's traced
/// surface values.
pub fn recursive_axis_control(
    ch: &mut ControllerChannel,
    inp: &AxisInputs,
    g: &SurfaceGains,
) -> f64 {
    let (sigma, s) = surface_eval(inp.e(), inp.e_dot(), ch.term_integral, ch.eta, g);
    ch.sigma = sigma;
    ch.s = s;
    equivalent_control(inp, sigma, g) + switching_control(ch, s, inp.inertia)
}

/// Fast-terminal baseline control for one axis: equivalent control of the
/// `sigma` surface plus a constant-gain reaching law
/// `-I (k_s sigma + k_w sat(sigma/delta))`. No observer feedforward; its
/// sliding variable is `sigma` itself (traced as both `sigma` and `s`).
pub fn ftsmc_axis_control(
    ch: &mut ControllerChannel,
    inp: &AxisInputs,
    g: &SurfaceGains,
    reaching: &FtsmcGains,
) -> f64 {
    let (sigma, _) = surface_eval(inp.e(), inp.e_dot(), ch.term_integral, ch.eta, g);
    ch.sigma = sigma;
    ch.s = sigma;
    let u_eq = inp.inertia
        * (inp.reference.accel
            - g.k_lin * inp.e_dot()
            - g.k_term * sig_pow(inp.e(), g.alpha)
            - inp.gyro_accel);
    u_eq - inp.inertia * (reaching.k_s * sigma + reaching.k_w * sat(sigma, reaching.sat_delta))
}

/// Optional symmetric torque clamp (disabled when `limit` is `None`).
pub fn clamp_torque(u: f64, limit: Option<f64>) -> f64 {
    match limit {
        Some(l) => u.clamp(-l, l),
        None => u,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn roll_inertia() -> f64 {
        crate::rigid_body::VehicleParams::default().ix
    }

    fn quiet_inputs() -> AxisInputs {
        AxisInputs {
            angle: 0.0,
            rate: 0.0,
            d_hat: 0.0,
            reference: AxisReference::default(),
            inertia: roll_inertia(),
            gyro_accel: 0.0,
        }
    }

    #[test]
    fn eta_seed_cancels_sigma() {
        assert_eq!(init_eta(0.0, 5.0), 0.0);
        assert_abs_diff_eq!(init_eta(0.2, 2.0), -0.1, epsilon = 1e-15);
        // Property: s(0) = 0 for arbitrary (sigma0, lambda).
        let mut x = 0.41_f64;
        for _ in 0..100 {
            x = (x + 0.754_877_666_246_693) % 1.0;
            let sigma0 = (x - 0.5) * 4.0;
            let lambda = 0.1 + x * 9.0;
            let s0 = sigma0 + lambda * init_eta(sigma0, lambda);
            assert!(s0.abs() < 1e-12, "s(0) = {s0}");
        }
    }

    #[test]
    fn surface_arithmetic() {
        let g = SurfaceGains::default();
        assert_eq!(surface_eval(0.0, 0.0, 0.0, 0.0, &g), (0.0, 0.0));
        let g2 = SurfaceGains { k_lin: 2.0, ..g };
        let (sigma, _) = surface_eval(0.1, 0.0, 0.0, 0.0, &g2);
        assert_abs_diff_eq!(sigma, 0.2, epsilon = 1e-15);
        // eta shifts s but not sigma.
        let (sigma, s) = surface_eval(0.1, 0.05, 0.02, -0.03, &g);
        assert_abs_diff_eq!(sigma, 0.05 + 8.0 * 0.1 + 4.0 * 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(s, sigma + 5.0 * (-0.03), epsilon = 1e-15);
    }

    #[test]
    fn equivalent_control_at_equilibrium_is_zero() {
        let g = SurfaceGains::default();
        assert_eq!(equivalent_control(&quiet_inputs(), 0.0, &g), 0.0);
    }

    #[test]
    fn equivalent_control_cancels_unit_disturbance_estimate() {
        let g = SurfaceGains::default();
        let inp = AxisInputs { d_hat: 1.0, ..quiet_inputs() };
        let u0 = equivalent_control(&inp, 0.0, &g);
        assert_abs_diff_eq!(u0, -0.876, epsilon = 1e-12);
    }

    #[test]
    fn equivalent_control_nulls_the_surface_rate() {
        // With the disturbance known exactly (d_hat = d), applying u0 alone
        // must give s' = 0 on arbitrary states.
        let g = SurfaceGains::default();
        let mut x = 0.77_f64;
        let mut next = || {
            x = (x + 0.754_877_666_246_693) % 1.0;
            x - 0.5
        };
        for _ in 0..100 {
            let inp = AxisInputs {
                angle: next() * 0.8,
                rate: next() * 2.0,
                d_hat: next() * 10.0,
                reference: AxisReference {
                    angle: next() * 0.5,
                    rate: next() * 1.0,
                    accel: next() * 3.0,
                    jerk: 0.0,
                },
                inertia: 0.05 + (next() + 0.5) * 1.0,
                gyro_accel: next() * 4.0,
            };
            let term_integral = next() * 0.3;
            let eta = next() * 0.2;
            let (sigma, _) = surface_eval(inp.e(), inp.e_dot(), term_integral, eta, &g);
            let u0 = equivalent_control(&inp, sigma, &g);
            // model_s_rate uses the same d_hat, i.e. the d-tilde = 0 case.
            let s_dot = model_s_rate(&inp, u0, sigma, &g);
            assert!(s_dot.abs() < 1e-10, "s' = {s_dot}");
        }
    }

    #[test]
    fn switching_control_arithmetic() {
        let mut ch = ControllerChannel::init(0.0, 5.0, 2.0, 1.0);
        assert_eq!(switching_control(&ch, 0.0, roll_inertia()), 0.0);
        let u1 = switching_control(&ch, 0.1, roll_inertia());
        assert_abs_diff_eq!(u1, -0.1752, epsilon = 1e-12);
        // The integral term adds on top.
        ch.sw_integral = 0.3;
        let u1 = switching_control(&ch, 0.1, roll_inertia());
        assert_abs_diff_eq!(u1, -0.876 * (0.2 + 0.3), epsilon = 1e-12);
    }

    #[test]
    fn switching_integrand_smoothing() {
        // Inside the boundary layer the smoothed sign is s_dot/delta.
        let v = switching_integrand(0.005, Some(0.01));
        assert_abs_diff_eq!(v, 0.005_f64.sqrt() * 0.5, epsilon = 1e-15);
        // Outside it matches the discontinuous form.
        let v_sat = switching_integrand(0.04, Some(0.01));
        let v_sign = switching_integrand(0.04, None);
        assert_abs_diff_eq!(v_sat, v_sign, epsilon = 1e-15);
        assert_abs_diff_eq!(v_sign, 0.2, epsilon = 1e-15);
        assert_eq!(switching_integrand(0.0, None), 0.0);
        assert_eq!(switching_integrand(-0.04, None), -0.2);
    }

    #[test]
    fn adaptation_respects_the_gate() {
        let cfg = AdaptationConfig::default();
        // Gate closed: |e| <= epsilon.
        let (xi1, xi2) = adapt_gains(1.0, 1.0, 0.7, 5e-5, 1e-3, &cfg);
        assert_eq!((xi1, xi2), (1.0, 1.0));
        // Zero surface rate: no growth either way.
        let (xi1, xi2) = adapt_gains(1.0, 1.0, 0.0, 0.5, 1e-3, &cfg);
        assert_eq!((xi1, xi2), (1.0, 1.0));
        // Open gate grows both gains.
        let (xi1, xi2) = adapt_gains(1.0, 1.0, 0.5, 0.5, 1e-3, &cfg);
        assert_abs_diff_eq!(xi1, 1.0 + 2.5e-4, epsilon = 1e-18);
        assert_abs_diff_eq!(xi2, 1.0 + 0.5_f64.sqrt() * 1e-3, epsilon = 1e-18);
        // Literal printed sign shrinks them instead.
        let printed = AdaptationConfig { adaptation_sign: -1.0, ..cfg };
        let (xi1, _) = adapt_gains(1.0, 1.0, 0.5, 0.5, 1e-3, &printed);
        assert_abs_diff_eq!(xi1, 1.0 - 2.5e-4, epsilon = 1e-18);
    }

    #[test]
    fn perfect_tracking_gives_zero_torque_all_controllers() {
        let g = SurfaceGains::default();
        let inp = quiet_inputs();
        let mut ch = ControllerChannel::init(0.0, g.lambda, 1.0, 1.0);
        assert_eq!(recursive_axis_control(&mut ch, &inp, &g), 0.0);
        let mut ch = ControllerChannel::init(0.0, g.lambda, 1.0, 1.0);
        assert_eq!(ftsmc_axis_control(&mut ch, &inp, &g, &FtsmcGains::default()), 0.0);
    }

    #[test]
    fn roll_only_error_leaves_other_axes_quiet() {
        // With zero rates the gyro couplings vanish, so a pure roll error
        // must not command pitch or yaw torque.
        let g = SurfaceGains::default();
        let params = crate::rigid_body::VehicleParams::default();
        let mk = |angle: f64, inertia: f64| AxisInputs {
            angle,
            rate: 0.0,
            d_hat: 0.0,
            reference: AxisReference::default(),
            inertia,
            gyro_accel: 0.0,
        };
        let inputs = [mk(0.2, params.ix), mk(0.0, params.iy), mk(0.0, params.iz)];
        let mut torques = [0.0_f64; 3];
        for (i, inp) in inputs.iter().enumerate() {
            let (sigma0, _) = surface_eval(inp.e(), inp.e_dot(), 0.0, 0.0, &g);
            let mut ch = ControllerChannel::init(sigma0, g.lambda, 1.0, 1.0);
            torques[i] = recursive_axis_control(&mut ch, inp, &g);
        }
        assert!(torques[0].abs() > 0.1, "roll channel must act, got {}", torques[0]);
        assert_eq!(torques[1], 0.0);
        assert_eq!(torques[2], 0.0);
    }

    #[test]
    fn rsmc_equals_adaptive_cascade_at_start() {
        // Same surface gains, d_hat forced to zero, switching gains at the
        // adaptive initials: the two control values coincide at t = 0
        // (they diverge afterwards through adaptation and the observer).
        let g = SurfaceGains::default();
        let inp = AxisInputs {
            angle: 0.01,
            rate: -0.02,
            d_hat: 0.0, // cascade's estimate starts at zero
            reference: AxisReference::default(),
            inertia: roll_inertia(),
            gyro_accel: 0.0,
        };
        let (sigma0, _) = surface_eval(inp.e(), inp.e_dot(), 0.0, 0.0, &g);
        let mut sac_ch = ControllerChannel::init(sigma0, g.lambda, 1.0, 1.0);
        let mut rsmc_ch = ControllerChannel::init(sigma0, g.lambda, 1.0, 1.0);
        let u_sac = recursive_axis_control(&mut sac_ch, &inp, &g);
        let u_rsmc = recursive_axis_control(&mut rsmc_ch, &inp, &g);
        assert_eq!(u_sac, u_rsmc);
        assert!(u_sac.is_finite() && u_sac != 0.0);
    }

    #[test]
    fn ftsmc_reaching_law_arithmetic() {
        let g = SurfaceGains::default();
        let reaching = FtsmcGains { k_s: 2.0, k_w: 0.5, sat_delta: 0.01 };
        let inp = AxisInputs { angle: 0.1, ..quiet_inputs() };
        let mut ch = ControllerChannel::init(0.0, g.lambda, 1.0, 1.0);
        let u = ftsmc_axis_control(&mut ch, &inp, &g, &reaching);
        let sigma = g.k_lin * 0.1;
        let u_eq = inp.inertia * (-g.k_term * sig_pow(0.1, g.alpha));
        let expected = u_eq - inp.inertia * (reaching.k_s * sigma + reaching.k_w * 1.0);
        assert_abs_diff_eq!(u, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(ch.s, sigma, epsilon = 1e-15);
    }

    /// The analytic s' must match a central difference of s along a smooth
    /// synthetic trajectory — the chain-rule consistency oracle.
    #[test]
    fn analytic_s_rate_matches_finite_difference()
    {
        let g = SurfaceGains::default();
        // Synthetic smooth error trajectory and its derivatives.
        let e_of = |t: f64| 0.3 * (1.3 * t).sin() + 0.05 * (0.7 * t).cos();
        let e_dot_of = |t: f64| 0.3 * 1.3 * (1.3 * t).cos() - 0.05 * 0.7 * (0.7 * t).sin();
        let e_ddot_of =
            |t: f64| -0.3 * 1.3 * 1.3 * (1.3 * t).sin() - 0.05 * 0.7 * 0.7 * (0.7 * t).cos();

        // Integrate the two accumulators along the trajectory with RK4 at a
        // step far finer than the probe spacing.
        let h = 1e-5_f64;
        let probe = 1e-3_f64;
        let t_end = 1.5_f64;
        let mut term_integral = 0.0_f64;
        let mut eta = init_eta(
            surface_eval(e_of(0.0), e_dot_of(0.0), 0.0, 0.0, &g).0,
            g.lambda,
        );
        let mut samples: Vec<(f64, f64, f64, f64)> = Vec::new(); // (t, s, sigma, term_integral)
        let steps = (t_end / h).round() as usize;
        for k in 0..=steps {
            let t = k as f64 * h;
            let (sigma, s) = surface_eval(e_of(t), e_dot_of(t), term_integral, eta, &g);
            if (t / probe - (t / probe).round()).abs() < 1e-9 {
                samples.push((t, s, sigma, term_integral));
            }
            if k == steps {
                break;
            }
            // RK4 on (term_integral' = sig^alpha(e), eta' = sig^beta(sigma)).
            let f = |ti: f64, acc: f64, et: f64| {
                let (sg, _) = surface_eval(e_of(ti), e_dot_of(ti), acc, et, &g);
                (sig_pow(e_of(ti), g.alpha), sig_pow(sg, g.beta))
            };
            let (k1a, k1b) = f(t, term_integral, eta);
            let (k2a, k2b) = f(t + h / 2.0, term_integral + h / 2.0 * k1a, eta + h / 2.0 * k1b);
            let (k3a, k3b) = f(t + h / 2.0, term_integral + h / 2.0 * k2a, eta + h / 2.0 * k2b);
            let (k4a, k4b) = f(t + h, term_integral + h * k3a, eta + h * k3b);
            term_integral += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
            eta += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        }

        // Central differences of the sampled s against the analytic rate.
        let mut checked = 0;
        for w in samples.windows(3) {
            let (t_mid, _, sigma_mid, _) = w[1];
            let numeric = (w[2].1 - w[0].1) / (2.0 * probe);
            let analytic = s_rate(
                sigma_mid,
                sigma_rate(e_of(t_mid), e_dot_of(t_mid), e_ddot_of(t_mid), &g),
                &g,
            );
            assert!(
                (numeric - analytic).abs() < 1e-4 * analytic.abs().max(1.0),
                "t = {t_mid}: numeric {numeric} vs analytic {analytic}"
            );
            checked += 1;
        }
        assert!(checked > 1000);
    }

    #[test]
    fn torque_clamp() {
        assert_eq!(clamp_torque(5.0, None), 5.0);
        assert_eq!(clamp_torque(5.0, Some(2.0)), 2.0);
        assert_eq!(clamp_torque(-5.0, Some(2.0)), -2.0);
        assert_eq!(clamp_torque(1.0, Some(2.0)), 1.0);
    }

    #[test]
    fn gain_validation() {
        assert!(SurfaceGains::default().validate().is_ok());
        assert!(SurfaceGains { alpha: 1.0, ..Default::default() }.validate().is_err());
        assert!(SurfaceGains { beta: 1.0, ..Default::default() }.validate().is_err());
        assert!(SurfaceGains { lambda: 0.0, ..Default::default() }.validate().is_err());
        assert!(AdaptationConfig::default().validate().is_ok());
        assert!(
            AdaptationConfig { adaptation_sign: 0.5, ..Default::default() }
                .validate()
                .is_err()
        );
        assert!(AdaptationConfig { rho: -1.0, ..Default::default() }.validate().is_err());
        assert!(FtsmcGains::default().validate().is_ok());
        assert!(FtsmcGains { k_w: 0.0, ..Default::default() }.validate().is_err());
        assert!(RsmcGains::default().validate().is_ok());
        assert!(RsmcGains { sat_delta: Some(0.0), ..Default::default() }.validate().is_err());
    }

    #[test]
    fn controller_kind_round_trips_through_strings() {
        for kind in [
            ControllerKind::Sac,
            ControllerKind::Ftsmc,
            ControllerKind::Rsmc,
            ControllerKind::None,
        ] {
            let s = kind.to_string();
            assert_eq!(s.parse::<ControllerKind>().unwrap(), kind);
        }
        assert!("pid".parse::<ControllerKind>().is_err());
    }
}
