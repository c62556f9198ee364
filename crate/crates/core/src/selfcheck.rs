//! Fast structural invariant suite.
//!
//! These are the identities the rest of the crate is built on — surface
//! initialization, the mixer determinant, allocation round trips, the
//! equivalent-control cancellation, metric arithmetic, and observer
//! convergence on a known plant. The CLI `check` subcommand runs them all
//! and reports one pass/fail line each; tests reuse the same functions
//! with tighter settings. Every randomized check draws from a fixed seed,
//! so the suite is deterministic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::allocation::{self, VirtualCommand};
use crate::arsmc::{
    equivalent_control, init_eta, model_s_rate, surface_eval, AxisInputs, AxisReference,
};
use crate::config::ScenarioConfig;
use crate::report;
use crate::rigid_body::VehicleParams;
use crate::simkernel::{Record, SimTrace};
use crate::steso::{observer_derivative, ObserverChannel};

const SEED: u64 = 0x7115_0b5e_c4ec_2024;

/// Result of one invariant check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst-case numbers behind the verdict, for the report line.
    pub detail: String,
}

impl CheckOutcome {
    fn from(name: &'static str, r: std::result::Result<String, String>) -> Self {
        match r {
            Ok(detail) => CheckOutcome { name, passed: true, detail },
            Err(detail) => CheckOutcome { name, passed: false, detail },
        }
    }
}

/// Run the whole suite against one scenario's parameter set.
pub fn run_all(cfg: &ScenarioConfig) -> Vec<CheckOutcome> {
    vec![
        CheckOutcome::from("scenario config validates", check_config(cfg)),
        CheckOutcome::from("sliding surface starts at zero", check_surface_start(cfg)),
        CheckOutcome::from("mixer determinant closed form", check_determinant()),
        CheckOutcome::from("allocation round trip", check_allocation(&cfg.vehicle)),
        CheckOutcome::from(
            "equivalent control cancels the surface rate",
            check_equivalent_control(cfg),
        ),
        CheckOutcome::from("error metrics arithmetic", check_metrics()),
        CheckOutcome::from(
            "observer locks onto a constant disturbance",
            check_observer(cfg),
        ),
    ]
}

fn check_config(cfg: &ScenarioConfig) -> std::result::Result<String, String> {
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(format!(
        "duration {} s, step {} s, controller {:?}",
        cfg.duration, cfg.step, cfg.controller
    ))
}

/// `eta(0) = -sigma(0)/lambda` puts every random initial error exactly on
/// the recursive surface.
fn check_surface_start(cfg: &ScenarioConfig) -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let g = &cfg.sac.surface;
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let e = rng.gen_range(-0.5..0.5);
        let e_dot = rng.gen_range(-2.0..2.0);
        let sigma0 = e_dot + g.k_lin * e; // term integral starts at 0
        let eta0 = init_eta(sigma0, g.lambda);
        let (_, s0) = surface_eval(e, e_dot, 0.0, eta0, g);
        worst = worst.max(s0.abs());
    }
    if worst <= 1e-12 {
        Ok(format!("max |s(0)| = {worst:.3e} over 100 random errors"))
    } else {
        Err(format!("max |s(0)| = {worst:.3e} exceeds 1e-12"))
    }
}

/// Brute-force 4x4 determinant against the closed form, plus the exact
/// singularity at delta = pi/2.
fn check_determinant() -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let p = VehicleParams {
            kt: rng.gen_range(1e-6..1e-4),
            kd: rng.gen_range(1e-8..1e-6),
            d_arm: rng.gen_range(0.2..1.0),
            ..VehicleParams::default()
        };
        let delta = rng.gen_range(-0.3..1.55);
        let brute = allocation::mixer_matrix(delta, &p).determinant();
        let closed = allocation::det_closed_form(delta, &p);
        let rel = (brute - closed).abs() / closed.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    if worst > 1e-10 {
        return Err(format!("worst relative determinant error {worst:.3e} exceeds 1e-10"));
    }
    let p = VehicleParams::default();
    if allocation::mixer(std::f64::consts::FRAC_PI_2, &p).is_ok() {
        return Err("tilt pi/2 was not detected as singular".into());
    }
    Ok(format!(
        "worst relative error {worst:.3e} over 1000 draws; pi/2 rejected as singular"
    ))
}

/// The pre-clamp allocation solution reproduces the commanded wrench
/// through the mixer matrix, and unsaturated solves achieve it physically.
fn check_allocation(params: &VehicleParams) -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let hover = -params.m * params.g;
    let mut worst = 0.0_f64;
    let mut unsaturated = 0usize;
    for _ in 0..1000 {
        let delta = rng.gen_range(0.05..1.5);
        let cmd = VirtualCommand {
            thrust: hover * rng.gen_range(0.8..1.2),
            u1: rng.gen_range(-0.3..0.3),
            u2: rng.gen_range(-0.3..0.3),
            u3: rng.gen_range(-0.3..0.3),
        };
        let alloc = allocation::allocate(&cmd, delta, params).map_err(|e| e.to_string())?;
        let m = allocation::mixer_matrix(delta, params);
        let achieved = m * nalgebra::Vector4::from(alloc.squared);
        let want = cmd.wrench();
        let rel = (achieved - want).norm() / want.norm();
        worst = worst.max(rel);
        if !alloc.saturated {
            unsaturated += 1;
            let back = alloc.achieved;
            let err = (back.wrench() - want).norm() / want.norm();
            worst = worst.max(err);
        }
    }
    if worst <= 1e-9 {
        Ok(format!(
            "worst relative wrench error {worst:.3e} over 1000 draws ({unsaturated} unsaturated)"
        ))
    } else {
        Err(format!("worst relative wrench error {worst:.3e} exceeds 1e-9"))
    }
}

/// With the disturbance estimate exact, applying the equivalent control
/// alone must give `s' = d - d_hat = 0` identically.
fn check_equivalent_control(cfg: &ScenarioConfig) -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    let g = &cfg.sac.surface;
    let inertias = [cfg.vehicle.ix, cfg.vehicle.iy, cfg.vehicle.iz];
    let mut worst = 0.0_f64;
    for k in 0..100 {
        let inp = AxisInputs {
            angle: rng.gen_range(-0.5..0.5),
            rate: rng.gen_range(-2.0..2.0),
            d_hat: rng.gen_range(-5.0..5.0),
            reference: AxisReference::constant(rng.gen_range(-0.3..0.3)),
            inertia: inertias[k % 3],
            gyro_accel: rng.gen_range(-1.0..1.0),
        };
        let sigma = rng.gen_range(-3.0..3.0);
        let u0 = equivalent_control(&inp, sigma, g);
        // model_s_rate folds d_hat into e''; with u = u0 the remaining
        // terms cancel exactly.
        let s_dot = model_s_rate(&inp, u0, sigma, g);
        worst = worst.max(s_dot.abs());
    }
    if worst <= 1e-10 {
        Ok(format!("max |s'(u0)| = {worst:.3e} over 100 random states"))
    } else {
        Err(format!("max |s'(u0)| = {worst:.3e} exceeds 1e-10"))
    }
}

/// MAX/RMS arithmetic against hand-computed values, plus the improvement
/// ratio against the reference comparison row (0.335 vs 0.029 -> 0.913).
fn check_metrics() -> std::result::Result<String, String> {
    let mut records = Vec::new();
    for (k, e) in [ 1.0, -2.0, 3.0 ].into_iter().enumerate() {
        let mut r = Record::zeroed();
        r.t = k as f64;
        r.e = [e, e.abs(), 0.5];
        records.push(r);
    }
    let trace = SimTrace { step: 1.0, records };
    let m = report::compute_metrics(&trace, (0.0, 2.0)).map_err(|e| e.to_string())?;
    let rms_want = (14.0_f64 / 3.0).sqrt();
    if (m[0].max_e - 3.0).abs() > 1e-14 || (m[0].rms_e - rms_want).abs() > 1e-14 {
        return Err(format!(
            "e = [1,-2,3]: got MAX {} RMS {}, want 3 and sqrt(14/3)",
            m[0].max_e, m[0].rms_e
        ));
    }
    if (m[2].max_e - m[2].rms_e).abs() > 1e-15 {
        return Err("constant |e| must give MAX = RMS".into());
    }
    let imp = report::improvement(0.029, 0.335);
    if (imp - 0.913).abs() > 0.02 {
        return Err(format!("improvement(0.029, 0.335) = {imp:.4}, want ~0.913"));
    }
    Ok(format!(
        "MAX/RMS exact on the hand example; improvement ratio {imp:.3}"
    ))
}

fn check_observer(cfg: &ScenarioConfig) -> std::result::Result<String, String> {
    let channel = ObserverChannel::new(cfg.observer.gains);
    let stats = observer_open_loop(
        channel,
        |_| 0.0,
        |_| 1.0,
        1e-5,
        3.0,
        1e-2,
        2.0,
    );
    match stats.hold_from {
        Some(t) if t <= 2.0 => Ok(format!(
            "|d - d_hat| < 1e-2 from t = {t:.3} s on; tail max {:.3e}",
            stats.max_err_tail
        )),
        Some(t) => Err(format!("estimate only locks at t = {t:.3} s (> 2 s)")),
        None => Err(format!(
            "estimate never locks; tail max |d - d_hat| = {:.3e}",
            stats.max_err_tail
        )),
    }
}

/// Convergence statistics of [`observer_open_loop`].
#[derive(Debug, Clone, Copy)]
pub struct ObserverTrackStats {
    /// Earliest sample time from which `|d - d_hat| < tol` holds through
    /// the end of the run; `None` if the last sample still violates it.
    pub hold_from: Option<f64>,
    /// Largest `|d - d_hat|` at sample times `>= tail_from`.
    pub max_err_tail: f64,
}

/// Drive one observer channel open loop against a double-integrator plant
/// `x'' = u(t) + d(t)` with exact measurements, co-integrating plant and
/// observer with classical fixed-step RK4, and report how the estimate
/// `d_hat` tracks the true `d`.
pub fn observer_open_loop(
    channel: ObserverChannel,
    control: impl Fn(f64) -> f64,
    disturbance: impl Fn(f64) -> f64,
    h: f64,
    t_end: f64,
    tol: f64,
    tail_from: f64,
) -> ObserverTrackStats {
    // Joint state: plant angle, plant rate, then the observer triplet.
    let mut y = [0.0_f64, 0.0, channel.x1_hat, channel.x2_hat, channel.d_hat];
    let deriv = |t: f64, y: &[f64; 5]| -> [f64; 5] {
        let u = control(t);
        let ch = ObserverChannel { x1_hat: y[2], x2_hat: y[3], d_hat: y[4], ..channel };
        let (o1, o2, o3) = observer_derivative(&ch, y[0], 0.0, u);
        [y[1], u + disturbance(t), o1, o2, o3]
    };
    let add = |a: &[f64; 5], b: &[f64; 5], s: f64| -> [f64; 5] {
        [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3], a[4] + s * b[4]]
    };

    let n = (t_end / h).round() as usize;
    let mut last_violation: Option<usize> = None;
    let err0 = (disturbance(0.0) - y[4]).abs();
    if err0 >= tol {
        last_violation = Some(0);
    }
    let mut max_err_tail = if 0.0 >= tail_from { err0 } else { 0.0 };
    for k in 0..n {
        let t = k as f64 * h;
        let k1 = deriv(t, &y);
        let k2 = deriv(t + 0.5 * h, &add(&y, &k1, 0.5 * h));
        let k3 = deriv(t + 0.5 * h, &add(&y, &k2, 0.5 * h));
        let k4 = deriv(t + h, &add(&y, &k3, h));
        for i in 0..5 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t1 = (k + 1) as f64 * h;
        let err = (disturbance(t1) - y[4]).abs();
        if err >= tol {
            last_violation = Some(k + 1);
        }
        if t1 >= tail_from {
            max_err_tail = max_err_tail.max(err);
        }
    }
    let hold_from = match last_violation {
        None => Some(0.0),
        Some(k) if k < n => Some((k + 1) as f64 * h),
        Some(_) => None,
    };
    ObserverTrackStats { hold_from, max_err_tail }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn the_whole_suite_passes_on_the_default_scenario() {
        let cfg = ScenarioConfig::default();
        let outcomes = run_all(&cfg);
        assert_eq!(outcomes.len(), 7);
        for o in &outcomes {
            assert!(o.passed, "check `{}` failed: {}", o.name, o.detail);
        }
    }

    #[test]
    fn a_broken_scenario_fails_the_config_check() {
        let cfg = ScenarioConfig { step: -1.0, ..ScenarioConfig::default() };
        let outcomes = run_all(&cfg);
        assert!(!outcomes[0].passed);
    }
}
