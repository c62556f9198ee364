//! Control allocation across the tilt range: how the mixer conditioning,
//! rotor-speed solution, and tilt schedule behave as the rotors sweep
//! from hover (delta = 0) toward forward flight (delta = pi/2).
//!
//! The mixer loses rank exactly at delta = pi/2 — pitch torque and total
//! thrust then both depend only on the rear rotor pair — so allocation
//! hands off to the surface stub before that (the forward-mode
//! threshold). The sweep shows the normalized determinant collapsing
//! toward that point and the rotor split the solver chooses on the way.
//!
//! ```sh
//! cargo run --example allocation_sweep
//! ```

use std::f64::consts::FRAC_PI_2;

use tiltsim::allocation::{allocate, normalized_det, VirtualCommand};
use tiltsim::config::ScenarioConfig;

fn main() -> tiltsim::Result<()> {
    let cfg = ScenarioConfig::default();
    let params = cfg.vehicle;

    // Hover-weight thrust plus a small pitch-up torque: a representative
    // transition-phase command.
    let cmd = VirtualCommand {
        thrust: -params.m * params.g,
        u1: 0.0,
        u2: 0.1,
        u3: 0.0,
    };

    println!(
        "command: thrust {:.1} N, pitch torque {:.1} N m; forward-mode threshold {:.2} rad\n",
        cmd.thrust, cmd.u2, cfg.forward_mode_threshold
    );
    println!(
        "{:>10} {:>12} {:>9} {:>9} {:>9} {:>9} {:>6}",
        "delta[rad]", "norm det", "w1", "w2", "w3", "w4", "sat"
    );
    for k in 0..=14 {
        let delta = 0.1 * k as f64;
        let nd = normalized_det(delta, &params);
        match allocate(&cmd, delta, &params) {
            Ok(a) => println!(
                "{delta:>10.1} {nd:>12.3e} {:>9.1} {:>9.1} {:>9.1} {:>9.1} {:>6}",
                a.omega[0], a.omega[1], a.omega[2], a.omega[3],
                if a.saturated { "yes" } else { "no" }
            ),
            Err(e) => println!("{delta:>10.1} {nd:>12.3e} rejected: {e}"),
        }
    }
    match allocate(&cmd, FRAC_PI_2, &params) {
        Err(e) => println!("{FRAC_PI_2:>10.4} {:>12.3e} rejected: {e}", normalized_det(FRAC_PI_2, &params)),
        Ok(_) => println!("{FRAC_PI_2:>10.4} unexpectedly solvable"),
    }

    // The mission timeline driving delta in the shipped scenario.
    println!("\ntilt schedule (conversion 3-13 s, reconversion 20-22 s):");
    println!("{:>7} {:>12} {:>14}", "t [s]", "delta [rad]", "rate [rad/s]");
    for &t in &[0.0, 3.0, 5.0, 8.0, 11.0, 13.0, 16.0, 20.0, 21.0, 22.0, 24.0] {
        let (delta, delta_dot) = cfg.tilt.tilt_at(t);
        println!("{t:>7.1} {delta:>12.4} {delta_dot:>14.4}");
    }
    Ok(())
}
