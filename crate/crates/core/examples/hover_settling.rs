//! Settle the documented initial attitude offset in hover, without the
//! scripted disturbance, and print per-axis settling times for the
//! adaptive cascade and both fixed-gain baselines.
//!
//! The adaptive cascade starts exactly on its sliding surface, so it has
//! no reaching phase: expect it to beat both baselines on every axis.
//!
//! ```sh
//! cargo run --example hover_settling
//! ```

use std::f64::consts::PI;

use tiltsim::arsmc::ControllerKind;
use tiltsim::config::ScenarioConfig;
use tiltsim::report::settling_time;
use tiltsim::simkernel::run;

fn main() -> tiltsim::Result<()> {
    // Only the initial transient matters here: stop before the first tilt
    // transition would begin.
    let mut base = ScenarioConfig::default().without_injected_disturbance();
    base.duration = 3.0;

    let threshold_deg = 0.05;
    let threshold = threshold_deg * PI / 180.0;

    println!(
        "initial attitude [deg]: roll {:.2}  pitch {:.2}  yaw {:.2}",
        base.initial.phi.to_degrees(),
        base.initial.theta.to_degrees(),
        base.initial.psi.to_degrees()
    );
    println!("settling band: |e| < {threshold_deg} deg\n");
    println!("{:8} {:>10} {:>10} {:>10}", "", "roll [s]", "pitch [s]", "yaw [s]");

    for kind in [ControllerKind::Sac, ControllerKind::Ftsmc, ControllerKind::Rsmc] {
        let trace = run(&base.clone().with_controller(kind))?;
        let times: Vec<String> = (0..3)
            .map(|axis| match settling_time(&trace, axis, threshold, base.duration) {
                Some(t) => format!("{t:10.3}"),
                None => format!("{:>10}", "never"),
            })
            .collect();
        println!("{:8} {}", kind.to_string(), times.join(" "));
    }
    Ok(())
}
