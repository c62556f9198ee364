//! The full transition benchmark: 24 s hover → forward → hover scenario
//! with the scripted disturbance burst, run once per controller, reported
//! as phase-segmented MAX/RMS error tables with improvement ratios.
//!
//! This reproduces the shipped `compare` subcommand output as a library
//! call, one thread per controller.
//!
//! ```sh
//! cargo run --release --example transition_comparison
//! ```

use tiltsim::arsmc::ControllerKind;
use tiltsim::config::ScenarioConfig;
use tiltsim::report::{render_comparison, ControllerMetrics, PhaseWindows};
use tiltsim::simkernel::run;

fn main() -> tiltsim::Result<()> {
    let base = ScenarioConfig::default();
    let windows = PhaseWindows::from_timeline(&base.tilt)?;

    let kinds = [ControllerKind::Ftsmc, ControllerKind::Rsmc, ControllerKind::Sac];
    let configs = kinds.map(|kind| base.clone().with_controller(kind));
    let [ftsmc, rsmc, sac] = std::thread::scope(|scope| {
        configs
            .each_ref()
            .map(|cfg| scope.spawn(move || run(cfg)))
            .map(|handle| handle.join().expect("simulation thread panicked"))
    });
    let (ftsmc, rsmc, sac) = (ftsmc?, rsmc?, sac?);

    let table = render_comparison(
        &windows,
        &ControllerMetrics::from_trace(ControllerKind::Ftsmc, &ftsmc, &windows)?,
        &ControllerMetrics::from_trace(ControllerKind::Rsmc, &rsmc, &windows)?,
        &ControllerMetrics::from_trace(ControllerKind::Sac, &sac, &windows)?,
    );
    print!("{table}");
    Ok(())
}
