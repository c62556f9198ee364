//! Post-processing: per-phase error metrics, controller comparison tables,
//! and trace export (full CSV and named-channel plot data).
//!
//! Everything internal stays in radians; degrees appear exactly once, at
//! the table-rendering boundary.

use std::io::{self, Write};
use std::path::Path;

use crate::allocation::TiltTimeline;
use crate::arsmc::ControllerKind;
use crate::error::{Result, SimError};
use crate::simkernel::{Record, SimTrace};

/// Time spans of the two tilt phases, the windows the comparison tables
/// score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseWindows {
    pub conversion: (f64, f64),
    pub reconversion: (f64, f64),
}

impl PhaseWindows {
    /// Read the spans off the mission timeline.
    pub fn from_timeline(tl: &TiltTimeline) -> Result<Self> {
        let conv = tl.conversion.as_ref().ok_or_else(|| {
            SimError::Config("phase windows need a conversion phase in the timeline".into())
        })?;
        let reconv = tl.reconversion.as_ref().ok_or_else(|| {
            SimError::Config("phase windows need a reconversion phase in the timeline".into())
        })?;
        Ok(PhaseWindows {
            conversion: (conv.t0, conv.end()),
            reconversion: (reconv.t0, reconv.end()),
        })
    }
}

/// Error metrics for one attitude channel over one window [rad].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMetrics {
    pub max_e: f64,
    pub rms_e: f64,
}

/// Peak and root-mean-square tracking error per channel over `[t0, t1]`.
/// An empty window is a configuration error, never a silent zero.
pub fn compute_metrics(trace: &SimTrace, window: (f64, f64)) -> Result<[ChannelMetrics; 3]> {
    let recs = trace.window(window.0, window.1);
    if recs.is_empty() {
        return Err(SimError::Config(format!(
            "metrics window [{}, {}] s contains no trace samples",
            window.0, window.1
        )));
    }
    let mut out = [ChannelMetrics { max_e: 0.0, rms_e: 0.0 }; 3];
    for (i, m) in out.iter_mut().enumerate() {
        let mut max_e = 0.0_f64;
        let mut sq = 0.0_f64;
        for r in recs {
            let e = r.e[i].abs();
            max_e = max_e.max(e);
            sq += e * e;
        }
        m.max_e = max_e;
        m.rms_e = (sq / recs.len() as f64).sqrt();
    }
    Ok(out)
}

/// Relative improvement of the cascade over a baseline on one metric:
/// `1 - sac/baseline` (1 = error eliminated, 0 = parity, negative =
/// worse). NaN when the baseline metric is zero.
pub fn improvement(sac: f64, baseline: f64) -> f64 {
    1.0 - sac / baseline
}

/// Smallest time after which `|e|` stays below `threshold` [rad] on every
/// sample up to `t_end`; `None` if the error is still above threshold at
/// the last sample before `t_end`.
pub fn settling_time(trace: &SimTrace, axis: usize, threshold: f64, t_end: f64) -> Option<f64> {
    let recs = trace.window(0.0, t_end);
    let mut last_violation: Option<usize> = None;
    for (k, r) in recs.iter().enumerate() {
        if r.e[axis].abs() >= threshold {
            last_violation = Some(k);
        }
    }
    match last_violation {
        None => Some(recs.first().map_or(0.0, |r| r.t)),
        Some(k) if k + 1 < recs.len() => Some(recs[k + 1].t),
        Some(_) => None,
    }
}

/// Sum of absolute sample-to-sample changes of one traced channel over a
/// window — the chattering yardstick for torque traces.
pub fn total_variation(
    trace: &SimTrace,
    select: impl Fn(&Record) -> f64,
    window: (f64, f64),
) -> f64 {
    let recs = trace.window(window.0, window.1);
    recs.windows(2)
        .map(|w| (select(&w[1]) - select(&w[0])).abs())
        .sum()
}

/// Metrics of one controller's run over both tilt phases.
#[derive(Debug, Clone, Copy)]
pub struct ControllerMetrics {
    pub kind: ControllerKind,
    pub conversion: [ChannelMetrics; 3],
    pub reconversion: [ChannelMetrics; 3],
}

impl ControllerMetrics {
    pub fn from_trace(kind: ControllerKind, trace: &SimTrace, windows: &PhaseWindows) -> Result<Self> {
        Ok(ControllerMetrics {
            kind,
            conversion: compute_metrics(trace, windows.conversion)?,
            reconversion: compute_metrics(trace, windows.reconversion)?,
        })
    }
}

const CHANNEL_NAMES: [&str; 3] = ["Roll", "Pitch", "Yaw"];
const RAD_TO_DEG: f64 = 180.0 / std::f64::consts::PI;

fn render_phase_table(
    out: &mut String,
    title: &str,
    span: (f64, f64),
    ftsmc: &[ChannelMetrics; 3],
    rsmc: &[ChannelMetrics; 3],
    sac: &[ChannelMetrics; 3],
) {
    use std::fmt::Write as _;
    let _ = writeln!(
        out,
        "{title} ({:.1}-{:.1} s), attitude error [deg]",
        span.0, span.1
    );
    let _ = writeln!(
        out,
        "{:<7} {:<6} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "Channel", "Metric", "FTSMC", "RSMC", "SAC", "I vs FTSMC", "I vs RSMC"
    );
    for i in 0..3 {
        for (metric, f, r, s) in [
            ("MAX_e", ftsmc[i].max_e, rsmc[i].max_e, sac[i].max_e),
            ("RMS_e", ftsmc[i].rms_e, rsmc[i].rms_e, sac[i].rms_e),
        ] {
            let _ = writeln!(
                out,
                "{:<7} {:<6} {:>12.6} {:>12.6} {:>12.6} {:>12.3} {:>12.3}",
                CHANNEL_NAMES[i],
                metric,
                f * RAD_TO_DEG,
                r * RAD_TO_DEG,
                s * RAD_TO_DEG,
                improvement(s, f),
                improvement(s, r),
            );
        }
    }
}

/// Render the two-phase comparison tables (one per tilt phase; errors in
/// degrees, improvements as fractions of the baseline error).
pub fn render_comparison(
    windows: &PhaseWindows,
    ftsmc: &ControllerMetrics,
    rsmc: &ControllerMetrics,
    sac: &ControllerMetrics,
) -> String {
    debug_assert_eq!(ftsmc.kind, ControllerKind::Ftsmc);
    debug_assert_eq!(rsmc.kind, ControllerKind::Rsmc);
    debug_assert_eq!(sac.kind, ControllerKind::Sac);
    let mut out = String::new();
    render_phase_table(
        &mut out,
        "Conversion phase",
        windows.conversion,
        &ftsmc.conversion,
        &rsmc.conversion,
        &sac.conversion,
    );
    out.push('\n');
    render_phase_table(
        &mut out,
        "Reconversion phase",
        windows.reconversion,
        &ftsmc.reconversion,
        &rsmc.reconversion,
        &sac.reconversion,
    );
    out
}

/// A traced channel: CSV column name plus the accessor that reads it from
/// a record.
pub type Column = (&'static str, fn(&Record) -> f64);

/// The traced channels by name, in CSV column order. Booleans export as
/// 0/1. This registry is the single source of truth for both the full
/// trace CSV and the named-channel plot data.
pub const COLUMNS: &[Column] = &[
    ("t", |r| r.t),
    ("phi", |r| r.body.phi),
    ("theta", |r| r.body.theta),
    ("psi", |r| r.body.psi),
    ("p", |r| r.body.p),
    ("q", |r| r.body.q),
    ("r", |r| r.body.r),
    ("u", |r| r.body.u),
    ("v", |r| r.body.v),
    ("w", |r| r.body.w),
    ("pn", |r| r.body.pn),
    ("pe", |r| r.body.pe),
    ("h", |r| r.body.h),
    ("e_roll", |r| r.e[0]),
    ("e_pitch", |r| r.e[1]),
    ("e_yaw", |r| r.e[2]),
    ("angle_hat_roll", |r| r.angle_hat[0]),
    ("angle_hat_pitch", |r| r.angle_hat[1]),
    ("angle_hat_yaw", |r| r.angle_hat[2]),
    ("rate_hat_roll", |r| r.rate_hat[0]),
    ("rate_hat_pitch", |r| r.rate_hat[1]),
    ("rate_hat_yaw", |r| r.rate_hat[2]),
    ("d_hat_roll", |r| r.d_hat[0]),
    ("d_hat_pitch", |r| r.d_hat[1]),
    ("d_hat_yaw", |r| r.d_hat[2]),
    ("d_hat_f_roll", |r| r.d_hat_f[0]),
    ("d_hat_f_pitch", |r| r.d_hat_f[1]),
    ("d_hat_f_yaw", |r| r.d_hat_f[2]),
    ("d_inj_roll", |r| r.d_injected[0]),
    ("d_inj_pitch", |r| r.d_injected[1]),
    ("d_inj_yaw", |r| r.d_injected[2]),
    ("sigma_roll", |r| r.sigma[0]),
    ("sigma_pitch", |r| r.sigma[1]),
    ("sigma_yaw", |r| r.sigma[2]),
    ("s_roll", |r| r.s[0]),
    ("s_pitch", |r| r.s[1]),
    ("s_yaw", |r| r.s[2]),
    ("s_dot_roll", |r| r.s_dot[0]),
    ("s_dot_pitch", |r| r.s_dot[1]),
    ("s_dot_yaw", |r| r.s_dot[2]),
    ("eta_roll", |r| r.eta[0]),
    ("eta_pitch", |r| r.eta[1]),
    ("eta_yaw", |r| r.eta[2]),
    ("xi1_roll", |r| r.xi1[0]),
    ("xi1_pitch", |r| r.xi1[1]),
    ("xi1_yaw", |r| r.xi1[2]),
    ("xi2_roll", |r| r.xi2[0]),
    ("xi2_pitch", |r| r.xi2[1]),
    ("xi2_yaw", |r| r.xi2[2]),
    ("torque_roll", |r| r.torque[0]),
    ("torque_pitch", |r| r.torque[1]),
    ("torque_yaw", |r| r.torque[2]),
    ("thrust_cmd", |r| r.thrust_cmd),
    ("delta", |r| r.delta),
    ("delta_dot", |r| r.delta_dot),
    ("rotor_1", |r| r.rotor[0]),
    ("rotor_2", |r| r.rotor[1]),
    ("rotor_3", |r| r.rotor[2]),
    ("rotor_4", |r| r.rotor[3]),
    ("surface_cmd_roll", |r| r.surface_cmd[0]),
    ("surface_cmd_pitch", |r| r.surface_cmd[1]),
    ("surface_cmd_yaw", |r| r.surface_cmd[2]),
    ("allocation_saturated", |r| {
        if r.allocation_saturated {
            1.0
        } else {
            0.0
        }
    }),
    ("forward_mode", |r| if r.forward_mode { 1.0 } else { 0.0 }),
];

/// Look a traced channel up by name.
pub fn channel_selector(name: &str) -> Result<fn(&Record) -> f64> {
    COLUMNS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| *f)
        .ok_or_else(|| {
            SimError::Config(format!(
                "`{name}` is not a traced channel (see the column registry)"
            ))
        })
}

/// Values are written as `{:.16e}`: 17 significant digits, enough for
/// every f64 to round-trip exactly.
fn write_value<W: Write>(w: &mut W, v: f64) -> io::Result<()> {
    write!(w, "{v:.16e}")
}

/// Write the whole trace as CSV: a header row naming every column, one
/// row per record.
pub fn emit_trace_csv<W: Write>(mut w: W, trace: &SimTrace) -> io::Result<()> {
    for (k, (name, _)) in COLUMNS.iter().enumerate() {
        if k > 0 {
            w.write_all(b",")?;
        }
        w.write_all(name.as_bytes())?;
    }
    w.write_all(b"\n")?;
    for rec in &trace.records {
        for (k, (_, f)) in COLUMNS.iter().enumerate() {
            if k > 0 {
                w.write_all(b",")?;
            }
            write_value(&mut w, f(rec))?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Write plot data for the named channels: a `t` column followed by one
/// column per requested channel. Unknown names are configuration errors;
/// an empty request writes the header line only.
pub fn emit_plot_data<W: Write>(mut w: W, trace: &SimTrace, channels: &[&str]) -> Result<()> {
    let selectors: Vec<fn(&Record) -> f64> = channels
        .iter()
        .map(|n| channel_selector(n))
        .collect::<Result<_>>()?;
    let io_wrap = |e: io::Error| SimError::Io {
        path: "<plot-data stream>".into(),
        source: e,
    };
    let mut header = String::from("t");
    for n in channels {
        header.push(',');
        header.push_str(n);
    }
    header.push('\n');
    w.write_all(header.as_bytes()).map_err(io_wrap)?;
    if selectors.is_empty() {
        return w.flush().map_err(io_wrap);
    }
    for rec in &trace.records {
        write_value(&mut w, rec.t).map_err(io_wrap)?;
        for f in &selectors {
            w.write_all(b",").map_err(io_wrap)?;
            write_value(&mut w, f(rec)).map_err(io_wrap)?;
        }
        w.write_all(b"\n").map_err(io_wrap)?;
    }
    w.flush().map_err(io_wrap)
}

/// Write the full trace CSV to a file.
pub fn write_trace_csv(path: &Path, trace: &SimTrace) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    emit_trace_csv(io::BufWriter::new(file), trace).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Parse CSV produced by [`emit_trace_csv`]/[`emit_plot_data`] back into a
/// header and rows of f64 — the round-trip check and a convenience for
/// downstream tooling.
pub fn parse_trace_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| SimError::Config("trace CSV is empty".into()))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.parse::<f64>().map_err(|e| {
                    SimError::Config(format!("trace CSV row {}: bad number `{tok}`: {e}", k + 2))
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != header.len() {
            return Err(SimError::Config(format!(
                "trace CSV row {} has {} fields, header has {}",
                k + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
