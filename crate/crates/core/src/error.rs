//! Error taxonomy shared across the crate.
//!
//! Three families matter operationally and map onto the CLI exit codes:
//! configuration problems (exit 1), numerical failures during a run
//! (exit 2), and I/O problems while emitting results (exit 3).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// Invalid or inconsistent scenario configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Euler-kinematics singularity guard: |theta| approached pi/2.
    #[error("attitude singularity at t = {t:.3} s: |theta| = {theta_abs:.6} rad is within the guard band of pi/2")]
    Singularity { t: f64, theta_abs: f64 },

    /// The tilt-dependent mixer lost rank (det magnitude at or below the
    /// floor). `t` is NaN when allocation was called outside a run.
    #[error("singular mixer{}: delta = {delta:.6} rad, |det| = {det_abs:.3e}", fmt_at(*t))]
    SingularMixer { t: f64, delta: f64, det_abs: f64 },

    /// A state or signal stopped being finite.
    #[error("numerical divergence at t = {t:.3} s: {what} is not finite")]
    NonFinite { t: f64, what: &'static str },

    /// Filesystem failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Render an event time for an error message, or nothing when the
/// operation ran outside a simulation (time NaN).
fn fmt_at(t: f64) -> String {
    if t.is_nan() {
        String::new()
    } else {
        format!(" at t = {t:.3} s")
    }
}

impl SimError {
    /// Process exit code for the CLI: 1 config, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 1,
            SimError::Singularity { .. }
            | SimError::SingularMixer { .. }
            | SimError::NonFinite { .. } => 2,
            SimError::Io { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_documented_mapping() {
        assert_eq!(SimError::Config("x".into()).exit_code(), 1);
        assert_eq!(
            SimError::Singularity { t: 0.0, theta_abs: 1.6 }.exit_code(),
            2
        );
        assert_eq!(
            SimError::SingularMixer { t: 0.0, delta: 1.57, det_abs: 0.0 }.exit_code(),
            2
        );
        assert_eq!(
            SimError::NonFinite { t: 1.0, what: "state" }.exit_code(),
            2
        );
        let io = SimError::Io {
            path: "/nope".into(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "gone"),
        };
        assert_eq!(io.exit_code(), 3);
    }

    #[test]
    fn messages_carry_context() {
        let e = SimError::SingularMixer {
            t: 13.0,
            delta: std::f64::consts::FRAC_PI_2,
            det_abs: 1e-22,
        };
        let msg = e.to_string();
        assert!(msg.contains("13.000"));
        assert!(msg.contains("singular mixer"));
    }
}
