//! Closed-loop evaluation of per-frame object-detection failures in a driving
//! pipeline, and the planning math for system-driven evasion patches.
//!
//! The crate is organised bottom-up:
//!
//! - [`camera`]: pinhole conversions between distance and on-image size, and
//!   the analytic per-frame size distribution under uniform motion.
//! - [`perception`]: per-range detection-rate profiles and stochastic
//!   detection injection.
//! - [`tracking`]: a 1-D Kalman tracker with the (H, R) confirm/delete
//!   lifecycle.
//! - [`vehicle`]: planner, longitudinal PID, Stanley lateral control and the
//!   vehicle plant.
//! - [`attack_plan`]: size weighting and system-critical range, exported as a
//!   sampling plan for external patch optimizers.
//! - [`evaluation`]: scenario configuration, the trial loop, Monte Carlo
//!   evaluation, ablations and significance tests.
//! - [`stats`]: seeded RNG streams, normal CDF, histograms and reference
//!   oracles.

pub mod attack_plan;
pub mod camera;
pub mod error;
pub mod evaluation;
pub mod perception;
pub mod stats;
pub mod tracking;
pub mod units;
pub mod vehicle;

pub use error::{Error, Result};
