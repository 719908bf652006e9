use serde::{Deserialize, Serialize};

use super::plant::EgoState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerMode {
    Cruise,
    Stopping,
    Stopped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerState {
    pub mode: PlannerMode,
    /// Along-road position of the stop line, when a stop is planned.
    pub stop_target_m: Option<f64>,
    pub target_speed_mps: f64,
    /// Feedforward acceleration for the longitudinal controller.
    pub target_accel_mps2: f64,
}

impl PlannerState {
    pub fn cruise(speed_limit_mps: f64) -> Self {
        Self {
            mode: PlannerMode::Cruise,
            stop_target_m: None,
            target_speed_mps: speed_limit_mps,
            target_accel_mps2: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub speed_limit_mps: f64,
    /// Deceleration of the planned stopping profile (magnitude).
    pub plan_decel_mps2: f64,
    /// Keep a stop obligation after the track that created it is deleted.
    pub latch_stop: bool,
    /// Stop line relative to the tracked object (negative = before it).
    pub stop_line_offset_m: f64,
    /// The planner aims to come to rest this far before the stop line.
    pub stop_buffer_m: f64,
    pub stopped_speed_mps: f64,
    pub stopped_window_m: f64,
}

impl PlannerConfig {
    pub fn new(speed_limit_mps: f64, plan_decel_mps2: f64) -> Self {
        Self {
            speed_limit_mps,
            plan_decel_mps2,
            latch_stop: false,
            stop_line_offset_m: 0.0,
            stop_buffer_m: 0.0,
            stopped_speed_mps: 0.1,
            stopped_window_m: 0.5,
        }
    }
}

/// Lane-following longitudinal decision for one frame.
///
/// With a confirmed track the planner stops at the line using the profile
/// `v = sqrt(2 a d)`, capped at the speed limit, where `d` runs to a point
/// `stop_buffer_m` before the line. Without one it cruises at
/// the speed limit, unless `latch_stop` keeps an earlier stop.
pub fn plan(tracked: bool, track_distance_m: Option<f64>, ego: &EgoState, cfg: &PlannerConfig, prev: &PlannerState) -> PlannerState {
    if prev.mode == PlannerMode::Stopped {
        return PlannerState {
            mode: PlannerMode::Stopped,
            stop_target_m: prev.stop_target_m,
            target_speed_mps: 0.0,
            target_accel_mps2: 0.0,
        };
    }

    let stop_line = match (tracked, track_distance_m) {
        (true, Some(d)) => Some(ego.position_m + d + cfg.stop_line_offset_m),
        _ if cfg.latch_stop && prev.mode == PlannerMode::Stopping => prev.stop_target_m,
        _ => None,
    };

    let Some(line) = stop_line else {
        return PlannerState::cruise(cfg.speed_limit_mps);
    };

    let remaining = line - cfg.stop_buffer_m - ego.position_m;
    if ego.speed_mps < cfg.stopped_speed_mps && remaining <= cfg.stopped_window_m {
        return PlannerState {
            mode: PlannerMode::Stopped,
            stop_target_m: Some(line),
            target_speed_mps: 0.0,
            target_accel_mps2: 0.0,
        };
    }

    let profile = (2.0 * cfg.plan_decel_mps2 * remaining.max(0.0)).sqrt();
    let (target, ff) = if profile >= cfg.speed_limit_mps {
        (cfg.speed_limit_mps, 0.0)
    } else {
        (profile, -cfg.plan_decel_mps2)
    };
    PlannerState {
        mode: PlannerMode::Stopping,
        stop_target_m: Some(line),
        target_speed_mps: target,
        target_accel_mps2: ff,
    }
}
