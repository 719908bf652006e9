use crate::error::Result;
use crate::perception::sample_detection;
use crate::stats::RngStream;
use crate::tracking::{self, TrackState, TrackStatus};
use crate::vehicle::{
    plan, plant_step, stanley_step, AccelLimits, EgoState, PidController, PlannerConfig, PlannerMode, PlannerState,
};

use super::scenario::{Goal, ScenarioConfig};

/// Distance past the line after which a run is stopped.
const OVERRUN_LIMIT_M: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t_s: f64,
    pub x_m: f64,
    pub v_mps: f64,
    pub tracked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub violated: bool,
    pub initial_distance_m: f64,
    /// Negative once the line has been crossed.
    pub min_distance_to_line_m: f64,
    /// Speed at the moment the line was crossed, if it was.
    pub final_speed_at_line_mps: Option<f64>,
    pub track_confirm_frame: Option<u64>,
    /// Frames on which a confirmed track was deleted.
    pub track_delete_frames: Vec<u64>,
    pub frames: u64,
    pub trajectory: Option<Vec<TrajectoryPoint>>,
}

/// One closed-loop run. Deterministic in `(cfg, seed)`.
pub fn run_trial(cfg: &ScenarioConfig, seed: u64) -> Result<TrialResult> {
    cfg.validate()?;
    Ok(simulate(cfg, seed))
}

/// [`run_trial`] without validation, for callers that validated already.
pub(crate) fn simulate(cfg: &ScenarioConfig, seed: u64) -> TrialResult {
    let mut rng = RngStream::new(seed);
    let dt = cfg.camera.frame_dt();
    // The judged point: the stop line, or the object itself.
    let object_x = cfg.road_length_m;
    let line_x = match cfg.goal {
        Goal::StopLineViolation => object_x + cfg.stop_line_offset_m,
        Goal::PedestrianCollision => object_x,
    };
    let initial_distance = rng.uniform_in(cfg.init_band_m.0, cfg.init_band_m.1);

    let mut ego = EgoState {
        position_m: object_x - initial_distance,
        speed_mps: cfg.speed_limit_mps,
        ..EgoState::default()
    };
    let planner_cfg = PlannerConfig {
        latch_stop: cfg.latch_stop,
        stop_line_offset_m: cfg.stop_line_offset_m,
        stop_buffer_m: cfg.stop_buffer_m,
        ..PlannerConfig::new(
            cfg.speed_limit_mps,
            cfg.plant.comfort_decel_mps2.min(cfg.plant.max_decel_mps2),
        )
    };
    let limits = AccelLimits {
        max_decel_mps2: cfg.plant.max_decel_mps2,
        max_accel_mps2: cfg.plant.max_accel_mps2,
    };
    let crossing_threshold = match cfg.goal {
        Goal::StopLineViolation => cfg.violation_speed_mps,
        Goal::PedestrianCollision => 0.0,
    };

    let mut pid = PidController::new(cfg.pid);
    let mut planner = PlannerState::cruise(cfg.speed_limit_mps);
    let mut track = TrackState::empty(ego.speed_mps);
    let mut result = TrialResult {
        violated: false,
        initial_distance_m: initial_distance,
        min_distance_to_line_m: line_x - ego.position_m,
        final_speed_at_line_mps: None,
        track_confirm_frame: None,
        track_delete_frames: Vec::new(),
        frames: 0,
        trajectory: cfg.record_trajectory.then(Vec::new),
    };

    let max_frames = (cfg.max_time_s / dt).ceil() as u64;
    for frame in 0..max_frames {
        let true_distance = object_x - ego.position_m;
        let detection = sample_detection(
            &cfg.profile,
            true_distance,
            &cfg.camera,
            &mut rng,
            cfg.detection_noise_std_m,
            frame,
        );

        if frame > 0 {
            track = tracking::predict(&track, dt, ego.speed_mps, &cfg.tracker);
        }
        let before = track.status;
        let out_of_view = track.distance_m().is_some_and(|d| d < cfg.camera.oos_distance_m);
        track = if out_of_view {
            tracking::coast(&track)
        } else {
            tracking::update(&track, &detection, &cfg.tracker)
        };
        if track.status == TrackStatus::Confirmed && result.track_confirm_frame.is_none() {
            result.track_confirm_frame = Some(frame);
        }
        if before == TrackStatus::Confirmed && track.status == TrackStatus::Empty {
            result.track_delete_frames.push(frame);
        }

        let tracked = tracking::is_tracked(&track);
        planner = plan(tracked, track.distance_m(), &ego, &planner_cfg, &planner);
        if let Some(traj) = result.trajectory.as_mut() {
            traj.push(TrajectoryPoint {
                t_s: frame as f64 * dt,
                x_m: ego.position_m,
                v_mps: ego.speed_mps,
                tracked,
            });
        }
        result.frames = frame + 1;
        if planner.mode == PlannerMode::Stopped {
            break;
        }

        let accel = pid.step(
            planner.target_speed_mps,
            ego.speed_mps,
            planner.target_accel_mps2,
            dt,
            limits,
        );
        let steer = stanley_step(
            -ego.heading_error_rad,
            -ego.lateral_offset_m,
            ego.speed_mps,
            cfg.stanley_gain,
            cfg.plant.max_steer_rad,
        );
        let prev = ego;
        ego = plant_step(&prev, accel, steer, dt, &cfg.plant);

        if prev.position_m < line_x && ego.position_m >= line_x {
            // Constant acceleration over the step gives the crossing speed.
            let v2 = prev.speed_mps.powi(2) + 2.0 * ego.accel_mps2 * (line_x - prev.position_m);
            let v_cross = v2.max(0.0).sqrt();
            result.final_speed_at_line_mps = Some(v_cross);
            result.violated = v_cross > crossing_threshold;
        }
        result.min_distance_to_line_m = result.min_distance_to_line_m.min(line_x - ego.position_m);

        let crossed = result.final_speed_at_line_mps.is_some();
        if ego.position_m > line_x + OVERRUN_LIMIT_M || (crossed && ego.speed_mps == 0.0) {
            break;
        }
    }
    result
}
