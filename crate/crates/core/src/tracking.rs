//! Single-object longitudinal tracker with an (H, R) lifecycle.
//!
//! The filter state is `[distance, closing_rate]`, where the closing rate is
//! how fast the distance shrinks. The ego speed is a known input: between
//! frames the closing rate shifts by the change in ego speed, so a static
//! object keeps a closing rate equal to the ego speed.
//!
//! Lifecycle: a track is created on the first detection (tentative), becomes
//! confirmed after `hits_to_confirm` consecutive in-gate detections, and is
//! deleted after `misses_to_delete` consecutive misses. Only confirmed tracks
//! count as tracked.

use nalgebra::{Matrix2, RowVector2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perception::Detection;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerParams {
    /// H: consecutive detections needed to confirm.
    pub hits_to_confirm: u32,
    /// R: consecutive misses that delete the track.
    pub misses_to_delete: u32,
    /// Standard deviation of the white-noise acceleration, m/s^2.
    pub process_noise_std: f64,
    pub measurement_noise_std_m: f64,
    /// Mahalanobis gate on the distance innovation.
    pub gate_sigma: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            hits_to_confirm: 4,
            misses_to_delete: 6,
            process_noise_std: 0.5,
            measurement_noise_std_m: 0.5,
            gate_sigma: 3.0,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<()> {
        if self.hits_to_confirm < 1 || self.misses_to_delete < 1 {
            return Err(Error::config("hits_to_confirm and misses_to_delete must be >= 1"));
        }
        if !(self.process_noise_std > 0.0 && self.measurement_noise_std_m > 0.0 && self.gate_sigma > 0.0) {
            return Err(Error::config("tracker noise parameters and gate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Empty,
    Tentative,
    Confirmed,
}

/// Prior standard deviation of the closing rate for a new track.
const INIT_RATE_STD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackState {
    pub status: TrackStatus,
    pub mean: Vector2<f64>,
    pub covariance: Matrix2<f64>,
    pub consecutive_hits: u32,
    pub consecutive_misses: u32,
    /// Ego speed seen at the last predict; anchors the closing-rate shift.
    pub ego_speed_mps: f64,
}

impl Default for TrackState {
    fn default() -> Self {
        Self::empty(0.0)
    }
}

impl TrackState {
    pub fn empty(ego_speed_mps: f64) -> Self {
        Self {
            status: TrackStatus::Empty,
            mean: Vector2::zeros(),
            covariance: Matrix2::identity(),
            consecutive_hits: 0,
            consecutive_misses: 0,
            ego_speed_mps,
        }
    }

    pub fn distance_m(&self) -> Option<f64> {
        (self.status != TrackStatus::Empty).then_some(self.mean[0])
    }

    pub fn closing_rate_mps(&self) -> Option<f64> {
        (self.status != TrackStatus::Empty).then_some(self.mean[1])
    }
}

/// Constant-velocity propagation over `dt` seconds.
pub fn predict(state: &TrackState, dt: f64, ego_speed_mps: f64, params: &TrackerParams) -> TrackState {
    debug_assert!(dt > 0.0);
    let mut next = *state;
    next.ego_speed_mps = ego_speed_mps;
    if state.status == TrackStatus::Empty {
        return next;
    }
    let closing = state.mean[1] + (ego_speed_mps - state.ego_speed_mps);
    next.mean = Vector2::new(state.mean[0] - closing * dt, closing);

    let f = Matrix2::new(1.0, -dt, 0.0, 1.0);
    let g = Vector2::new(-0.5 * dt * dt, dt);
    let q = g * g.transpose() * params.process_noise_std.powi(2);
    next.covariance = symmetrize(f * state.covariance * f.transpose() + q);
    next
}

/// Folds one frame's detection into a predicted state.
pub fn update(state: &TrackState, detection: &Detection, params: &TrackerParams) -> TrackState {
    let measurement = detection.measured_distance_m.filter(|_| detection.detected);
    let mut next = *state;
    match (state.status, measurement) {
        (TrackStatus::Empty, Some(z)) => {
            let r = params.measurement_noise_std_m.powi(2);
            next.mean = Vector2::new(z, state.ego_speed_mps);
            next.covariance = Matrix2::new(r, 0.0, 0.0, INIT_RATE_STD * INIT_RATE_STD);
            next.consecutive_hits = 1;
            next.consecutive_misses = 0;
            next.status = promote(1, params);
        }
        (TrackStatus::Empty, None) => {}
        (_, Some(z)) if in_gate(state, z, params) => {
            kalman_correct(&mut next, z, params);
            next.consecutive_hits = state.consecutive_hits + 1;
            next.consecutive_misses = 0;
            if state.status == TrackStatus::Tentative {
                next.status = promote(next.consecutive_hits, params);
            }
        }
        // A miss, or a measurement that fell outside the gate.
        (_, _) => {
            next.consecutive_hits = 0;
            next.consecutive_misses = state.consecutive_misses + 1;
            if next.consecutive_misses >= params.misses_to_delete {
                next = TrackState::empty(state.ego_speed_mps);
            }
        }
    }
    next
}

/// Frame on which the object cannot be observed (it is predicted to be out
/// of the image). The track is carried by prediction alone and its lifecycle
/// counters are left untouched.
pub fn coast(state: &TrackState) -> TrackState {
    *state
}

pub fn is_tracked(state: &TrackState) -> bool {
    state.status == TrackStatus::Confirmed
}

/// Squared Mahalanobis distance of a distance measurement.
pub fn innovation_nis(state: &TrackState, z: f64, params: &TrackerParams) -> f64 {
    let s = state.covariance[(0, 0)] + params.measurement_noise_std_m.powi(2);
    let y = z - state.mean[0];
    y * y / s
}

fn in_gate(state: &TrackState, z: f64, params: &TrackerParams) -> bool {
    innovation_nis(state, z, params) <= params.gate_sigma * params.gate_sigma
}

fn promote(hits: u32, params: &TrackerParams) -> TrackStatus {
    if hits >= params.hits_to_confirm {
        TrackStatus::Confirmed
    } else {
        TrackStatus::Tentative
    }
}

fn kalman_correct(state: &mut TrackState, z: f64, params: &TrackerParams) {
    let h = RowVector2::new(1.0, 0.0);
    let r = params.measurement_noise_std_m.powi(2);
    let p = state.covariance;
    let s = (h * p * h.transpose())[(0, 0)] + r;
    let k = p * h.transpose() / s;
    let y = z - state.mean[0];
    state.mean += k * y;
    // Joseph form keeps the covariance symmetric positive definite.
    let i_kh = Matrix2::identity() - k * h;
    state.covariance = symmetrize(i_kh * p * i_kh.transpose() + k * k.transpose() * r);
}

fn symmetrize(m: Matrix2<f64>) -> Matrix2<f64> {
    (m + m.transpose()) * 0.5
}
