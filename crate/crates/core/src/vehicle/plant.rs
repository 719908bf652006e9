use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical limits of the ego vehicle. Decelerations are magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehiclePlant {
    pub max_decel_mps2: f64,
    pub comfort_decel_mps2: f64,
    pub max_accel_mps2: f64,
    /// Must agree with the camera's out-of-sight distance.
    pub oos_distance_m: f64,
    pub wheelbase_m: f64,
    pub max_steer_rad: f64,
}

impl Default for VehiclePlant {
    fn default() -> Self {
        Self {
            max_decel_mps2: 6.0,
            comfort_decel_mps2: 3.4,
            max_accel_mps2: 3.0,
            oos_distance_m: 4.0,
            wheelbase_m: 2.8,
            max_steer_rad: 30f64.to_radians(),
        }
    }
}

impl VehiclePlant {
    pub fn validate(&self) -> Result<()> {
        if !(self.comfort_decel_mps2 > 0.0 && self.comfort_decel_mps2 <= self.max_decel_mps2) {
            return Err(Error::config(format!(
                "need 0 < comfort_decel ({}) <= max_decel ({})",
                self.comfort_decel_mps2, self.max_decel_mps2
            )));
        }
        if !(self.max_accel_mps2 > 0.0) {
            return Err(Error::config("max_accel_mps2 must be positive"));
        }
        if !(self.wheelbase_m > 0.0 && self.max_steer_rad > 0.0) {
            return Err(Error::config("wheelbase and steering limit must be positive"));
        }
        if !(self.oos_distance_m >= 0.0) {
            return Err(Error::config("oos_distance_m must be non-negative"));
        }
        Ok(())
    }

    /// Copy with a different maximum deceleration; the comfort value is
    /// capped so it never exceeds the new maximum.
    pub fn with_max_decel(&self, max_decel_mps2: f64) -> Self {
        Self {
            max_decel_mps2,
            comfort_decel_mps2: self.comfort_decel_mps2.min(max_decel_mps2),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EgoState {
    /// Along-road position.
    pub position_m: f64,
    pub speed_mps: f64,
    /// Acceleration applied over the last step.
    pub accel_mps2: f64,
    pub lateral_offset_m: f64,
    /// Heading relative to the (straight) lane direction.
    pub heading_error_rad: f64,
}

/// Distance to stop from `speed_mps` at constant deceleration `decel_mps2`.
pub fn brake_distance(speed_mps: f64, decel_mps2: f64) -> Result<f64> {
    if !(decel_mps2 > 0.0) {
        return Err(Error::domain(format!(
            "deceleration must be positive, got {decel_mps2}"
        )));
    }
    if !(speed_mps >= 0.0) {
        return Err(Error::domain(format!("speed must be non-negative, got {speed_mps}")));
    }
    Ok(speed_mps * speed_mps / (2.0 * decel_mps2))
}

/// Advances the plant by `dt` under a constant acceleration command.
///
/// The command is clamped to the plant limits and integrated exactly over
/// the step; a vehicle braking to rest inside the step stops there and never
/// reverses.
pub fn plant_step(ego: &EgoState, accel_command: f64, steer_rad: f64, dt: f64, plant: &VehiclePlant) -> EgoState {
    debug_assert!(dt > 0.0);
    let a = accel_command.clamp(-plant.max_decel_mps2, plant.max_accel_mps2);
    let v0 = ego.speed_mps.max(0.0);

    let (dx, v1, applied) = if a < 0.0 && v0 + a * dt <= 0.0 {
        // Comes to rest within this step.
        (v0 * v0 / (-2.0 * a), 0.0, if v0 > 0.0 { a } else { 0.0 })
    } else {
        (v0 * dt + 0.5 * a * dt * dt, v0 + a * dt, a)
    };

    let v_avg = dx / dt;
    let steer = steer_rad.clamp(-plant.max_steer_rad, plant.max_steer_rad);
    let heading = ego.heading_error_rad + v_avg / plant.wheelbase_m * steer.tan() * dt;
    let lateral = ego.lateral_offset_m + v_avg * ego.heading_error_rad.sin() * dt;

    EgoState {
        position_m: ego.position_m + dx,
        speed_mps: v1,
        accel_mps2: applied,
        lateral_offset_m: lateral,
        heading_error_rad: heading,
    }
}
