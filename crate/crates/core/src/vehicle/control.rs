use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the magnitude of the integrated error.
    pub integral_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 1.5,
            ki: 0.2,
            kd: 0.0,
            integral_limit: 2.0,
        }
    }
}

/// Output bounds of the longitudinal controller (magnitudes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelLimits {
    pub max_decel_mps2: f64,
    pub max_accel_mps2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidMemory {
    pub integral: f64,
    pub prev_error: Option<f64>,
}

/// Speed-tracking PID with an acceleration feedforward term, in the style of
/// production longitudinal controllers: `a = ff + kp e + ki I + kd de/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidController {
    pub gains: PidGains,
    pub memory: PidMemory,
}

impl PidController {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            memory: PidMemory::default(),
        }
    }

    pub fn reset(&mut self) {
        self.memory = PidMemory::default();
    }

    pub fn step(&mut self, target_mps: f64, current_mps: f64, feedforward_mps2: f64, dt: f64, limits: AccelLimits) -> f64 {
        debug_assert!(dt > 0.0);
        let g = &self.gains;
        let error = target_mps - current_mps;
        let derivative = self.memory.prev_error.map_or(0.0, |prev| (error - prev) / dt);
        self.memory.prev_error = Some(error);

        let lo = -limits.max_decel_mps2;
        let hi = limits.max_accel_mps2;
        let unclamped_without_i = feedforward_mps2 + g.kp * error + g.kd * derivative;

        // Conditional integration: hold the integrator while the output is
        // saturated in the direction the error would push it.
        let candidate = (self.memory.integral + error * dt).clamp(-g.integral_limit, g.integral_limit);
        let trial = unclamped_without_i + g.ki * candidate;
        let saturating = (trial > hi && error > 0.0) || (trial < lo && error < 0.0);
        if !saturating {
            self.memory.integral = candidate;
        }

        (unclamped_without_i + g.ki * self.memory.integral).clamp(lo, hi)
    }
}

/// Below this speed the Stanley cross-track term uses this floor instead.
pub const MIN_STANLEY_SPEED_MPS: f64 = 0.1;

/// Stanley steering law `delta = theta_e + atan(k e / v)`, clamped to
/// `[-max_steer, max_steer]`. Errors are path minus vehicle, so a positive
/// output steers back toward the path.
pub fn stanley_step(heading_error_rad: f64, cross_track_error_m: f64, speed_mps: f64, gain_k: f64, max_steer_rad: f64) -> f64 {
    let v = speed_mps.max(MIN_STANLEY_SPEED_MPS);
    let delta = heading_error_rad + (gain_k * cross_track_error_m / v).atan();
    delta.clamp(-max_steer_rad, max_steer_rad)
}
