use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attack_plan::DEFAULT_D_MAX_THRESHOLD;
use crate::camera::{CameraModel, ObjectKind, ObjectSpec};
use crate::error::{Error, Result};
use crate::perception::DetectionProfile;
use crate::tracking::TrackerParams;
use crate::units::mph_to_mps;
use crate::vehicle::{brake_distance, PidGains, VehiclePlant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    /// Crossing the stop line above the violation speed.
    StopLineViolation,
    /// Reaching the object's position with any forward speed.
    PedestrianCollision,
}

/// Everything one trial needs. `profile` is the perception model under test.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub object: ObjectSpec,
    pub camera: CameraModel,
    pub plant: VehiclePlant,
    pub tracker: TrackerParams,
    pub profile: DetectionProfile,
    pub speed_limit_mps: f64,
    /// Position of the object along the road; the ego starts behind it.
    pub road_length_m: f64,
    /// Initial distance to the object is drawn uniformly from this band.
    pub init_band_m: (f64, f64),
    pub goal: Goal,
    pub trials: u32,
    pub base_seed: u64,
    pub latch_stop: bool,
    /// Stop line relative to the object (negative = before it).
    pub stop_line_offset_m: f64,
    /// Distance before the stop line at which the planner aims to stop.
    pub stop_buffer_m: f64,
    pub violation_speed_mps: f64,
    pub detection_noise_std_m: f64,
    pub pid: PidGains,
    pub stanley_gain: f64,
    pub max_time_s: f64,
    pub record_trajectory: bool,
}

impl ScenarioConfig {
    /// Stop-sign scenario with the default vehicle, camera and tracker.
    pub fn stop_sign(profile: DetectionProfile, speed_limit_mps: f64) -> Self {
        ScenarioFile::default().build(profile, Some(speed_limit_mps))
    }

    pub fn with_profile(&self, profile: DetectionProfile) -> Self {
        Self {
            profile,
            ..self.clone()
        }
    }

    pub fn with_speed(&self, speed_limit_mps: f64) -> Self {
        Self {
            speed_limit_mps,
            ..self.clone()
        }
    }

    /// Surfaces every inconsistency before any trial starts.
    pub fn validate(&self) -> Result<()> {
        self.object.validate()?;
        self.camera.validate()?;
        self.plant.validate()?;
        self.tracker.validate()?;
        if self.plant.oos_distance_m != self.camera.oos_distance_m {
            return Err(Error::config(format!(
                "plant oos distance {} disagrees with camera oos distance {}",
                self.plant.oos_distance_m, self.camera.oos_distance_m
            )));
        }
        if !(self.speed_limit_mps > 0.0 && self.speed_limit_mps.is_finite()) {
            return Err(Error::config("speed limit must be positive"));
        }
        let (lo, hi) = self.init_band_m;
        if !(lo >= 0.0 && lo <= hi && hi <= self.road_length_m) {
            return Err(Error::config(format!(
                "init band [{lo}, {hi}] must satisfy 0 <= lo <= hi <= road length {}",
                self.road_length_m
            )));
        }
        if self.road_length_m < self.profile.far_m() {
            return Err(Error::config(format!(
                "road length {} is shorter than the profile's far edge {}",
                self.road_length_m,
                self.profile.far_m()
            )));
        }
        if self.trials < 1 {
            return Err(Error::config("trials must be >= 1"));
        }
        if !(self.violation_speed_mps >= 0.0 && self.detection_noise_std_m >= 0.0 && self.stop_buffer_m >= 0.0) {
            return Err(Error::config("violation speed, detection noise and stop buffer must be non-negative"));
        }
        if !(self.max_time_s > 0.0 && self.stanley_gain >= 0.0) {
            return Err(Error::config("max_time_s must be positive and stanley_gain non-negative"));
        }
        // Even an object seen on the very first frame could not be stopped for.
        let d_min = brake_distance(self.speed_limit_mps, self.plant.max_decel_mps2)?;
        if d_min >= lo {
            return Err(Error::Infeasible(format!(
                "brake distance {d_min:.2} m at {:.2} m/s exceeds the nearest start distance {lo} m",
                self.speed_limit_mps
            )));
        }
        Ok(())
    }
}

/// Flat key/value scenario file (TOML). Every key is optional; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub goal: Goal,
    pub object_kind: ObjectKind,
    pub object_size_m: f64,
    pub object_lateral_offset_m: f64,
    pub focal_length_px: f64,
    pub capture_rate_hz: f64,
    pub oos_distance_m: f64,
    pub max_decel_mps2: f64,
    pub comfort_decel_mps2: f64,
    pub max_accel_mps2: f64,
    pub hits_to_confirm: u32,
    pub misses_to_delete: u32,
    pub process_noise_std: f64,
    pub measurement_noise_std_m: f64,
    pub gate_sigma: f64,
    pub speed_limit_mph: f64,
    pub road_length_m: f64,
    pub init_band_lo_m: f64,
    pub init_band_hi_m: f64,
    pub trials: u32,
    pub base_seed: u64,
    pub latch_stop: bool,
    pub stop_line_offset_m: f64,
    pub stop_buffer_m: f64,
    pub violation_speed_mps: f64,
    pub detection_noise_std_m: f64,
    pub d_max_threshold: f64,
    pub pid_kp: f64,
    pub pid_ki: f64,
    pub pid_kd: f64,
    pub pid_integral_limit: f64,
    pub stanley_gain: f64,
    pub max_time_s: f64,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        let cam = CameraModel::default();
        let plant = VehiclePlant::default();
        let tracker = TrackerParams::default();
        let pid = PidGains::default();
        let stop = ObjectSpec::stop_sign();
        Self {
            name: "stop_sign".into(),
            goal: Goal::StopLineViolation,
            object_kind: stop.kind,
            object_size_m: stop.physical_size_m,
            object_lateral_offset_m: stop.lateral_offset_m,
            focal_length_px: cam.focal_length_px,
            capture_rate_hz: cam.capture_rate_hz,
            oos_distance_m: cam.oos_distance_m,
            max_decel_mps2: plant.max_decel_mps2,
            comfort_decel_mps2: plant.comfort_decel_mps2,
            max_accel_mps2: plant.max_accel_mps2,
            hits_to_confirm: tracker.hits_to_confirm,
            misses_to_delete: tracker.misses_to_delete,
            process_noise_std: tracker.process_noise_std,
            measurement_noise_std_m: tracker.measurement_noise_std_m,
            gate_sigma: tracker.gate_sigma,
            speed_limit_mph: 25.0,
            road_length_m: 55.0,
            init_band_lo_m: 46.0,
            init_band_hi_m: 55.0,
            trials: 100,
            base_seed: 0,
            latch_stop: false,
            stop_line_offset_m: 0.0,
            stop_buffer_m: 1.0,
            violation_speed_mps: 0.5,
            detection_noise_std_m: 0.5,
            d_max_threshold: DEFAULT_D_MAX_THRESHOLD,
            pid_kp: pid.kp,
            pid_ki: pid.ki,
            pid_kd: pid.kd,
            pid_integral_limit: pid.integral_limit,
            stanley_gain: 0.5,
            max_time_s: 60.0,
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::parse(line, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("scenario file serializes")
    }

    /// Builds a run configuration. `speed_limit_mps` overrides the file's
    /// speed when given.
    pub fn build(&self, profile: DetectionProfile, speed_limit_mps: Option<f64>) -> ScenarioConfig {
        let plant = VehiclePlant {
            max_decel_mps2: self.max_decel_mps2,
            comfort_decel_mps2: self.comfort_decel_mps2,
            max_accel_mps2: self.max_accel_mps2,
            oos_distance_m: self.oos_distance_m,
            ..VehiclePlant::default()
        };
        ScenarioConfig {
            name: self.name.clone(),
            object: ObjectSpec {
                kind: self.object_kind,
                physical_size_m: self.object_size_m,
                lateral_offset_m: self.object_lateral_offset_m,
            },
            camera: CameraModel {
                focal_length_px: self.focal_length_px,
                capture_rate_hz: self.capture_rate_hz,
                oos_distance_m: self.oos_distance_m,
            },
            plant,
            tracker: TrackerParams {
                hits_to_confirm: self.hits_to_confirm,
                misses_to_delete: self.misses_to_delete,
                process_noise_std: self.process_noise_std,
                measurement_noise_std_m: self.measurement_noise_std_m,
                gate_sigma: self.gate_sigma,
            },
            profile,
            speed_limit_mps: speed_limit_mps.unwrap_or_else(|| mph_to_mps(self.speed_limit_mph)),
            road_length_m: self.road_length_m,
            init_band_m: (self.init_band_lo_m, self.init_band_hi_m),
            goal: self.goal,
            trials: self.trials,
            base_seed: self.base_seed,
            latch_stop: self.latch_stop,
            stop_line_offset_m: self.stop_line_offset_m,
            stop_buffer_m: self.stop_buffer_m,
            violation_speed_mps: self.violation_speed_mps,
            detection_noise_std_m: self.detection_noise_std_m,
            pid: PidGains {
                kp: self.pid_kp,
                ki: self.pid_ki,
                kd: self.pid_kd,
                integral_limit: self.pid_integral_limit,
            },
            stanley_gain: self.stanley_gain,
            max_time_s: self.max_time_s,
            record_trajectory: false,
        }
    }
}
