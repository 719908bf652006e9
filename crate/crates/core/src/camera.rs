//! Pinhole geometry between physical distance and on-image object size.
//!
//! For an object of physical size `L` at distance `D` seen through a lens with
//! focal length `f` (in pixels), similar triangles give `L / D = s / f`. Under
//! uniform motion from an initial distance `D0` at speed `v`, sampled at `eta`
//! frames per second, the number of frames whose on-image size is at most `s`
//! is `F(s) = (D0 - L f / s) * eta / v`, with density `F'(s) = eta L f / (v s^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    StopSign,
    Pedestrian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub kind: ObjectKind,
    /// Physical size in meters.
    pub physical_size_m: f64,
    /// Lateral offset from the lane center in meters. Does not enter the
    /// size computation (small-angle approximation).
    pub lateral_offset_m: f64,
}

impl ObjectSpec {
    pub fn new(kind: ObjectKind, physical_size_m: f64, lateral_offset_m: f64) -> Result<Self> {
        let obj = Self {
            kind,
            physical_size_m,
            lateral_offset_m,
        };
        obj.validate()?;
        Ok(obj)
    }

    pub fn stop_sign() -> Self {
        Self {
            kind: ObjectKind::StopSign,
            physical_size_m: 1.5,
            lateral_offset_m: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.physical_size_m > 0.0 && self.physical_size_m.is_finite()) {
            return Err(Error::config(format!(
                "object size must be positive, got {}",
                self.physical_size_m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Focal length expressed in pixels.
    pub focal_length_px: f64,
    /// Frames per second.
    pub capture_rate_hz: f64,
    /// Distance below which the object has left the image.
    pub oos_distance_m: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            focal_length_px: 1100.0,
            capture_rate_hz: 20.0,
            oos_distance_m: 4.0,
        }
    }
}

impl CameraModel {
    pub fn new(focal_length_px: f64, capture_rate_hz: f64, oos_distance_m: f64) -> Result<Self> {
        let cam = Self {
            focal_length_px,
            capture_rate_hz,
            oos_distance_m,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal_length_px > 0.0 && self.focal_length_px.is_finite()) {
            return Err(Error::config("focal_length_px must be positive"));
        }
        if !(self.capture_rate_hz > 0.0 && self.capture_rate_hz.is_finite()) {
            return Err(Error::config("capture_rate_hz must be positive"));
        }
        if !(self.oos_distance_m >= 0.0) {
            return Err(Error::config("oos_distance_m must be non-negative"));
        }
        Ok(())
    }

    /// Frame period in seconds.
    pub fn frame_dt(&self) -> f64 {
        1.0 / self.capture_rate_hz
    }
}

/// Focal length in pixels from a lens focal length and the sensor pixel
/// pitch, both in millimeters.
pub fn focal_length_px(focal_length_mm: f64, pixel_pitch_mm: f64) -> Result<f64> {
    if !(focal_length_mm > 0.0 && pixel_pitch_mm > 0.0) {
        return Err(Error::domain(
            "focal length and pixel pitch must both be positive",
        ));
    }
    Ok(focal_length_mm / pixel_pitch_mm)
}

pub fn size_at_distance(obj: &ObjectSpec, cam: &CameraModel, distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::domain(format!(
            "distance must be positive, got {distance_m}"
        )));
    }
    Ok(obj.physical_size_m * cam.focal_length_px / distance_m)
}

pub fn distance_at_size(obj: &ObjectSpec, cam: &CameraModel, pixel_size: f64) -> Result<f64> {
    if !(pixel_size > 0.0) {
        return Err(Error::domain(format!(
            "pixel size must be positive, got {pixel_size}"
        )));
    }
    Ok(obj.physical_size_m * cam.focal_length_px / pixel_size)
}

/// Frames accumulated, starting at `road_length_m`, until the object's
/// on-image size reaches `pixel_size`. This is the CDF of per-frame size.
pub fn frame_count_cdf(
    obj: &ObjectSpec,
    cam: &CameraModel,
    road_length_m: f64,
    speed_mps: f64,
    pixel_size: f64,
) -> Result<f64> {
    if !(speed_mps > 0.0) {
        return Err(Error::domain("speed must be positive"));
    }
    let s0 = size_at_distance(obj, cam, road_length_m)?;
    // Tolerate round-off when the caller passes exactly s(D0).
    if !(pixel_size >= s0 * (1.0 - 1e-12)) {
        return Err(Error::domain(format!(
            "pixel size {pixel_size} is below the size {s0} at the initial distance"
        )));
    }
    let distance = distance_at_size(obj, cam, pixel_size)?;
    Ok(((road_length_m - distance) * cam.capture_rate_hz / speed_mps).max(0.0))
}

/// Frames per pixel of on-image size: the derivative of [`frame_count_cdf`].
pub fn size_pdf(obj: &ObjectSpec, cam: &CameraModel, speed_mps: f64, pixel_size: f64) -> Result<f64> {
    if !(speed_mps > 0.0) {
        return Err(Error::domain("speed must be positive"));
    }
    if !(pixel_size > 0.0) {
        return Err(Error::domain("pixel size must be positive"));
    }
    Ok(cam.capture_rate_hz * obj.physical_size_m * cam.focal_length_px
        / (speed_mps * pixel_size * pixel_size))
}
