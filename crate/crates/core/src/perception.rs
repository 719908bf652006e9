//! Per-range detection-rate profiles and stochastic detection injection.
//!
//! A profile lists half-open distance ranges `[lo, hi)` with the probability
//! that the detector reports the object on a frame taken inside that range.
//! During simulation each frame draws exactly one uniform `u` and keeps the
//! ground-truth detection iff `u < rate`; with a shared random stream a
//! pointwise-lower profile therefore detects on a subset of frames.
//!
//! # File format
//!
//! Comma-separated `lo_m,hi_m,rate` rows. Lines starting with `#` are
//! comments, except two recognised metadata comments:
//!
//! ```text
//! # label: FTE-Y5 +S1+S2
//! # column: asr
//! 4,5,0.165
//! 5,10,0
//! ```
//!
//! `column` is `detection` (default) or `asr`; ASR rows are converted to
//! detection rates as `1 - asr`.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::error::{Error, Result};
use crate::stats::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeRate {
    pub lo_m: f64,
    pub hi_m: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionProfile {
    pub label: String,
    ranges: Vec<RangeRate>,
}

/// What the third column of a profile file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateColumn {
    #[default]
    Detection,
    AttackSuccess,
}

impl DetectionProfile {
    /// Validates ordering, contiguity and rate bounds. Row numbers in errors
    /// are 1-based positions in `ranges`.
    pub fn new(label: impl Into<String>, ranges: Vec<RangeRate>) -> Result<Self> {
        let rows: Vec<(usize, RangeRate)> = ranges.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect();
        Self::from_numbered(label.into(), rows)
    }

    fn from_numbered(label: String, rows: Vec<(usize, RangeRate)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::parse(0, "no ranges"));
        }
        for (i, &(line, r)) in rows.iter().enumerate() {
            if !(r.lo_m.is_finite() && r.hi_m.is_finite() && r.lo_m >= 0.0) {
                return Err(Error::parse(line, "range bounds must be finite and non-negative"));
            }
            if !(r.lo_m < r.hi_m) {
                return Err(Error::parse(
                    line,
                    format!("range [{}, {}) is empty or reversed", r.lo_m, r.hi_m),
                ));
            }
            if !(0.0..=1.0).contains(&r.rate) {
                return Err(Error::parse(line, format!("rate {} outside [0, 1]", r.rate)));
            }
            if i > 0 {
                let prev = rows[i - 1].1;
                if r.lo_m < prev.hi_m {
                    return Err(Error::parse(
                        line,
                        format!(
                            "range [{}, {}) overlaps previous range [{}, {})",
                            r.lo_m, r.hi_m, prev.lo_m, prev.hi_m
                        ),
                    ));
                }
                if r.lo_m > prev.hi_m {
                    return Err(Error::parse(
                        line,
                        format!("gap between {} and {}", prev.hi_m, r.lo_m),
                    ));
                }
            }
        }
        Ok(Self {
            label,
            ranges: rows.into_iter().map(|(_, r)| r).collect(),
        })
    }

    pub fn ranges(&self) -> &[RangeRate] {
        &self.ranges
    }

    /// Same ranges with every rate set to `rate`.
    pub fn uniform(label: impl Into<String>, lo_m: f64, hi_m: f64, step_m: f64, rate: f64) -> Result<Self> {
        if !(step_m > 0.0) {
            return Err(Error::domain("step must be positive"));
        }
        let mut ranges = Vec::new();
        let mut lo = lo_m;
        while lo < hi_m - 1e-12 {
            let hi = (lo + step_m).min(hi_m);
            ranges.push(RangeRate { lo_m: lo, hi_m: hi, rate });
            lo = hi;
        }
        Self::new(label, ranges)
    }

    pub fn near_m(&self) -> f64 {
        self.ranges[0].lo_m
    }

    pub fn far_m(&self) -> f64 {
        self.ranges[self.ranges.len() - 1].hi_m
    }

    /// Applies `f` to every rate, clamping into `[0, 1]`.
    pub fn map_rates(&self, label: impl Into<String>, f: impl Fn(&RangeRate) -> f64) -> Self {
        Self {
            label: label.into(),
            ranges: self
                .ranges
                .iter()
                .map(|r| RangeRate {
                    rate: f(r).clamp(0.0, 1.0),
                    ..*r
                })
                .collect(),
        }
    }

    /// True when every rate of `self` is `<=` the rate `other` assigns at
    /// the same range midpoint.
    pub fn dominated_by(&self, other: &DetectionProfile) -> bool {
        self.ranges
            .iter()
            .all(|r| r.rate <= rate_at(other, 0.5 * (r.lo_m + r.hi_m)))
    }

    /// Serializes in the profile file format (detection column).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# label: {}", self.label);
        let _ = writeln!(out, "# column: detection");
        for r in &self.ranges {
            let _ = writeln!(out, "{},{},{}", r.lo_m, r.hi_m, r.rate);
        }
        out
    }
}

/// Parses a profile from text in the profile file format. `default_label`
/// is used when the stream carries no `# label:` comment.
pub fn load_profile<R: BufRead>(source: R, default_label: &str) -> Result<DetectionProfile> {
    let mut label = default_label.to_string();
    let mut column = RateColumn::Detection;
    let mut rows = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once(':') {
                match key.trim() {
                    "label" => label = value.trim().to_string(),
                    "column" => {
                        column = match value.trim() {
                            "detection" => RateColumn::Detection,
                            "asr" => RateColumn::AttackSuccess,
                            other => {
                                return Err(Error::parse(
                                    line_no,
                                    format!("unknown rate column '{other}' (expected detection or asr)"),
                                ))
                            }
                        }
                    }
                    _ => {}
                }
            }
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                line_no,
                format!("expected 3 fields lo_m,hi_m,rate, got {}", fields.len()),
            ));
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| Error::parse(line_no, format!("{name} '{}' is not a number", fields[i])))
        };
        let (lo_m, hi_m, raw) = (num(0, "lo_m")?, num(1, "hi_m")?, num(2, "rate")?);
        if !(0.0..=1.0).contains(&raw) {
            return Err(Error::parse(line_no, format!("rate {raw} outside [0, 1]")));
        }
        let rate = match column {
            RateColumn::Detection => raw,
            RateColumn::AttackSuccess => 1.0 - raw,
        };
        rows.push((line_no, RangeRate { lo_m, hi_m, rate }));
    }
    DetectionProfile::from_numbered(label, rows)
}

pub fn load_profile_file(path: &Path) -> Result<DetectionProfile> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    load_profile(std::io::BufReader::new(file), &stem)
}

/// Detection rate at `distance_m`; zero outside every range.
pub fn rate_at(profile: &DetectionProfile, distance_m: f64) -> f64 {
    profile
        .ranges
        .iter()
        .find(|r| distance_m >= r.lo_m && distance_m < r.hi_m)
        .map_or(0.0, |r| r.rate)
}

/// Converts per-range attack success rates into a detection profile.
pub fn asr_to_profile(label: impl Into<String>, asr_rows: &[(f64, f64, f64)]) -> Result<DetectionProfile> {
    let ranges = asr_rows
        .iter()
        .enumerate()
        .map(|(i, &(lo_m, hi_m, asr))| {
            if !(0.0..=1.0).contains(&asr) {
                return Err(Error::parse(i + 1, format!("attack success rate {asr} outside [0, 1]")));
            }
            Ok(RangeRate {
                lo_m,
                hi_m,
                rate: 1.0 - asr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DetectionProfile::new(label, ranges)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub detected: bool,
    /// Present only when `detected`.
    pub measured_distance_m: Option<f64>,
    pub frame_index: u64,
}

impl Detection {
    pub fn miss(frame_index: u64) -> Self {
        Self {
            detected: false,
            measured_distance_m: None,
            frame_index,
        }
    }

    pub fn hit(frame_index: u64, measured_distance_m: f64) -> Self {
        Self {
            detected: true,
            measured_distance_m: Some(measured_distance_m),
            frame_index,
        }
    }
}

/// Smallest distance a measurement can report.
const MIN_MEASURED_M: f64 = 1e-3;

/// Draws one frame's detection. Always consumes one uniform and one normal
/// from `rng`, whatever the outcome, so that runs with different profiles
/// stay aligned on the same random stream.
pub fn sample_detection(
    profile: &DetectionProfile,
    true_distance_m: f64,
    cam: &CameraModel,
    rng: &mut RngStream,
    noise_std_m: f64,
    frame_index: u64,
) -> Detection {
    let u = rng.uniform();
    let z = rng.standard_normal();
    let visible = true_distance_m >= cam.oos_distance_m;
    if visible && u < rate_at(profile, true_distance_m) {
        let measured = (true_distance_m + noise_std_m * z).max(MIN_MEASURED_M);
        Detection::hit(frame_index, measured)
    } else {
        Detection::miss(frame_index)
    }
}
