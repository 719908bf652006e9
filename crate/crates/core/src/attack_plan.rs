//! Attack-side planning: the distance window that matters to the vehicle and
//! the pixel-size sampling plan exported to patch optimizers.
//!
//! The window runs from the minimum brake distance (inside it the vehicle
//! cannot stop even at full braking) out to the farthest distance where the
//! benign object is still detected. Sizes inside the window are weighted by
//! how often each size actually appears on camera, which goes as `1/s^2`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::camera::{size_at_distance, CameraModel, ObjectSpec};
use crate::error::{Error, Result};
use crate::perception::DetectionProfile;
use crate::stats::RngStream;

pub use crate::vehicle::{brake_distance, VehiclePlant};

/// Benign detection rate below which a range counts as "not seen".
pub const DEFAULT_D_MAX_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemCriticalRange {
    pub d_min_m: f64,
    pub d_max_m: f64,
    /// Size at `d_max_m`.
    pub s_min_px: f64,
    /// Size at `d_min_m`.
    pub s_max_px: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    /// `(pixel_size, probability)`, sizes increasing.
    pub entries: Vec<(f64, f64)>,
    pub critical_range: SystemCriticalRange,
    /// Free-form key/value metadata written into the file header.
    pub provenance: BTreeMap<String, String>,
}

/// Far edge of the farthest range whose benign rate is at least `threshold`.
pub fn compute_d_max(benign: &DetectionProfile, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::domain(format!("threshold must be in (0, 1], got {threshold}")));
    }
    benign
        .ranges()
        .iter()
        .rev()
        .find(|r| r.rate >= threshold)
        .map(|r| r.hi_m)
        .ok_or_else(|| {
            Error::config(format!(
                "profile '{}' has no range with detection rate >= {threshold}",
                benign.label
            ))
        })
}

/// Critical range at the default d_max threshold.
pub fn compute_critical_range(
    plant: &VehiclePlant,
    speed_mps: f64,
    benign: &DetectionProfile,
    obj: &ObjectSpec,
    cam: &CameraModel,
) -> Result<SystemCriticalRange> {
    compute_critical_range_with_threshold(plant, speed_mps, benign, obj, cam, DEFAULT_D_MAX_THRESHOLD)
}

pub fn compute_critical_range_with_threshold(
    plant: &VehiclePlant,
    speed_mps: f64,
    benign: &DetectionProfile,
    obj: &ObjectSpec,
    cam: &CameraModel,
    threshold: f64,
) -> Result<SystemCriticalRange> {
    let d_min = brake_distance(speed_mps, plant.max_decel_mps2)?;
    let d_max = compute_d_max(benign, threshold)?;
    if d_min >= d_max {
        return Err(Error::Infeasible(format!(
            "brake distance {d_min:.2} m at this speed is not inside the benign detection range ({d_max:.2} m)"
        )));
    }
    if d_min <= 0.0 {
        return Err(Error::domain("speed must be positive"));
    }
    Ok(SystemCriticalRange {
        d_min_m: d_min,
        d_max_m: d_max,
        s_min_px: size_at_distance(obj, cam, d_max)?,
        s_max_px: size_at_distance(obj, cam, d_min)?,
    })
}

/// Inverse-square weights `p_i = s_i^-2 / sum_k s_k^-2`.
pub fn s1_weights(pixel_sizes: &[f64]) -> Result<Vec<f64>> {
    if pixel_sizes.is_empty() {
        return Err(Error::domain("no pixel sizes"));
    }
    if let Some(bad) = pixel_sizes.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::domain(format!("pixel sizes must be positive, got {bad}")));
    }
    if pixel_sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("pixel sizes must be strictly increasing"));
    }
    let raw: Vec<f64> = pixel_sizes.iter().map(|s| 1.0 / (s * s)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// `n_sizes` sizes evenly spaced over the range, inverse-square weighted.
pub fn build_sampling_plan(range: &SystemCriticalRange, n_sizes: usize) -> Result<SamplingPlan> {
    if n_sizes == 0 {
        return Err(Error::domain("n_sizes must be at least 1"));
    }
    let (lo, hi) = (range.s_min_px, range.s_max_px);
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::domain(format!("bad pixel range [{lo}, {hi}]")));
    }
    let sizes: Vec<f64> = if n_sizes == 1 || hi == lo {
        vec![lo]
    } else {
        let step = (hi - lo) / (n_sizes - 1) as f64;
        (0..n_sizes)
            .map(|i| if i == n_sizes - 1 { hi } else { lo + step * i as f64 })
            .collect()
    };
    let weights = s1_weights(&sizes)?;
    Ok(SamplingPlan {
        entries: sizes.into_iter().zip(weights).collect(),
        critical_range: *range,
        provenance: BTreeMap::new(),
    })
}

impl SamplingPlan {
    pub fn with_provenance(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.provenance.insert(key.into(), value.to_string());
        self
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.1).collect()
    }

    /// Draws one pixel size by inverting the cumulative weights.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let u = rng.uniform();
        let mut acc = 0.0;
        for &(s, p) in &self.entries {
            acc += p;
            if u < acc {
                return s;
            }
        }
        self.entries.last().map(|e| e.0).unwrap_or(f64::NAN)
    }

    /// Header of `# key: value` lines, then one `pixel_size,probability`
    /// row per entry. Numbers use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let r = &self.critical_range;
        let mut out = String::new();
        for (k, v) in &self.provenance {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "# d_min_m: {}", r.d_min_m);
        let _ = writeln!(out, "# d_max_m: {}", r.d_max_m);
        let _ = writeln!(out, "# s_min_px: {}", r.s_min_px);
        let _ = writeln!(out, "# s_max_px: {}", r.s_max_px);
        out.push_str("pixel_size,probability\n");
        for (s, p) in &self.entries {
            let _ = writeln!(out, "{s},{p}");
        }
        out
    }

    pub fn from_text<R: BufRead>(source: R) -> Result<Self> {
        let mut header = BTreeMap::new();
        let mut entries = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line == "pixel_size,probability" {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.split_once(':') {
                    header.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            let (s, p) = line
                .split_once(',')
                .ok_or_else(|| Error::parse(lineno, "expected pixel_size,probability"))?;
            let num = |t: &str| t.trim().parse::<f64>().map_err(|e| Error::parse(lineno, format!("{t:?}: {e}")));
            entries.push((num(s)?, num(p)?));
        }
        let mut take = |key: &str| -> Result<f64> {
            let v = header
                .remove(key)
                .ok_or_else(|| Error::parse(0, format!("missing header '{key}'")))?;
            v.parse().map_err(|e| Error::parse(0, format!("header '{key}': {e}")))
        };
        let critical_range = SystemCriticalRange {
            d_min_m: take("d_min_m")?,
            d_max_m: take("d_max_m")?,
            s_min_px: take("s_min_px")?,
            s_max_px: take("s_max_px")?,
        };
        if entries.is_empty() {
            return Err(Error::parse(0, "plan has no entries"));
        }
        Ok(SamplingPlan {
            entries,
            critical_range,
            provenance: header,
        })
    }
}
