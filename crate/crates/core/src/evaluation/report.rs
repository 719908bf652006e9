use std::fmt::Write as _;
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::perception::DetectionProfile;
use crate::stats::{normal_cdf, RngStream};
use crate::units::mps_to_mph;

use super::scenario::ScenarioConfig;
use super::trial::{simulate, TrialResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignificanceTest {
    /// Pooled two-proportion z-test.
    #[default]
    Z,
    /// Two-sided Fisher exact test.
    Fisher,
}

impl SignificanceTest {
    pub fn p_value(self, baseline: (u64, u64), treatment: (u64, u64)) -> Result<f64> {
        match self {
            SignificanceTest::Z => two_proportion_z(baseline, treatment),
            SignificanceTest::Fisher => fisher_exact(baseline, treatment),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SignificanceTest::Z => "z",
            SignificanceTest::Fisher => "fisher",
        }
    }
}

/// Baseline counts and the p-value of a row against them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub baseline_violations: u64,
    pub baseline_trials: u64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedRow {
    pub speed_mps: f64,
    pub violations: u64,
    pub trials: u64,
    pub comparison: Option<Comparison>,
}

impl SpeedRow {
    pub fn rate(&self) -> f64 {
        self.violations as f64 / self.trials as f64
    }

    pub fn speed_mph(&self) -> f64 {
        mps_to_mph(self.speed_mps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub label: String,
    pub rows: Vec<SpeedRow>,
}

/// Runs every trial of one scenario and returns the per-trial results in
/// trial order. Trial `i` uses seed `base_seed + i`.
pub fn run_trials(cfg: &ScenarioConfig) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    Ok((0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| simulate(cfg, RngStream::for_trial(cfg.base_seed, i).seed()))
        .collect())
}

pub fn run_eval(cfg: &ScenarioConfig) -> Result<EvaluationReport> {
    let results = run_trials(cfg)?;
    Ok(EvaluationReport {
        label: cfg.profile.label.clone(),
        rows: vec![row_from(cfg.speed_limit_mps, &results)],
    })
}

fn row_from(speed_mps: f64, results: &[TrialResult]) -> SpeedRow {
    SpeedRow {
        speed_mps,
        violations: results.iter().filter(|r| r.violated).count() as u64,
        trials: results.len() as u64,
        comparison: None,
    }
}

fn check_counts(name: &str, (k, n): (u64, u64)) -> Result<()> {
    if n == 0 || k > n {
        return Err(Error::domain(format!("{name}: need 0 <= violations <= trials and trials >= 1, got {k}/{n}")));
    }
    Ok(())
}

/// Two-tailed p-value of the pooled two-proportion z-test.
pub fn two_proportion_z(baseline: (u64, u64), treatment: (u64, u64)) -> Result<f64> {
    check_counts("baseline", baseline)?;
    check_counts("treatment", treatment)?;
    let (k1, n1) = (baseline.0 as f64, baseline.1 as f64);
    let (k2, n2) = (treatment.0 as f64, treatment.1 as f64);
    let (p1, p2) = (k1 / n1, k2 / n2);
    let pooled = (k1 + k2) / (n1 + n2);
    let variance = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2);
    if variance <= 0.0 || p1 == p2 {
        return Ok(1.0);
    }
    let z = (p2 - p1).abs() / variance.sqrt();
    Ok((2.0 * (1.0 - normal_cdf(z))).clamp(0.0, 1.0))
}

/// Two-sided Fisher exact test on the 2x2 table of violations/non-violations.
/// Sums the probabilities of all tables no more likely than the observed one.
pub fn fisher_exact(baseline: (u64, u64), treatment: (u64, u64)) -> Result<f64> {
    check_counts("baseline", baseline)?;
    check_counts("treatment", treatment)?;
    let (n1, n2) = (baseline.1, treatment.1);
    let k = baseline.0 + treatment.0;
    let n = n1 + n2;
    let ln_p = |a: u64| ln_binomial(n1, a) + ln_binomial(n2, k - a) - ln_binomial(n, k);
    let lo = k.saturating_sub(n2);
    let hi = k.min(n1);
    let observed = ln_p(baseline.0);
    let p: f64 = (lo..=hi)
        .map(ln_p)
        .filter(|&lp| lp <= observed + 1e-7)
        .map(f64::exp)
        .sum();
    Ok(p.min(1.0))
}

/// Results of running several perception profiles over the same speeds and
/// seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationMatrix {
    pub reports: Vec<EvaluationReport>,
    /// `violations[arm][speed][trial]`.
    pub violations: Vec<Vec<Vec<bool>>>,
}

/// Runs each profile at each speed with common random numbers: trial `i`
/// gets the same seed in every cell. The first profile is the baseline that
/// p-values are computed against.
pub fn ablation_matrix(
    base: &ScenarioConfig,
    arms: &[DetectionProfile],
    speeds_mps: &[f64],
    test: SignificanceTest,
) -> Result<AblationMatrix> {
    if arms.is_empty() || speeds_mps.is_empty() {
        return Err(Error::config("ablation needs at least one profile and one speed"));
    }
    let mut labels: Vec<&str> = arms.iter().map(|a| a.label.as_str()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::config("profile labels must be unique"));
    }

    let mut violations = Vec::with_capacity(arms.len());
    let mut reports = Vec::with_capacity(arms.len());
    for arm in arms {
        let mut per_speed = Vec::with_capacity(speeds_mps.len());
        let mut rows = Vec::with_capacity(speeds_mps.len());
        for &speed in speeds_mps {
            let cfg = base.with_profile(arm.clone()).with_speed(speed);
            let results = run_trials(&cfg)?;
            rows.push(row_from(speed, &results));
            per_speed.push(results.iter().map(|r| r.violated).collect());
        }
        violations.push(per_speed);
        reports.push(EvaluationReport {
            label: arm.label.clone(),
            rows,
        });
    }

    let baseline: Vec<(u64, u64)> = reports[0].rows.iter().map(|r| (r.violations, r.trials)).collect();
    for report in reports.iter_mut().skip(1) {
        for (row, &(bk, bn)) in report.rows.iter_mut().zip(&baseline) {
            row.comparison = Some(Comparison {
                baseline_violations: bk,
                baseline_trials: bn,
                p_value: test.p_value((bk, bn), (row.violations, row.trials))?,
            });
        }
    }
    Ok(AblationMatrix { reports, violations })
}

const REPORT_COLUMNS: &str = "label,speed_mph,speed_mps,violations,trials,rate,p_value";

/// Renders reports as `#` metadata lines followed by one CSV row per
/// (label, speed). `p_value` is empty for rows without a comparison.
pub fn reports_to_text(reports: &[EvaluationReport], metadata: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str(REPORT_COLUMNS);
    out.push('\n');
    for report in reports {
        for row in &report.rows {
            let p = row.comparison.map(|c| format!("{:.6}", c.p_value)).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{:.2},{},{},{},{:.4},{}",
                report.label,
                row.speed_mph(),
                row.speed_mps,
                row.violations,
                row.trials,
                row.rate(),
                p
            );
        }
    }
    out
}

/// Parses text written by [`reports_to_text`]. Rows are grouped by label in
/// first-seen order; comparisons are not restored.
pub fn reports_from_text<R: BufRead>(source: R) -> Result<Vec<EvaluationReport>> {
    let mut reports: Vec<EvaluationReport> = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == REPORT_COLUMNS {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::parse(lineno, format!("expected 7 fields, got {}", fields.len())));
        }
        let num = |idx: usize| -> Result<f64> {
            fields[idx]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(lineno, format!("field {}: {e}", idx + 1)))
        };
        let count = |idx: usize| -> Result<u64> {
            fields[idx]
                .trim()
                .parse::<u64>()
                .map_err(|e| Error::parse(lineno, format!("field {}: {e}", idx + 1)))
        };
        let row = SpeedRow {
            speed_mps: num(2)?,
            violations: count(3)?,
            trials: count(4)?,
            comparison: None,
        };
        if row.trials == 0 || row.violations > row.trials {
            return Err(Error::parse(lineno, "violations must not exceed trials, trials >= 1"));
        }
        let label = fields[0].trim();
        match reports.iter_mut().find(|r| r.label == label) {
            Some(r) => r.rows.push(row),
            None => reports.push(EvaluationReport {
                label: label.to_string(),
                rows: vec![row],
            }),
        }
    }
    Ok(reports)
}

/// Per-speed and pooled p-values between two single-label reports.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsComparison {
    /// `(speed_mps, baseline, treatment, p_value)`.
    pub per_speed: Vec<(f64, (u64, u64), (u64, u64), f64)>,
    pub pooled: ((u64, u64), (u64, u64), f64),
}

pub fn compare_reports(
    baseline: &EvaluationReport,
    treatment: &EvaluationReport,
    test: SignificanceTest,
) -> Result<StatsComparison> {
    if baseline.rows.len() != treatment.rows.len() {
        return Err(Error::config(format!(
            "reports differ in structure: {} rows vs {} rows",
            baseline.rows.len(),
            treatment.rows.len()
        )));
    }
    let mut per_speed = Vec::with_capacity(baseline.rows.len());
    let (mut bk, mut bn, mut tk, mut tn) = (0, 0, 0, 0);
    for (b, t) in baseline.rows.iter().zip(&treatment.rows) {
        if (b.speed_mps - t.speed_mps).abs() > 1e-9 {
            return Err(Error::config(format!(
                "reports differ in structure: speed {} vs {}",
                b.speed_mps, t.speed_mps
            )));
        }
        let p = test.p_value((b.violations, b.trials), (t.violations, t.trials))?;
        per_speed.push((b.speed_mps, (b.violations, b.trials), (t.violations, t.trials), p));
        bk += b.violations;
        bn += b.trials;
        tk += t.violations;
        tn += t.trials;
    }
    let pooled_p = test.p_value((bk, bn), (tk, tn))?;
    Ok(StatsComparison {
        per_speed,
        pooled: ((bk, bn), (tk, tn), pooled_p),
    })
}
