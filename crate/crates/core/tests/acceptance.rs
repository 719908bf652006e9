//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits nonzero if any criterion fails.

use std::path::PathBuf;
use std::time::Instant;

use evasim::attack_plan::brake_distance;
use evasim::camera::{size_pdf, CameraModel, ObjectSpec};
use evasim::evaluation::{
    ablation_matrix, run_eval, run_trials, size_distribution, two_proportion_z, ScenarioConfig, SignificanceTest,
};
use evasim::perception::{load_profile_file, sample_detection, DetectionProfile};
use evasim::stats::{lifecycle_oracle, RngStream};
use evasim::tracking::{self, TrackState, TrackStatus, TrackerParams};
use evasim::units::mph_to_mps;
use evasim::vehicle::{plant_step, EgoState, VehiclePlant};

const SPEEDS_MPH: [f64; 3] = [25.0, 30.0, 35.0];

fn fixture(name: &str) -> DetectionProfile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/profiles").join(format!("{name}.csv"));
    load_profile_file(&path).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

fn scenario(profile: DetectionProfile, mph: f64, trials: u32) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::stop_sign(profile, mph_to_mps(mph));
    cfg.trials = trials;
    cfg
}

fn rate(cfg: &ScenarioConfig) -> f64 {
    run_eval(cfg).expect("valid scenario").rows[0].rate()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

const TABLE3: [&str; 9] = [
    "y2_benign", "y2_rp2", "y3_benign", "y3_sib", "y3_fte", "y5_benign", "y5_fte", "fr_benign", "fr_sib",
];

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for name in TABLE3 {
        for mph in SPEEDS_MPH {
            let r = rate(&scenario(fixture(name), mph, 100));
            if r != 0.0 {
                failures.push(format!("{name}@{mph}={:.0}%", 100.0 * r));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 30.0;
    outcome(
        pass,
        format!(
            "27 cells x 100 trials in {secs:.1} s; nonzero cells: {}",
            if failures.is_empty() { "none".to_string() } else { failures.join(", ") }
        ),
    )
}

fn criterion_2() -> Outcome {
    let cells = [
        ("fte_y5_s1s2", 35.0, 0.95),
        ("fte_y5_s1s2", 30.0, 0.70),
        ("fte_y3_s1s2", 30.0, 0.90),
        ("rp2_s1", 25.0, 0.80),
        ("rp2_s2", 25.0, 0.90),
        ("rp2_s1s2", 25.0, 0.90),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, mph, min) in cells {
        let r = rate(&scenario(fixture(name), mph, 200));
        let ok = r >= min;
        pass &= ok;
        parts.push(format!("{name}@{mph}={:.1}%{}", 100.0 * r, if ok { "" } else { "(<min)" }));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_3() -> Outcome {
    let columns: [(&str, &[f64]); 3] = [
        ("rp2", &[25.0]),
        ("fte_y3", &[25.0, 30.0]),
        ("fte_y5", &[25.0, 30.0, 35.0]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (attack, speeds) in columns {
        let arms: Vec<DetectionProfile> = ["original", "s1", "s2", "s1s2"]
            .iter()
            .map(|v| fixture(&format!("{attack}_{v}")))
            .collect();
        let speeds: Vec<f64> = speeds.iter().map(|&m| mph_to_mps(m)).collect();
        let base = scenario(arms[0].clone(), 25.0, 200);
        let m = ablation_matrix(&base, &arms, &speeds, SignificanceTest::Z).expect("ablation");
        for (si, &mps) in speeds.iter().enumerate() {
            let r: Vec<f64> = m.reports.iter().map(|rep| rep.rows[si].rate()).collect();
            let ok = r[3] >= r[2] && r[2] >= r[0] && r[3] >= r[1];
            pass &= ok;
            parts.push(format!(
                "{attack}@{:.0}: {:.1}/{:.1}/{:.1}/{:.1}{}",
                evasim::units::mps_to_mph(mps),
                100.0 * r[0],
                100.0 * r[1],
                100.0 * r[2],
                100.0 * r[3],
                if ok { "" } else { " (order broken)" }
            ));
        }
    }

    // Per-trial coupling on pointwise-dominated pairs.
    let pairs: Vec<(DetectionProfile, DetectionProfile)> = vec![
        (fixture("y5_benign"), fixture("y5_fte")),
        (fixture("y3_benign"), fixture("y3_sib")),
        (fixture("y3_benign"), fixture("y3_fte")),
        (fixture("fte_y5_original"), fixture("fte_y5_original").map_rates("x0.8", |r| 0.8 * r.rate)),
        (fixture("fte_y5_s1s2"), fixture("fte_y5_s1s2").map_rates("x0.5", |r| 0.5 * r.rate)),
        (fixture("rp2_original"), fixture("rp2_original").map_rates("x0.6", |r| 0.6 * r.rate)),
    ];
    let mut broken = 0usize;
    let mut compared = 0usize;
    for (strong, weak) in &pairs {
        assert!(weak.dominated_by(strong), "{} not dominated by {}", weak.label, strong.label);
        for mph in SPEEDS_MPH {
            let a = run_trials(&scenario(strong.clone(), mph, 200)).unwrap();
            let b = run_trials(&scenario(weak.clone(), mph, 200)).unwrap();
            for (x, y) in a.iter().zip(&b) {
                compared += 1;
                if x.violated && !y.violated {
                    broken += 1;
                }
            }
        }
    }
    pass &= broken == 0;
    parts.push(format!("per-trial coupling: {broken} of {compared} trials broken"));
    outcome(pass, parts.join("; "))
}

fn criterion_4() -> Outcome {
    let a = two_proportion_z((0, 30), (3, 30)).unwrap();
    let b = two_proportion_z((0, 30), (4, 30)).unwrap();
    let pass = (a - 0.0755).abs() < 1e-3
        && (b - 0.0385).abs() < 1e-3
        && format!("{a:.2}") == "0.08"
        && format!("{b:.2}") == "0.04";
    outcome(pass, format!("p(0/30,3/30)={a:.4}, p(0/30,4/30)={b:.4}"))
}

fn criterion_5() -> Outcome {
    let obj = ObjectSpec::stop_sign();
    let cam = CameraModel::default();
    let v = mph_to_mps(25.0);
    let dist = size_distribution(&obj, &cam, v, 45.0, 30, 20, 2024).unwrap();
    let mut worst = 0.0f64;
    for s in [10.0, 36.7, 50.0, 100.0, 206.25] {
        let ratio = size_pdf(&obj, &cam, v, 2.0 * s).unwrap() / size_pdf(&obj, &cam, v, s).unwrap();
        worst = worst.max((ratio - 0.25).abs());
    }
    outcome(
        dist.l1 < 0.05 && worst <= 1e-9,
        format!("L1={:.4} over {} frames; max |pdf ratio - 0.25|={worst:.1e}", dist.l1, dist.histogram.total()),
    )
}

fn criterion_6() -> Outcome {
    let plant = VehiclePlant::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (mph, anchor) in [(30.0, 15.0), (35.0, 20.4)] {
        let v = mph_to_mps(mph);
        let closed = brake_distance(v, 6.0).unwrap();
        let mut ego = EgoState {
            speed_mps: v,
            ..EgoState::default()
        };
        while ego.speed_mps > 0.0 {
            ego = plant_step(&ego, -6.0, 0.0, 0.05, &plant);
        }
        let ok = (closed - anchor).abs() <= 0.2 && (ego.position_m - closed).abs() < 0.1;
        pass &= ok;
        parts.push(format!("{mph} mph: closed {closed:.3} m, integrated {:.3} m", ego.position_m));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (h, r) in [(4, 6), (3, 5), (4, 40)] {
        for decel in [3.4, 6.0] {
            let prep = |name: &str| {
                let mut cfg = scenario(fixture(name), 35.0, 100);
                cfg.tracker.hits_to_confirm = h;
                cfg.tracker.misses_to_delete = r;
                cfg.plant = cfg.plant.with_max_decel(decel);
                cfg
            };
            let ours = rate(&prep("fte_y5_s1s2"));
            let orig = rate(&prep("fte_y5_original"));
            let ok = ours >= 0.85 && (decel != 6.0 || orig == 0.0);
            pass &= ok;
            parts.push(format!(
                "({h},{r})@{decel}: ours {:.0}%, original {:.0}%{}",
                100.0 * ours,
                100.0 * orig,
                if ok { "" } else { " (miss)" }
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;

    // Lifecycle against the brute-force oracle.
    let mut sequences = 0usize;
    let mut lifecycle_ok = true;
    for h in 1..=4u32 {
        for r in 1..=4u32 {
            let params = TrackerParams {
                hits_to_confirm: h,
                misses_to_delete: r,
                ..TrackerParams::default()
            };
            for len in 0..=12usize {
                for bits in 0u32..(1 << len) {
                    let hits: Vec<bool> = (0..len).map(|i| bits >> i & 1 == 1).collect();
                    let expected = lifecycle_oracle(&hits, h as usize, r as usize);
                    let mut state = TrackState::empty(10.0);
                    for (i, &hit) in hits.iter().enumerate() {
                        if i > 0 {
                            state = tracking::predict(&state, 0.05, 10.0, &params);
                        }
                        let det = if hit {
                            let z = state.distance_m().unwrap_or(40.0);
                            evasim::perception::Detection::hit(i as u64, z)
                        } else {
                            evasim::perception::Detection::miss(i as u64)
                        };
                        state = tracking::update(&state, &det, &params);
                        if state.status != expected[i] {
                            lifecycle_ok = false;
                        }
                    }
                    sequences += 1;
                }
            }
        }
    }
    pass &= lifecycle_ok;
    parts.push(format!("lifecycle {} on {sequences} sequences", if lifecycle_ok { "matches" } else { "MISMATCH" }));

    // Covariance stays symmetric positive definite.
    let params = TrackerParams::default();
    let mut rng = RngStream::new(77);
    let mut state = TrackState::empty(12.0);
    let mut psd_ok = true;
    for i in 0..10_000u64 {
        let ego = rng.uniform_in(0.0, 20.0);
        let dt = rng.uniform_in(0.01, 0.2);
        state = tracking::predict(&state, dt, ego, &params);
        let det = if rng.uniform() < 0.7 {
            let z = state.distance_m().unwrap_or(30.0) + rng.standard_normal() * 0.5;
            evasim::perception::Detection::hit(i, z.max(0.001))
        } else {
            evasim::perception::Detection::miss(i)
        };
        state = tracking::update(&state, &det, &params);
        if state.status != TrackStatus::Empty {
            let p = state.covariance;
            if (p[(0, 1)] - p[(1, 0)]).abs() > 1e-9 * p.norm() || p.cholesky().is_none() {
                psd_ok = false;
            }
        }
    }
    pass &= psd_ok;
    parts.push(format!("covariance PD over 1e4 steps: {psd_ok}"));

    // Benign profiles never violate.
    let mut benign_bad = Vec::new();
    for name in ["y2_benign", "y3_benign", "y5_benign", "fr_benign"] {
        for mph in SPEEDS_MPH {
            let r = rate(&scenario(fixture(name), mph, 100));
            if r != 0.0 {
                benign_bad.push(format!("{name}@{mph}={:.0}%", 100.0 * r));
            }
        }
    }
    pass &= benign_bad.is_empty();
    parts.push(format!(
        "benign nonzero cells: {}",
        if benign_bad.is_empty() { "none".to_string() } else { benign_bad.join(", ") }
    ));

    // Bit-exact determinism.
    let mut cfg = scenario(fixture("fte_y5_s1s2"), 30.0, 64);
    cfg.base_seed = 4242;
    let same = run_trials(&cfg).unwrap() == run_trials(&cfg).unwrap();
    pass &= same;
    parts.push(format!("run_eval deterministic: {same}"));

    // Detection frequency at 90.4%.
    let profile = fixture("y3_sib");
    let cam = CameraModel::default();
    let mut rng = RngStream::new(9);
    let n = 100_000u32;
    let hits = (0..n)
        .filter(|&i| sample_detection(&profile, 17.5, &cam, &mut rng, 0.5, i as u64).detected)
        .count() as f64;
    let sigma = (n as f64 * 0.904 * 0.096).sqrt();
    let binom_ok = (hits - 0.904 * n as f64).abs() <= 3.0 * sigma;
    pass &= binom_ok;
    parts.push(format!("detections {hits} of {n} (expect 90400 +- {:.0})", 3.0 * sigma));

    outcome(pass, parts.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 original attacks and benign: 0% at 25/30/35 mph", criterion_1),
        ("2 high-effect S1+S2 cells", criterion_2),
        ("3 ablation ordering under CRN", criterion_3),
        ("4 p-value reproduction", criterion_4),
        ("5 size distribution", criterion_5),
        ("6 brake-distance anchors", criterion_6),
        ("7 generality over tracker and brake settings", criterion_7),
        ("8 property suites", criterion_8),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        println!(
            "{} criterion {name} [{:.1} s]: {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
