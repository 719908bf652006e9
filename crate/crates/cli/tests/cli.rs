use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn scenario(name: &str) -> String {
    fixtures().join("scenarios").join(name).display().to_string()
}

fn profile(name: &str) -> String {
    fixtures().join("profiles").join(format!("{name}.csv")).display().to_string()
}

fn evasim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evasim")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn header_value(text: &str, key: &str) -> f64 {
    let prefix = format!("# {key}: ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
        .parse()
        .unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn simulate_high_effect_cell_writes_report() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let o = evasim(&[
        "simulate",
        "--scenario",
        &scenario("stop35.toml"),
        "--profile",
        &profile("fte_y5_s1s2"),
        "--trials",
        "200",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    stdout(&o);
    let text = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][4], "200");
    let rate: f64 = rows[0][5].parse().unwrap();
    assert!(rate >= 0.95, "{text}");
}

#[test]
fn simulate_is_deterministic_across_runs_and_workers() {
    let args = |workers: &'static str| {
        vec![
            "simulate".to_string(),
            "--scenario".into(),
            scenario("stop30.toml"),
            "--profile".into(),
            profile("y3_fte"),
            "--profile".into(),
            format!("s1s2={}", profile("fte_y3_s1s2")),
            "--speed".into(),
            "25".into(),
            "--speed".into(),
            "30".into(),
            "--trials".into(),
            "40".into(),
            "--workers".into(),
            workers.into(),
        ]
    };
    let run = |w| {
        let a = args(w);
        stdout(&evasim(&a.iter().map(String::as_str).collect::<Vec<_>>()))
    };
    let a = run("1");
    assert_eq!(a, run("1"));
    assert_eq!(a, run("4"));
    assert!(a.lines().any(|l| l.starts_with("s1s2,30.00,")), "{a}");
}

#[test]
fn missing_profile_is_an_io_error_with_no_output() {
    let dir = TempDir::new().unwrap();
    let o = evasim(&[
        "simulate",
        "--scenario",
        &scenario("stop25.toml"),
        "--profile",
        "does/not/exist.csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exist.csv"));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn bad_scenario_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "trials = 10\nwarp_factor = 9\n").unwrap();
    let o = evasim(&["simulate", "--scenario", path.to_str().unwrap(), "--profile", &profile("y3_benign")]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("warp_factor"), "{err}");
}

#[test]
fn unstoppable_speed_is_infeasible() {
    let o = evasim(&[
        "simulate",
        "--scenario",
        &scenario("stop25.toml"),
        "--profile",
        &profile("y3_benign"),
        "--speed",
        "80",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
}

#[test]
fn ablate_reports_p_values_against_the_first_profile() {
    let o = evasim(&[
        "ablate",
        "--scenario",
        &scenario("stop25.toml"),
        "--profile",
        &profile("rp2_original"),
        "--profile",
        &profile("rp2_s1s2"),
        "--trials",
        "50",
        "--test",
        "fisher",
    ]);
    let text = stdout(&o);
    assert!(text.contains("# test: fisher"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][6], "");
    let p: f64 = rows[1][6].parse().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn attack_plan_header_carries_the_critical_range() {
    let text = stdout(&evasim(&[
        "attack-plan",
        "--scenario",
        &scenario("stop35.toml"),
        "--profile",
        &profile("y5_benign"),
        "--n-sizes",
        "8",
    ]));
    let d_min = header_value(&text, "d_min_m");
    let d_max = header_value(&text, "d_max_m");
    // v^2 / (2 a) at 35 mph and 6 m/s^2
    let v = 35.0 * 0.44704;
    assert!((d_min - v * v / 12.0).abs() < 1e-9);
    assert!((d_min - 20.4).abs() < 0.01);
    assert_eq!(d_max, 40.0);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 8);
    let total: f64 = rows.iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn attack_plan_single_size() {
    let text = stdout(&evasim(&[
        "attack-plan",
        "--scenario",
        &scenario("stop25.toml"),
        "--profile",
        &profile("y3_benign"),
        "--n-sizes",
        "1",
    ]));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], "1");
}

#[test]
fn attack_plan_beyond_feasibility_exits_three() {
    let o = evasim(&[
        "attack-plan",
        "--scenario",
        &scenario("stop35.toml"),
        "--profile",
        &profile("y2_benign"),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn size_dist_matches_analytic_curve() {
    let text = stdout(&evasim(&["size-dist", "--scenario", &scenario("stop25.toml"), "--runs", "30"]));
    assert!(header_value(&text, "l1") < 0.05, "{text}");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 20);
}

#[test]
fn size_dist_frame_count_scales_with_frame_rate() {
    let dir = TempDir::new().unwrap();
    let fast = dir.path().join("fast.toml");
    std::fs::write(&fast, "capture_rate_hz = 40.0\n").unwrap();
    let base = dir.path().join("base.toml");
    std::fs::write(&base, "").unwrap();
    let frames = |p: &Path| {
        header_value(
            &stdout(&evasim(&["size-dist", "--scenario", p.to_str().unwrap(), "--seed", "3"])),
            "frames",
        )
    };
    let ratio = frames(&fast) / frames(&base);
    assert!((ratio - 2.0).abs() < 0.02, "{ratio}");
}

#[test]
fn size_dist_empty_runs_fail() {
    for args in [["--runs", "0"], ["--start-distance", "3"]] {
        let mut a = vec!["size-dist", "--scenario"];
        let s = scenario("stop25.toml");
        a.push(&s);
        a.extend(args);
        let o = evasim(&a);
        assert_eq!(o.status.code(), Some(2));
        assert!(!o.stderr.is_empty());
        assert!(o.stdout.is_empty());
    }
}

fn write_report(dir: &Path, name: &str, label: &str, counts: &[(u64, u64)]) -> String {
    let mut text = String::from("label,speed_mph,speed_mps,violations,trials,rate,p_value\n");
    for (i, (k, n)) in counts.iter().enumerate() {
        let v = 11.176 + i as f64;
        text.push_str(&format!("{label},0,{v},{k},{n},0,\n"));
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn pooled_p(text: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix("pooled,"))
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn stats_p_values() {
    let dir = TempDir::new().unwrap();
    let zero = write_report(dir.path(), "a.csv", "a", &[(0, 30)]);
    let three = write_report(dir.path(), "b.csv", "b", &[(3, 30)]);
    let all = write_report(dir.path(), "c.csv", "c", &[(30, 30)]);

    let p = pooled_p(&stdout(&evasim(&["stats", &zero, &three])));
    assert!((p - 0.0755).abs() < 5e-4, "{p}");
    assert_eq!(pooled_p(&stdout(&evasim(&["stats", &zero, &zero]))), 1.0);
    assert!(pooled_p(&stdout(&evasim(&["stats", &zero, &all]))) < 1e-9);
    assert!(pooled_p(&stdout(&evasim(&["stats", "--test", "fisher", &zero, &all]))) < 1e-9);
}

#[test]
fn stats_rejects_mismatched_reports() {
    let dir = TempDir::new().unwrap();
    let one = write_report(dir.path(), "a.csv", "a", &[(0, 30)]);
    let two = write_report(dir.path(), "b.csv", "b", &[(0, 30), (1, 30)]);
    let o = evasim(&["stats", &one, &two]);
    assert_eq!(o.status.code(), Some(2));
}
