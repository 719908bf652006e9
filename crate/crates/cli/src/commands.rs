use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use evasim::attack_plan::{build_sampling_plan, compute_critical_range_with_threshold};
use evasim::evaluation::{
    ablation_matrix, compare_reports, reports_from_text, reports_to_text, run_eval, size_distribution,
    EvaluationReport, ScenarioConfig, ScenarioFile, SignificanceTest,
};
use evasim::perception::{load_profile_file, DetectionProfile};
use evasim::units::mph_to_mps;
use evasim::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "evasim", version, about = "Closed-loop object-evasion simulator and attack planner")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Violation rates of one or more detection profiles.
    Simulate(SimulateArgs),
    /// Ablation under common random numbers; the first profile is the baseline.
    Ablate(AblateArgs),
    /// Pixel-size sampling plan over the system-critical range.
    AttackPlan(AttackPlanArgs),
    /// Per-frame size histogram of uniform approaches against the analytic law.
    SizeDist(SizeDistArgs),
    /// p-values between a baseline and a treatment report.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file (flat TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Detection profile as `[label=]path`. Repeatable.
    #[arg(long = "profile", required = true)]
    profiles: Vec<String>,
    /// Speed limit in mph. Repeatable; defaults to the scenario's.
    #[arg(long = "speed")]
    speeds_mph: Vec<f64>,
    /// Trial count override.
    #[arg(long)]
    trials: Option<u32>,
    /// Base seed override; trial i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep stopping for a confirmed stop sign even after the track is lost.
    #[arg(long)]
    latch_stop: bool,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; prints to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TestArg {
    Z,
    Fisher,
}

impl From<TestArg> for SignificanceTest {
    fn from(t: TestArg) -> Self {
        match t {
            TestArg::Z => SignificanceTest::Z,
            TestArg::Fisher => SignificanceTest::Fisher,
        }
    }
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Significance test for the p-value column.
    #[arg(long, value_enum, default_value = "z")]
    test: TestArg,
}

#[derive(Debug, Args)]
struct AttackPlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Benign detection profile that bounds the far end of the range.
    #[arg(long)]
    profile: String,
    /// Speed in mph; defaults to the scenario's speed limit.
    #[arg(long)]
    speed: Option<f64>,
    /// Number of pixel sizes in the plan.
    #[arg(long, default_value_t = 10)]
    n_sizes: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SizeDistArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Speed in mph; defaults to the scenario's speed limit.
    #[arg(long)]
    speed: Option<f64>,
    /// Number of approach runs.
    #[arg(long, default_value_t = 30)]
    runs: usize,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Distance at which each run starts, in meters.
    #[arg(long, default_value_t = 45.0)]
    start_distance: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Baseline report.
    baseline: PathBuf,
    /// Treatment report.
    treatment: PathBuf,
    /// Label to use when a report holds more than one.
    #[arg(long)]
    baseline_label: Option<String>,
    #[arg(long)]
    treatment_label: Option<String>,
    #[arg(long, value_enum, default_value = "z")]
    test: TestArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Domain(_) | Error::Config(_) | Error::Parse { .. } => 2,
        Error::Infeasible(_) => 3,
        Error::Io { .. } => 4,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Ablate(a) => ablate(a),
        Command::AttackPlan(a) => attack_plan(a),
        Command::SizeDist(a) => size_dist(a),
        Command::Stats(a) => stats(a),
    }
}

fn load_labeled_profile(spec: &str) -> Result<DetectionProfile> {
    match spec.split_once('=') {
        Some((label, path)) if !label.is_empty() => {
            let mut p = load_profile_file(Path::new(path))?;
            p.label = label.to_string();
            Ok(p)
        }
        _ => load_profile_file(Path::new(spec)),
    }
}

struct Prepared {
    file: ScenarioFile,
    base: ScenarioConfig,
    profiles: Vec<DetectionProfile>,
    speeds_mps: Vec<f64>,
}

fn prepare(run: &RunArgs) -> Result<Prepared> {
    let file = ScenarioFile::load(&run.scenario)?;
    let profiles = run
        .profiles
        .iter()
        .map(|s| load_labeled_profile(s))
        .collect::<Result<Vec<_>>>()?;
    let mut base = file.build(profiles[0].clone(), None);
    if let Some(t) = run.trials {
        base.trials = t;
    }
    if let Some(s) = run.seed {
        base.base_seed = s;
    }
    base.latch_stop |= run.latch_stop;
    let speeds_mps = if run.speeds_mph.is_empty() {
        vec![base.speed_limit_mps]
    } else {
        run.speeds_mph.iter().map(|&m| mph_to_mps(m)).collect()
    };
    for &v in &speeds_mps {
        base.with_speed(v).validate()?;
    }
    Ok(Prepared {
        file,
        base,
        profiles,
        speeds_mps,
    })
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(0) => Err(Error::Config("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(f),
    }
}

fn run_metadata(command: &str, p: &Prepared) -> Vec<(&'static str, String)> {
    vec![
        ("command", command.to_string()),
        ("scenario", p.file.name.clone()),
        ("trials", p.base.trials.to_string()),
        ("base_seed", p.base.base_seed.to_string()),
        ("latch_stop", p.base.latch_stop.to_string()),
    ]
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let p = prepare(&a.run)?;
    let reports = with_workers(a.run.workers, || {
        p.profiles
            .iter()
            .map(|profile| {
                let mut rows = Vec::with_capacity(p.speeds_mps.len());
                for &v in &p.speeds_mps {
                    rows.extend(run_eval(&p.base.with_profile(profile.clone()).with_speed(v))?.rows);
                }
                Ok(EvaluationReport {
                    label: profile.label.clone(),
                    rows,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let text = reports_to_text(&reports, &run_metadata("simulate", &p));
    emit(a.run.out.as_deref(), "report.csv", &text)
}

fn ablate(a: AblateArgs) -> Result<()> {
    let p = prepare(&a.run)?;
    let test: SignificanceTest = a.test.into();
    let matrix = with_workers(a.run.workers, || ablation_matrix(&p.base, &p.profiles, &p.speeds_mps, test))?;
    let mut meta = run_metadata("ablate", &p);
    meta.push(("baseline", p.profiles[0].label.clone()));
    meta.push(("test", test.name().to_string()));
    let text = reports_to_text(&matrix.reports, &meta);
    emit(a.run.out.as_deref(), "ablation.csv", &text)
}

fn attack_plan(a: AttackPlanArgs) -> Result<()> {
    let file = ScenarioFile::load(&a.scenario)?;
    let benign = load_labeled_profile(&a.profile)?;
    let cfg = file.build(benign.clone(), a.speed.map(mph_to_mps));
    cfg.validate()?;
    let range = compute_critical_range_with_threshold(
        &cfg.plant,
        cfg.speed_limit_mps,
        &benign,
        &cfg.object,
        &cfg.camera,
        file.d_max_threshold,
    )?;
    let plan = build_sampling_plan(&range, a.n_sizes)?
        .with_provenance("scenario", &file.name)
        .with_provenance("benign_profile", &benign.label)
        .with_provenance("speed_mps", cfg.speed_limit_mps)
        .with_provenance("max_decel_mps2", cfg.plant.max_decel_mps2)
        .with_provenance("d_max_threshold", file.d_max_threshold);
    emit(a.out.as_deref(), "plan.txt", &plan.to_text())
}

fn size_dist(a: SizeDistArgs) -> Result<()> {
    let file = ScenarioFile::load(&a.scenario)?;
    let speed = a.speed.map_or_else(|| mph_to_mps(file.speed_limit_mph), mph_to_mps);
    let cfg = file.build(DetectionProfile::uniform("none", 0.0, 1.0, 1.0, 0.0)?, Some(speed));
    let seed = a.seed.unwrap_or(file.base_seed);
    let dist = size_distribution(&cfg.object, &cfg.camera, speed, a.start_distance, a.runs, a.bins, seed)?;
    let mut text = String::new();
    let _ = writeln!(text, "# scenario: {}", file.name);
    let _ = writeln!(text, "# speed_mps: {speed}");
    let _ = writeln!(text, "# runs: {}", a.runs);
    let _ = writeln!(text, "# start_distance_m: {}", a.start_distance);
    let _ = writeln!(text, "# frames: {}", dist.histogram.total());
    let _ = writeln!(text, "# l1: {:.6}", dist.l1);
    text.push_str(&dist.to_text());
    emit(a.out.as_deref(), "size_dist.csv", &text)
}

fn load_report(path: &Path, label: Option<&str>) -> Result<EvaluationReport> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let reports = reports_from_text(BufReader::new(f))?;
    match label {
        Some(l) => reports
            .into_iter()
            .find(|r| r.label == l)
            .ok_or_else(|| Error::Config(format!("{}: no report labelled '{l}'", path.display()))),
        None => {
            let n = reports.len();
            let mut it = reports.into_iter();
            match (it.next(), n) {
                (Some(r), 1) => Ok(r),
                (None, _) => Err(Error::Config(format!("{}: no report rows", path.display()))),
                _ => Err(Error::Config(format!(
                    "{}: holds {n} labels; choose one with --baseline-label/--treatment-label",
                    path.display()
                ))),
            }
        }
    }
}

fn stats(a: StatsArgs) -> Result<()> {
    let baseline = load_report(&a.baseline, a.baseline_label.as_deref())?;
    let treatment = load_report(&a.treatment, a.treatment_label.as_deref())?;
    let test: SignificanceTest = a.test.into();
    let cmp = compare_reports(&baseline, &treatment, test)?;
    let mut text = String::new();
    let _ = writeln!(text, "# baseline: {}", baseline.label);
    let _ = writeln!(text, "# treatment: {}", treatment.label);
    let _ = writeln!(text, "# test: {}", test.name());
    text.push_str("speed_mps,baseline_violations,baseline_trials,treatment_violations,treatment_trials,p_value\n");
    for (v, (bk, bn), (tk, tn), p) in &cmp.per_speed {
        let _ = writeln!(text, "{v},{bk},{bn},{tk},{tn},{p:.6e}");
    }
    let ((bk, bn), (tk, tn), p) = cmp.pooled;
    let _ = writeln!(text, "pooled,{bk},{bn},{tk},{tn},{p:.6e}");
    emit(a.out.as_deref(), "stats.csv", &text)
}

/// Writes `text` to `dir/name`, or to stdout when no directory is given.
/// Called only once all output is computed.
fn emit(dir: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match dir {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
        }
    }
}
