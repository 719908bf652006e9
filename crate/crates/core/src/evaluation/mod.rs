//! Monte Carlo evaluation: scenario configuration, the closed-loop trial,
//! violation-rate reports, significance tests and ablation runs.

mod report;
mod scenario;
mod size_dist;
mod trial;

pub use report::{
    ablation_matrix, compare_reports, fisher_exact, reports_from_text, reports_to_text, run_eval, run_trials,
    two_proportion_z, AblationMatrix, Comparison, EvaluationReport, SignificanceTest, SpeedRow, StatsComparison,
};
pub use scenario::{Goal, ScenarioConfig, ScenarioFile};
pub use size_dist::{size_distribution, SizeDistribution};
pub use trial::{run_trial, TrajectoryPoint, TrialResult};
