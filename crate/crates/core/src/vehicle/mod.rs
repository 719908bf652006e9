//! The closed-loop vehicle stack: planner, longitudinal PID, Stanley lateral
//! control and the kinematic plant. Everything runs once per camera frame.

mod control;
mod plant;
mod planner;

pub use control::{stanley_step, AccelLimits, PidController, PidGains, PidMemory, MIN_STANLEY_SPEED_MPS};
pub use plant::{brake_distance, plant_step, EgoState, VehiclePlant};
pub use planner::{plan, PlannerConfig, PlannerMode, PlannerState};
