//! Unit conversions.

pub const MPS_PER_MPH: f64 = 0.44704;

pub fn mph_to_mps(mph: f64) -> f64 {
    mph * MPS_PER_MPH
}

pub fn mps_to_mph(mps: f64) -> f64 {
    mps / MPS_PER_MPH
}
