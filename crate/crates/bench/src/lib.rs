//! Shared fixtures for the criterion benchmarks.

use crosslink_nav::estimation::{JointFilterState, JOINT_DIM};
use crosslink_nav::scenario::ScenarioConfig;
use nalgebra::{SVector, Vector6};

/// Default halo and lunar orbiter states.
pub fn default_states() -> [Vector6<f64>; 2] {
    let cfg = ScenarioConfig::default();
    let s = |x: Option<[f64; 6]>| Vector6::from_column_slice(&x.expect("default state"));
    [s(cfg.spacecraft.lumio.state), s(cfg.spacecraft.lpf.state)]
}

/// Joint filter state at the default initial conditions with a diagonal prior.
pub fn default_filter_state() -> JointFilterState {
    let [a, b] = default_states();
    JointFilterState::joint(0.0, &a, &b, &SVector::<f64, JOINT_DIM>::from_element(1e-5))
}

/// Short baseline scenario for end-to-end timing.
pub fn short_scenario(days: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.dynamics.duration_days = days;
    cfg.montecarlo.runs = 1;
    cfg.montecarlo.workers = Some(1);
    cfg
}
