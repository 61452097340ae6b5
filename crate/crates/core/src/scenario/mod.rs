//! Scenario configuration, truth generation, Monte Carlo campaigns and
//! artifact output.

pub mod config;
pub mod output;
pub mod run;
pub mod truth;

pub use config::{
    load_scenario, parse_scenario, DynamicsModel, DynamicsSection, EphemerisSource, FilterSection, LinkSection,
    MeasurementType, MonteCarloSection, ScenarioConfig, SpacecraftConfig, SpacecraftSection, SrpSection,
};
pub use output::{OutputFormat, RunArtifacts, Table};
pub use run::{
    configured_observables, convergence_epoch, observability_analysis, rmse, run_monte_carlo, single_run_result,
    summarize, EpochStats, MeasurementRecord, MonteCarloResult, RunSummary, Scenario, SimulationRun, SplitValue,
    Summary, SummaryBlock,
};
pub use truth::{generate_truth, initial_states, TruthTrajectory};
