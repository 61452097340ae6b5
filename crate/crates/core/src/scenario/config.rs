//! Scenario configuration: a JSON document with `dynamics`, `spacecraft`,
//! `link`, `filter` and `montecarlo` sections. Every field has a default, and
//! unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{CrtbpParams, KeplerianElements};
use crate::ephemeris::{AnalyticEphemeris, GmSet, SrpConfig};
use crate::error::{NavError, Result};
use crate::estimation::{BiasMode, NoiseForm};
use crate::integrator::IntegratorConfig;
use crate::radiometrics::{
    doppler_sigma, pn_range_sigma_two_way, time_derived_sigma_two_way, DopplerConfig, ObservableKind,
    PnRangingConfig, TimeDerivedConfig, TwoWayCombiner,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsModel {
    Crtbp,
    Nbody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementType {
    PnRange,
    TimeDerivedRange,
    RangeRate,
}

impl MeasurementType {
    pub fn observable(self) -> ObservableKind {
        match self {
            MeasurementType::PnRange | MeasurementType::TimeDerivedRange => ObservableKind::Range,
            MeasurementType::RangeRate => ObservableKind::RangeRate,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeasurementType::PnRange => "pn_range",
            MeasurementType::TimeDerivedRange => "time_derived_range",
            MeasurementType::RangeRate => "range_rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum EphemerisSource {
    Analytic(AnalyticEphemeris),
    /// CSV with columns `epoch_s,body,x_km,y_km,z_km`.
    Csv { path: PathBuf },
}

impl Default for EphemerisSource {
    fn default() -> Self {
        EphemerisSource::Analytic(AnalyticEphemeris::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsSection {
    pub model: DynamicsModel,
    pub duration_days: f64,
    /// Calendar epoch of t = 0; metadata only.
    pub epoch_utc: String,
    pub mu: f64,
    pub t_star_days: f64,
    pub l_star_km: f64,
    pub integrator: IntegratorConfig,
    /// Point masses for the N-body model.
    pub gm: GmSet,
    /// Solar radiation pressure in the N-body model.
    pub srp: bool,
    pub ephemeris: EphemerisSource,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        let units = CrtbpParams::earth_moon();
        Self {
            model: DynamicsModel::Crtbp,
            duration_days: 14.0,
            epoch_utc: "2024-04-18T21:00:00Z".into(),
            mu: units.mu,
            t_star_days: units.t_star_days,
            l_star_km: units.l_star_km,
            integrator: IntegratorConfig::default(),
            gm: GmSet::default(),
            srp: true,
            ephemeris: EphemerisSource::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrpSection {
    pub area_m2: f64,
    pub reflectivity: f64,
    pub mass_kg: f64,
}

impl SrpSection {
    pub fn to_config(&self) -> SrpConfig {
        SrpConfig::new(self.area_m2, self.reflectivity, self.mass_kg)
    }
}

/// Initial conditions of one spacecraft. CRTBP runs start from `state`
/// (barycentric rotating, non-dimensional) when given, otherwise from
/// `mci_elements`; N-body runs prefer `mci_elements`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacecraftConfig {
    #[serde(default)]
    pub state: Option<[f64; 6]>,
    #[serde(default)]
    pub mci_elements: Option<KeplerianElements>,
    pub srp: SrpSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpacecraftSection {
    /// Halo orbiter, spacecraft 1 of the joint state.
    pub lumio: SpacecraftConfig,
    /// Lunar orbiter, spacecraft 2.
    pub lpf: SpacecraftConfig,
}

impl Default for SpacecraftSection {
    fn default() -> Self {
        Self {
            lumio: SpacecraftConfig {
                state: Some([1.1473302, 0.0, -0.15142308, 0.0, -0.21994554, 0.0]),
                mci_elements: None,
                srp: SrpSection { area_m2: 0.41, reflectivity: 1.08, mass_kg: 22.3 },
            },
            lpf: SpacecraftConfig {
                state: Some([0.98512134, 0.00147649, 0.00492546, -0.87329730, -1.61190048, 0.0]),
                mci_elements: Some(KeplerianElements {
                    sma: 5737.4,
                    ecc: 0.61,
                    inc: 57.83,
                    raan: 61.55,
                    argp: 90.0,
                    true_anomaly: 0.0,
                    central_gm: crate::constants::GM_MOON,
                }),
                srp: SrpSection { area_m2: 3.0, reflectivity: 1.8, mass_kg: 280.0 },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSection {
    /// Observables generated at every measurement epoch.
    pub measurements: Vec<MeasurementType>,
    pub cadence_s: f64,
    /// Constant range bias in the simulated data (m).
    pub bias_truth_m: f64,
    pub pn: PnRangingConfig,
    pub time_derived: TimeDerivedConfig,
    pub doppler: DopplerConfig,
    pub pn_combiner: TwoWayCombiner,
    pub time_derived_combiner: TwoWayCombiner,
    /// Range-rate noise (mm/s). The link-budget Doppler figure is reported
    /// alongside but not used.
    pub range_rate_sigma_mm_s: f64,
    /// Replaces the link-budget range sigma when set (m).
    pub range_sigma_override_m: Option<f64>,
    /// Draw measurement noise. When off the filter still weights the data
    /// with the configured sigmas.
    pub add_noise: bool,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            measurements: vec![MeasurementType::PnRange],
            cadence_s: 1800.0,
            bias_truth_m: 10.0,
            pn: PnRangingConfig::default(),
            time_derived: TimeDerivedConfig::default(),
            doppler: DopplerConfig::default(),
            pn_combiner: TwoWayCombiner::Rss,
            time_derived_combiner: TwoWayCombiner::QuadraticMean,
            range_rate_sigma_mm_s: 0.97,
            range_sigma_override_m: None,
            add_noise: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub bias_mode: BiasMode,
    pub position_sigma_km: f64,
    pub velocity_sigma_cm_s: f64,
    /// Magnitude of the initial estimate error; direction is random per run.
    pub position_error_m: f64,
    pub velocity_error_mm_s: f64,
    /// Acceleration noise intensity per spacecraft (non-dimensional).
    pub process_noise_sigma: [f64; 2],
    pub noise_form: NoiseForm,
    /// Bias prior, used as the estimated-state prior and as the consider
    /// covariance.
    pub bias_prior_m: f64,
    pub bias_prior_sigma_m: f64,
    pub estimate_clock_drift: bool,
    pub clock_drift_prior_sigma_m_s: f64,
    pub divergence_factor: f64,
    /// Filter-side integrator; the truth integrator when absent.
    pub integrator: Option<IntegratorConfig>,
    pub health_checks: bool,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            bias_mode: BiasMode::Neglect,
            position_sigma_km: 1.0,
            velocity_sigma_cm_s: 1.0,
            position_error_m: 500.0,
            velocity_error_mm_s: 1.0,
            process_noise_sigma: [1e-11; 2],
            noise_form: NoiseForm::Quartic,
            bias_prior_m: 0.0,
            bias_prior_sigma_m: 10.0,
            estimate_clock_drift: false,
            clock_drift_prior_sigma_m_s: 1e-3,
            divergence_factor: 100.0,
            integrator: None,
            health_checks: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSection {
    pub runs: usize,
    pub seed: u64,
    /// Worker threads; all available cores when absent.
    pub workers: Option<usize>,
    /// Day after which the "converged" averages are taken.
    pub split_day: f64,
    /// Halo-orbiter position RMSE below which the filter counts as converged (km).
    pub convergence_threshold_km: f64,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self { runs: 100, seed: 1, workers: None, split_day: 6.0, convergence_threshold_km: 1.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub dynamics: DynamicsSection,
    pub spacecraft: SpacecraftSection,
    pub link: LinkSection,
    pub filter: FilterSection,
    pub montecarlo: MonteCarloSection,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(NavError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(NavError::Config(format!("{name} must be non-negative, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let d = &self.dynamics;
        positive("dynamics.duration_days", d.duration_days)?;
        self.units().validate()?;
        d.integrator.validate()?;
        if let Some(i) = &self.filter.integrator {
            i.validate()?;
        }
        for (name, sc) in [("lumio", &self.spacecraft.lumio), ("lpf", &self.spacecraft.lpf)] {
            if sc.state.is_none() && sc.mci_elements.is_none() {
                return Err(NavError::Config(format!("spacecraft.{name} needs `state` or `mci_elements`")));
            }
            if let Some(s) = &sc.state {
                if s.iter().any(|v| !v.is_finite()) {
                    return Err(NavError::Config(format!("spacecraft.{name}.state must be finite")));
                }
            }
            if let Some(k) = &sc.mci_elements {
                k.validate()?;
            }
            if d.model == DynamicsModel::Nbody && d.srp {
                sc.srp.to_config().validate()?;
            }
        }

        let l = &self.link;
        if l.measurements.is_empty() {
            return Err(NavError::Config("link.measurements must not be empty".into()));
        }
        positive("link.cadence_s", l.cadence_s)?;
        if !l.bias_truth_m.is_finite() {
            return Err(NavError::Config("link.bias_truth_m must be finite".into()));
        }
        l.pn.validate()?;
        l.time_derived.validate()?;
        l.doppler.validate()?;
        positive("link.range_rate_sigma_mm_s", l.range_rate_sigma_mm_s)?;
        if let Some(s) = l.range_sigma_override_m {
            positive("link.range_sigma_override_m", s)?;
        }

        let f = &self.filter;
        positive("filter.position_sigma_km", f.position_sigma_km)?;
        positive("filter.velocity_sigma_cm_s", f.velocity_sigma_cm_s)?;
        non_negative("filter.position_error_m", f.position_error_m)?;
        non_negative("filter.velocity_error_mm_s", f.velocity_error_mm_s)?;
        for s in f.process_noise_sigma {
            non_negative("filter.process_noise_sigma", s)?;
        }
        non_negative("filter.bias_prior_sigma_m", f.bias_prior_sigma_m)?;
        if f.bias_mode == BiasMode::Estimate {
            positive("filter.bias_prior_sigma_m", f.bias_prior_sigma_m)?;
        }
        if f.estimate_clock_drift {
            if f.bias_mode != BiasMode::Estimate {
                return Err(NavError::Config("filter.estimate_clock_drift requires bias_mode = estimate".into()));
            }
            positive("filter.clock_drift_prior_sigma_m_s", f.clock_drift_prior_sigma_m_s)?;
        }
        positive("filter.divergence_factor", f.divergence_factor)?;

        let m = &self.montecarlo;
        if m.runs == 0 {
            return Err(NavError::Config("montecarlo.runs must be at least 1".into()));
        }
        if m.workers == Some(0) {
            return Err(NavError::Config("montecarlo.workers must be at least 1".into()));
        }
        non_negative("montecarlo.split_day", m.split_day)?;
        positive("montecarlo.convergence_threshold_km", m.convergence_threshold_km)?;
        Ok(())
    }

    pub fn units(&self) -> CrtbpParams {
        CrtbpParams { mu: self.dynamics.mu, t_star_days: self.dynamics.t_star_days, l_star_km: self.dynamics.l_star_km }
    }

    /// 1σ noise of a measurement type, km for ranges and km/s for range-rate.
    pub fn measurement_sigma(&self, t: MeasurementType) -> f64 {
        let l = &self.link;
        match t {
            MeasurementType::RangeRate => l.range_rate_sigma_mm_s * 1e-6,
            _ if l.range_sigma_override_m.is_some() => l.range_sigma_override_m.unwrap_or_default() * 1e-3,
            MeasurementType::PnRange => pn_range_sigma_two_way(&l.pn, l.pn_combiner) * 1e-3,
            MeasurementType::TimeDerivedRange => time_derived_sigma_two_way(&l.time_derived, l.time_derived_combiner) * 1e-3,
        }
    }

    /// Link-budget Doppler error (m/s), for reports.
    pub fn doppler_sigma_m_s(&self) -> f64 {
        doppler_sigma(&self.link.doppler)
    }

    /// Filter epochs in non-dimensional time: 0, one cadence, ... up to the
    /// duration.
    pub fn epochs(&self) -> Vec<f64> {
        let units = self.units();
        let n = (self.dynamics.duration_days * 86_400.0 / self.link.cadence_s + 1e-9).floor() as usize;
        (0..=n).map(|k| units.seconds_to_nd(k as f64 * self.link.cadence_s)).collect()
    }

    /// Override the integrators of truth and filter with fixed RK4 steps.
    pub fn set_fixed_step(&mut self, seconds: f64) -> Result<()> {
        positive("fixed step", seconds)?;
        let rk4 = IntegratorConfig::rk4(self.units().seconds_to_nd(seconds));
        self.dynamics.integrator = rk4;
        self.filter.integrator = Some(rk4);
        Ok(())
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| {
        NavError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Read and validate a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| NavError::Io { path: path.to_path_buf(), source })?;
    let mut cfg = parse_scenario(&text).map_err(|e| match e {
        NavError::Config(msg) => NavError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    // Relative ephemeris paths resolve against the config file's directory.
    if let EphemerisSource::Csv { path: eph } = &mut cfg.dynamics.ephemeris {
        if eph.is_relative() {
            if let Some(dir) = path.parent() {
                *eph = dir.join(&*eph);
            }
        }
    }
    Ok(cfg)
}
