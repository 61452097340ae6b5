//! Dynamics construction, initial conditions and the reference trajectory.

use std::sync::Arc;

use nalgebra::{Matrix6, Vector3, Vector6};

use super::config::{DynamicsModel, EphemerisSource, ScenarioConfig, SpacecraftConfig};
use crate::dynamics::{
    barycentric_to_mci, kepler_to_cartesian, mci_to_barycentric, CrtbpDynamics, Dynamics, RotatingState,
};
use crate::ephemeris::{
    eci_to_rotating, rotating_to_eci, Body, EphemerisProvider, NbodyDynamics, NbodyModel, NbodyPropagator,
    NbodyState, TabulatedEphemeris,
};
use crate::error::{NavError, Result};
use crate::integrator::IntegratorConfig;

/// Dynamics of both spacecraft, halo orbiter first.
pub type DynamicsPair = [Arc<dyn Dynamics>; 2];

pub fn ephemeris_provider(cfg: &ScenarioConfig) -> Result<Arc<dyn EphemerisProvider>> {
    Ok(match &cfg.dynamics.ephemeris {
        EphemerisSource::Analytic(a) => Arc::new(*a),
        EphemerisSource::Csv { path } => Arc::new(TabulatedEphemeris::from_path(path)?),
    })
}

/// Build the flow of each spacecraft with the given integrator.
pub fn build_dynamics(cfg: &ScenarioConfig, integrator: IntegratorConfig) -> Result<DynamicsPair> {
    let units = cfg.units();
    match cfg.dynamics.model {
        DynamicsModel::Crtbp => {
            let d: Arc<dyn Dynamics> = Arc::new(CrtbpDynamics::new(units, integrator));
            Ok([d.clone(), d])
        }
        DynamicsModel::Nbody => {
            let eph = ephemeris_provider(cfg)?;
            let make = |sc: &SpacecraftConfig| -> Result<Arc<dyn Dynamics>> {
                let srp = if cfg.dynamics.srp {
                    let s = sc.srp.to_config();
                    s.validate()?;
                    Some(s)
                } else {
                    None
                };
                let model = NbodyModel { gm: cfg.dynamics.gm, srp };
                Ok(Arc::new(NbodyDynamics::new(NbodyPropagator::new(model, eph.clone(), units, integrator))))
            };
            Ok([make(&cfg.spacecraft.lumio)?, make(&cfg.spacecraft.lpf)?])
        }
    }
}

/// Truth-side dynamics.
pub fn truth_dynamics(cfg: &ScenarioConfig) -> Result<DynamicsPair> {
    build_dynamics(cfg, cfg.dynamics.integrator)
}

/// Filter-side dynamics: the truth model, possibly with its own integrator.
pub fn filter_dynamics(cfg: &ScenarioConfig) -> Result<DynamicsPair> {
    build_dynamics(cfg, cfg.filter.integrator.unwrap_or(cfg.dynamics.integrator))
}

/// Moon-centered inertial state of one spacecraft (km, km/s).
fn mci_state(sc: &SpacecraftConfig, cfg: &ScenarioConfig, prefer_elements: bool) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let units = cfg.units();
    let elements = sc.mci_elements.as_ref().filter(|_| prefer_elements || sc.state.is_none());
    if let Some(k) = elements {
        let c = kepler_to_cartesian(k)?;
        return Ok((c.pos, c.vel));
    }
    let s = sc.state.ok_or_else(|| NavError::Config("spacecraft needs `state` or `mci_elements`".into()))?;
    let c = barycentric_to_mci(&RotatingState::from_array(0.0, s), &units);
    Ok((c.pos, c.vel))
}

fn initial_state(sc: &SpacecraftConfig, cfg: &ScenarioConfig) -> Result<Vector6<f64>> {
    let units = cfg.units();
    match cfg.dynamics.model {
        DynamicsModel::Crtbp => match (&sc.state, &sc.mci_elements) {
            (Some(s), _) => Ok(Vector6::from_column_slice(s)),
            (None, Some(k)) => Ok(mci_to_barycentric(&kepler_to_cartesian(k)?, 0.0, &units).to_vector()),
            (None, None) => Err(NavError::Config("spacecraft needs `state` or `mci_elements`".into())),
        },
        DynamicsModel::Nbody => {
            // Moon-relative states are kept and re-anchored on the ephemeris Moon.
            let eph = ephemeris_provider(cfg)?;
            let (pos, vel) = mci_state(sc, cfg, true)?;
            let moon = NbodyState {
                epoch: 0.0,
                pos: eph.position(Body::Moon, 0.0)?,
                vel: eph.velocity(Body::Moon, 0.0)?,
            };
            let eci = NbodyState { epoch: 0.0, pos: moon.pos + pos, vel: moon.vel + vel };
            Ok(eci_to_rotating(&eci, &units).to_vector())
        }
    }
}

/// Initial joint state in barycentric rotating non-dimensional coordinates.
pub fn initial_states(cfg: &ScenarioConfig) -> Result<[Vector6<f64>; 2]> {
    Ok([initial_state(&cfg.spacecraft.lumio, cfg)?, initial_state(&cfg.spacecraft.lpf, cfg)?])
}

/// Reference trajectory on the filter epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTrajectory {
    /// Non-dimensional epochs, starting at 0.
    pub epochs: Vec<f64>,
    pub states: Vec<[Vector6<f64>; 2]>,
    /// `Φ(t_k, t_0)` per spacecraft.
    pub stms: Option<Vec<[Matrix6<f64>; 2]>>,
}

impl TruthTrajectory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }
}

pub fn propagate_truth(
    dynamics: &DynamicsPair,
    x0: &[Vector6<f64>; 2],
    epochs: &[f64],
    with_stm: bool,
) -> Result<TruthTrajectory> {
    let t0 = *epochs.first().ok_or_else(|| NavError::InvalidParameter("no epochs".into()))?;
    let arcs = [
        dynamics[0].trajectory(&x0[0], t0, &epochs[1..], with_stm)?,
        dynamics[1].trajectory(&x0[1], t0, &epochs[1..], with_stm)?,
    ];
    let mut states = Vec::with_capacity(epochs.len());
    states.push(*x0);
    let mut stms = with_stm.then(|| {
        let mut v = Vec::with_capacity(epochs.len());
        v.push([Matrix6::identity(); 2]);
        v
    });
    for k in 0..epochs.len() - 1 {
        states.push([arcs[0][k].0, arcs[1][k].0]);
        if let Some(stms) = stms.as_mut() {
            let phi = |j: usize| arcs[j][k].1.ok_or_else(|| NavError::InvalidParameter("STM missing".into()));
            stms.push([phi(0)?, phi(1)?]);
        }
    }
    Ok(TruthTrajectory { epochs: epochs.to_vec(), states, stms })
}

/// Truth trajectory of a scenario on its filter epochs.
pub fn generate_truth(cfg: &ScenarioConfig, with_stm: bool) -> Result<TruthTrajectory> {
    let dynamics = truth_dynamics(cfg)?;
    propagate_truth(&dynamics, &initial_states(cfg)?, &cfg.epochs(), with_stm)
}

/// Earth-centered inertial form of a rotating state (km, km/s).
pub fn to_eci(x: &Vector6<f64>, epoch: f64, cfg: &ScenarioConfig) -> NbodyState {
    rotating_to_eci(&RotatingState::from_vector(epoch, x), &cfg.units())
}
