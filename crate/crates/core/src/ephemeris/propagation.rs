//! N-body propagation. Integration runs in Earth-centered inertial
//! coordinates scaled by the Earth–Moon units so the same integrator
//! tolerances apply to both dynamics models.

use std::sync::Arc;

use nalgebra::{Matrix3, Matrix6, SVector, Vector3, Vector6};

use crate::dynamics::frames::{rotation, rotation_rate};
use crate::dynamics::{CrtbpParams, Dynamics, RotatingState};
use crate::error::Result;
use crate::integrator::{integrate_nodes, IntegratorConfig};

use super::forces::{NbodyModel, NbodyState};
use super::provider::EphemerisProvider;

type Augmented = SVector<f64, 42>;

/// N-body force model bound to an ephemeris and a unit system.
#[derive(Debug, Clone)]
pub struct NbodyPropagator {
    pub model: NbodyModel,
    pub ephemeris: Arc<dyn EphemerisProvider>,
    pub units: CrtbpParams,
    pub integrator: IntegratorConfig,
}

impl NbodyPropagator {
    pub fn new(
        model: NbodyModel,
        ephemeris: Arc<dyn EphemerisProvider>,
        units: CrtbpParams,
        integrator: IntegratorConfig,
    ) -> Self {
        Self { model, ephemeris, units, integrator }
    }

    fn scaled_state(&self, tau: f64, y: &Vector6<f64>) -> NbodyState {
        NbodyState {
            epoch: tau * self.units.t_star_s(),
            pos: Vector3::new(y[0], y[1], y[2]) * self.units.l_star_km,
            vel: Vector3::new(y[3], y[4], y[5]) * self.units.v_star_km_s(),
        }
    }

    fn derivative(&self, tau: f64, y: &Vector6<f64>) -> Result<Vector6<f64>> {
        let s = self.scaled_state(tau, y);
        let a = self.model.acceleration(&s, self.ephemeris.as_ref())? / self.units.a_star_km_s2();
        Ok(Vector6::new(y[3], y[4], y[5], a.x, a.y, a.z))
    }

    fn variational(&self, tau: f64, aug: &Augmented) -> Result<Augmented> {
        let y = aug.fixed_rows::<6>(0).into_owned();
        let phi = Matrix6::from_column_slice(aug.fixed_rows::<36>(6).as_slice());
        let dy = self.derivative(tau, &y)?;
        let g = self.model.gradient(&self.scaled_state(tau, &y), self.ephemeris.as_ref())?
            * self.units.t_star_s().powi(2);
        let mut a = Matrix6::zeros();
        a.fixed_view_mut::<3, 3>(0, 3).copy_from(&Matrix3::identity());
        a.fixed_view_mut::<3, 3>(3, 0).copy_from(&g);
        let dphi = a * phi;
        let mut out = Augmented::zeros();
        out.fixed_rows_mut::<6>(0).copy_from(&dy);
        out.fixed_rows_mut::<36>(6).copy_from_slice(dphi.as_slice());
        Ok(out)
    }

    /// Propagate a scaled ECI state between non-dimensional epochs.
    fn propagate_scaled(
        &self,
        y0: &Vector6<f64>,
        tau0: f64,
        nodes: &[f64],
        with_stm: bool,
    ) -> Result<Vec<(Vector6<f64>, Option<Matrix6<f64>>)>> {
        if with_stm {
            let mut aug = Augmented::zeros();
            aug.fixed_rows_mut::<6>(0).copy_from(y0);
            aug.fixed_rows_mut::<36>(6).copy_from_slice(Matrix6::<f64>::identity().as_slice());
            let out = integrate_nodes(|t, a: &Augmented| self.variational(t, a), tau0, aug, nodes, &self.integrator)?;
            Ok(out
                .into_iter()
                .map(|a| {
                    (
                        a.fixed_rows::<6>(0).into_owned(),
                        Some(Matrix6::from_column_slice(a.fixed_rows::<36>(6).as_slice())),
                    )
                })
                .collect())
        } else {
            let out = integrate_nodes(|t, y: &Vector6<f64>| self.derivative(t, y), tau0, *y0, nodes, &self.integrator)?;
            Ok(out.into_iter().map(|y| (y, None)).collect())
        }
    }

    fn scale(&self) -> Matrix6<f64> {
        Matrix6::from_diagonal(&Vector6::new(
            self.units.l_star_km,
            self.units.l_star_km,
            self.units.l_star_km,
            self.units.v_star_km_s(),
            self.units.v_star_km_s(),
            self.units.v_star_km_s(),
        ))
    }
}

/// Propagate a dimensional ECI state to each epoch (seconds past scenario
/// start). Returned STMs are dimensional (km, km/s) and referenced to `s0`.
pub fn propagate_nbody(
    s0: &NbodyState,
    epochs_s: &[f64],
    prop: &NbodyPropagator,
    with_stm: bool,
) -> Result<Vec<(NbodyState, Option<Matrix6<f64>>)>> {
    let ts = prop.units.t_star_s();
    let y0 = Vector6::new(
        s0.pos.x / prop.units.l_star_km,
        s0.pos.y / prop.units.l_star_km,
        s0.pos.z / prop.units.l_star_km,
        s0.vel.x / prop.units.v_star_km_s(),
        s0.vel.y / prop.units.v_star_km_s(),
        s0.vel.z / prop.units.v_star_km_s(),
    );
    let nodes: Vec<f64> = epochs_s.iter().map(|t| t / ts).collect();
    let d = prop.scale();
    let d_inv = d.try_inverse().expect("positive diagonal");
    let out = prop.propagate_scaled(&y0, s0.epoch / ts, &nodes, with_stm)?;
    Ok(out
        .into_iter()
        .zip(&nodes)
        .map(|((y, phi), &tau)| (prop.scaled_state(tau, &y), phi.map(|p| d * p * d_inv)))
        .collect())
}

fn frame_matrix(tau: f64) -> Matrix6<f64> {
    let l = rotation(tau);
    let ld = rotation_rate(tau);
    let mut t = Matrix6::zeros();
    t.fixed_view_mut::<3, 3>(0, 0).copy_from(&l);
    t.fixed_view_mut::<3, 3>(3, 0).copy_from(&ld);
    t.fixed_view_mut::<3, 3>(3, 3).copy_from(&l);
    t
}

fn frame_matrix_inverse(tau: f64) -> Matrix6<f64> {
    let lt = rotation(tau).transpose();
    let ld = rotation_rate(tau);
    let mut t = Matrix6::zeros();
    t.fixed_view_mut::<3, 3>(0, 0).copy_from(&lt);
    t.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-lt * ld * lt));
    t.fixed_view_mut::<3, 3>(3, 3).copy_from(&lt);
    t
}

/// Barycentric rotating (non-dimensional) → Earth-centered inertial (km, km/s).
/// The rotating frame is the idealized one: Earth fixed at (−μ, 0, 0),
/// uniform unit rotation rate.
pub fn rotating_to_eci(s: &RotatingState, units: &CrtbpParams) -> NbodyState {
    let mut x = s.to_vector();
    x[0] += units.mu;
    let y = frame_matrix(s.epoch) * x;
    NbodyState {
        epoch: s.epoch * units.t_star_s(),
        pos: Vector3::new(y[0], y[1], y[2]) * units.l_star_km,
        vel: Vector3::new(y[3], y[4], y[5]) * units.v_star_km_s(),
    }
}

/// Inverse of [`rotating_to_eci`].
pub fn eci_to_rotating(s: &NbodyState, units: &CrtbpParams) -> RotatingState {
    let tau = s.epoch / units.t_star_s();
    let y = Vector6::new(
        s.pos.x / units.l_star_km,
        s.pos.y / units.l_star_km,
        s.pos.z / units.l_star_km,
        s.vel.x / units.v_star_km_s(),
        s.vel.y / units.v_star_km_s(),
        s.vel.z / units.v_star_km_s(),
    );
    let mut x = frame_matrix_inverse(tau) * y;
    x[0] -= units.mu;
    RotatingState::from_vector(tau, &x)
}

/// N-body flow expressed in barycentric rotating non-dimensional coordinates,
/// for filters that estimate in that frame.
#[derive(Debug, Clone)]
pub struct NbodyDynamics {
    pub propagator: NbodyPropagator,
}

impl NbodyDynamics {
    pub fn new(propagator: NbodyPropagator) -> Self {
        Self { propagator }
    }

    fn to_scaled(&self, x: &Vector6<f64>, tau: f64) -> Vector6<f64> {
        let mut x = *x;
        x[0] += self.propagator.units.mu;
        frame_matrix(tau) * x
    }

    fn from_scaled(&self, y: &Vector6<f64>, tau: f64) -> Vector6<f64> {
        let mut x = frame_matrix_inverse(tau) * y;
        x[0] -= self.propagator.units.mu;
        x
    }
}

impl Dynamics for NbodyDynamics {
    fn transition(&self, x: &Vector6<f64>, t0: f64, t1: f64) -> Result<(Vector6<f64>, Matrix6<f64>)> {
        let y0 = self.to_scaled(x, t0);
        let (y1, phi) = self.propagator.propagate_scaled(&y0, t0, &[t1], true)?.remove(0);
        let phi_rot = frame_matrix_inverse(t1) * phi.expect("stm requested") * frame_matrix(t0);
        Ok((self.from_scaled(&y1, t1), phi_rot))
    }

    fn flow(&self, x: &Vector6<f64>, t0: f64, t1: f64) -> Result<Vector6<f64>> {
        let y0 = self.to_scaled(x, t0);
        let (y1, _) = self.propagator.propagate_scaled(&y0, t0, &[t1], false)?.remove(0);
        Ok(self.from_scaled(&y1, t1))
    }

    fn trajectory(
        &self,
        x0: &Vector6<f64>,
        t0: f64,
        nodes: &[f64],
        with_stm: bool,
    ) -> Result<Vec<(Vector6<f64>, Option<Matrix6<f64>>)>> {
        let y0 = self.to_scaled(x0, t0);
        let t_frame0 = frame_matrix(t0);
        let out = self.propagator.propagate_scaled(&y0, t0, nodes, with_stm)?;
        Ok(out
            .into_iter()
            .zip(nodes)
            .map(|((y, phi), &t)| (self.from_scaled(&y, t), phi.map(|p| frame_matrix_inverse(t) * p * t_frame0)))
            .collect())
    }
}
