//! Circular restricted three-body dynamics in the Earth–Moon barycentric
//! rotating frame (non-dimensional units).

use nalgebra::{Matrix3, Matrix6, SVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::constants::{
    EARTH_MOON_L_STAR_KM, EARTH_MOON_MU, EARTH_MOON_T_STAR_DAYS, PRIMARY_EXCLUSION_RADIUS,
    SECONDS_PER_DAY,
};
use crate::error::{NavError, Result};
use crate::integrator::{integrate_nodes, IntegratorConfig};

use super::Dynamics;

/// Mass ratio and normalization units of a CRTBP system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrtbpParams {
    pub mu: f64,
    pub t_star_days: f64,
    pub l_star_km: f64,
}

impl Default for CrtbpParams {
    fn default() -> Self {
        Self::earth_moon()
    }
}

impl CrtbpParams {
    pub fn earth_moon() -> Self {
        Self {
            mu: EARTH_MOON_MU,
            t_star_days: EARTH_MOON_T_STAR_DAYS,
            l_star_km: EARTH_MOON_L_STAR_KM,
        }
    }

    pub fn new(mu: f64, t_star_days: f64, l_star_km: f64) -> Result<Self> {
        let p = Self { mu, t_star_days, l_star_km };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return Err(NavError::InvalidParameter(format!("mu must lie in (0, 0.5), got {}", self.mu)));
        }
        if !(self.t_star_days > 0.0 && self.l_star_km > 0.0) {
            return Err(NavError::InvalidParameter(
                "normalization units must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Time unit in seconds.
    pub fn t_star_s(&self) -> f64 {
        self.t_star_days * SECONDS_PER_DAY
    }

    /// Velocity unit in km/s.
    pub fn v_star_km_s(&self) -> f64 {
        self.l_star_km / self.t_star_s()
    }

    /// Acceleration unit in km/s².
    pub fn a_star_km_s2(&self) -> f64 {
        self.l_star_km / self.t_star_s().powi(2)
    }

    pub fn days_to_nd(&self, days: f64) -> f64 {
        days / self.t_star_days
    }

    pub fn nd_to_days(&self, t: f64) -> f64 {
        t * self.t_star_days
    }

    pub fn seconds_to_nd(&self, s: f64) -> f64 {
        s / self.t_star_s()
    }

    /// Barycentric rotating position of the Earth.
    pub fn earth_position(&self) -> Vector3<f64> {
        Vector3::new(-self.mu, 0.0, 0.0)
    }

    /// Barycentric rotating position of the Moon.
    pub fn moon_position(&self) -> Vector3<f64> {
        Vector3::new(1.0 - self.mu, 0.0, 0.0)
    }
}

/// Non-dimensional state in the barycentric rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatingState {
    pub epoch: f64,
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
}

impl RotatingState {
    pub fn new(epoch: f64, pos: Vector3<f64>, vel: Vector3<f64>) -> Self {
        Self { epoch, pos, vel }
    }

    pub fn from_vector(epoch: f64, x: &Vector6<f64>) -> Self {
        Self {
            epoch,
            pos: x.fixed_rows::<3>(0).into_owned(),
            vel: x.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn from_array(epoch: f64, x: [f64; 6]) -> Self {
        Self::from_vector(epoch, &Vector6::from(x))
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let mut x = Vector6::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.pos);
        x.fixed_rows_mut::<3>(3).copy_from(&self.vel);
        x
    }

    pub fn is_finite(&self) -> bool {
        self.pos.iter().chain(self.vel.iter()).all(|v| v.is_finite()) && self.epoch.is_finite()
    }
}

/// Rotating state paired with its state transition matrix from the start of
/// the propagation segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StmState {
    pub state: RotatingState,
    pub stm: Option<Matrix6<f64>>,
}

/// Distances to the Earth and Moon, rejecting near-collisions.
fn primary_distances(pos: &Vector3<f64>, mu: f64) -> Result<(Vector3<f64>, f64, Vector3<f64>, f64)> {
    let d1 = Vector3::new(pos.x + mu, pos.y, pos.z);
    let d2 = Vector3::new(pos.x + mu - 1.0, pos.y, pos.z);
    let r1 = d1.norm();
    let r2 = d2.norm();
    if !(r1 >= PRIMARY_EXCLUSION_RADIUS) {
        return Err(NavError::Singularity { body: "earth", distance: r1 });
    }
    if !(r2 >= PRIMARY_EXCLUSION_RADIUS) {
        return Err(NavError::Singularity { body: "moon", distance: r2 });
    }
    Ok((d1, r1, d2, r2))
}

fn derivative_vec(x: &Vector6<f64>, mu: f64) -> Result<Vector6<f64>> {
    let pos = Vector3::new(x[0], x[1], x[2]);
    let (_, r1, _, r2) = primary_distances(&pos, mu)?;
    let (vx, vy, vz) = (x[3], x[4], x[5]);
    let r1c = r1 * r1 * r1;
    let r2c = r2 * r2 * r2;
    let (px, py, pz) = (x[0], x[1], x[2]);
    let ax = 2.0 * vy + px - (1.0 - mu) * (px + mu) / r1c - mu * (px + mu - 1.0) / r2c;
    let ay = -2.0 * vx + (1.0 - (1.0 - mu) / r1c - mu / r2c) * py;
    let az = ((mu - 1.0) / r1c - mu / r2c) * pz;
    Ok(Vector6::new(vx, vy, vz, ax, ay, az))
}

fn jacobian_mat(x: &Vector6<f64>, mu: f64) -> Result<Matrix6<f64>> {
    let pos = Vector3::new(x[0], x[1], x[2]);
    let (d1, r1, d2, r2) = primary_distances(&pos, mu)?;
    let i3 = Matrix3::identity();
    let g1 = (i3 / r1.powi(3) - d1 * d1.transpose() * (3.0 / r1.powi(5))) * (1.0 - mu);
    let g2 = (i3 / r2.powi(3) - d2 * d2.transpose() * (3.0 / r2.powi(5))) * mu;
    let gravity = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0)) - g1 - g2;

    let mut a = Matrix6::zeros();
    a.fixed_view_mut::<3, 3>(0, 3).copy_from(&i3);
    a.fixed_view_mut::<3, 3>(3, 0).copy_from(&gravity);
    a[(3, 4)] = 2.0;
    a[(4, 3)] = -2.0;
    Ok(a)
}

/// Time derivative of a rotating state.
pub fn crtbp_derivative(s: &RotatingState, p: &CrtbpParams) -> Result<Vector6<f64>> {
    derivative_vec(&s.to_vector(), p.mu)
}

/// Partial derivatives of [`crtbp_derivative`] with respect to the state.
pub fn crtbp_jacobian(s: &RotatingState, p: &CrtbpParams) -> Result<Matrix6<f64>> {
    jacobian_mat(&s.to_vector(), p.mu)
}

/// Jacobi integral `C = x² + y² + 2(1−μ)/r1 + 2μ/r2 − v²`.
pub fn jacobi_constant(s: &RotatingState, p: &CrtbpParams) -> Result<f64> {
    let (_, r1, _, r2) = primary_distances(&s.pos, p.mu)?;
    Ok(s.pos.x.powi(2) + s.pos.y.powi(2) + 2.0 * (1.0 - p.mu) / r1 + 2.0 * p.mu / r2
        - s.vel.norm_squared())
}

type Augmented = SVector<f64, 42>;

fn pack(x: &Vector6<f64>, phi: &Matrix6<f64>) -> Augmented {
    let mut y = Augmented::zeros();
    y.fixed_rows_mut::<6>(0).copy_from(x);
    y.fixed_rows_mut::<36>(6).copy_from_slice(phi.as_slice());
    y
}

fn unpack(y: &Augmented) -> (Vector6<f64>, Matrix6<f64>) {
    let x = y.fixed_rows::<6>(0).into_owned();
    let phi = Matrix6::from_column_slice(y.fixed_rows::<36>(6).as_slice());
    (x, phi)
}

/// Propagate `s0` to each epoch in `nodes` (absolute non-dimensional times).
///
/// With `with_stm`, the variational equations are integrated alongside the
/// state and every returned STM maps perturbations at `s0.epoch` to the node.
pub fn propagate(
    s0: &RotatingState,
    nodes: &[f64],
    cfg: &IntegratorConfig,
    p: &CrtbpParams,
    with_stm: bool,
) -> Result<Vec<StmState>> {
    if !s0.is_finite() {
        return Err(NavError::InvalidParameter("non-finite initial state".into()));
    }
    let mu = p.mu;
    if with_stm {
        let y0 = pack(&s0.to_vector(), &Matrix6::identity());
        let ys = integrate_nodes(
            |_t, y: &Augmented| {
                let (x, phi) = unpack(y);
                let dx = derivative_vec(&x, mu)?;
                let dphi = jacobian_mat(&x, mu)? * phi;
                Ok(pack(&dx, &dphi))
            },
            s0.epoch,
            y0,
            nodes,
            cfg,
        )?;
        Ok(nodes
            .iter()
            .zip(ys)
            .map(|(&t, y)| {
                let (x, phi) = unpack(&y);
                StmState { state: RotatingState::from_vector(t, &x), stm: Some(phi) }
            })
            .collect())
    } else {
        let ys = integrate_nodes(|_t, x: &Vector6<f64>| derivative_vec(x, mu), s0.epoch, s0.to_vector(), nodes, cfg)?;
        Ok(nodes
            .iter()
            .zip(ys)
            .map(|(&t, x)| StmState { state: RotatingState::from_vector(t, &x), stm: None })
            .collect())
    }
}

/// CRTBP flow and STM as a filter dynamics model.
#[derive(Debug, Clone)]
pub struct CrtbpDynamics {
    pub params: CrtbpParams,
    pub integrator: IntegratorConfig,
}

impl CrtbpDynamics {
    pub fn new(params: CrtbpParams, integrator: IntegratorConfig) -> Self {
        Self { params, integrator }
    }
}

impl Dynamics for CrtbpDynamics {
    fn transition(&self, x: &Vector6<f64>, t0: f64, t1: f64) -> Result<(Vector6<f64>, Matrix6<f64>)> {
        let out = propagate(&RotatingState::from_vector(t0, x), &[t1], &self.integrator, &self.params, true)?;
        let s = out[0];
        Ok((s.state.to_vector(), s.stm.expect("stm requested")))
    }

    fn flow(&self, x: &Vector6<f64>, t0: f64, t1: f64) -> Result<Vector6<f64>> {
        let out = propagate(&RotatingState::from_vector(t0, x), &[t1], &self.integrator, &self.params, false)?;
        Ok(out[0].state.to_vector())
    }

    fn trajectory(
        &self,
        x0: &Vector6<f64>,
        t0: f64,
        nodes: &[f64],
        with_stm: bool,
    ) -> Result<Vec<(Vector6<f64>, Option<Matrix6<f64>>)>> {
        let out = propagate(&RotatingState::from_vector(t0, x0), nodes, &self.integrator, &self.params, with_stm)?;
        Ok(out.into_iter().map(|s| (s.state.to_vector(), s.stm)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p() -> CrtbpParams {
        CrtbpParams::earth_moon()
    }

    /// Effective potential Ω = (x²+y²)/2 + (1−μ)/r1 + μ/r2, coded independently.
    fn potential(x: f64, y: f64, z: f64, mu: f64) -> f64 {
        let r1 = ((x + mu).powi(2) + y * y + z * z).sqrt();
        let r2 = ((x + mu - 1.0).powi(2) + y * y + z * z).sqrt();
        0.5 * (x * x + y * y) + (1.0 - mu) / r1 + mu / r2
    }

    /// Collinear equilibrium between the primaries by bisection on the
    /// on-axis acceleration.
    fn l1_bisection(mu: f64) -> f64 {
        let f = |x: f64| {
            let h = 1e-6;
            (potential(x + h, 0.0, 0.0, mu) - potential(x - h, 0.0, 0.0, mu)) / (2.0 * h)
        };
        let (mut lo, mut hi) = (0.5, 1.0 - mu - 1e-3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn planar_on_axis_state_has_no_out_of_axis_acceleration() {
        let s = RotatingState::from_array(0.0, [1.2, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let d = crtbp_derivative(&s, &p()).unwrap();
        assert_eq!(d[4], 0.0);
        assert_eq!(d[5], 0.0);
    }

    #[test]
    fn l1_is_an_equilibrium() {
        let x_l1 = l1_bisection(p().mu);
        // Frozen oracle value.
        assert!((x_l1 - 0.836_918_007_3).abs() < 1e-8);
        let s = RotatingState::from_array(0.0, [x_l1, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let d = crtbp_derivative(&s, &p()).unwrap();
        assert!(d.norm() < 1e-8, "{d}");
    }

    #[test]
    fn acceleration_matches_potential_gradient() {
        let mu = p().mu;
        let s = RotatingState::from_array(0.0, [0.5, 0.5, 0.1, 0.01, 0.01, 0.0]);
        let d = crtbp_derivative(&s, &p()).unwrap();
        let h = 1e-5;
        let (x, y, z) = (0.5, 0.5, 0.1);
        let gx = (potential(x + h, y, z, mu) - potential(x - h, y, z, mu)) / (2.0 * h);
        let gy = (potential(x, y + h, z, mu) - potential(x, y - h, z, mu)) / (2.0 * h);
        let gz = (potential(x, y, z + h, mu) - potential(x, y, z - h, mu)) / (2.0 * h);
        // ẍ = 2ẏ + Ωx, ÿ = −2ẋ + Ωy, z̈ = Ωz
        assert!((d[3] - (2.0 * 0.01 + gx)).abs() < 1e-10);
        assert!((d[4] - (-2.0 * 0.01 + gy)).abs() < 1e-10);
        assert!((d[5] - gz).abs() < 1e-10);
    }

    #[test]
    fn jacobian_structure_and_planar_decoupling() {
        let s = RotatingState::from_array(0.0, [0.9, 0.1, 0.0, 0.02, -0.1, 0.0]);
        let a = crtbp_jacobian(&s, &p()).unwrap();
        assert_eq!(a.fixed_view::<3, 3>(0, 3).into_owned(), Matrix3::identity());
        assert_eq!(a.fixed_view::<3, 3>(0, 0).into_owned(), Matrix3::zeros());
        assert_eq!(a[(5, 0)], 0.0);
        assert_eq!(a[(5, 1)], 0.0);
        let coriolis = a.fixed_view::<3, 3>(3, 3).into_owned();
        assert_eq!(coriolis, Matrix3::new(0.0, 2.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let s = RotatingState::from_array(0.0, [1.1, -0.05, 0.12, 0.01, -0.2, 0.03]);
        let a = crtbp_jacobian(&s, &p()).unwrap();
        let x = s.to_vector();
        for j in 0..6 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let col = (derivative_vec(&xp, p().mu).unwrap() - derivative_vec(&xm, p().mu).unwrap()) / (2.0 * h);
            for i in 0..6 {
                assert_relative_eq!(a[(i, j)], col[i], epsilon = 1e-7, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn singularity_rejected() {
        let s = RotatingState::from_array(0.0, [1.0 - p().mu, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(crtbp_derivative(&s, &p()), Err(NavError::Singularity { body: "moon", .. })));
        let s = RotatingState::from_array(0.0, [-p().mu + 1e-12, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(crtbp_jacobian(&s, &p()), Err(NavError::Singularity { body: "earth", .. })));
        assert!(jacobi_constant(&s, &p()).is_err());
    }

    #[test]
    fn jacobi_of_lumio_state() {
        let s = RotatingState::from_array(0.0, [1.1473302, 0.0, -0.15142308, 0.0, -0.21994554, 0.0]);
        let c = jacobi_constant(&s, &p()).unwrap();
        // Direct evaluation of the stated convention.
        assert!((c - 3.068_093_283).abs() < 1e-8, "{c}");
    }

    #[test]
    fn jacobi_symmetric_under_mirror() {
        let s = RotatingState::from_array(0.0, [0.9, 0.2, 0.05, 0.1, -0.3, 0.02]);
        // (x, y, z, ẋ, ẏ, ż, t) → (x, −y, z, −ẋ, ẏ, −ż, −t)
        let m = RotatingState::from_array(0.0, [0.9, -0.2, 0.05, -0.1, -0.3, -0.02]);
        assert_relative_eq!(jacobi_constant(&s, &p()).unwrap(), jacobi_constant(&m, &p()).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn zero_span_returns_initial_state_and_identity() {
        let s0 = RotatingState::from_array(0.3, [1.1473302, 0.0, -0.15142308, 0.0, -0.21994554, 0.0]);
        let out = propagate(&s0, &[0.3], &IntegratorConfig::default(), &p(), true).unwrap();
        assert_eq!(out[0].state, s0);
        assert_eq!(out[0].stm.unwrap(), Matrix6::identity());
    }

    #[test]
    fn planar_motion_stays_planar() {
        let s0 = RotatingState::from_array(0.0, [0.85, 0.0, 0.0, 0.0, 0.15, 0.0]);
        let out = propagate(&s0, &[0.5, 1.0], &IntegratorConfig::default(), &p(), false).unwrap();
        for s in out {
            assert!(s.state.pos.z.abs() < 1e-12 && s.state.vel.z.abs() < 1e-12);
        }
    }
}
