//! Point-mass gravity and cannonball solar radiation pressure, with the
//! position gradients needed for variational propagation.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::constants::{AU_KM, GM_EARTH, GM_MOON, GM_SUN, SOLAR_FLUX_1AU, SPEED_OF_LIGHT_M_S};
use crate::error::{NavError, Result};

use super::provider::{Body, EphemerisProvider};

/// Closest approach to a point mass treated as a collision (km).
const MIN_BODY_DISTANCE_KM: f64 = 1e-3;

/// Dimensional spacecraft state in the Earth-centered inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbodyState {
    /// Seconds past scenario start.
    pub epoch: f64,
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
}

/// Gravitational parameters (km³/s²). A zero entry removes the body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GmSet {
    pub earth: f64,
    pub moon: f64,
    pub sun: f64,
}

impl Default for GmSet {
    fn default() -> Self {
        Self { earth: GM_EARTH, moon: GM_MOON, sun: GM_SUN }
    }
}

impl GmSet {
    pub fn earth_only() -> Self {
        Self { earth: GM_EARTH, moon: 0.0, sun: 0.0 }
    }

    pub fn none() -> Self {
        Self { earth: 0.0, moon: 0.0, sun: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrpConfig {
    pub area: f64,
    pub reflectivity: f64,
    pub mass: f64,
    #[serde(default = "default_flux")]
    pub solar_flux_1au: f64,
    #[serde(default = "default_au")]
    pub au: f64,
}

fn default_flux() -> f64 {
    SOLAR_FLUX_1AU
}

fn default_au() -> f64 {
    AU_KM
}

impl SrpConfig {
    pub fn new(area: f64, reflectivity: f64, mass: f64) -> Self {
        Self { area, reflectivity, mass, solar_flux_1au: SOLAR_FLUX_1AU, au: AU_KM }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.area > 0.0 && self.mass > 0.0) {
            return Err(NavError::InvalidParameter("SRP area and mass must be positive".into()));
        }
        if !(1.0..=2.0).contains(&self.reflectivity) {
            return Err(NavError::InvalidParameter(format!(
                "reflectivity must lie in [1, 2], got {}",
                self.reflectivity
            )));
        }
        Ok(())
    }

    /// `C_r (Φ/c) AU² (A/m)` in km³/s², so that `a = k d̂ / |d|²`.
    fn strength(&self) -> f64 {
        // N/m² · m²/kg = m/s²; × 1e-3 → km/s²; × AU² (km²).
        self.reflectivity * (self.solar_flux_1au / SPEED_OF_LIGHT_M_S) * (self.area / self.mass) * 1e-3
            * self.au
            * self.au
    }
}

/// Force model options for N-body propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbodyModel {
    pub gm: GmSet,
    pub srp: Option<SrpConfig>,
}

impl Default for NbodyModel {
    fn default() -> Self {
        Self { gm: GmSet::default(), srp: None }
    }
}

fn checked_distance(d: &Vector3<f64>, body: &'static str) -> Result<f64> {
    let r = d.norm();
    if !(r >= MIN_BODY_DISTANCE_KM) {
        return Err(NavError::Singularity { body, distance: r });
    }
    Ok(r)
}

/// Acceleration of a point mass at `d` relative to a body, `−GM d/|d|³`.
fn kepler_term(gm: f64, d: &Vector3<f64>, body: &'static str) -> Result<Vector3<f64>> {
    let r = checked_distance(d, body)?;
    Ok(-gm * d / (r * r * r))
}

fn kepler_gradient(gm: f64, d: &Vector3<f64>, body: &'static str) -> Result<Matrix3<f64>> {
    let r = checked_distance(d, body)?;
    Ok(gm * (d * d.transpose() * (3.0 / r.powi(5)) - Matrix3::identity() / r.powi(3)))
}

/// Differential third-body acceleration on a spacecraft at `r` (Earth-centered).
pub fn third_body_accel(gm: f64, r: &Vector3<f64>, r_body: &Vector3<f64>, body: &'static str) -> Result<Vector3<f64>> {
    if gm == 0.0 {
        return Ok(Vector3::zeros());
    }
    let direct = kepler_term(gm, &(r - r_body), body)?;
    let indirect = kepler_term(gm, &(-r_body), body)?;
    Ok(direct - indirect)
}

/// Earth central gravity plus Moon and Sun third-body perturbations (km/s²).
pub fn point_mass_accel(s: &NbodyState, eph: &dyn EphemerisProvider, gm: &GmSet) -> Result<Vector3<f64>> {
    let mut a = Vector3::zeros();
    if gm.earth != 0.0 {
        a += kepler_term(gm.earth, &s.pos, "earth")?;
    }
    if gm.moon != 0.0 {
        let rm = eph.position(Body::Moon, s.epoch)?;
        a += third_body_accel(gm.moon, &s.pos, &rm, "moon")?;
    }
    if gm.sun != 0.0 {
        let rs = eph.position(Body::Sun, s.epoch)?;
        a += third_body_accel(gm.sun, &s.pos, &rs, "sun")?;
    }
    Ok(a)
}

/// ∂a/∂r of [`point_mass_accel`].
pub fn point_mass_gradient(s: &NbodyState, eph: &dyn EphemerisProvider, gm: &GmSet) -> Result<Matrix3<f64>> {
    let mut g = Matrix3::zeros();
    if gm.earth != 0.0 {
        g += kepler_gradient(gm.earth, &s.pos, "earth")?;
    }
    if gm.moon != 0.0 {
        let rm = eph.position(Body::Moon, s.epoch)?;
        g += kepler_gradient(gm.moon, &(s.pos - rm), "moon")?;
    }
    if gm.sun != 0.0 {
        let rs = eph.position(Body::Sun, s.epoch)?;
        g += kepler_gradient(gm.sun, &(s.pos - rs), "sun")?;
    }
    Ok(g)
}

/// Cannonball SRP acceleration (km/s²) directed away from the Sun. No shadow.
pub fn srp_accel(s: &NbodyState, eph: &dyn EphemerisProvider, cfg: &SrpConfig) -> Result<Vector3<f64>> {
    let d = s.pos - eph.position(Body::Sun, s.epoch)?;
    let r = d.norm();
    if r == 0.0 {
        return Err(NavError::Singularity { body: "sun", distance: 0.0 });
    }
    Ok(cfg.strength() * d / (r * r * r))
}

/// ∂a/∂r of [`srp_accel`].
pub fn srp_gradient(s: &NbodyState, eph: &dyn EphemerisProvider, cfg: &SrpConfig) -> Result<Matrix3<f64>> {
    let d = s.pos - eph.position(Body::Sun, s.epoch)?;
    let r = checked_distance(&d, "sun")?;
    Ok(cfg.strength() * (Matrix3::identity() / r.powi(3) - d * d.transpose() * (3.0 / r.powi(5))))
}

impl NbodyModel {
    pub fn acceleration(&self, s: &NbodyState, eph: &dyn EphemerisProvider) -> Result<Vector3<f64>> {
        let mut a = point_mass_accel(s, eph, &self.gm)?;
        if let Some(srp) = &self.srp {
            a += srp_accel(s, eph, srp)?;
        }
        Ok(a)
    }

    pub fn gradient(&self, s: &NbodyState, eph: &dyn EphemerisProvider) -> Result<Matrix3<f64>> {
        let mut g = point_mass_gradient(s, eph, &self.gm)?;
        if let Some(srp) = &self.srp {
            g += srp_gradient(s, eph, srp)?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ephemeris::AnalyticEphemeris;
    use approx::assert_relative_eq;

    fn state(pos: Vector3<f64>) -> NbodyState {
        NbodyState { epoch: 1234.0, pos, vel: Vector3::zeros() }
    }

    #[test]
    fn two_body_magnitude() {
        let eph = AnalyticEphemeris::default();
        let a = point_mass_accel(&state(Vector3::new(7000.0, 0.0, 0.0)), &eph, &GmSet::earth_only()).unwrap();
        assert_relative_eq!(a.norm(), 398_600.441_8 / 7000f64.powi(2), max_relative = 1e-14);
        assert!((a.norm() - 8.134_70e-3).abs() < 1e-8);
        assert!(a.x < 0.0);
    }

    #[test]
    fn no_sources_no_force() {
        let eph = AnalyticEphemeris::default();
        let a = point_mass_accel(&state(Vector3::new(1.0, 2.0, 3.0)), &eph, &GmSet::none()).unwrap();
        assert_eq!(a, Vector3::zeros());
    }

    #[test]
    fn third_body_vanishes_at_origin() {
        let rm = Vector3::new(384_400.0, 1000.0, -50.0);
        let a = third_body_accel(GM_MOON, &Vector3::zeros(), &rm, "moon").unwrap();
        assert_eq!(a, Vector3::zeros());
    }

    #[test]
    fn srp_magnitude_direction_and_scaling() {
        let eph = AnalyticEphemeris::default();
        let cfg = SrpConfig::new(0.41, 1.08, 22.0);
        let s = state(Vector3::zeros());
        let sun = eph.position(Body::Sun, s.epoch).unwrap();
        // Place the spacecraft exactly 1 AU from the Sun.
        let s1 = state(sun + (s.pos - sun).normalize() * AU_KM);
        let a = srp_accel(&s1, &eph, &cfg).unwrap();
        let expected_m_s2 = 1.08 * (1361.0 / 299_792_458.0) * (0.41 / 22.0);
        assert_relative_eq!(a.norm() * 1e3, expected_m_s2, max_relative = 1e-12);
        assert!((a.norm() * 1e3 - 9.14e-8).abs() < 1e-10);
        let u = (s1.pos - sun).normalize();
        assert_relative_eq!(a.dot(&u), a.norm(), max_relative = 1e-15);

        let s2 = state(sun + (s.pos - sun).normalize() * 2.0 * AU_KM);
        let a2 = srp_accel(&s2, &eph, &cfg).unwrap();
        assert_relative_eq!(a2.norm() / a.norm(), 0.25, max_relative = 1e-12);

        let zero_area = SrpConfig { area: 0.0, ..cfg };
        assert_eq!(srp_accel(&s1, &eph, &zero_area).unwrap(), Vector3::zeros());
        assert!(zero_area.validate().is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let eph = AnalyticEphemeris::default();
        let model = NbodyModel { gm: GmSet::default(), srp: Some(SrpConfig::new(3.0, 1.8, 280.0)) };
        let s = state(Vector3::new(380_000.0, 4_000.0, 2_500.0));
        let g = model.gradient(&s, &eph).unwrap();
        let h = 1e-2;
        for j in 0..3 {
            let mut sp = s;
            let mut sm = s;
            sp.pos[j] += h;
            sm.pos[j] -= h;
            let col = (model.acceleration(&sp, &eph).unwrap() - model.acceleration(&sm, &eph).unwrap()) / (2.0 * h);
            for i in 0..3 {
                assert_relative_eq!(g[(i, j)], col[i], max_relative = 1e-6, epsilon = 1e-18);
            }
        }
    }

    #[test]
    fn collision_is_singular() {
        let eph = AnalyticEphemeris::default();
        let r = point_mass_accel(&state(Vector3::zeros()), &eph, &GmSet::earth_only());
        assert!(matches!(r, Err(NavError::Singularity { body: "earth", .. })));
    }
}
