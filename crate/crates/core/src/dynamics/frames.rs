//! Rotating/inertial frame transforms, primary-centered shifts and the
//! Keplerian-element ingestion path for body-centered initial states.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{NavError, Result};

use super::crtbp::{CrtbpParams, RotatingState};

/// Non-dimensional state in the barycentric inertial frame. The inertial
/// axes coincide with the rotating axes at epoch zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertialState {
    pub epoch: f64,
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
}

/// Dimensional body-centered inertial state (km, km/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
}

/// Classical orbital elements. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeplerianElements {
    pub sma: f64,
    pub ecc: f64,
    pub inc: f64,
    pub raan: f64,
    pub argp: f64,
    pub true_anomaly: f64,
    /// km³/s²; lunar by default.
    #[serde(default = "lunar_gm")]
    pub central_gm: f64,
}

fn lunar_gm() -> f64 {
    crate::constants::GM_MOON
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Center {
    Barycenter,
    Moon,
    Earth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDirection {
    /// Barycentric → center-relative.
    ToCenter,
    /// Center-relative → barycentric.
    FromCenter,
}

/// Rotation from rotating to inertial axes at non-dimensional time `t`.
pub fn rotation(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Time derivative of [`rotation`]. The (3,3) entry is zero.
pub fn rotation_rate(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

pub fn rot_to_inertial(s: &RotatingState) -> InertialState {
    let l = rotation(s.epoch);
    let ld = rotation_rate(s.epoch);
    InertialState { epoch: s.epoch, pos: l * s.pos, vel: ld * s.pos + l * s.vel }
}

pub fn inertial_to_rot(s: &InertialState) -> RotatingState {
    let lt = rotation(s.epoch).transpose();
    let ld = rotation_rate(s.epoch);
    let pos = lt * s.pos;
    RotatingState { epoch: s.epoch, pos, vel: lt * (s.vel - ld * pos) }
}

fn center_position(center: Center, p: &CrtbpParams) -> Vector3<f64> {
    match center {
        Center::Barycenter => Vector3::zeros(),
        Center::Moon => p.moon_position(),
        Center::Earth => p.earth_position(),
    }
}

/// Translate a rotating state to or from a primary-centered origin. Velocity
/// is unchanged because the primaries are fixed in the rotating frame.
pub fn shift_frame(s: &RotatingState, center: Center, direction: ShiftDirection, p: &CrtbpParams) -> RotatingState {
    let offset = center_position(center, p);
    let pos = match direction {
        ShiftDirection::ToCenter => s.pos - offset,
        ShiftDirection::FromCenter => s.pos + offset,
    };
    RotatingState { pos, ..*s }
}

impl KeplerianElements {
    pub fn validate(&self) -> Result<()> {
        if !(self.central_gm > 0.0) {
            return Err(NavError::InvalidParameter("central_gm must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.ecc) {
            return Err(NavError::UnsupportedOrbit(format!(
                "only elliptical orbits are supported (e = {})",
                self.ecc
            )));
        }
        if !(self.sma * (1.0 - self.ecc) > 0.0) {
            return Err(NavError::UnsupportedOrbit(format!("non-positive periapsis (a = {})", self.sma)));
        }
        Ok(())
    }
}

/// Elements → body-centered inertial position/velocity.
pub fn kepler_to_cartesian(k: &KeplerianElements) -> Result<CartesianState> {
    k.validate()?;
    let (inc, raan, argp, nu) = (
        k.inc.to_radians(),
        k.raan.to_radians(),
        k.argp.to_radians(),
        k.true_anomaly.to_radians(),
    );
    let p = k.sma * (1.0 - k.ecc * k.ecc);
    let r = p / (1.0 + k.ecc * nu.cos());
    let r_pf = Vector3::new(r * nu.cos(), r * nu.sin(), 0.0);
    let vf = (k.central_gm / p).sqrt();
    let v_pf = Vector3::new(-vf * nu.sin(), vf * (k.ecc + nu.cos()), 0.0);

    let (so, co) = raan.sin_cos();
    let (sw, cw) = argp.sin_cos();
    let (si, ci) = inc.sin_cos();
    let rot = Matrix3::new(
        co * cw - so * sw * ci,
        -co * sw - so * cw * ci,
        so * si,
        so * cw + co * sw * ci,
        -so * sw + co * cw * ci,
        -co * si,
        sw * si,
        cw * si,
        ci,
    );
    Ok(CartesianState { pos: rot * r_pf, vel: rot * v_pf })
}

/// Primary-centered inertial (km, km/s) → barycentric rotating (non-dimensional).
///
/// The state is non-dimensionalized, rotated into the rotating frame and then
/// shifted from the primary to the barycenter.
pub fn body_inertial_to_rotating(s: &CartesianState, center: Center, epoch: f64, p: &CrtbpParams) -> RotatingState {
    let nd = InertialState { epoch, pos: s.pos / p.l_star_km, vel: s.vel / p.v_star_km_s() };
    let centered = inertial_to_rot(&nd);
    shift_frame(&centered, center, ShiftDirection::FromCenter, p)
}

/// Inverse of [`body_inertial_to_rotating`].
pub fn rotating_to_body_inertial(s: &RotatingState, center: Center, p: &CrtbpParams) -> CartesianState {
    let centered = shift_frame(s, center, ShiftDirection::ToCenter, p);
    let nd = rot_to_inertial(&centered);
    CartesianState { pos: nd.pos * p.l_star_km, vel: nd.vel * p.v_star_km_s() }
}

pub fn mci_to_barycentric(s: &CartesianState, epoch: f64, p: &CrtbpParams) -> RotatingState {
    body_inertial_to_rotating(s, Center::Moon, epoch, p)
}

pub fn barycentric_to_mci(s: &RotatingState, p: &CrtbpParams) -> CartesianState {
    rotating_to_body_inertial(s, Center::Moon, p)
}
