//! Body position providers for the point-mass force model.
//!
//! All positions are Earth-centered inertial (km), with axes aligned to the
//! Earth–Moon rotating frame at scenario epoch zero: x toward the Moon, z along
//! the lunar orbit normal.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::constants::{AU_KM, EARTH_MOON_L_STAR_KM, GM_EARTH, GM_MOON, SECONDS_PER_DAY};
use crate::error::{NavError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Body {
    Earth,
    Moon,
    Sun,
}

impl Body {
    pub fn name(self) -> &'static str {
        match self {
            Body::Earth => "earth",
            Body::Moon => "moon",
            Body::Sun => "sun",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "earth" => Some(Body::Earth),
            "moon" => Some(Body::Moon),
            "sun" => Some(Body::Sun),
            _ => None,
        }
    }
}

pub trait EphemerisProvider: Send + Sync + Debug {
    /// Earth-centered position of `body` (km) at `epoch_s` seconds past the
    /// scenario start.
    fn position(&self, body: Body, epoch_s: f64) -> Result<Vector3<f64>>;

    /// Velocity by central differencing of [`EphemerisProvider::position`].
    fn velocity(&self, body: Body, epoch_s: f64) -> Result<Vector3<f64>> {
        let h = 10.0;
        Ok((self.position(body, epoch_s + h)? - self.position(body, epoch_s - h)?) / (2.0 * h))
    }
}

/// Mean-element analytic ephemeris: a Keplerian lunar orbit about the Earth
/// and a circular heliocentric Earth orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticEphemeris {
    pub moon_sma_km: f64,
    pub moon_ecc: f64,
    /// Lunar true anomaly at epoch zero (deg). `None` places the Moon at
    /// distance equal to its semi-major axis.
    pub moon_true_anomaly_deg: Option<f64>,
    pub sun_distance_km: f64,
    pub sun_period_days: f64,
    /// Sun longitude in the Earth–Moon plane at epoch, measured from the
    /// Earth→Moon direction (deg).
    pub sun_phase_deg: f64,
    /// Inclination of the Earth–Moon plane to the ecliptic (deg).
    pub ecliptic_tilt_deg: f64,
}

impl Default for AnalyticEphemeris {
    fn default() -> Self {
        Self {
            moon_sma_km: EARTH_MOON_L_STAR_KM,
            moon_ecc: 0.0549,
            moon_true_anomaly_deg: None,
            sun_distance_km: AU_KM,
            sun_period_days: 365.256_363,
            // Waxing gibbous Moon, elongation ≈ 127° (mid-April 2024).
            sun_phase_deg: -127.0,
            ecliptic_tilt_deg: 5.145,
        }
    }
}

impl AnalyticEphemeris {
    fn moon_nu0(&self) -> f64 {
        match self.moon_true_anomaly_deg {
            Some(deg) => deg.to_radians(),
            // r = a(1 − e²)/(1 + e cos ν) = a  ⇔  cos ν = −e
            None => (-self.moon_ecc).acos(),
        }
    }

    fn moon_position(&self, t: f64) -> Vector3<f64> {
        let (a, e) = (self.moon_sma_km, self.moon_ecc);
        let n = ((GM_EARTH + GM_MOON) / a.powi(3)).sqrt();
        let nu0 = self.moon_nu0();
        let e0 = 2.0 * (((1.0 - e) / (1.0 + e)).sqrt() * (nu0 / 2.0).tan()).atan();
        let m = e0 - e * e0.sin() + n * t;
        let mut ecc_anom = m;
        for _ in 0..50 {
            let d = (ecc_anom - e * ecc_anom.sin() - m) / (1.0 - e * ecc_anom.cos());
            ecc_anom -= d;
            if d.abs() < 1e-15 {
                break;
            }
        }
        let nu = 2.0 * (((1.0 + e) / (1.0 - e)).sqrt() * (ecc_anom / 2.0).tan()).atan();
        let r = a * (1.0 - e * ecc_anom.cos());
        // Argument of perigee −ν0 puts the Moon on +x at epoch zero.
        let u = nu - nu0;
        Vector3::new(r * u.cos(), r * u.sin(), 0.0)
    }

    fn sun_position(&self, t: f64) -> Vector3<f64> {
        let n = std::f64::consts::TAU / (self.sun_period_days * SECONDS_PER_DAY);
        let th = self.sun_phase_deg.to_radians() + n * t;
        let eps = self.ecliptic_tilt_deg.to_radians();
        self.sun_distance_km * Vector3::new(th.cos(), th.sin() * eps.cos(), th.sin() * eps.sin())
    }
}

impl EphemerisProvider for AnalyticEphemeris {
    fn position(&self, body: Body, epoch_s: f64) -> Result<Vector3<f64>> {
        if !epoch_s.is_finite() {
            return Err(NavError::Ephemeris(format!("non-finite epoch {epoch_s}")));
        }
        Ok(match body {
            Body::Earth => Vector3::zeros(),
            Body::Moon => self.moon_position(epoch_s),
            Body::Sun => self.sun_position(epoch_s),
        })
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    epoch_s: f64,
    body: String,
    x_km: f64,
    y_km: f64,
    z_km: f64,
}

/// Tabulated ephemeris read from CSV (`epoch_s,body,x_km,y_km,z_km`),
/// interpolated with 4-point Lagrange polynomials.
#[derive(Debug, Clone)]
pub struct TabulatedEphemeris {
    tables: BTreeMap<Body, Vec<(f64, Vector3<f64>)>>,
}

impl TabulatedEphemeris {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| NavError::Io { path: path.to_path_buf(), source })?;
        Self::from_reader(file).map_err(|e| match e {
            NavError::Ephemeris(msg) => NavError::Ephemeris(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut tables: BTreeMap<Body, Vec<(f64, Vector3<f64>)>> = BTreeMap::new();
        for (line, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let row = row.map_err(|e| NavError::Ephemeris(format!("row {}: {e}", line + 2)))?;
            let body = Body::parse(&row.body)
                .ok_or_else(|| NavError::Ephemeris(format!("row {}: unknown body `{}`", line + 2, row.body)))?;
            tables.entry(body).or_default().push((row.epoch_s, Vector3::new(row.x_km, row.y_km, row.z_km)));
        }
        for (body, rows) in tables.iter_mut() {
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            if rows.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(NavError::Ephemeris(format!("duplicate epochs for {}", body.name())));
            }
            if rows.len() < 4 && *body != Body::Earth {
                return Err(NavError::Ephemeris(format!("{} needs at least 4 samples", body.name())));
            }
        }
        Ok(Self { tables })
    }
}

impl EphemerisProvider for TabulatedEphemeris {
    fn position(&self, body: Body, epoch_s: f64) -> Result<Vector3<f64>> {
        if body == Body::Earth {
            return Ok(Vector3::zeros());
        }
        let rows = self
            .tables
            .get(&body)
            .ok_or_else(|| NavError::Ephemeris(format!("no samples for {}", body.name())))?;
        let (first, last) = (rows[0].0, rows[rows.len() - 1].0);
        if !(epoch_s >= first && epoch_s <= last) {
            return Err(NavError::Ephemeris(format!(
                "epoch {epoch_s} s outside table span [{first}, {last}] for {}",
                body.name()
            )));
        }
        let idx = rows.partition_point(|r| r.0 <= epoch_s);
        let start = idx.saturating_sub(2).min(rows.len() - 4);
        let pts = &rows[start..start + 4];
        let mut out = Vector3::zeros();
        for (i, (ti, pi)) in pts.iter().enumerate() {
            let mut w = 1.0;
            for (j, (tj, _)) in pts.iter().enumerate() {
                if i != j {
                    w *= (epoch_s - tj) / (ti - tj);
                }
            }
            out += pi * w;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moon_starts_on_x_axis_at_mean_distance() {
        let eph = AnalyticEphemeris::default();
        let m = eph.position(Body::Moon, 0.0).unwrap();
        assert!((m.x - EARTH_MOON_L_STAR_KM).abs() < 1e-6 && m.y.abs() < 1e-6 && m.z == 0.0);
        let v = eph.velocity(Body::Moon, 0.0).unwrap();
        assert!(v.y > 0.9 && v.y < 1.1);
    }

    #[test]
    fn moon_distance_band_and_continuity() {
        let eph = AnalyticEphemeris::default();
        for k in 0..400 {
            let t = k as f64 * 0.25 * SECONDS_PER_DAY;
            let r = eph.position(Body::Moon, t).unwrap();
            let d = r.norm();
            assert!((356_000.0..=407_000.0).contains(&d), "{d}");
            let step = (eph.position(Body::Moon, t + 1.0).unwrap() - r).norm();
            assert!(step < 1.1, "{step}");
        }
    }

    #[test]
    fn sun_at_one_au() {
        let eph = AnalyticEphemeris::default();
        let s = eph.position(Body::Sun, 1e6).unwrap();
        assert!((s.norm() - AU_KM).abs() < 1e-3);
    }

    #[test]
    fn tabulated_reproduces_cubic_motion() {
        let mut text = String::from("epoch_s,body,x_km,y_km,z_km\n");
        for k in 0..10 {
            let t = k as f64 * 100.0;
            text += &format!("{t},moon,{},{},{}\n", 1e-3 * t * t * t, 2.0 * t, 5.0);
            text += &format!("{t},sun,1e8,{},0\n", t);
        }
        let eph = TabulatedEphemeris::from_reader(text.as_bytes()).unwrap();
        let p = eph.position(Body::Moon, 437.0).unwrap();
        assert!((p.x - 1e-3 * 437f64.powi(3)).abs() < 1e-6);
        assert!((p.y - 874.0).abs() < 1e-9);
        assert!(eph.position(Body::Moon, 1000.0).is_err());
        assert_eq!(eph.position(Body::Earth, 5.0).unwrap(), Vector3::zeros());
    }

    #[test]
    fn tabulated_rejects_bad_rows() {
        let text = "epoch_s,body,x_km,y_km,z_km\n0,mars,1,2,3\n";
        assert!(TabulatedEphemeris::from_reader(text.as_bytes()).is_err());
        let text = "epoch_s,body,x_km,y_km,z_km\n0,moon,1,2\n";
        assert!(TabulatedEphemeris::from_reader(text.as_bytes()).is_err());
    }
}
