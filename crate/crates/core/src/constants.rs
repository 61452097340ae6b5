//! Physical constants and the Earth–Moon normalization used throughout the crate.

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Speed of light in vacuum (km/s).
pub const SPEED_OF_LIGHT_KM_S: f64 = SPEED_OF_LIGHT_M_S / 1000.0;

/// Gravitational parameter of the Moon (km³/s²).
pub const GM_MOON: f64 = 4_902.800_066;

/// Gravitational parameter of the Earth (km³/s²).
pub const GM_EARTH: f64 = 398_600.441_8;

/// Gravitational parameter of the Sun (km³/s²).
pub const GM_SUN: f64 = 1.327_124_400_18e11;

/// Astronomical unit (km).
pub const AU_KM: f64 = 149_597_870.7;

/// Total solar irradiance at 1 AU (W/m²).
pub const SOLAR_FLUX_1AU: f64 = 1361.0;

/// Seconds per day.
pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Earth–Moon mass ratio.
pub const EARTH_MOON_MU: f64 = 0.01215;

/// Earth–Moon time unit (days).
pub const EARTH_MOON_T_STAR_DAYS: f64 = 4.343;

/// Earth–Moon length unit (km).
pub const EARTH_MOON_L_STAR_KM: f64 = 384_747.96;

/// Distance below which a state is considered to collide with a primary
/// (non-dimensional length).
pub const PRIMARY_EXCLUSION_RADIUS: f64 = 1e-9;
