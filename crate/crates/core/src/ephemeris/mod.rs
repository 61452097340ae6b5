//! Higher-fidelity truth dynamics: point-mass Earth, Moon and Sun plus
//! cannonball solar radiation pressure, driven by a pluggable ephemeris.

pub mod forces;
pub mod propagation;
pub mod provider;

pub use forces::{point_mass_accel, srp_accel, third_body_accel, GmSet, NbodyModel, NbodyState, SrpConfig};
pub use propagation::{eci_to_rotating, propagate_nbody, rotating_to_eci, NbodyDynamics, NbodyPropagator};
pub use provider::{AnalyticEphemeris, Body, EphemerisProvider, TabulatedEphemeris};
