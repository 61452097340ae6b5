//! Simulation toolkit for autonomous crosslink radionavigation of a cislunar
//! spacecraft pair: an Earth–Moon L2 halo orbiter linked to an elliptical
//! lunar orbiter.
//!
//! The crate covers the whole chain: coupled orbit propagation
//! ([`dynamics`], [`ephemeris`]), inter-satellite radiometric observables with
//! link-budget-derived errors ([`radiometrics`]), joint-state sequential
//! estimation ([`estimation`]), observability analysis ([`observability`])
//! and Monte Carlo scenario orchestration ([`scenario`]).

pub mod constants;
pub mod dynamics;
pub mod ephemeris;
pub mod error;
pub mod estimation;
pub mod integrator;
pub mod observability;
pub mod radiometrics;
pub mod scenario;

pub use error::{NavError, Result};
pub use integrator::{IntegratorConfig, IntegratorMethod};
