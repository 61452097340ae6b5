//! Equations of motion, variational propagation and frame conversions.

pub mod crtbp;
pub mod frames;

use nalgebra::{Matrix6, Vector6};

use crate::error::Result;

pub use crtbp::{
    crtbp_derivative, crtbp_jacobian, jacobi_constant, propagate, CrtbpDynamics, CrtbpParams, RotatingState,
    StmState,
};
pub use frames::{
    barycentric_to_mci, inertial_to_rot, kepler_to_cartesian, mci_to_barycentric, rot_to_inertial, shift_frame,
    CartesianState, Center, InertialState, KeplerianElements, ShiftDirection,
};

/// Single-spacecraft flow in non-dimensional rotating coordinates, as seen by
/// the filter.
pub trait Dynamics: Send + Sync {
    /// Propagate `x` from `t0` to `t1`, returning the new state and the state
    /// transition matrix over the interval.
    fn transition(&self, x: &Vector6<f64>, t0: f64, t1: f64) -> Result<(Vector6<f64>, Matrix6<f64>)>;

    fn flow(&self, x: &Vector6<f64>, t0: f64, t1: f64) -> Result<Vector6<f64>> {
        self.transition(x, t0, t1).map(|(x, _)| x)
    }

    /// States at each node and, if requested, `Φ(node, t0)`.
    fn trajectory(
        &self,
        x0: &Vector6<f64>,
        t0: f64,
        nodes: &[f64],
        with_stm: bool,
    ) -> Result<Vec<(Vector6<f64>, Option<Matrix6<f64>>)>> {
        let mut out = Vec::with_capacity(nodes.len());
        let (mut x, mut t, mut phi) = (*x0, t0, Matrix6::identity());
        for &node in nodes {
            if with_stm {
                let (next, step) = self.transition(&x, t, node)?;
                phi = step * phi;
                x = next;
                out.push((x, Some(phi)));
            } else {
                x = self.flow(&x, t, node)?;
                out.push((x, None));
            }
            t = node;
        }
        Ok(out)
    }
}
