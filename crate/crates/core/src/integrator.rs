//! Explicit Runge–Kutta integration of fixed-size ODE systems.
//!
//! Two schemes are provided: the Dormand–Prince 5(4) embedded pair with
//! step-size control, and classical fixed-step RK4. The fixed-step mode
//! performs an identical sequence of floating-point operations for identical
//! inputs, which is what makes seeded Monte Carlo runs byte-reproducible.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::error::{NavError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorMethod {
    /// Dormand–Prince 5(4) with local error control.
    Adaptive,
    /// Classical fourth-order Runge–Kutta with a constant step.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: IntegratorMethod,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the adaptive step, in the time unit of the system.
    pub max_step: Option<f64>,
    /// Step used by [`IntegratorMethod::Rk4`], in the time unit of the system.
    pub fixed_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: IntegratorMethod::Adaptive,
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            max_step: None,
            fixed_step: 1e-3,
            max_steps: 5_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn adaptive(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            method: IntegratorMethod::Adaptive,
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn rk4(step: f64) -> Self {
        Self {
            method: IntegratorMethod::Rk4,
            fixed_step: step,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(NavError::InvalidParameter(format!(
                "integrator tolerances must be positive (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.method == IntegratorMethod::Rk4 && !(self.fixed_step > 0.0) {
            return Err(NavError::InvalidParameter(format!(
                "fixed step must be positive, got {}",
                self.fixed_step
            )));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(NavError::InvalidParameter(format!(
                    "max step must be positive, got {h}"
                )));
            }
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth-order minus fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Integrate `dy/dt = f(t, y)` from `t0` to `t1` (either direction).
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: SVector<f64, N>,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<SVector<f64, N>>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    let mut out = integrate_nodes(f, t0, y0, &[t1], cfg)?;
    Ok(out.pop().expect("one node requested"))
}

/// Integrate through an ordered list of output epochs, returning the state at
/// each one. Nodes must be monotone in the direction of integration.
pub fn integrate_nodes<const N: usize, F>(
    mut f: F,
    t0: f64,
    y0: SVector<f64, N>,
    nodes: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<SVector<f64, N>>>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    cfg.validate()?;
    let mut out = Vec::with_capacity(nodes.len());
    let mut t = t0;
    let mut y = y0;
    let mut h_hint = None;
    let mut steps = 0usize;
    for &tn in nodes {
        if !tn.is_finite() {
            return Err(NavError::InvalidParameter(format!("non-finite output epoch {tn}")));
        }
        match cfg.method {
            IntegratorMethod::Rk4 => {
                y = rk4_span(&mut f, t, y, tn, cfg.fixed_step)?;
            }
            IntegratorMethod::Adaptive => {
                y = dopri_span(&mut f, t, y, tn, cfg, &mut h_hint, &mut steps)?;
            }
        }
        t = tn;
        out.push(y);
    }
    Ok(out)
}

fn rk4_span<const N: usize, F>(
    f: &mut F,
    t0: f64,
    y0: SVector<f64, N>,
    t1: f64,
    step: f64,
) -> Result<SVector<f64, N>>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    // Uniform steps that land exactly on t1.
    let n = (span.abs() / step).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let mut y = y0;
    for i in 0..n {
        let t = t0 + h * i as f64;
        let k1 = f(t, &y)?;
        let k2 = f(t + 0.5 * h, &(y + k1 * (0.5 * h)))?;
        let k3 = f(t + 0.5 * h, &(y + k2 * (0.5 * h)))?;
        let k4 = f(t + h, &(y + k3 * h))?;
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(y)
}

fn error_norm<const N: usize>(
    err: &SVector<f64, N>,
    y: &SVector<f64, N>,
    y_new: &SVector<f64, N>,
    cfg: &IntegratorConfig,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
        let r = err[i] / sc;
        acc += r * r;
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    t0: f64,
    y0: &SVector<f64, N>,
    f0: &SVector<f64, N>,
    dir: f64,
    cfg: &IntegratorConfig,
) -> Result<f64>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    // Hairer, Nørsett & Wanner starting-step heuristic.
    let scale = |i: usize| cfg.abs_tol + cfg.rel_tol * y0[i].abs();
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        d0 += (y0[i] / scale(i)).powi(2);
        d1 += (f0[i] / scale(i)).powi(2);
    }
    d0 = (d0 / N as f64).sqrt();
    d1 = (d1 / N as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = y0 + f0 * (dir * h0);
    let f1 = f(t0 + dir * h0, &y1)?;
    let mut d2 = 0.0;
    for i in 0..N {
        d2 += ((f1[i] - f0[i]) / scale(i)).powi(2);
    }
    d2 = (d2 / N as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok(h1.min(100.0 * h0))
}

fn dopri_span<const N: usize, F>(
    f: &mut F,
    t0: f64,
    y0: SVector<f64, N>,
    t1: f64,
    cfg: &IntegratorConfig,
    h_hint: &mut Option<f64>,
    steps: &mut usize,
) -> Result<SVector<f64, N>>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let max_step = cfg.max_step.unwrap_or(f64::INFINITY).min(span.abs());

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    let mut h = match *h_hint {
        Some(h) => h,
        None => initial_step(f, t, &y, &k1, dir, cfg)?,
    }
    .min(max_step);

    loop {
        let remaining = (t1 - t).abs();
        // An accepted step can stop a rounding error short of the node.
        if remaining <= 1e-13 * t1.abs().max(1.0) {
            return Ok(y);
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(NavError::StepSizeUnderflow { t, h });
        }
        *steps += 1;
        if *steps > cfg.max_steps {
            return Err(NavError::ToleranceNotMet { steps: *steps, t });
        }

        let hs = dir * h;
        let k2 = f(t + C2 * hs, &(y + k1 * (A21 * hs)))?;
        let k3 = f(t + C3 * hs, &(y + (k1 * A31 + k2 * A32) * hs))?;
        let k4 = f(t + C4 * hs, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * hs))?;
        let k5 = f(
            t + C5 * hs,
            &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * hs),
        )?;
        let k6 = f(
            t + hs,
            &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * hs),
        )?;
        let y_new = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * hs;
        let t_new = if last { t1 } else { t + hs };
        let k7 = f(t_new, &y_new)?;
        let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * hs;
        let en = error_norm(&err, &y, &y_new, cfg);

        if !en.is_finite() {
            h *= MIN_FACTOR;
            continue;
        }
        if en <= 1.0 {
            let factor = if en == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            t = t_new;
            y = y_new;
            k1 = k7;
            if last {
                // A clipped final step says little about the natural step
                // size; only let it shrink the hint for the next span.
                let proposal = h * factor;
                *h_hint = Some(h_hint.map_or(proposal, |prev| prev.min(proposal.max(h))));
                return Ok(y);
            }
            h = (h * factor).min(max_step);
            *h_hint = Some(h);
        } else {
            h *= (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
        }
    }
}
