//! Observability Gramian, SVD metrics and observation effectiveness.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{NavError, Result};
use crate::estimation::StepRecord;

/// Labels of the joint state, spacecraft 1 = halo orbiter, 2 = lunar orbiter.
pub const STATE_LABELS: [&str; 12] = ["x1", "y1", "z1", "vx1", "vy1", "vz1", "x2", "y2", "z2", "vx2", "vy2", "vz2"];

#[derive(Debug, Clone, PartialEq)]
pub struct SvdMetrics {
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Left singular vectors as columns, ordered like `singular_values`.
    pub u: DMatrix<f64>,
    /// `s_max / s_min`, infinite when `s_min` is zero.
    pub condition_number: f64,
    /// `1 / s_min`, infinite when `s_min` is zero.
    pub unobservability_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservabilityReport {
    pub gramian: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub condition_number: f64,
    pub unobservability_index: f64,
    /// Most to least observable, by [`dominant_state_ranking`].
    pub state_ranking: Vec<String>,
    /// Energy-weighted score of each state, in label order.
    pub state_scores: Vec<f64>,
}

/// Singular values and vectors of a symmetric Gramian.
pub fn svd_metrics(gramian: &DMatrix<f64>) -> Result<SvdMetrics> {
    if !gramian.is_square() {
        return Err(NavError::DimensionMismatch(format!("Gramian is {:?}", gramian.shape())));
    }
    let scale = gramian.amax().max(f64::MIN_POSITIVE);
    if (gramian - gramian.transpose()).amax() > 1e-10 * scale {
        return Err(NavError::InvalidParameter("Gramian is not symmetric".into()));
    }
    let svd = gramian.clone().svd(true, false);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_raw = svd.u.expect("requested");
    let u = DMatrix::from_fn(u_raw.nrows(), order.len(), |r, c| u_raw[(r, order[c])]);
    let s_max = singular_values[0];
    let s_min = *singular_values.last().expect("non-empty");
    let (condition_number, unobservability_index) =
        if s_min > 0.0 { (s_max / s_min, 1.0 / s_min) } else { (f64::INFINITY, f64::INFINITY) };
    Ok(SvdMetrics { singular_values, u, condition_number, unobservability_index })
}

/// Per-state observability score `Σ_k s_k u_k[i]²`.
pub fn state_scores(m: &SvdMetrics) -> Vec<f64> {
    (0..m.u.nrows())
        .map(|i| m.singular_values.iter().enumerate().map(|(k, s)| s * m.u[(i, k)].powi(2)).sum())
        .collect()
}

/// Walk the singular directions from the strongest down and assign each the
/// not yet ranked state with the largest component in it.
pub fn dominant_state_ranking(m: &SvdMetrics) -> Vec<usize> {
    let n = m.u.nrows();
    let mut ranked: Vec<usize> = Vec::with_capacity(n);
    for k in 0..m.u.ncols() {
        let best = (0..n)
            .filter(|i| !ranked.contains(i))
            .max_by(|&a, &b| m.u[(a, k)].abs().total_cmp(&m.u[(b, k)].abs()).then(b.cmp(&a)));
        if let Some(i) = best {
            ranked.push(i);
        }
    }
    ranked
}

/// `N = Σ Φ(t_k,t0)ᵀ H_kᵀ H_k Φ(t_k,t0)` over the given epochs.
pub fn gramian(terms: &[(DMatrix<f64>, DMatrix<f64>)]) -> Result<DMatrix<f64>> {
    let n = terms.first().map_or(0, |(phi, _)| phi.ncols());
    if n == 0 {
        return Err(NavError::InvalidParameter("Gramian needs at least one epoch".into()));
    }
    let mut g = DMatrix::zeros(n, n);
    for (phi, h) in terms {
        if phi.shape() != (n, n) || h.ncols() != n {
            return Err(NavError::DimensionMismatch(format!("Φ {:?}, H {:?}", phi.shape(), h.shape())));
        }
        let hp = h * phi;
        g += hp.transpose() * hp;
    }
    Ok((&g + g.transpose()) * 0.5)
}

/// Gramian, metrics and ranking. `labels` names each state column.
pub fn accumulate_gramian(terms: &[(DMatrix<f64>, DMatrix<f64>)], labels: &[&str]) -> Result<ObservabilityReport> {
    let g = gramian(terms)?;
    if labels.len() != g.nrows() {
        return Err(NavError::DimensionMismatch(format!("{} labels for {} states", labels.len(), g.nrows())));
    }
    let m = svd_metrics(&g)?;
    let scores = state_scores(&m);
    let order = dominant_state_ranking(&m);
    Ok(ObservabilityReport {
        gramian: g.row_iter().map(|r| r.iter().copied().collect()).collect(),
        singular_values: m.singular_values,
        condition_number: m.condition_number,
        unobservability_index: m.unobservability_index,
        state_ranking: order.iter().map(|&i| labels[i].to_string()).collect(),
        state_scores: scores,
    })
}

/// Cumulative relative reduction of each spacecraft's position covariance
/// trace across measurement updates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectivenessSeries {
    pub epochs: Vec<f64>,
    pub values: [Vec<f64>; 2],
}

pub fn observation_effectiveness(records: &[StepRecord]) -> EffectivenessSeries {
    let mut acc = [0.0f64; 2];
    let mut values = [Vec::with_capacity(records.len()), Vec::with_capacity(records.len())];
    for r in records {
        for j in 0..2 {
            let prior = r.prior_position_trace[j];
            if prior > 0.0 {
                acc[j] += ((prior - r.post_position_trace[j]) / prior).max(0.0);
            }
            values[j].push(acc[j]);
        }
    }
    EffectivenessSeries { epochs: records.iter().map(|r| r.epoch).collect(), values }
}
