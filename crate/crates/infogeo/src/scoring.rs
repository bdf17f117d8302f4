//! Geometric information-criterion score for bitnets.
//!
//! log Z_N = -N L_N(theta_hat) + (d/2) log(N / 2 pi)
//!           + log sqrt(det g(theta_hat))
//!           - (1/24) sum_k 1 / (N_k rho_k) + (1/12) sum_k 1 / N_k
//!
//! where k runs over parameter slots, N_k counts rows matching slot
//! k's parent configuration, and rho_k = N_k / N. Higher totals rank
//! first. Terms whose denominators vanish (starved slots) are reported
//! as absent with flags rather than silently regularized.

use serde::Serialize;

use crate::bitnet::{fisher_metric, mle_and_counts, BitnetModel, BitnetPoint};
use crate::dag::skeleton_summary;
use crate::error::Result;

/// MLE clamp for the metric evaluation; boundary estimates are flagged
/// but still scored at the clamped point.
const CLAMP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct CicReport {
    pub n_rows: usize,
    pub dim: usize,
    /// Maximized log-likelihood, -N L_N(theta_hat).
    pub log_lik_term: f64,
    /// (d/2) log(N / 2 pi).
    pub bic_term: f64,
    /// log sqrt(det g) at the (clamped) MLE.
    pub metric_term: f64,
    /// -(1/24) sum_k 1/(N_k rho_k); absent when a slot is starved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curvature_penalty: Option<f64>,
    /// (1/12) sum_k 1/N_k; absent when a slot is starved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stirling_term: Option<f64>,
    /// Sum of the five terms; absent when any component is.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total: Option<f64>,
    pub starved_slots: Vec<usize>,
    pub boundary_slots: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advisory: Option<String>,
}

pub fn cic_score(model: &BitnetModel, rows: &[Vec<u8>]) -> Result<CicReport> {
    let mle = mle_and_counts(model, rows)?;
    let n = rows.len();
    let nf = n as f64;
    let d = model.dim();

    // 0 * log 0 = 0: a slot whose estimate sits on the boundary has no
    // rows on the vanishing side, so the sum below never hits log(0)
    // with a nonzero coefficient.
    let mut log_lik = 0.0;
    for k in 0..d {
        let (ones, total) = (mle.ones[k] as f64, mle.parent_counts[k] as f64);
        if mle.ones[k] > 0 {
            log_lik += ones * mle.theta[k].ln();
        }
        if mle.parent_counts[k] > mle.ones[k] {
            log_lik += (total - ones) * (1.0 - mle.theta[k]).ln();
        }
    }

    let bic_term = d as f64 / 2.0 * (nf / (2.0 * std::f64::consts::PI)).ln();

    let clamped: Vec<f64> = mle
        .theta
        .iter()
        .map(|t| t.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS))
        .collect();
    let point = BitnetPoint::with_margin(model, clamped, CLAMP_EPS / 2.0)?;
    let metric_term = fisher_metric(model, &point)?
        .iter()
        .map(|g| 0.5 * g.ln())
        .sum::<f64>();

    let (curvature_penalty, stirling_term) = if mle.starved_slots.is_empty() {
        let penalty = -(1.0 / 24.0)
            * mle
                .parent_counts
                .iter()
                .map(|&nk| nf / (nk as f64 * nk as f64))
                .sum::<f64>();
        let stirling = (1.0 / 12.0)
            * mle
                .parent_counts
                .iter()
                .map(|&nk| 1.0 / nk as f64)
                .sum::<f64>();
        (Some(penalty), Some(stirling))
    } else {
        (None, None)
    };

    let total = match (curvature_penalty, stirling_term) {
        (Some(p), Some(s)) => Some(log_lik + bic_term + metric_term + p + s),
        _ => None,
    };

    let summary = skeleton_summary(model.dag());
    let advisory = (summary.beta1 >= 1).then(|| {
        format!(
            "skeleton has {} independent loop(s); the curvature penalty's geometric \
             normalization is derived for forests, so treat it as advisory here",
            summary.beta1
        )
    });

    Ok(CicReport {
        n_rows: n,
        dim: d,
        log_lik_term: log_lik,
        bic_term,
        metric_term,
        curvature_penalty,
        stirling_term,
        total,
        starved_slots: mle.starved_slots,
        boundary_slots: mle.boundary_slots,
        advisory,
    })
}
