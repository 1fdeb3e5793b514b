//! Truncated perturbation-theory gradients for one datapoint.
//!
//! Given the transition table of the datapoint's spectral solve, the loss
//! gradient with respect to the bias coefficients is
//!
//!   g_beta[p] = -2 sum_k dL/dl_k Re sum_m sum_q o_k^q
//!               <psi_0|P_q|psi_m><psi_m|P_p|psi_0> / (E_m - E_0)
//!
//! with the m-sum truncated to the retained excited states (gap-excluded
//! terms skipped). The feature gradient is the algebraic identity
//! g_chi[f][p] = -a^f g_beta[p], and the output gradient is
//! g_o[k][p] = t0_p dL/dl_k.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{softmax_cross_entropy, DataPoint, ModelParameters};
use crate::spectral::{SpectralResult, TransitionTable};

/// Per-datapoint loss, logits, and coefficient gradients.
#[derive(Debug, Clone)]
pub struct DatapointGradients {
    pub loss: f64,
    pub logits: Vec<f64>,
    pub g_beta: Vec<f64>,
    pub g_chi: Vec<Vec<f64>>,
    pub g_o: Vec<Vec<f64>>,
    /// Number of gap-excluded excited states skipped in the m-sum.
    pub excluded_terms: usize,
    /// True when no excited states were available (g_beta, g_chi forced 0).
    pub no_excited_warning: bool,
}

pub fn datapoint_gradients(
    params: &ModelParameters,
    x: &DataPoint,
    spec: &SpectralResult,
    table: &TransitionTable,
) -> Result<DatapointGradients> {
    let p_len = params.pattern().len();
    if table.t0.len() != p_len {
        return Err(Error::invalid("transition table does not match pattern size"));
    }
    if x.num_features() != params.num_features() || x.num_classes() != params.num_classes() {
        return Err(Error::invalid("datapoint shape does not match model"));
    }
    let k_len = params.num_classes();
    let m_len = spec.num_excited();

    // logits from the diagonal elements: l_k = sum_p o_k^p t0_p
    let logits: Vec<f64> = params
        .output()
        .iter()
        .map(|row| row.iter().zip(&table.t0).map(|(o, t)| o * t).sum())
        .collect();
    let (loss, dl_dl) = softmax_cross_entropy(&logits, x.label())?;

    // v[k][m] = sum_q o_k^q <psi_0|P_q|psi_m>
    let mut v = vec![vec![Complex64::new(0.0, 0.0); m_len]; k_len];
    for (k, row) in params.output().iter().enumerate() {
        for (q, &o_kq) in row.iter().enumerate() {
            for m in 0..m_len {
                v[k][m] += o_kq * table.transitions[q][m];
            }
        }
    }

    let mut g_beta = vec![0.0f64; p_len];
    for (p, g) in g_beta.iter_mut().enumerate() {
        for k in 0..k_len {
            let mut inner = Complex64::new(0.0, 0.0);
            for m in 0..m_len {
                if table.excluded[m] {
                    continue;
                }
                // w[p][m] = <psi_m|P_p|psi_0> = conj(<psi_0|P_p|psi_m>)
                inner += v[k][m] * table.transitions[p][m].conj() / table.gaps[m];
            }
            *g += -2.0 * dl_dl[k] * inner.re;
        }
    }

    let g_chi: Vec<Vec<f64>> = x
        .features()
        .iter()
        .map(|&a| g_beta.iter().map(|&g| -a * g).collect())
        .collect();

    let g_o: Vec<Vec<f64>> = dl_dl
        .iter()
        .map(|&d| table.t0.iter().map(|&t| t * d).collect())
        .collect();

    let all = g_beta
        .iter()
        .chain(g_chi.iter().flatten())
        .chain(g_o.iter().flatten());
    if all.clone().any(|g| !g.is_finite()) || !loss.is_finite() {
        return Err(Error::Numerical("non-finite gradient or loss".into()));
    }

    Ok(DatapointGradients {
        loss,
        logits,
        g_beta,
        g_chi,
        g_o,
        excluded_terms: table.num_excluded(),
        no_excited_warning: m_len == 0,
    })
}
