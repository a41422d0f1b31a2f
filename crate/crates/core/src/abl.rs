//! ABL probabilities for pre- and post-selected systems, with each query
//! tagged by whether the observable was actually measured.
//!
//! A query about the measured observable is the ordinary ABL rule. A query
//! about any other observable is counterfactual: it only gets a number when
//! the history family obtained by merging both observables' event sets is
//! consistent. The three-box trap (measure A, ask about B) is rejected with
//! [`Error::CounterfactualInvalid`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{inner_product, ComplexScalar, Observable, StateVector, EPS_NORM};
use crate::histories::{ch_conditional_general, consistency_check, merge_families, HistoryFamily};

/// Denominators below this are treated as "post-selection impossible".
pub const EPS_DEN: f64 = 1e-12;

/// Pre-selected state at t₀ paired with post-selected state at t_f.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStateVector {
    pre: StateVector,
    post: StateVector,
}

impl TwoStateVector {
    pub fn new(pre: StateVector, post: StateVector) -> Result<Self> {
        if pre.dim() != post.dim() {
            return Err(Error::DimensionMismatch {
                expected: pre.dim(),
                found: post.dim(),
            });
        }
        Ok(TwoStateVector { pre, post })
    }

    pub fn pre(&self) -> &StateVector {
        &self.pre
    }

    pub fn post(&self) -> &StateVector {
        &self.post
    }

    pub fn dim(&self) -> usize {
        self.pre.dim()
    }

    /// |⟨post|pre⟩|²
    pub fn overlap_sq(&self) -> f64 {
        // dims are equal by construction
        inner_product(&self.post, &self.pre)
            .map(|z| z.norm_sqr())
            .unwrap_or(0.0)
    }

    /// Whether post-selection can succeed at all with no intermediate measurement.
    pub fn is_feasible(&self) -> bool {
        self.overlap_sq() > EPS_DEN
    }

    /// ⟨post|E|pre⟩ for every event of `obs`.
    pub fn amplitudes(&self, obs: &Observable) -> Result<Vec<ComplexScalar>> {
        obs.events
            .iter()
            .map(|e| e.projector.sandwich(&self.post, &self.pre))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Usage {
    NonCounterfactual,
    Counterfactual,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblResult {
    pub observable: String,
    pub outcome: String,
    pub probability: f64,
    pub usage: Usage,
    /// True only for counterfactual queries whose merged family passed the
    /// consistency check.
    pub consistency_certified: bool,
    pub numerator: f64,
    pub denominator: f64,
    /// Unconditioned CH ratio for the queried event, reported alongside
    /// counterfactual answers for comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ch_diagnostic: Option<f64>,
}

fn check_outcome(obs: &Observable, index: usize) -> Result<()> {
    if index >= obs.events.len() {
        return Err(Error::OutcomeOutOfRange {
            index,
            len: obs.events.len(),
        });
    }
    Ok(())
}

fn check_dims(tsv: &TwoStateVector, obs: &Observable) -> Result<()> {
    obs.ensure_valid()?;
    let dim = obs.dim().unwrap_or(0);
    if dim != tsv.dim() {
        return Err(Error::DimensionMismatch {
            expected: tsv.dim(),
            found: dim,
        });
    }
    Ok(())
}

/// Numerators |⟨post|Eᵢ|pre⟩|² and their sum.
fn weights(tsv: &TwoStateVector, obs: &Observable) -> Result<(Vec<f64>, f64)> {
    check_dims(tsv, obs)?;
    let w: Vec<f64> = tsv.amplitudes(obs)?.iter().map(|z| z.norm_sqr()).collect();
    let denominator: f64 = w.iter().sum();
    if denominator < EPS_DEN {
        return Err(Error::PostSelectionImpossible { denominator });
    }
    Ok((w, denominator))
}

/// ABL probability of outcome `outcome_index` of the measured observable `obs`.
pub fn abl_probability(
    tsv: &TwoStateVector,
    obs: &Observable,
    outcome_index: usize,
) -> Result<AblResult> {
    check_outcome(obs, outcome_index)?;
    let (w, denominator) = weights(tsv, obs)?;
    let numerator = w[outcome_index];
    Ok(AblResult {
        observable: obs.name.clone(),
        outcome: obs.events[outcome_index].label.clone(),
        probability: numerator / denominator,
        usage: Usage::NonCounterfactual,
        consistency_certified: false,
        numerator,
        denominator,
        ch_diagnostic: None,
    })
}

/// ABL probabilities for every outcome of `obs`, in event order.
pub fn abl_distribution(tsv: &TwoStateVector, obs: &Observable) -> Result<Vec<f64>> {
    let (w, denominator) = weights(tsv, obs)?;
    Ok(w.into_iter().map(|x| x / denominator).collect())
}

/// Index of the event in `measured` equal to `queried`'s event at
/// `queried_outcome` (same eigenvalue, projectors within [`EPS_NORM`]).
fn matching_event(
    measured: &Observable,
    queried: &Observable,
    queried_outcome: usize,
) -> Option<usize> {
    let q = &queried.events[queried_outcome];
    measured
        .events
        .iter()
        .position(|e| e.eigenvalue == q.eigenvalue && e.projector.approx_eq(&q.projector, EPS_NORM))
}

/// ABL query with an explicit record of which observable was actually
/// measured at the intermediate time.
pub fn contextual_abl(
    tsv: &TwoStateVector,
    measured: &Observable,
    queried: &Observable,
    queried_outcome: usize,
) -> Result<AblResult> {
    check_dims(tsv, measured)?;
    check_dims(tsv, queried)?;
    check_outcome(queried, queried_outcome)?;

    if let Some(index) = matching_event(measured, queried, queried_outcome) {
        return abl_probability(tsv, measured, index);
    }

    let (w, denominator) = weights(tsv, queried)?;
    let ch_diagnostic = ch_conditional_general(tsv, queried, queried_outcome).ok();

    let merged = merge_families(&[
        HistoryFamily::from_two_state(tsv, measured)?,
        HistoryFamily::from_two_state(tsv, queried)?,
    ])?;
    let report = consistency_check(&merged)?;
    if !report.consistent {
        return Err(Error::CounterfactualInvalid {
            max_violation: report.max_violation,
            ch_diagnostic,
        });
    }

    let numerator = w[queried_outcome];
    Ok(AblResult {
        observable: queried.name.clone(),
        outcome: queried.events[queried_outcome].label.clone(),
        probability: numerator / denominator,
        usage: Usage::Counterfactual,
        consistency_certified: true,
        numerator,
        denominator,
        ch_diagnostic,
    })
}
