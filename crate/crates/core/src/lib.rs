//! Measurement statistics for pre- and post-selected quantum systems.
//!
//! - [`hilbert`]: states, eigenspace projectors, observables, traces.
//! - [`abl`]: the ABL rule, with each query tagged as measured or counterfactual.
//! - [`histories`]: consistent-histories families, the consistency condition
//!   and the reduction of CH conditionals to the ABL rule.
//! - [`scenario`]: the three-box and n+1-box scenarios and the JSON scenario format.
//! - [`ensemble`]: seeded Monte Carlo of pre-selection, measurement and post-selection.
//! - [`cli`]: the `ppsq` command-line front end.
//! - [`reproduce`]: end-to-end checks of the headline numbers.

pub mod abl;
pub mod ensemble;
pub mod error;
pub mod hilbert;
pub mod histories;
pub mod scenario;

pub use abl::{
    abl_distribution, abl_probability, contextual_abl, AblResult, TwoStateVector, Usage,
};
pub use ensemble::{simulate_ensemble, simulate_run, EnsembleStats, RunRecord, SimSeed};
pub use error::{Error, Result};
pub use hilbert::{
    apply_projector, inner_product, projector_from_basis, trace_product, validate_observable,
    Event, Observable, Projector, StateVector,
};
pub use histories::{
    abl_ch_equivalence, ch_conditional_general, conditional_probability, consistency_check,
    history_probability, merge_families, ConsistencyReport, History, HistoryFamily,
};
pub use scenario::{load_scenario, n_plus_one_box, save_scenario, three_box, Scenario};

pub mod cli;
pub mod reproduce;
