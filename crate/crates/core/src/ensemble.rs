//! Seeded Monte Carlo over pre-selection, one projective measurement at the
//! intermediate time, and a post-selection test.
//!
//! Every run draws from its own ChaCha8 stream keyed by `(seed, run_index)`,
//! so results do not depend on how runs are scheduled across threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::abl::abl_distribution;
use crate::error::{Error, Result};
use crate::hilbert::{apply_projector, dot, Observable};
use crate::scenario::Scenario;

/// Post-selection probabilities below this are forced to "rejected".
pub const ORTHOGONAL_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SimSeed(pub u64);

impl SimSeed {
    /// Independent stream for one run.
    pub fn stream(self, run_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(run_index);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunRecord {
    pub run_index: u64,
    pub opened: String,
    pub outcome: String,
    pub post_selected: bool,
}

/// Per-outcome Born weights and post-selection probabilities for one
/// observable, precomputed once per ensemble.
#[derive(Debug, Clone)]
struct MeasurementPlan {
    observable: String,
    labels: Vec<String>,
    born: Vec<f64>,
    post: Vec<f64>,
}

impl MeasurementPlan {
    fn new(s: &Scenario, obs: &Observable) -> Result<Self> {
        let mut born = Vec::with_capacity(obs.events.len());
        let mut post = Vec::with_capacity(obs.events.len());
        for e in &obs.events {
            let proj = apply_projector(&e.projector, &s.pre)?;
            born.push(proj.norm_sq);
            // Lüders update: normalized Eᵅ|pre⟩
            let q = if proj.norm_sq > 0.0 {
                dot(s.post.amplitudes(), &proj.vector).norm_sqr() / proj.norm_sq
            } else {
                0.0
            };
            post.push(if q < ORTHOGONAL_CUTOFF {
                0.0
            } else {
                q.min(1.0)
            });
        }
        Ok(MeasurementPlan {
            observable: obs.name.clone(),
            labels: obs.events.iter().map(|e| e.label.clone()).collect(),
            born,
            post,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, bool) {
        let u: f64 = rng.gen();
        let total: f64 = self.born.iter().sum();
        let mut acc = 0.0;
        let mut outcome = None;
        for (i, &p) in self.born.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            outcome = Some(i);
            if u * total < acc {
                break;
            }
        }
        let outcome = outcome.expect("Born weights of a complete observable sum to one");
        let q = self.post[outcome];
        let post_selected = q > 0.0 && rng.gen::<f64>() < q;
        (outcome, post_selected)
    }
}

fn plan_for(s: &Scenario, obs_name: &str) -> Result<MeasurementPlan> {
    MeasurementPlan::new(s, s.observable(obs_name)?)
}

/// One run: measure `obs_name` on the pre-selected state, apply the Lüders
/// update, then test for post-selection.
pub fn simulate_run<R: Rng + ?Sized>(
    s: &Scenario,
    obs_name: &str,
    run_index: u64,
    rng: &mut R,
) -> Result<RunRecord> {
    let plan = plan_for(s, obs_name)?;
    let (k, post_selected) = plan.sample(rng);
    Ok(RunRecord {
        run_index,
        opened: plan.observable,
        outcome: plan.labels[k].clone(),
        post_selected,
    })
}

/// Probability of passing post-selection after outcome `outcome` was seen.
pub fn conditional_post_selection(s: &Scenario, obs_name: &str, outcome: usize) -> Result<f64> {
    let plan = plan_for(s, obs_name)?;
    plan.post
        .get(outcome)
        .copied()
        .ok_or(Error::OutcomeOutOfRange {
            index: outcome,
            len: plan.post.len(),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BranchCounts {
    pub post_selected: u64,
    pub rejected: u64,
}

impl BranchCounts {
    pub fn total(&self) -> u64 {
        self.post_selected + self.rejected
    }
}

/// Frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub trials: u64,
}

impl Estimate {
    pub fn new(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Estimate {
                value: 0.0,
                std_error: 0.0,
                trials,
            };
        }
        let p = successes as f64 / trials as f64;
        Estimate {
            value: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        }
    }

    /// |value − expected| in units of the standard error evaluated at the
    /// expected probability (so a zero-variance sample still gets a sane scale).
    pub fn sigma_distance(&self, expected: f64) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let se = (expected * (1.0 - expected) / self.trials as f64).sqrt();
        let diff = (self.value - expected).abs();
        if se == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / se
        }
    }
}

/// Branch counts for one opened observable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnsembleStats {
    pub observable: String,
    pub n_runs: u64,
    /// In event order of the observable.
    pub outcomes: Vec<String>,
    pub counts: Vec<BranchCounts>,
}

impl EnsembleStats {
    fn empty(plan: &MeasurementPlan) -> Self {
        EnsembleStats {
            observable: plan.observable.clone(),
            n_runs: 0,
            outcomes: plan.labels.clone(),
            counts: vec![BranchCounts::default(); plan.labels.len()],
        }
    }

    fn record(&mut self, outcome: usize, post_selected: bool) {
        self.n_runs += 1;
        let c = &mut self.counts[outcome];
        if post_selected {
            c.post_selected += 1;
        } else {
            c.rejected += 1;
        }
    }

    /// Adds another partial tally for the same observable.
    pub fn merge(mut self, other: &EnsembleStats) -> Self {
        debug_assert_eq!(self.outcomes, other.outcomes);
        self.n_runs += other.n_runs;
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            c.post_selected += o.post_selected;
            c.rejected += o.rejected;
        }
        self
    }

    fn index(&self, outcome: &str) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|o| o == outcome)
            .ok_or_else(|| Error::UnknownOutcome {
                observable: self.observable.clone(),
                outcome: outcome.to_string(),
            })
    }

    pub fn count(&self, outcome: &str, post_selected: bool) -> Result<u64> {
        let c = self.counts[self.index(outcome)?];
        Ok(if post_selected {
            c.post_selected
        } else {
            c.rejected
        })
    }

    pub fn total_post_selected(&self) -> u64 {
        self.counts.iter().map(|c| c.post_selected).sum()
    }

    pub fn outcome_frequency(&self, outcome: &str) -> Result<Estimate> {
        Ok(Estimate::new(
            self.counts[self.index(outcome)?].total(),
            self.n_runs,
        ))
    }

    pub fn post_selection_frequency(&self) -> Estimate {
        Estimate::new(self.total_post_selected(), self.n_runs)
    }

    /// P(post-selected | outcome) estimated over runs that gave `outcome`.
    pub fn conditional_post_frequency(&self, outcome: &str) -> Result<Estimate> {
        let c = self.counts[self.index(outcome)?];
        Ok(Estimate::new(c.post_selected, c.total()))
    }

    /// P(outcome | post-selected): the empirical counterpart of the ABL rule.
    pub fn post_selected_frequency(&self, outcome: &str) -> Result<Estimate> {
        let c = self.counts[self.index(outcome)?];
        Ok(Estimate::new(c.post_selected, self.total_post_selected()))
    }

    pub fn from_records(s: &Scenario, obs_name: &str, records: &[RunRecord]) -> Result<Self> {
        let plan = plan_for(s, obs_name)?;
        let mut stats = EnsembleStats::empty(&plan);
        for r in records.iter().filter(|r| r.opened == plan.observable) {
            let k = stats.index(&r.outcome)?;
            stats.record(k, r.post_selected);
        }
        Ok(stats)
    }
}

fn check_runs(n_runs: u64) -> Result<()> {
    if n_runs == 0 {
        return Err(Error::InvalidArgument("n_runs must be at least 1".into()));
    }
    Ok(())
}

/// Runs `n_runs` independent trials in parallel and tallies the branches.
pub fn simulate_ensemble(
    s: &Scenario,
    obs_name: &str,
    n_runs: u64,
    seed: SimSeed,
) -> Result<EnsembleStats> {
    check_runs(n_runs)?;
    let plan = plan_for(s, obs_name)?;
    let stats = (0..n_runs)
        .into_par_iter()
        .fold(
            || EnsembleStats::empty(&plan),
            |mut acc, i| {
                let (k, post) = plan.sample(&mut seed.stream(i));
                acc.record(k, post);
                acc
            },
        )
        .reduce(|| EnsembleStats::empty(&plan), |a, b| a.merge(&b));
    Ok(stats)
}

/// Same runs as [`simulate_ensemble`], returned individually in run order.
pub fn simulate_records(
    s: &Scenario,
    obs_name: &str,
    n_runs: u64,
    seed: SimSeed,
) -> Result<Vec<RunRecord>> {
    check_runs(n_runs)?;
    let plan = plan_for(s, obs_name)?;
    Ok((0..n_runs)
        .into_par_iter()
        .map(|i| {
            let (k, post_selected) = plan.sample(&mut seed.stream(i));
            RunRecord {
                run_index: i,
                opened: plan.observable.clone(),
                outcome: plan.labels[k].clone(),
                post_selected,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub run_index: u64,
    pub opened: String,
    pub outcome: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub records: usize,
    pub post_selected: usize,
    /// Post-selected counts per (opened observable, outcome).
    pub post_selected_by_branch: BTreeMap<String, BTreeMap<String, u64>>,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every post-selected run came from an outcome that can
/// actually be post-selected, i.e. one whose ABL probability under the
/// opened observable is nonzero. In the box scenarios that is "found in
/// the opened box".
pub fn mutual_exclusivity_audit(s: &Scenario, records: &[RunRecord]) -> Result<AuditReport> {
    let tsv = s.two_state_vector()?;
    let mut allowed: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for obs in &s.observables {
        // An observable that can never be post-selected allows nothing.
        let dist = abl_distribution(&tsv, obs).unwrap_or_else(|_| vec![0.0; obs.events.len()]);
        allowed.insert(obs.name.as_str(), dist);
    }

    let mut report = AuditReport {
        records: records.len(),
        post_selected: 0,
        post_selected_by_branch: BTreeMap::new(),
        violations: vec![],
    };
    for r in records.iter().filter(|r| r.post_selected) {
        report.post_selected += 1;
        *report
            .post_selected_by_branch
            .entry(r.opened.clone())
            .or_default()
            .entry(r.outcome.clone())
            .or_default() += 1;

        let reason = match (s.observable(&r.opened), allowed.get(r.opened.as_str())) {
            (Ok(obs), Some(dist)) => match obs.outcome_index(&r.outcome) {
                Ok(k) if dist[k] > ORTHOGONAL_CUTOFF => None,
                Ok(_) => Some("post-selected from a branch orthogonal to the post-selection state"),
                Err(_) => Some("outcome not in the opened observable's spectrum"),
            },
            _ => Some("unknown observable"),
        };
        if let Some(reason) = reason {
            report.violations.push(Violation {
                run_index: r.run_index,
                opened: r.opened.clone(),
                outcome: r.outcome.clone(),
                reason: reason.into(),
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::StateVector;
    use crate::scenario::three_box;

    #[test]
    fn not_in_a_branch_never_post_selects() {
        let s = three_box();
        assert_eq!(conditional_post_selection(&s, "A", 1).unwrap(), 0.0);
        let q = conditional_post_selection(&s, "A", 0).unwrap();
        // |⟨psi_f|a⟩|² = 1/3
        let oracle = s.post.amplitudes()[0].norm_sqr();
        assert!((q - oracle).abs() < 1e-15);
        assert!((q - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn eigenstate_pre_always_found() {
        let mut s = three_box();
        s.pre = StateVector::basis(3, 0).unwrap();
        for i in 0..200 {
            let r = simulate_run(&s, "A", i, &mut SimSeed(9).stream(i)).unwrap();
            assert_eq!(r.outcome, "a");
        }
    }

    #[test]
    fn unknown_observable() {
        let s = three_box();
        assert!(matches!(
            simulate_run(&s, "Q", 0, &mut SimSeed(0).stream(0)),
            Err(Error::UnknownObservable(_))
        ));
        assert!(simulate_ensemble(&s, "A", 0, SimSeed(1)).is_err());
    }

    #[test]
    fn ensemble_is_deterministic_and_matches_records() {
        let s = three_box();
        let a = simulate_ensemble(&s, "A", 5000, SimSeed(7)).unwrap();
        let b = simulate_ensemble(&s, "A", 5000, SimSeed(7)).unwrap();
        assert_eq!(a, b);
        let records = simulate_records(&s, "A", 5000, SimSeed(7)).unwrap();
        assert_eq!(EnsembleStats::from_records(&s, "A", &records).unwrap(), a);
        for (i, r) in records.iter().enumerate() {
            assert_eq!(r.run_index, i as u64);
            let single = simulate_run(&s, "A", i as u64, &mut SimSeed(7).stream(i as u64)).unwrap();
            assert_eq!(&single, r);
        }
        assert_ne!(simulate_ensemble(&s, "A", 5000, SimSeed(8)).unwrap(), a);
    }

    #[test]
    fn merge_is_commutative() {
        let s = three_box();
        let x = simulate_ensemble(&s, "A", 300, SimSeed(1)).unwrap();
        let y = simulate_ensemble(&s, "A", 500, SimSeed(2)).unwrap();
        assert_eq!(x.clone().merge(&y), y.clone().merge(&x));
        assert_eq!(x.clone().merge(&y).n_runs, 800);
    }

    #[test]
    fn audit_examples() {
        let s = three_box();
        let empty = mutual_exclusivity_audit(&s, &[]).unwrap();
        assert!(empty.clean() && empty.records == 0);

        let bad = RunRecord {
            run_index: 3,
            opened: "A".into(),
            outcome: "a_prime".into(),
            post_selected: true,
        };
        let ok = RunRecord {
            run_index: 4,
            opened: "B".into(),
            outcome: "b".into(),
            post_selected: true,
        };
        let report = mutual_exclusivity_audit(&s, &[bad, ok]).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].run_index, 3);

        let unknown = RunRecord {
            run_index: 5,
            opened: "C".into(),
            outcome: "c".into(),
            post_selected: true,
        };
        assert!(!mutual_exclusivity_audit(&s, &[unknown]).unwrap().clean());
    }

    #[test]
    fn estimate_sigma_distance() {
        let e = Estimate::new(50, 100);
        assert_eq!(e.value, 0.5);
        assert!((e.std_error - 0.05).abs() < 1e-15);
        assert_eq!(e.sigma_distance(0.5), 0.0);
        assert_eq!(Estimate::new(0, 10).sigma_distance(0.0), 0.0);
        assert_eq!(Estimate::new(1, 10).sigma_distance(0.0), f64::INFINITY);
    }
}
