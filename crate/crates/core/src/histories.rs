//! Consistent histories with three time slots and zero Hamiltonian:
//! initial projector D, one intermediate event set [Eᵅ], final projector F.

use serde::Serialize;

use crate::abl::{abl_distribution, TwoStateVector, EPS_DEN};
use crate::error::{Error, Result};
use crate::hilbert::{trace_of, DenseMatrix, Observable, Projector, EPS_NORM};

/// Default absolute tolerance on the interference terms.
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventSet {
    /// Events are mutually orthogonal and sum to the identity.
    Decomposition,
    /// Concatenation of several decompositions; no structural guarantee.
    Counterfactual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryFamily {
    initial: Projector,
    events: Vec<Projector>,
    labels: Vec<String>,
    final_: Projector,
    kind: EventSet,
}

impl HistoryFamily {
    /// Validates dimensions, orthogonality and completeness of the event set.
    pub fn new(initial: Projector, events: Vec<Projector>, final_: Projector) -> Result<Self> {
        let labels = (0..events.len()).map(|i| i.to_string()).collect();
        Self::labelled(initial, events, labels, final_)
    }

    fn labelled(
        initial: Projector,
        events: Vec<Projector>,
        labels: Vec<String>,
        final_: Projector,
    ) -> Result<Self> {
        let dim = initial.dim();
        check_same_dim(dim, final_.dim())?;
        if events.is_empty() {
            return Err(Error::Empty("history family needs at least one event"));
        }
        for e in &events {
            check_same_dim(dim, e.dim())?;
        }
        let mats: Vec<DenseMatrix> = events.iter().map(Projector::matrix).collect();
        let mut sum = DenseMatrix::zeros(dim, dim);
        for (i, a) in mats.iter().enumerate() {
            sum += a;
            for b in &mats[i + 1..] {
                let overlap = crate::hilbert::max_abs(&(a * b));
                if overlap >= EPS_NORM {
                    return Err(Error::InvalidArgument(format!(
                        "events are not mutually orthogonal (max |EaEb| = {overlap:e})"
                    )));
                }
            }
        }
        let gap = crate::hilbert::max_abs(&(sum - DenseMatrix::identity(dim, dim)));
        if gap >= EPS_NORM {
            return Err(Error::InvalidArgument(format!(
                "events do not sum to the identity (max deviation {gap:e})"
            )));
        }
        Ok(HistoryFamily {
            initial,
            events,
            labels,
            final_,
            kind: EventSet::Decomposition,
        })
    }

    /// Family with D = |pre⟩⟨pre|, F = |post⟩⟨post| and the events of `obs`.
    pub fn from_two_state(tsv: &TwoStateVector, obs: &Observable) -> Result<Self> {
        Self::labelled(
            Projector::rank_one(tsv.pre()),
            obs.events.iter().map(|e| e.projector.clone()).collect(),
            obs.events
                .iter()
                .map(|e| format!("{}:{}", obs.name, e.label))
                .collect(),
            Projector::rank_one(tsv.post()),
        )
    }

    pub fn initial(&self) -> &Projector {
        &self.initial
    }

    pub fn events(&self) -> &[Projector] {
        &self.events
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn final_projector(&self) -> &Projector {
        &self.final_
    }

    pub fn kind(&self) -> EventSet {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.initial.dim()
    }
}

fn check_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    /// max over α≠β of |violations[α][β]|
    pub max_violation: f64,
    pub tolerance: f64,
    pub labels: Vec<String>,
    /// Re Tr((DEᵅF)† DEᵝF); the diagonal holds the history weights.
    pub violations: Vec<Vec<f64>>,
    /// Im Tr((DEᵅF)† DEᵝF). Reported only; does not affect `consistent`.
    pub imaginary: Vec<Vec<f64>>,
}

impl ConsistencyReport {
    /// Entry for events labelled `alpha` and `beta`.
    pub fn entry(&self, alpha: &str, beta: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == alpha)?;
        let j = self.labels.iter().position(|l| l == beta)?;
        Some(self.violations[i][j])
    }
}

pub fn consistency_check(fam: &HistoryFamily) -> Result<ConsistencyReport> {
    consistency_check_with_tolerance(fam, CONSISTENCY_TOL)
}

/// Evaluates the weak (real-part) consistency condition for every pair of
/// events in the family.
pub fn consistency_check_with_tolerance(
    fam: &HistoryFamily,
    tolerance: f64,
) -> Result<ConsistencyReport> {
    let d = fam.initial.matrix();
    let f = fam.final_.matrix();
    // chains[α] = D Eᵅ F
    let chains: Vec<DenseMatrix> = fam.events.iter().map(|e| &d * e.matrix() * &f).collect();
    let n = chains.len();
    let mut violations = vec![vec![0.0; n]; n];
    let mut imaginary = vec![vec![0.0; n]; n];
    let mut max_violation = 0.0_f64;
    for a in 0..n {
        let lhs = chains[a].adjoint();
        for b in 0..n {
            let t = trace_of(&[lhs.clone(), chains[b].clone()]);
            violations[a][b] = t.re;
            imaginary[a][b] = t.im;
            if a != b {
                max_violation = max_violation.max(t.re.abs());
            }
        }
    }
    Ok(ConsistencyReport {
        consistent: max_violation < tolerance,
        violations,
        imaginary,
        max_violation,
        tolerance,
        labels: fam.labels.clone(),
    })
}

/// Rank-one shortcut: with D = |pre⟩⟨pre| and F = |post⟩⟨post| the (α,β)
/// interference term is Re(xᵅ · conj(xᵝ)) where xᵅ = ⟨post|Eᵅ|pre⟩.
pub fn rank_one_interference(tsv: &TwoStateVector, obs: &Observable) -> Result<Vec<Vec<f64>>> {
    let x = tsv.amplitudes(obs)?;
    Ok(x.iter()
        .map(|xa| x.iter().map(|xb| (xa * xb.conj()).re).collect())
        .collect())
}

/// Intermediate event of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct History<'a> {
    family: &'a HistoryFamily,
    event_index: usize,
}

impl<'a> History<'a> {
    pub fn new(family: &'a HistoryFamily, event_index: usize) -> Result<Self> {
        if event_index >= family.events.len() {
            return Err(Error::OutcomeOutOfRange {
                index: event_index,
                len: family.events.len(),
            });
        }
        Ok(History {
            family,
            event_index,
        })
    }

    pub fn family(&self) -> &HistoryFamily {
        self.family
    }

    pub fn event_index(&self) -> usize {
        self.event_index
    }
}

fn require_consistent(fam: &HistoryFamily) -> Result<()> {
    let report = consistency_check(fam)?;
    if !report.consistent {
        return Err(Error::InconsistentFamily {
            max_violation: report.max_violation,
        });
    }
    Ok(())
}

/// Tr(Eᵅ D Eᵅ F) over system space.
fn history_weight(fam: &HistoryFamily, alpha: usize) -> f64 {
    let e = fam.events[alpha].matrix();
    trace_of(&[e.clone(), fam.initial.matrix(), e, fam.final_.matrix()]).re
}

/// Probability Tr(Eᵅ D Eᵅ F) of a history in a consistent family.
pub fn history_probability(h: &History<'_>) -> Result<f64> {
    require_consistent(h.family)?;
    Ok(history_weight(h.family, h.event_index))
}

/// Tr(Eᵅ D Eᵅ F) / Tr(DF) for a consistent family.
pub fn conditional_probability(fam: &HistoryFamily, alpha: usize) -> Result<f64> {
    let h = History::new(fam, alpha)?;
    require_consistent(fam)?;
    let norm = trace_of(&[fam.initial.matrix(), fam.final_.matrix()]).re;
    if norm < EPS_DEN {
        return Err(Error::ConditioningOnNull { trace: norm });
    }
    Ok(history_weight(h.family, h.event_index) / norm)
}

/// Tr(D Cₖ F Cₖ) / Tr(DF) for rank-one D and F built from `tsv`, evaluated
/// without assuming the family is consistent. The apparatus factor
/// Tr(M₀M_F) cancels between numerator and denominator and is not modelled.
pub fn ch_conditional_general(tsv: &TwoStateVector, obs: &Observable, k: usize) -> Result<f64> {
    obs.ensure_valid()?;
    check_same_dim(tsv.dim(), obs.dim().unwrap_or(0))?;
    let ck = &obs
        .events
        .get(k)
        .ok_or(Error::OutcomeOutOfRange {
            index: k,
            len: obs.events.len(),
        })?
        .projector;
    let d = tsv.pre().outer();
    let f = tsv.post().outer();
    let norm = trace_of(&[d.clone(), f.clone()]).re;
    if norm < EPS_DEN {
        return Err(Error::ConditioningOnNull { trace: norm });
    }
    let c = ck.matrix();
    Ok(trace_of(&[d, c.clone(), f, c]).re / norm)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDelta {
    pub outcome: String,
    pub ch: f64,
    pub abl: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub outcomes: Vec<OutcomeDelta>,
    pub max_delta: f64,
    pub max_violation: f64,
}

impl EquivalenceReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_delta < tol
    }
}

/// Compares the CH conditional against the ABL rule outcome by outcome,
/// after checking the rank-one consistency condition.
pub fn abl_ch_equivalence(tsv: &TwoStateVector, obs: &Observable) -> Result<EquivalenceReport> {
    obs.ensure_valid()?;
    check_same_dim(tsv.dim(), obs.dim().unwrap_or(0))?;
    let terms = rank_one_interference(tsv, obs)?;
    let mut max_violation = 0.0_f64;
    for (i, row) in terms.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i != j {
                max_violation = max_violation.max(v.abs());
            }
        }
    }
    if max_violation >= CONSISTENCY_TOL {
        return Err(Error::InconsistentFamily { max_violation });
    }
    let abl = abl_distribution(tsv, obs)?;
    let outcomes = obs
        .events
        .iter()
        .zip(abl)
        .enumerate()
        .map(|(k, (e, p))| {
            let ch = ch_conditional_general(tsv, obs, k)?;
            Ok(OutcomeDelta {
                outcome: e.label.clone(),
                ch,
                abl: p,
                delta: (ch - p).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_delta = outcomes.iter().map(|o| o.delta).fold(0.0, f64::max);
    Ok(EquivalenceReport {
        outcomes,
        max_delta,
        max_violation,
    })
}

/// Concatenates the event sets of families that share D and F.
///
/// The result is a counterfactual event set: it generally fails
/// orthogonality and completeness and is only meaningful as input to
/// [`consistency_check`].
pub fn merge_families(fams: &[HistoryFamily]) -> Result<HistoryFamily> {
    let first = fams
        .first()
        .ok_or(Error::Empty("merge needs at least one family"))?;
    if fams.len() == 1 {
        return Ok(first.clone());
    }
    let mut events = Vec::new();
    let mut labels = Vec::new();
    for fam in fams {
        check_same_dim(first.dim(), fam.dim())?;
        if !fam.initial.approx_eq(&first.initial, EPS_NORM) {
            return Err(Error::MismatchedBoundary("initial"));
        }
        if !fam.final_.approx_eq(&first.final_, EPS_NORM) {
            return Err(Error::MismatchedBoundary("final"));
        }
        events.extend(fam.events.iter().cloned());
        labels.extend(fam.labels.iter().cloned());
    }
    Ok(HistoryFamily {
        initial: first.initial.clone(),
        events,
        labels,
        final_: first.final_.clone(),
        kind: EventSet::Counterfactual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::StateVector;
    use crate::scenario::three_box;

    fn families() -> (TwoStateVector, HistoryFamily, HistoryFamily) {
        let s = three_box();
        let tsv = s.two_state_vector().unwrap();
        let a = HistoryFamily::from_two_state(&tsv, s.observable("A").unwrap()).unwrap();
        let b = HistoryFamily::from_two_state(&tsv, s.observable("B").unwrap()).unwrap();
        (tsv, a, b)
    }

    /// Literal Re Tr((D Eα F)† D Eβ F) with naive loops over dense matrices.
    fn naive_interference(
        d: &DenseMatrix,
        ea: &DenseMatrix,
        eb: &DenseMatrix,
        f: &DenseMatrix,
    ) -> f64 {
        let n = d.nrows();
        let mul = |x: &DenseMatrix, y: &DenseMatrix| {
            DenseMatrix::from_fn(n, n, |i, j| (0..n).map(|k| x[(i, k)] * y[(k, j)]).sum())
        };
        let left = mul(&mul(d, ea), f);
        let right = mul(&mul(d, eb), f);
        let dag = DenseMatrix::from_fn(n, n, |i, j| left[(j, i)].conj());
        let prod = mul(&dag, &right);
        (0..n).map(|i| prod[(i, i)].re).sum()
    }

    #[test]
    fn three_box_single_families_are_consistent() {
        let (_, a, b) = families();
        for fam in [&a, &b] {
            let r = consistency_check(fam).unwrap();
            assert!(r.consistent);
            assert!(r.max_violation < 1e-15);
            let d = fam.initial().matrix();
            let f = fam.final_projector().matrix();
            let e0 = fam.events()[0].matrix();
            let e1 = fam.events()[1].matrix();
            assert!((naive_interference(&d, &e0, &e1, &f) - r.violations[0][1]).abs() < 1e-15);
        }
    }

    #[test]
    fn merged_three_box_family_violation_is_one_ninth() {
        let (_, a, b) = families();
        let merged = merge_families(&[a, b]).unwrap();
        assert_eq!(merged.events().len(), 4);
        assert_eq!(merged.kind(), EventSet::Counterfactual);
        let r = consistency_check(&merged).unwrap();
        assert!(!r.consistent);
        let v = r.entry("A:a", "B:b").unwrap();
        assert!((v - 1.0 / 9.0).abs() < 1e-12);
        assert!(r.max_violation >= 1.0 / 9.0 - 1e-12);
        for i in 0..4 {
            for j in 0..4 {
                assert!((r.violations[i][j] - r.violations[j][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn merge_rejects_mismatched_boundaries() {
        let (tsv, a, _) = families();
        let other = TwoStateVector::new(tsv.post().clone(), tsv.pre().clone()).unwrap();
        let swapped =
            HistoryFamily::from_two_state(&other, &three_box().observable("A").unwrap().clone())
                .unwrap();
        assert_eq!(
            merge_families(&[a.clone(), swapped]),
            Err(Error::MismatchedBoundary("initial"))
        );
        assert_eq!(merge_families(std::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn single_identity_event_is_consistent() {
        let (tsv, _, _) = families();
        let fam = HistoryFamily::from_two_state(&tsv, &Observable::trivial(3).unwrap()).unwrap();
        let r = consistency_check(&fam).unwrap();
        assert!(r.consistent);
        assert_eq!(r.max_violation, 0.0);
    }

    #[test]
    fn history_probabilities() {
        let (_, a, _) = families();
        let p_a = history_probability(&History::new(&a, 0).unwrap()).unwrap();
        assert!((p_a - 1.0 / 9.0).abs() < 1e-15);
        let p_bc = history_probability(&History::new(&a, 1).unwrap()).unwrap();
        assert!(p_bc.abs() < 1e-15);

        let v = StateVector::basis(2, 1).unwrap();
        let d = Projector::rank_one(&v);
        let fam = HistoryFamily::new(d.clone(), vec![Projector::identity(2).unwrap()], d).unwrap();
        let p = history_probability(&History::new(&fam, 0).unwrap()).unwrap();
        assert!((p - 1.0).abs() < 1e-15);

        assert!(History::new(&fam, 1).is_err());
    }

    #[test]
    fn inconsistent_family_refuses_probabilities() {
        let (_, a, b) = families();
        let merged = merge_families(&[a, b]).unwrap();
        assert!(matches!(
            history_probability(&History::new(&merged, 0).unwrap()),
            Err(Error::InconsistentFamily { .. })
        ));
        assert!(matches!(
            conditional_probability(&merged, 0),
            Err(Error::InconsistentFamily { .. })
        ));
    }

    #[test]
    fn conditional_probabilities() {
        let (_, a, _) = families();
        assert!((conditional_probability(&a, 0).unwrap() - 1.0).abs() < 1e-12);
        assert!(conditional_probability(&a, 1).unwrap().abs() < 1e-12);

        let v = StateVector::basis(2, 0).unwrap();
        let p = Projector::rank_one(&v);
        let rest = Projector::rank_one(&StateVector::basis(2, 1).unwrap());
        let fam = HistoryFamily::new(p.clone(), vec![p.clone(), rest], p).unwrap();
        assert!((conditional_probability(&fam, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn conditioning_on_null() {
        let d = Projector::rank_one(&StateVector::basis(2, 0).unwrap());
        let f = Projector::rank_one(&StateVector::basis(2, 1).unwrap());
        let fam = HistoryFamily::new(d, vec![Projector::identity(2).unwrap()], f).unwrap();
        assert!(matches!(
            conditional_probability(&fam, 0),
            Err(Error::ConditioningOnNull { .. })
        ));
    }

    #[test]
    fn ch_general_examples() {
        let s = three_box();
        let tsv = s.two_state_vector().unwrap();
        let a = s.observable("A").unwrap();
        assert!((ch_conditional_general(&tsv, a, 0).unwrap() - 1.0).abs() < 1e-12);
        assert!(ch_conditional_general(&tsv, a, 1).unwrap().abs() < 1e-12);
        let id = Observable::trivial(3).unwrap();
        assert!((ch_conditional_general(&tsv, &id, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equivalence_examples() {
        let s = three_box();
        let tsv = s.two_state_vector().unwrap();
        for name in ["A", "B"] {
            let r = abl_ch_equivalence(&tsv, s.observable(name).unwrap()).unwrap();
            assert!(r.holds(1e-12), "{name}: {r:?}");
        }
        let id = Observable::trivial(3).unwrap();
        let r = abl_ch_equivalence(&tsv, &id).unwrap();
        assert_eq!(r.outcomes[0].ch, 1.0);
        assert_eq!(r.outcomes[0].abl, 1.0);
    }

    #[test]
    fn equivalence_rejects_inconsistent_family() {
        // X basis with pre = post = |0⟩: x± = 1/2, Re(x+ x-*) = 1/4.
        let k0 = StateVector::basis(2, 0).unwrap();
        let tsv = TwoStateVector::new(k0.clone(), k0).unwrap();
        let r = 1.0 / 2f64.sqrt();
        let plus = StateVector::from_real(&[r, r]).unwrap();
        let minus = StateVector::from_real(&[r, -r]).unwrap();
        let x = Observable::new(
            "X",
            vec![
                crate::hilbert::Event::new(1.0, "+", Projector::rank_one(&plus)),
                crate::hilbert::Event::new(-1.0, "-", Projector::rank_one(&minus)),
            ],
        );
        assert!(matches!(
            abl_ch_equivalence(&tsv, &x),
            Err(Error::InconsistentFamily { .. })
        ));
    }

    #[test]
    fn family_construction_enforces_decomposition() {
        let d = Projector::rank_one(&StateVector::basis(3, 0).unwrap());
        let partial = vec![Projector::onto_indices(3, &[0]).unwrap()];
        assert!(HistoryFamily::new(d.clone(), partial, d.clone()).is_err());
        let wrong_dim = Projector::identity(2).unwrap();
        assert!(matches!(
            HistoryFamily::new(d.clone(), vec![wrong_dim], d),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
