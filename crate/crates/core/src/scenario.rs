//! Named scenarios and the JSON scenario document.
//!
//! Document shape:
//!
//! ```json
//! { "name": "three-box", "dim": 3, "basis_labels": ["a", "b", "c"],
//!   "pre":  [[re, im], ...],
//!   "post": [[re, im], ...],
//!   "observables": [
//!     { "name": "A",
//!       "events": [ { "eigenvalue": 1.0, "label": "a", "basis": [[[re, im], ...], ...] } ] } ] }
//! ```
//!
//! `label` is optional and defaults to the eigenvalue's decimal form.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::abl::TwoStateVector;
use crate::error::{Error, Result};
use crate::hilbert::{Event, Observable, Projector, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub basis_labels: Vec<String>,
    pub pre: StateVector,
    pub post: StateVector,
    pub observables: Vec<Observable>,
}

impl Scenario {
    /// Checks dimensions and validates every observable.
    pub fn new(
        name: impl Into<String>,
        basis_labels: Vec<String>,
        pre: StateVector,
        post: StateVector,
        observables: Vec<Observable>,
    ) -> Result<Self> {
        let dim = pre.dim();
        let mismatch = |found| {
            Err(Error::DimensionMismatch {
                expected: dim,
                found,
            })
        };
        if post.dim() != dim {
            return mismatch(post.dim());
        }
        if basis_labels.len() != dim {
            return mismatch(basis_labels.len());
        }
        for (i, obs) in observables.iter().enumerate() {
            obs.ensure_valid()?;
            if obs.dim() != Some(dim) {
                return mismatch(obs.dim().unwrap_or(0));
            }
            if observables[..i].iter().any(|o| o.name == obs.name) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate observable name '{}'",
                    obs.name
                )));
            }
        }
        Ok(Scenario {
            name: name.into(),
            basis_labels,
            pre,
            post,
            observables,
        })
    }

    pub fn dim(&self) -> usize {
        self.pre.dim()
    }

    pub fn two_state_vector(&self) -> Result<TwoStateVector> {
        TwoStateVector::new(self.pre.clone(), self.post.clone())
    }

    pub fn observable(&self, name: &str) -> Result<&Observable> {
        self.observables
            .iter()
            .find(|o| o.name == name)
            .ok_or_else(|| Error::UnknownObservable(name.to_string()))
    }
}

fn real(xs: &[f64]) -> StateVector {
    StateVector::normalized(xs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
        .expect("nonzero real vector")
}

/// "Is the particle in box `k`?" with eigenvalue 1 for yes and 0 for no.
fn box_observable(name: &str, dim: usize, k: usize, yes: &str, no: &str) -> Observable {
    let rest: Vec<usize> = (0..dim).filter(|&i| i != k).collect();
    Observable::new(
        name,
        vec![
            Event::new(
                1.0,
                yes,
                Projector::onto_indices(dim, &[k]).expect("valid index"),
            ),
            Event::new(
                0.0,
                no,
                Projector::onto_indices(dim, &rest).expect("valid indices"),
            ),
        ],
    )
}

/// One particle, three boxes. Pre-selected in (|a⟩+|b⟩+|c⟩)/√3 and
/// post-selected in (|a⟩+|b⟩−|c⟩)/√3, with observables `A` (open box A)
/// and `B` (open box B).
pub fn three_box() -> Scenario {
    Scenario {
        name: "three-box".into(),
        basis_labels: vec!["a".into(), "b".into(), "c".into()],
        pre: real(&[1.0, 1.0, 1.0]).with_label("psi_0"),
        post: real(&[1.0, 1.0, -1.0]).with_label("psi_f"),
        observables: vec![
            box_observable("A", 3, 0, "a", "a_prime"),
            box_observable("B", 3, 1, "b", "b_prime"),
        ],
    }
}

/// One particle in n+1 boxes, post-selected so that opening any of the first
/// n boxes finds it with certainty.
///
/// The post-selection state is |1⟩+…+|n⟩ − (n−1)|n+1⟩ (normalized): its
/// overlap with every "not in box i" branch of the uniform pre-selection
/// vanishes, and for n = 2 it is the three-box post-selection state.
/// Observables are `box1`..`boxN`; box n+1 gets none.
pub fn n_plus_one_box(n: usize) -> Result<Scenario> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "n-box scenario needs n >= 2, got {n}"
        )));
    }
    let dim = n + 1;
    if dim > crate::hilbert::MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "n-box scenario needs n + 1 <= {}",
            crate::hilbert::MAX_DIM
        )));
    }
    let mut post = vec![1.0; dim];
    post[n] = -(n as f64 - 1.0);
    Ok(Scenario {
        name: format!("n-box:{n}"),
        basis_labels: (1..=dim).map(|i| i.to_string()).collect(),
        pre: real(&vec![1.0; dim]).with_label("psi_0"),
        post: real(&post).with_label("psi_f"),
        observables: (0..n)
            .map(|k| {
                let i = k + 1;
                box_observable(
                    &format!("box{i}"),
                    dim,
                    k,
                    &format!("in_{i}"),
                    &format!("not_{i}"),
                )
            })
            .collect(),
    })
}

/// Resolves a built-in scenario name: `three-box` or `n-box:<n>`.
pub fn builtin(name: &str) -> Result<Scenario> {
    if name == "three-box" {
        return Ok(three_box());
    }
    if let Some(n) = name.strip_prefix("n-box:") {
        let n: usize = n
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad box count in '{name}'")))?;
        return n_plus_one_box(n);
    }
    Err(Error::InvalidArgument(format!(
        "unknown built-in scenario '{name}' (expected three-box or n-box:<n>)"
    )))
}

type Amplitudes = Vec<[f64; 2]>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventDoc {
    eigenvalue: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    basis: Vec<Amplitudes>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservableDoc {
    name: String,
    events: Vec<EventDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    name: String,
    dim: usize,
    basis_labels: Vec<String>,
    pre: Amplitudes,
    post: Amplitudes,
    observables: Vec<ObservableDoc>,
}

fn to_pairs(amps: &[Complex64]) -> Amplitudes {
    amps.iter().map(|z| [z.re, z.im]).collect()
}

fn from_pairs(pairs: &[[f64; 2]]) -> Vec<Complex64> {
    pairs
        .iter()
        .map(|&[re, im]| Complex64::new(re, im))
        .collect()
}

fn field<T>(what: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Parse(format!("{what}: {e}")))
}

impl ScenarioDoc {
    fn from_scenario(s: &Scenario) -> Self {
        ScenarioDoc {
            name: s.name.clone(),
            dim: s.dim(),
            basis_labels: s.basis_labels.clone(),
            pre: to_pairs(s.pre.amplitudes()),
            post: to_pairs(s.post.amplitudes()),
            observables: s
                .observables
                .iter()
                .map(|o| ObservableDoc {
                    name: o.name.clone(),
                    events: o
                        .events
                        .iter()
                        .map(|e| EventDoc {
                            eigenvalue: e.eigenvalue,
                            label: Some(e.label.clone()),
                            basis: e.projector.basis().iter().map(|b| to_pairs(b)).collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    fn into_scenario(self) -> Result<Scenario> {
        let dim = self.dim;
        let sized = |what: String, len: usize| {
            if len != dim {
                Err(Error::Parse(format!(
                    "{what}: expected {dim} entries, found {len}"
                )))
            } else {
                Ok(())
            }
        };
        sized("pre".into(), self.pre.len())?;
        sized("post".into(), self.post.len())?;
        let pre = field("pre", StateVector::new(from_pairs(&self.pre)))?.with_label("psi_0");
        let post = field("post", StateVector::new(from_pairs(&self.post)))?.with_label("psi_f");

        let mut observables = Vec::with_capacity(self.observables.len());
        for (oi, o) in self.observables.into_iter().enumerate() {
            let mut events = Vec::with_capacity(o.events.len());
            for (ei, e) in o.events.into_iter().enumerate() {
                let at = format!("observables[{oi}].events[{ei}].basis");
                let vectors = e
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(bi, v)| {
                        sized(format!("{at}[{bi}]"), v.len())?;
                        Ok(from_pairs(v))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let projector = field(&at, Projector::from_span(dim, &vectors))?;
                let label = e.label.unwrap_or_else(|| e.eigenvalue.to_string());
                events.push(Event::new(e.eigenvalue, label, projector));
            }
            observables.push(Observable::new(o.name, events));
        }
        Scenario::new(self.name, self.basis_labels, pre, post, observables)
    }
}

pub fn to_json_string(s: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioDoc::from_scenario(s)).expect("scenario serializes")
}

pub fn from_json_str(text: &str) -> Result<Scenario> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    doc.into_scenario()
}

pub fn read_scenario<R: Read>(mut reader: R) -> Result<Scenario> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    from_json_str(&text)
}

pub fn write_scenario<W: Write>(s: &Scenario, mut writer: W) -> Result<()> {
    writer.write_all(to_json_string(s).as_bytes())?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_scenario(std::io::BufReader::new(file))
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_scenario(s, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abl::abl_probability;
    use crate::hilbert::inner_product;

    #[test]
    fn three_box_states_and_observables() {
        let s = three_box();
        let r = 1.0 / 3f64.sqrt();
        for (z, want) in s.pre.amplitudes().iter().zip([r, r, r]) {
            assert!((z.re - want).abs() < 1e-15 && z.im == 0.0);
        }
        for (z, want) in s.post.amplitudes().iter().zip([r, r, -r]) {
            assert!((z.re - want).abs() < 1e-15 && z.im == 0.0);
        }
        let a_prime = &s.observable("A").unwrap().events[1].projector;
        assert!(a_prime.approx_eq(&Projector::onto_indices(3, &[1, 2]).unwrap(), 1e-15));
        assert_eq!(a_prime.rank(), 2);
        // passes all invariants
        Scenario::new(
            s.name.clone(),
            s.basis_labels.clone(),
            s.pre.clone(),
            s.post.clone(),
            s.observables.clone(),
        )
        .unwrap();
    }

    #[test]
    fn n_box_two_is_three_box() {
        let n2 = n_plus_one_box(2).unwrap();
        let tb = three_box();
        for (x, y) in n2.pre.amplitudes().iter().zip(tb.pre.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
        for (x, y) in n2.post.amplitudes().iter().zip(tb.post.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
        let overlap = inner_product(&n2.post, &n2.pre).unwrap().norm_sqr();
        assert!((overlap - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn n_box_certainty() {
        let s = n_plus_one_box(5).unwrap();
        let tsv = s.two_state_vector().unwrap();
        for obs in &s.observables {
            let r = abl_probability(&tsv, obs, 0).unwrap();
            assert!((r.probability - 1.0).abs() < 1e-12, "{}", obs.name);
            let leak = obs.events[1].projector.sandwich(&s.post, &s.pre).unwrap();
            assert!(leak.norm() < 1e-12);
        }
        assert_eq!(s.observables.len(), 5);
    }

    #[test]
    fn n_box_rejects_small_n() {
        assert!(n_plus_one_box(1).is_err());
        assert!(n_plus_one_box(0).is_err());
    }

    #[test]
    fn builtin_names() {
        assert_eq!(builtin("three-box").unwrap(), three_box());
        assert_eq!(builtin("n-box:4").unwrap().dim(), 5);
        assert!(builtin("n-box:x").is_err());
        assert!(builtin("four-box").is_err());
    }

    #[test]
    fn round_trip_three_box() {
        let s = three_box();
        let back = from_json_str(&to_json_string(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_unnormalized_pre() {
        let text = to_json_string(&three_box()).replace(
            &format!("{}", 1.0 / 3f64.sqrt()),
            &format!("{}", 0.5 / 3f64.sqrt()),
        );
        match from_json_str(&text) {
            Err(Error::Parse(msg)) => assert!(msg.contains("pre") && msg.contains("norm"), "{msg}"),
            other => panic!("expected norm rejection, got {other:?}"),
        }
    }

    #[test]
    fn rejects_incomplete_observable() {
        let mut s = three_box();
        s.observables[0].events.pop();
        let text = serde_json::to_string(&ScenarioDoc::from_scenario(&s)).unwrap();
        match from_json_str(&text) {
            Err(Error::InvalidObservable { name, reason }) => {
                assert_eq!(name, "A");
                assert!(reason.contains("completeness"), "{reason}");
            }
            other => panic!("expected completeness failure, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = from_json_str("{\n  \"name\": \"x\",\n  \"dim\": \"three\"\n}").unwrap_err();
        match err {
            Error::Parse(msg) => assert!(msg.contains("line 3"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn label_defaults_to_eigenvalue() {
        let text = r#"{"name":"z","dim":2,"basis_labels":["0","1"],
            "pre":[[1,0],[0,0]],"post":[[1,0],[0,0]],
            "observables":[{"name":"Z","events":[
                {"eigenvalue":1.0,"basis":[[[1,0],[0,0]]]},
                {"eigenvalue":-1.0,"basis":[[[0,0],[1,0]]]}]}]}"#;
        let s = from_json_str(text).unwrap();
        assert_eq!(s.observables[0].events[1].label, "-1");
    }
}
