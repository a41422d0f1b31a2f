//! Small-dimension complex linear algebra: normalized states, eigenspace
//! projectors and observables given as resolutions of the identity.
//!
//! Projectors are stored as an orthonormal basis of their range. Dense
//! matrices are only built on demand (for traces and structural checks),
//! which keeps rank exact and is cheap at the dimensions this crate targets
//! (up to [`MAX_DIM`]).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexScalar = Complex64;
pub type DenseMatrix = DMatrix<Complex64>;

/// Tolerance for every structural check (normalization, orthogonality,
/// idempotence, completeness, projector equality).
pub const EPS_NORM: f64 = 1e-9;

/// States whose norm is within this distance of 1 are rescaled; anything
/// further off is rejected.
pub const RENORMALIZE_WINDOW: f64 = 1e-6;

/// Below this deviation a state is treated as already normalized and kept
/// bit-for-bit. Makes normalization idempotent.
const NORM_EXACT: f64 = 1e-14;

/// Drop tolerance for rank decisions in Gram–Schmidt.
pub const RANK_DROP_TOL: f64 = 1e-9;

/// Largest supported Hilbert-space dimension.
pub const MAX_DIM: usize = 64;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::Empty("dimension must be at least 1"));
    }
    if dim > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} exceeds supported maximum {MAX_DIM}"
        )));
    }
    Ok(())
}

fn check_finite(amps: &[Complex64]) -> Result<()> {
    match amps
        .iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

fn norm_sq(amps: &[Complex64]) -> f64 {
    amps.iter().map(|z| z.norm_sqr()).sum()
}

/// ⟨u|v⟩ on raw amplitude slices, conjugating the first argument.
pub(crate) fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    label: Option<String>,
}

impl StateVector {
    /// Builds a state, rescaling when the norm is within
    /// [`RENORMALIZE_WINDOW`] of 1 and rejecting it otherwise.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        check_finite(&amplitudes)?;
        let norm = norm_sq(&amplitudes).sqrt();
        let deviation = (norm - 1.0).abs();
        if deviation > RENORMALIZE_WINDOW {
            return Err(Error::NotNormalized { norm });
        }
        let amplitudes = if deviation > NORM_EXACT {
            amplitudes.into_iter().map(|z| z / norm).collect()
        } else {
            amplitudes
        };
        Ok(StateVector {
            amplitudes,
            label: None,
        })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        check_finite(&amplitudes)?;
        let norm = norm_sq(&amplitudes).sqrt();
        if norm < RANK_DROP_TOL {
            return Err(Error::ZeroSpan);
        }
        StateVector::new(amplitudes.into_iter().map(|z| z / norm).collect())
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        StateVector::new(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis state |index⟩.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::OutcomeOutOfRange { index, len: dim });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            amplitudes,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// |v⟩⟨v| as a dense matrix.
    pub fn outer(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| self.amplitudes[i] * self.amplitudes[j].conj())
    }
}

/// ⟨u|v⟩, conjugate-linear in `u`.
pub fn inner_product(u: &StateVector, v: &StateVector) -> Result<ComplexScalar> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    Ok(dot(&u.amplitudes, &v.amplitudes))
}

/// Orthogonal projector onto the span of an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    dim: usize,
    basis: Vec<Vec<Complex64>>,
}

/// Unnormalized result of applying a projector to a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub vector: Vec<Complex64>,
    pub norm_sq: f64,
}

impl Projector {
    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Projector { dim, basis: vec![] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let basis = (0..dim)
            .map(|k| StateVector::basis(dim, k).map(|s| s.amplitudes))
            .collect::<Result<_>>()?;
        Ok(Projector { dim, basis })
    }

    /// Rank-1 projector |v⟩⟨v|.
    pub fn rank_one(v: &StateVector) -> Self {
        Projector {
            dim: v.dim(),
            basis: vec![v.amplitudes.clone()],
        }
    }

    /// Projector onto the span of the given computational basis indices.
    pub fn onto_indices(dim: usize, indices: &[usize]) -> Result<Self> {
        let vs = indices
            .iter()
            .map(|&k| StateVector::basis(dim, k).map(|s| s.amplitudes))
            .collect::<Result<Vec<_>>>()?;
        Projector::from_span(dim, &vs)
    }

    /// Projector onto the span of arbitrary (not necessarily normalized or
    /// independent) vectors.
    ///
    /// Uses modified Gram–Schmidt with column pivoting: at every step the
    /// remaining vector with the largest residual is taken next, and the
    /// process stops once that residual drops below [`RANK_DROP_TOL`]
    /// (relative to the largest input norm, floored at 1). Input that is
    /// already orthonormal to within 1e-14 is kept verbatim.
    pub fn from_span(dim: usize, vectors: &[Vec<Complex64>]) -> Result<Self> {
        check_dim(dim)?;
        if vectors.is_empty() {
            return Err(Error::Empty("projector needs at least one spanning vector"));
        }
        for v in vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            check_finite(v)?;
        }

        if vectors.len() <= dim && is_orthonormal(vectors, NORM_EXACT) {
            return Ok(Projector {
                dim,
                basis: vectors.to_vec(),
            });
        }

        let scale = vectors
            .iter()
            .map(|v| norm_sq(v).sqrt())
            .fold(1.0_f64, f64::max);
        let tol = RANK_DROP_TOL * scale;

        let mut residual: Vec<Vec<Complex64>> = vectors.to_vec();
        let mut basis: Vec<Vec<Complex64>> = Vec::new();
        while !residual.is_empty() && basis.len() < dim {
            let (pivot, pivot_norm) = residual.iter().map(|v| norm_sq(v).sqrt()).enumerate().fold(
                (0, -1.0),
                |best, (i, n)| if n > best.1 { (i, n) } else { best },
            );
            if pivot_norm < tol {
                break;
            }
            let mut q = residual.swap_remove(pivot);
            // Second projection pass against the accepted basis.
            for b in &basis {
                let c = dot(b, &q);
                q.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let n = norm_sq(&q).sqrt();
            if n < tol {
                continue;
            }
            q.iter_mut().for_each(|x| *x /= n);
            for r in residual.iter_mut() {
                let c = dot(&q, r);
                r.iter_mut().zip(&q).for_each(|(x, y)| *x -= c * y);
            }
            basis.push(q);
        }

        if basis.is_empty() {
            return Err(Error::ZeroSpan);
        }
        Ok(Projector { dim, basis })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Complex64>] {
        &self.basis
    }

    pub fn matrix(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim, self.dim);
        for b in &self.basis {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    m[(i, j)] += b[i] * b[j].conj();
                }
            }
        }
        m
    }

    /// ⟨u|P|v⟩ = Σ_k ⟨u|b_k⟩⟨b_k|v⟩.
    pub fn sandwich(&self, u: &StateVector, v: &StateVector) -> Result<ComplexScalar> {
        self.check(u.dim())?;
        self.check(v.dim())?;
        Ok(self
            .basis
            .iter()
            .map(|b| dot(&u.amplitudes, b) * dot(b, &v.amplitudes))
            .sum())
    }

    /// Max-entry distance between the dense matrices of two projectors.
    pub fn distance(&self, other: &Projector) -> Result<f64> {
        self.check(other.dim)?;
        Ok(max_abs(&(self.matrix() - other.matrix())))
    }

    pub fn approx_eq(&self, other: &Projector, tol: f64) -> bool {
        self.distance(other).map(|d| d < tol).unwrap_or(false)
    }

    fn check(&self, dim: usize) -> Result<()> {
        if dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: dim,
            });
        }
        Ok(())
    }
}

fn is_orthonormal(vs: &[Vec<Complex64>], tol: f64) -> bool {
    vs.iter().enumerate().all(|(i, u)| {
        vs.iter().enumerate().all(|(j, v)| {
            let target = if i == j { 1.0 } else { 0.0 };
            (dot(u, v) - Complex64::new(target, 0.0)).norm() <= tol
        })
    })
}

pub(crate) fn max_abs(m: &DenseMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Orthonormalize a list of states and build the projector onto their span.
pub fn projector_from_basis(vs: &[StateVector]) -> Result<Projector> {
    let first = vs
        .first()
        .ok_or(Error::Empty("projector needs at least one spanning vector"))?;
    let amps: Vec<Vec<Complex64>> = vs.iter().map(|v| v.amplitudes.clone()).collect();
    Projector::from_span(first.dim(), &amps)
}

/// Returns the unnormalized vector P|v⟩ and ‖P|v⟩‖².
pub fn apply_projector(p: &Projector, v: &StateVector) -> Result<Projection> {
    p.check(v.dim())?;
    let mut vector = vec![Complex64::new(0.0, 0.0); p.dim];
    for b in &p.basis {
        let c = dot(b, &v.amplitudes);
        vector.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
    }
    let norm_sq = norm_sq(&vector);
    Ok(Projection { vector, norm_sq })
}

/// Tr(P₁ P₂ ⋯ Pₙ) for an ordered list of projectors.
pub fn trace_product(ps: &[&Projector]) -> Result<ComplexScalar> {
    let first = ps
        .first()
        .ok_or(Error::Empty("trace of an empty product"))?;
    let mats = ps
        .iter()
        .map(|p| {
            first.check(p.dim)?;
            Ok(p.matrix())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(trace_of(&mats))
}

/// Trace of an ordered product of dense matrices.
pub(crate) fn trace_of(ms: &[DenseMatrix]) -> Complex64 {
    let mut acc = ms[0].clone();
    for m in &ms[1..] {
        acc = &acc * m;
    }
    acc.trace()
}

/// One outcome of an observable: eigenvalue, display label and eigenspace projector.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub eigenvalue: f64,
    pub label: String,
    pub projector: Projector,
}

impl Event {
    pub fn new(eigenvalue: f64, label: impl Into<String>, projector: Projector) -> Self {
        Event {
            eigenvalue,
            label: label.into(),
            projector,
        }
    }
}

/// A named observable in spectral form.
///
/// Construction does not validate; call [`Observable::validate`] or
/// [`Observable::ensure_valid`] (every probability routine does the latter).
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub name: String,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub dims_consistent: bool,
    pub distinct_eigenvalues: bool,
    pub orthogonal: bool,
    pub complete: bool,
    /// max over α≠β of max|EᵅEᵝ|
    pub max_orthogonality_violation: f64,
    /// max|ΣEᵅ − I|
    pub max_completeness_violation: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.dims_consistent && self.distinct_eigenvalues && self.orthogonal && self.complete
    }
}

impl Observable {
    pub fn new(name: impl Into<String>, events: Vec<Event>) -> Self {
        Observable {
            name: name.into(),
            events,
        }
    }

    /// The trivial observable: a single event equal to the identity.
    pub fn trivial(dim: usize) -> Result<Self> {
        Ok(Observable::new(
            "I",
            vec![Event::new(1.0, "1", Projector::identity(dim)?)],
        ))
    }

    /// Non-degenerate observable measuring the computational basis.
    pub fn computational(name: impl Into<String>, dim: usize) -> Result<Self> {
        let events = (0..dim)
            .map(|k| {
                let v = StateVector::basis(dim, k)?;
                Ok(Event::new(k as f64, k.to_string(), Projector::rank_one(&v)))
            })
            .collect::<Result<_>>()?;
        Ok(Observable::new(name, events))
    }

    pub fn dim(&self) -> Option<usize> {
        self.events.first().map(|e| e.projector.dim())
    }

    pub fn projectors(&self) -> Vec<&Projector> {
        self.events.iter().map(|e| &e.projector).collect()
    }

    pub fn outcome_index(&self, label: &str) -> Result<usize> {
        self.events
            .iter()
            .position(|e| e.label == label)
            .ok_or_else(|| Error::UnknownOutcome {
                observable: self.name.clone(),
                outcome: label.to_string(),
            })
    }

    pub fn validate(&self) -> ValidationReport {
        validate_observable(self)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let r = self.validate();
        let fail = |reason: String| {
            Err(Error::InvalidObservable {
                name: self.name.clone(),
                reason,
            })
        };
        if self.events.is_empty() {
            return fail("no events".into());
        }
        if !r.dims_consistent {
            return fail("event projectors have different dimensions".into());
        }
        if !r.distinct_eigenvalues {
            return fail("eigenvalues are not pairwise distinct".into());
        }
        if !r.orthogonal {
            return fail(format!(
                "orthogonality check failed: max |EaEb| = {:e}",
                r.max_orthogonality_violation
            ));
        }
        if !r.complete {
            return fail(format!(
                "completeness check failed (events must sum to the identity): max |sum E - I| = {:e}",
                r.max_completeness_violation
            ));
        }
        Ok(())
    }
}

/// Checks pairwise orthogonality and completeness of an observable's events.
pub fn validate_observable(obs: &Observable) -> ValidationReport {
    let dim = obs.dim().unwrap_or(0);
    let dims_consistent = obs.events.iter().all(|e| e.projector.dim() == dim);

    let distinct_eigenvalues = obs.events.iter().enumerate().all(|(i, a)| {
        obs.events[i + 1..]
            .iter()
            .all(|b| a.eigenvalue != b.eigenvalue)
    });

    if !dims_consistent || obs.events.is_empty() {
        return ValidationReport {
            dims_consistent: dims_consistent && !obs.events.is_empty(),
            distinct_eigenvalues,
            orthogonal: false,
            complete: false,
            max_orthogonality_violation: f64::INFINITY,
            max_completeness_violation: f64::INFINITY,
        };
    }

    let mats: Vec<DenseMatrix> = obs.events.iter().map(|e| e.projector.matrix()).collect();
    let mut max_orth = 0.0_f64;
    for (i, a) in mats.iter().enumerate() {
        for b in &mats[i + 1..] {
            max_orth = max_orth.max(max_abs(&(a * b)));
        }
    }
    let mut sum = DenseMatrix::zeros(dim, dim);
    for m in &mats {
        sum += m;
    }
    let max_comp = max_abs(&(sum - DenseMatrix::identity(dim, dim)));

    ValidationReport {
        dims_consistent,
        distinct_eigenvalues,
        orthogonal: max_orth < EPS_NORM,
        complete: max_comp < EPS_NORM,
        max_orthogonality_violation: max_orth,
        max_completeness_violation: max_comp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn three_box_states() -> (StateVector, StateVector) {
        let s = 1.0 / 3f64.sqrt();
        (
            StateVector::from_real(&[s, s, s]).unwrap(),
            StateVector::from_real(&[s, s, -s]).unwrap(),
        )
    }

    /// Brute-force dense oracle: P = Σ |b⟩⟨b| from naive loops, then P·v.
    fn naive_apply(basis: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
        let n = v.len();
        let mut p = vec![vec![c(0.0, 0.0); n]; n];
        for b in basis {
            for i in 0..n {
                for j in 0..n {
                    p[i][j] += b[i] * b[j].conj();
                }
            }
        }
        (0..n)
            .map(|i| (0..n).map(|j| p[i][j] * v[j]).sum())
            .collect()
    }

    #[test]
    fn inner_product_examples() {
        let (pre, post) = three_box_states();
        let r = 1.0 / 2f64.sqrt();
        let a_prime = StateVector::from_real(&[0.0, r, r]).unwrap();
        assert!(inner_product(&post, &a_prime).unwrap().norm() < 1e-15);
        assert!((inner_product(&pre, &pre).unwrap() - c(1.0, 0.0)).norm() < 1e-15);

        let brute: f64 = pre
            .amplitudes()
            .iter()
            .zip(post.amplitudes())
            .map(|(a, b)| (b.conj() * a).re)
            .sum();
        let ip = inner_product(&post, &pre).unwrap();
        assert!((ip.re - 1.0 / 3.0).abs() < 1e-15 && ip.im.abs() < 1e-15);
        assert!((ip.re - brute).abs() < 1e-15);
    }

    #[test]
    fn inner_product_dimension_mismatch() {
        let u = StateVector::basis(2, 0).unwrap();
        let v = StateVector::basis(3, 0).unwrap();
        assert!(matches!(
            inner_product(&u, &v),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inner_product_conjugates_first_argument() {
        let u = StateVector::new(vec![c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let v = StateVector::basis(2, 0).unwrap();
        assert_eq!(inner_product(&u, &v).unwrap(), c(0.0, -1.0));
        assert_eq!(inner_product(&v, &u).unwrap(), c(0.0, 1.0));
    }

    #[test]
    fn apply_projector_examples() {
        let (pre, _) = three_box_states();
        let p_bc = Projector::onto_indices(3, &[1, 2]).unwrap();
        let proj = apply_projector(&p_bc, &pre).unwrap();
        let oracle = naive_apply(p_bc.basis(), pre.amplitudes());
        for (x, y) in proj.vector.iter().zip(&oracle) {
            assert!((x - y).norm() < 1e-15);
        }
        assert!(proj.vector[0].norm() < 1e-15);
        assert!((proj.vector[1] - proj.vector[2]).norm() < 1e-15);
        assert!((proj.norm_sq - 2.0 / 3.0).abs() < 1e-15);

        let b = StateVector::basis(3, 1).unwrap();
        let in_range = apply_projector(&p_bc, &b).unwrap();
        assert_eq!(in_range.vector, b.amplitudes());
        assert_eq!(in_range.norm_sq, 1.0);

        let p_a = Projector::onto_indices(3, &[0]).unwrap();
        let zero = apply_projector(&p_a, &b).unwrap();
        assert_eq!(zero.norm_sq, 0.0);
    }

    #[test]
    fn projector_from_basis_examples() {
        let a = StateVector::basis(3, 0).unwrap();
        let b = StateVector::basis(3, 1).unwrap();
        let cc = StateVector::basis(3, 2).unwrap();

        let bc = projector_from_basis(&[b.clone(), cc.clone()]).unwrap();
        assert_eq!(bc.rank(), 2);

        let dup = projector_from_basis(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(dup.rank(), 1);
        assert!(dup.approx_eq(&Projector::rank_one(&a), 1e-15));

        let r = 1.0 / 2f64.sqrt();
        let plus = StateVector::from_real(&[0.0, r, r]).unwrap();
        let minus = StateVector::from_real(&[0.0, r, -r]).unwrap();
        let rotated = projector_from_basis(&[plus, minus]).unwrap();
        assert!(rotated.distance(&bc).unwrap() < 1e-12);
    }

    #[test]
    fn projector_from_zero_span_fails() {
        let z = vec![c(0.0, 0.0); 3];
        assert_eq!(
            Projector::from_span(3, &[z.clone(), z]),
            Err(Error::ZeroSpan)
        );
        assert!(matches!(projector_from_basis(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn near_degenerate_span_drops_dependent_direction() {
        let u = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let v = vec![c(1.0, 0.0), c(1e-12, 0.0), c(0.0, 0.0)];
        let p = Projector::from_span(3, &[u, v]).unwrap();
        assert_eq!(p.rank(), 1);
    }

    #[test]
    fn projector_is_idempotent_and_hermitian() {
        let vs = vec![
            vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, 1.0), c(2.0, 0.0)],
            vec![c(0.1, 0.0), c(1.0, -1.0), c(0.5, 0.5), c(0.0, 0.0)],
        ];
        let p = Projector::from_span(4, &vs).unwrap().matrix();
        assert!(max_abs(&(&p * &p - &p)) < EPS_NORM);
        assert!(max_abs(&(p.adjoint() - &p)) < EPS_NORM);
    }

    #[test]
    fn state_normalization_rules() {
        let slightly_off = StateVector::from_real(&[1.0 + 5e-7, 0.0]).unwrap();
        assert_eq!(slightly_off.amplitudes()[0].re, 1.0);
        assert!(matches!(
            StateVector::from_real(&[0.5, 0.0]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            StateVector::from_real(&[f64::NAN, 1.0]),
            Err(Error::NonFinite { index: 0 })
        ));
        assert!(StateVector::new(vec![]).is_err());
        let (pre, _) = three_box_states();
        let again = StateVector::new(pre.amplitudes().to_vec()).unwrap();
        assert_eq!(again, pre);
    }

    fn three_box_a() -> Observable {
        Observable::new(
            "A",
            vec![
                Event::new(1.0, "a", Projector::onto_indices(3, &[0]).unwrap()),
                Event::new(0.0, "a_prime", Projector::onto_indices(3, &[1, 2]).unwrap()),
            ],
        )
    }

    #[test]
    fn validate_observable_examples() {
        assert!(three_box_a().validate().passed());

        let incomplete = Observable::new(
            "Pa",
            vec![Event::new(
                1.0,
                "a",
                Projector::onto_indices(3, &[0]).unwrap(),
            )],
        );
        let r = incomplete.validate();
        assert!(r.orthogonal && !r.complete);
        assert!((r.max_completeness_violation - 1.0).abs() < 1e-15);

        let overlapping = Observable::new(
            "overlap",
            vec![
                Event::new(1.0, "a", Projector::onto_indices(3, &[0]).unwrap()),
                Event::new(2.0, "ab", Projector::onto_indices(3, &[0, 1]).unwrap()),
            ],
        );
        let r = overlapping.validate();
        assert!(!r.orthogonal);
        assert!(overlapping.ensure_valid().is_err());
    }

    #[test]
    fn validate_rejects_repeated_eigenvalue() {
        let mut obs = three_box_a();
        obs.events[1].eigenvalue = 1.0;
        assert!(!obs.validate().distinct_eigenvalues);
    }

    #[test]
    fn trace_product_examples() {
        let (pre, post) = three_box_states();
        let d = Projector::rank_one(&pre);
        let f = Projector::rank_one(&post);
        let t = trace_product(&[&d, &f]).unwrap();

        // dense oracle: Tr(DF) = Σ_ij D_ij F_ji
        let (dm, fm) = (pre.outer(), post.outer());
        let mut oracle = c(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                oracle += dm[(i, j)] * fm[(j, i)];
            }
        }
        assert!((t - oracle).norm() < 1e-15);
        assert!((t.re - 1.0 / 9.0).abs() < 1e-15);

        let id = Projector::identity(3).unwrap();
        assert_eq!(trace_product(&[&id]).unwrap(), c(3.0, 0.0));

        let pa = Projector::onto_indices(3, &[0]).unwrap();
        let pb = Projector::onto_indices(3, &[1]).unwrap();
        assert_eq!(trace_product(&[&pa, &pb]).unwrap(), c(0.0, 0.0));
    }
}
