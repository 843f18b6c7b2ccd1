//! State vectors, ensembles and the orthogonal split of the target state.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

/// Tolerance on `Σ|a_x|² = 1` and on `Σ η_i = 1`.
pub const NORM_TOL: f64 = 1e-9;

/// Residual norm below which a candidate basis vector is treated as linearly
/// dependent on the basis collected so far.
pub const RANK_TOL: f64 = 1e-8;

/// `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// A normalized pure state in a `D`-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Wraps `amplitudes`, rejecting them unless the squared norm is one
    /// within [`NORM_TOL`].
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("state vector must have dimension >= 1"));
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::invalid("state vector has non-finite amplitudes"));
        }
        let n2 = norm_sqr(&amplitudes);
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "state vector squared norm is {n2}, expected 1 within {NORM_TOL:e}"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = norm_sqr(&amplitudes).sqrt();
        if !n.is_finite() || n <= 0.0 {
            return Err(Error::invalid(
                "cannot normalize a zero or non-finite vector",
            ));
        }
        for a in &mut amplitudes {
            *a /= n;
        }
        Self::new(amplitudes)
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis ket `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(
            index < dim,
            "basis index {index} out of range for dimension {dim}"
        );
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        inner(&self.amplitudes, &other.amplitudes)
    }
}

impl AsRef<[Complex64]> for StateVector {
    fn as_ref(&self) -> &[Complex64] {
        &self.amplitudes
    }
}

/// `N` states with priors. The target `ψ₁` is always stored at index 0.
#[derive(Debug, Clone)]
pub struct FilteringProblem {
    states: Vec<StateVector>,
    priors: Vec<f64>,
}

impl FilteringProblem {
    /// Builds a problem whose target is `states[target_index]`. The target is
    /// moved to the front; the remaining states keep their relative order.
    pub fn new(
        mut states: Vec<StateVector>,
        mut priors: Vec<f64>,
        target_index: usize,
    ) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::invalid(
                "a filtering problem needs at least two states",
            ));
        }
        if states.len() != priors.len() {
            return Err(Error::InvalidInput(format!(
                "{} states but {} priors",
                states.len(),
                priors.len()
            )));
        }
        if target_index >= states.len() {
            return Err(Error::InvalidInput(format!(
                "target index {target_index} out of range for {} states",
                states.len()
            )));
        }
        let dim = states[0].dim();
        if let Some(i) = states.iter().position(|s| s.dim() != dim) {
            return Err(Error::InvalidInput(format!(
                "state {i} has dimension {}, expected {dim}",
                states[i].dim()
            )));
        }
        if let Some(i) = priors.iter().position(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::InvalidInput(format!(
                "prior {i} is {}, expected a value in (0, 1]",
                priors[i]
            )));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "priors sum to {total}, expected 1 within {NORM_TOL:e}"
            )));
        }
        let target = states.remove(target_index);
        states.insert(0, target);
        let eta = priors.remove(target_index);
        priors.insert(0, eta);
        Ok(Self { states, priors })
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn target(&self) -> &StateVector {
        &self.states[0]
    }

    /// `ψ₂ … ψ_N`.
    pub fn complement(&self) -> &[StateVector] {
        &self.states[1..]
    }

    /// Prior of the target, `η₁`.
    pub fn target_prior(&self) -> f64 {
        self.priors[0]
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `⟨ψ₁|ψ_i⟩` for every state, index 0 included.
    pub fn target_overlaps(&self) -> Vec<Complex64> {
        let t = self.target();
        self.states.iter().map(|s| t.inner(s)).collect()
    }
}

/// `G_ij = ⟨ψ_i|ψ_j⟩`.
pub fn gram_matrix(states: &[StateVector]) -> Result<DMatrix<Complex64>> {
    let n = states.len();
    if let Some(first) = states.first() {
        if let Some(i) = states.iter().position(|s| s.dim() != first.dim()) {
            return Err(Error::InvalidInput(format!(
                "state {i} has dimension {}, expected {}",
                states[i].dim(),
                first.dim()
            )));
        }
    }
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = states[i].inner(&states[i]);
        for j in i + 1..n {
            let v = states[i].inner(&states[j]);
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    Ok(g)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_hermitian_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the span of a set of vectors.
#[derive(Debug, Clone, Default)]
pub struct SpanBasis {
    vectors: Vec<Vec<Complex64>>,
}

impl SpanBasis {
    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    /// Orthogonal projection of `v` onto the span.
    pub fn project(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for b in &self.vectors {
            let c = inner(b, v);
            for (o, x) in out.iter_mut().zip(b) {
                *o += x * c;
            }
        }
        out
    }

    /// Coordinates `⟨b_j|v⟩` of `v` in this basis.
    pub fn coordinates(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.vectors.iter().map(|b| inner(b, v)).collect()
    }

    /// Orthogonalizes `v` against the basis (two passes) and appends the
    /// normalized residual when its norm exceeds `tol`. Returns whether the
    /// rank grew.
    pub fn extend(&mut self, v: &[Complex64], tol: f64) -> bool {
        let mut r = v.to_vec();
        for _ in 0..2 {
            for b in &self.vectors {
                let c = inner(b, &r);
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= bi * c;
                }
            }
        }
        let n = norm_sqr(&r).sqrt();
        if n > tol {
            for ri in &mut r {
                *ri /= n;
            }
            self.vectors.push(r);
            true
        } else {
            false
        }
    }
}

/// Orthonormal basis of `span{vectors}` by re-orthogonalized Gram–Schmidt.
/// Candidates whose residual norm is at most `tol` are skipped.
pub fn span_basis<'a, I>(vectors: I, tol: f64) -> SpanBasis
where
    I: IntoIterator<Item = &'a [Complex64]>,
{
    let mut basis = SpanBasis::default();
    for v in vectors {
        // full space already reached
        if basis.rank() == v.len() {
            break;
        }
        basis.extend(v, tol);
    }
    basis
}

/// Target split into the part inside the complement span and the rest.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// `ψ₁^∥`, unnormalized.
    pub parallel: Vec<Complex64>,
    /// `ψ₁^⊥`, unnormalized.
    pub perpendicular: Vec<Complex64>,
    /// `f = ‖ψ₁^∥‖²`.
    pub parallel_norm_sq: f64,
    /// Orthonormal basis of the complement span `H₂`.
    pub complement_basis: SpanBasis,
}

impl Decomposition {
    pub fn perpendicular_norm_sq(&self) -> f64 {
        norm_sqr(&self.perpendicular)
    }

    /// Filtering is nontrivial only if `ψ₁` sticks out of the complement span.
    pub fn is_nontrivial(&self) -> bool {
        self.parallel_norm_sq < 1.0 - RANK_TOL
    }

    /// `ψ̃₁^∥`, or `None` when `f = 0`.
    pub fn parallel_unit(&self) -> Option<Vec<Complex64>> {
        unit(&self.parallel)
    }

    /// `ψ̃₁^⊥`, or `None` when `f = 1`.
    pub fn perpendicular_unit(&self) -> Option<Vec<Complex64>> {
        unit(&self.perpendicular)
    }
}

fn unit(v: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = norm_sqr(v).sqrt();
    (n > RANK_TOL).then(|| v.iter().map(|x| x / n).collect())
}

pub fn decompose_target(problem: &FilteringProblem) -> Decomposition {
    let basis = span_basis(
        problem.complement().iter().map(|s| s.amplitudes()),
        RANK_TOL,
    );
    let target = problem.target().amplitudes();
    let parallel = basis.project(target);
    let perpendicular: Vec<Complex64> = target.iter().zip(&parallel).map(|(t, p)| t - p).collect();
    let f: f64 = basis.coordinates(target).iter().map(|c| c.norm_sqr()).sum();
    Decomposition {
        parallel,
        perpendicular,
        parallel_norm_sq: f.clamp(0.0, 1.0),
        complement_basis: basis,
    }
}
