//! Measurement operators for the three filtering schemes and the unitary
//! dilation that realizes the optimal one.
//!
//! The dilation acts on the system space extended by a single ancilla
//! direction `|φ_A⟩` (index `D`). Each input is sent to
//!
//! ```text
//! U|ψ_i⟩ = √p_i |ψ'_i⟩ + √q_i e^{iθ_i} |φ_A⟩,      ⟨ψ'_1|ψ'_i⟩ = 0 (i ≥ 2)
//! ```
//!
//! Restricted to the system space `U` is an isometry `V = [A; χ†]`: the
//! ancilla row is a functional `χ` with `⟨χ|ψ_i⟩ = √q_i e^{iθ_i}`, and the
//! system block satisfies `A†A = I − χχ†`. The pulled-back failure operator is
//! therefore the rank-one `χχ†`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{
    decompose_target, hermitian_eigenvalues, inner, norm_sqr, span_basis, FilteringProblem,
    SpanBasis, StateVector, RANK_TOL,
};
use crate::strategies::{optimal_filtering, parallel_and_overlap};
use crate::{Error, Result};

/// Slack on `f ≤ q₁ ≤ 1`.
const Q1_TOL: f64 = 1e-12;
/// Success Gram matrices with a smaller eigenvalue are infeasible.
pub const PSD_TOL: f64 = 1e-9;
/// Bound on residuals of the failure-amplitude equations.
pub const DEPENDENCY_TOL: f64 = 1e-8;
/// Eigenvalues above this count towards numerical rank.
pub const RANK_EIG_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    IsTarget,
    IsComplement,
    Fail,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::IsTarget, Outcome::IsComplement, Outcome::Fail];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::IsTarget => "IS_TARGET",
            Outcome::IsComplement => "IS_COMPLEMENT",
            Outcome::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SchemeKind {
    Sqm1,
    Sqm2,
    Povm,
}

impl SchemeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::Sqm1 => "SQM1",
            SchemeKind::Sqm2 => "SQM2",
            SchemeKind::Povm => "POVM",
        }
    }
}

/// Per-state failure probabilities `q_i` and ancilla phases `θ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocations {
    pub failure: Vec<f64>,
    pub phases: Vec<f64>,
}

impl Allocations {
    /// `√q_i e^{iθ_i}`.
    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.failure
            .iter()
            .zip(&self.phases)
            .map(|(q, th)| Complex64::from_polar(q.max(0.0).sqrt(), *th))
            .collect()
    }
}

/// Allocations fixed by `q₁`: `q_i = |⟨ψ₁|ψ_i⟩|²/q₁`, `θ₁ = 0`,
/// `θ_i = arg⟨ψ₁|ψ_i⟩`.
pub fn failure_allocations(problem: &FilteringProblem, q1: f64) -> Result<Allocations> {
    let (f, _, _) = parallel_and_overlap(problem);
    if !(q1 >= f - Q1_TOL && q1 <= 1.0 + Q1_TOL) {
        return Err(Error::Infeasible(format!(
            "target failure probability {q1} outside the admissible range [{f}, 1]"
        )));
    }
    let q1 = q1.clamp(0.0, 1.0);
    let overlaps = problem.target_overlaps();
    let mut failure = vec![q1];
    let mut phases = vec![0.0];
    for c in &overlaps[1..] {
        let c2 = c.norm_sqr();
        if q1 > 0.0 && c2 > 0.0 {
            failure.push((c2 / q1).min(1.0));
            phases.push(c.arg());
        } else {
            failure.push(0.0);
            phases.push(0.0);
        }
    }
    Ok(Allocations { failure, phases })
}

/// Gram matrix of the success components with its PSD verdict.
#[derive(Debug, Clone)]
pub struct SuccessGram {
    pub matrix: DMatrix<Complex64>,
    pub min_eigenvalue: f64,
    pub feasible: bool,
}

/// `G^succ_ij = ⟨ψ_i|ψ_j⟩ − √(q_i q_j) e^{i(θ_j − θ_i)}`.
pub fn success_gram(problem: &FilteringProblem, alloc: &Allocations) -> SuccessGram {
    let a = alloc.amplitudes();
    let states = problem.states();
    let n = states.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = states[i].inner(&states[j]) - a[i].conj() * a[j];
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    let min_eigenvalue = hermitian_eigenvalues(&g).first().copied().unwrap_or(0.0);
    SuccessGram {
        matrix: g,
        min_eigenvalue,
        feasible: min_eigenvalue >= -PSD_TOL,
    }
}

/// A unitary on `H_S ⊕ H_A` realizing a set of allocations.
#[derive(Debug, Clone)]
pub struct NeumarkModel {
    unitary: DMatrix<Complex64>,
    failure_functional: Vec<Complex64>,
    success_outputs: Vec<Vec<Complex64>>,
    failure_amplitudes: Vec<Complex64>,
    phases: Vec<f64>,
}

impl NeumarkModel {
    pub fn unitary(&self) -> &DMatrix<Complex64> {
        &self.unitary
    }

    /// System dimension `D`.
    pub fn dim(&self) -> usize {
        self.unitary.nrows() - 1
    }

    /// Coordinate of `|φ_A⟩` in the dilated space.
    pub fn ancilla_index(&self) -> usize {
        self.dim()
    }

    /// The first `D` columns of `U`.
    pub fn isometry(&self) -> DMatrix<Complex64> {
        self.unitary.columns(0, self.dim()).into_owned()
    }

    /// `χ`, with `⟨χ|ψ⟩` the ancilla amplitude of `U|ψ⟩`.
    pub fn failure_functional(&self) -> &[Complex64] {
        &self.failure_functional
    }

    /// System block of `U|ψ_i⟩`, i.e. `√p_i |ψ'_i⟩`.
    pub fn success_outputs(&self) -> &[Vec<Complex64>] {
        &self.success_outputs
    }

    /// Ancilla block of `U|ψ_i⟩`, i.e. `√q_i e^{iθ_i}`.
    pub fn failure_amplitudes(&self) -> &[Complex64] {
        &self.failure_amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// `U` applied to a system state embedded with zero ancilla amplitude.
    pub fn apply(&self, state: &StateVector) -> Vec<Complex64> {
        let v = DVector::from_column_slice(state.amplitudes());
        (self.isometry() * v).iter().copied().collect()
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.unitary.nrows();
        let g = self.unitary.adjoint() * &self.unitary;
        max_abs(&(g - DMatrix::identity(n, n)))
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `|u⟩⟨v|`.
pub fn outer(u: &[Complex64], v: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
}

/// Builds the dilation for `alloc`.
///
/// The allocations must satisfy the orthogonality condition
/// `⟨ψ₁|ψ_i⟩ = √(q₁ q_i) e^{iθ_i}` for `i ≥ 2`, be consistent with every
/// linear dependency among the inputs, and keep the success Gram matrix
/// positive semidefinite; each violation is reported as a distinct error.
pub fn build_neumark(problem: &FilteringProblem, alloc: &Allocations) -> Result<NeumarkModel> {
    let n = problem.len();
    let dim = problem.dim();
    if alloc.failure.len() != n || alloc.phases.len() != n {
        return Err(Error::InvalidInput(format!(
            "allocations cover {} states, problem has {n}",
            alloc.failure.len()
        )));
    }
    if let Some(i) = alloc.failure.iter().position(|q| !(0.0..=1.0).contains(q)) {
        return Err(Error::InvalidInput(format!(
            "failure probability {} of state {i} outside [0, 1]",
            alloc.failure[i]
        )));
    }
    let amps = alloc.amplitudes();

    let overlaps = problem.target_overlaps();
    for i in 1..n {
        let resid = (overlaps[i] - amps[0].conj() * amps[i]).norm();
        if resid > DEPENDENCY_TOL {
            return Err(Error::Infeasible(format!(
                "allocation for state {i} leaves its success component non-orthogonal to the \
                 target's (residual {resid:.3e})"
            )));
        }
    }

    // Solve ⟨χ|ψ_i⟩ = a_i for χ in the span of the inputs.
    let basis = span_basis(problem.states().iter().map(|s| s.amplitudes()), RANK_TOL);
    let rank = basis.rank();
    let coords = DMatrix::from_fn(n, rank, |i, j| {
        inner(&basis.vectors()[j], problem.states()[i].amplitudes()).conj()
    });
    // coords · c = (conj⟨χ|ψ_i⟩)_i for χ = Σ_j c_j b_j
    let rhs = DVector::from_iterator(n, amps.iter().map(|a| a.conj()));
    let solution = coords
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;
    let residual = &coords * &solution - &rhs;
    let (worst, worst_resid) = residual
        .iter()
        .map(|x| x.norm())
        .enumerate()
        .fold((0, 0.0), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });
    if worst_resid > DEPENDENCY_TOL {
        return Err(Error::InfeasibleDependency {
            index: worst,
            residual: worst_resid,
        });
    }
    let mut chi = vec![ZERO; dim];
    for (j, b) in basis.vectors().iter().enumerate() {
        let cj = solution[j];
        for (x, bx) in chi.iter_mut().zip(b) {
            *x += bx * cj;
        }
    }
    let chi_sq = norm_sqr(&chi);
    if chi_sq > 1.0 + PSD_TOL {
        return Err(Error::Infeasible(format!(
            "success Gram matrix is not positive semidefinite: failure functional has squared \
             norm {chi_sq:.6} > 1"
        )));
    }

    // A = I + (√(1 − ‖χ‖²) − 1) χ̂χ̂†, the positive square root of I − χχ†.
    let mut system_block = DMatrix::<Complex64>::identity(dim, dim);
    if chi_sq > 0.0 {
        let scale = ((1.0 - chi_sq).max(0.0).sqrt() - 1.0) / chi_sq;
        system_block += outer(&chi, &chi) * Complex64::new(scale, 0.0);
    }

    let mut unitary = DMatrix::zeros(dim + 1, dim + 1);
    unitary
        .view_mut((0, 0), (dim, dim))
        .copy_from(&system_block);
    for (j, x) in chi.iter().enumerate() {
        unitary[(dim, j)] = x.conj();
    }
    complete_last_column(&mut unitary)?;

    let success_outputs = problem
        .states()
        .iter()
        .map(|s| {
            let v = &system_block * DVector::from_column_slice(s.amplitudes());
            v.iter().copied().collect()
        })
        .collect();
    let failure_amplitudes = problem
        .states()
        .iter()
        .map(|s| inner(&chi, s.amplitudes()))
        .collect();

    Ok(NeumarkModel {
        unitary,
        failure_functional: chi,
        success_outputs,
        failure_amplitudes,
        phases: alloc.phases.clone(),
    })
}

/// Fills column `D` of a `(D+1)×(D+1)` matrix whose first `D` columns are
/// orthonormal. The completion is not unique; any unit vector orthogonal to
/// the first `D` columns is acceptable.
fn complete_last_column(u: &mut DMatrix<Complex64>) -> Result<()> {
    let size = u.nrows();
    let mut basis = SpanBasis::default();
    for j in 0..size - 1 {
        let col: Vec<Complex64> = u.column(j).iter().copied().collect();
        if !basis.extend(&col, RANK_TOL) {
            return Err(Error::Numerical(
                "isometry columns are linearly dependent".into(),
            ));
        }
    }
    for k in 0..size {
        let mut e = vec![ZERO; size];
        e[k] = ONE;
        if basis.extend(&e, RANK_TOL) {
            let v = basis.vectors().last().expect("just pushed");
            for (i, x) in v.iter().enumerate() {
                u[(i, size - 1)] = *x;
            }
            return Ok(());
        }
    }
    Err(Error::Numerical("could not complete the unitary".into()))
}

/// Positive operators indexed by outcome on the system space.
#[derive(Debug, Clone)]
pub struct MeasurementScheme {
    pub kind: SchemeKind,
    dim: usize,
    elements: Vec<(Outcome, DMatrix<Complex64>)>,
    warnings: Vec<String>,
}

impl MeasurementScheme {
    fn new(kind: SchemeKind, dim: usize, elements: Vec<(Outcome, DMatrix<Complex64>)>) -> Self {
        Self {
            kind,
            dim,
            elements,
            warnings: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Outcomes with their operators, in sampling order.
    pub fn elements(&self) -> &[(Outcome, DMatrix<Complex64>)] {
        &self.elements
    }

    pub fn element(&self, outcome: Outcome) -> Option<&DMatrix<Complex64>> {
        self.elements
            .iter()
            .find(|(o, _)| *o == outcome)
            .map(|(_, m)| m)
    }

    /// Degenerate-case notices, e.g. an outcome that can never occur.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `⟨ψ|E|ψ⟩` for `outcome`, zero if the scheme lacks that outcome.
    pub fn expectation(&self, outcome: Outcome, state: &[Complex64]) -> f64 {
        self.element(outcome)
            .map_or(0.0, |m| quadratic_form(m, state))
    }

    /// `‖Σ_k E_k − I‖_max`.
    pub fn completeness_defect(&self) -> f64 {
        let mut sum = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for (_, m) in &self.elements {
            sum += m;
        }
        max_abs(&(sum - DMatrix::identity(self.dim, self.dim)))
    }

    /// Smallest eigenvalue over all elements.
    pub fn min_eigenvalue(&self) -> f64 {
        self.elements
            .iter()
            .filter_map(|(_, m)| hermitian_eigenvalues(m).first().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

/// `⟨ψ|M|ψ⟩`, real part.
pub fn quadratic_form(m: &DMatrix<Complex64>, psi: &[Complex64]) -> f64 {
    let mut acc = ZERO;
    for (i, pi) in psi.iter().enumerate() {
        if *pi == ZERO {
            continue;
        }
        let mut row = ZERO;
        for (j, pj) in psi.iter().enumerate() {
            row += m[(i, j)] * pj;
        }
        acc += pi.conj() * row;
    }
    acc.re
}

/// Number of eigenvalues above [`RANK_EIG_TOL`].
pub fn numerical_rank(m: &DMatrix<Complex64>) -> usize {
    hermitian_eigenvalues(m)
        .iter()
        .filter(|&&x| x > RANK_EIG_TOL)
        .count()
}

/// Pulls the three dilated projectors back to the system space through the
/// isometry: `E_k = V† Π_k V`, with `Π_target` onto the normalized success
/// output of `ψ₁`, `Π_fail = |φ_A⟩⟨φ_A|`, and `Π_comp` the remainder.
pub fn povm_elements(model: &NeumarkModel) -> MeasurementScheme {
    let dim = model.dim();
    let v = model.isometry();
    let chi = model.failure_functional();
    let fail = outer(chi, chi);

    let target_out = &model.success_outputs()[0];
    let p1 = norm_sqr(target_out);
    let mut warnings = Vec::new();
    let target = if p1 > 1e-12 {
        let mut u = DVector::zeros(dim + 1);
        for (i, x) in target_out.iter().enumerate() {
            u[i] = x / p1.sqrt();
        }
        let w: Vec<Complex64> = (v.adjoint() * u).iter().copied().collect();
        Some(outer(&w, &w))
    } else {
        warnings.push("target state always fails; IS_TARGET outcome omitted".to_string());
        None
    };

    let mut comp = DMatrix::identity(dim, dim) - &fail;
    if let Some(t) = &target {
        comp -= t;
    }
    let mut elements = Vec::with_capacity(3);
    if let Some(t) = target {
        elements.push((Outcome::IsTarget, t));
    }
    elements.push((Outcome::IsComplement, comp));
    elements.push((Outcome::Fail, fail));
    let mut scheme = MeasurementScheme::new(SchemeKind::Povm, dim, elements);
    scheme.warnings = warnings;
    scheme
}

/// The two von Neumann schemes.
///
/// SQM1 measures `I − |ψ₁⟩⟨ψ₁|`: a click means "complement", no click fails.
/// SQM2 projects onto `ψ̃₁^⊥` (target), `ψ̃₁^∥` (fail) and the rest
/// (complement).
pub fn projective_scheme(
    problem: &FilteringProblem,
    kind: SchemeKind,
) -> Result<MeasurementScheme> {
    let dim = problem.dim();
    let id = DMatrix::<Complex64>::identity(dim, dim);
    let t = problem.target().amplitudes();
    match kind {
        SchemeKind::Sqm1 => {
            let p = outer(t, t);
            Ok(MeasurementScheme::new(
                kind,
                dim,
                vec![(Outcome::IsComplement, &id - &p), (Outcome::Fail, p)],
            ))
        }
        SchemeKind::Sqm2 => {
            let d = decompose_target(problem);
            let perp = d.perpendicular_unit().ok_or_else(|| {
                Error::DegenerateDecomposition(
                    "target lies in the span of the other states; no target outcome possible"
                        .into(),
                )
            })?;
            let target = outer(&perp, &perp);
            match d.parallel_unit() {
                Some(par) => {
                    let fail = outer(&par, &par);
                    let comp = &id - &target - &fail;
                    Ok(MeasurementScheme::new(
                        kind,
                        dim,
                        vec![
                            (Outcome::IsTarget, target),
                            (Outcome::IsComplement, comp),
                            (Outcome::Fail, fail),
                        ],
                    ))
                }
                None => {
                    let comp = &id - &target;
                    let mut s = MeasurementScheme::new(
                        kind,
                        dim,
                        vec![(Outcome::IsTarget, target), (Outcome::IsComplement, comp)],
                    );
                    s.warnings.push(
                        "target is orthogonal to the other states; discrimination is perfect"
                            .to_string(),
                    );
                    Ok(s)
                }
            }
        }
        SchemeKind::Povm => Err(Error::invalid(
            "the POVM scheme is built from a dilation, see povm_elements",
        )),
    }
}

/// Dilation and scheme at the given `q₁`, or at the optimum when `None`.
pub fn povm_scheme(
    problem: &FilteringProblem,
    q1: Option<f64>,
) -> Result<(NeumarkModel, MeasurementScheme)> {
    let q1 = match q1 {
        Some(q) => q,
        None => optimal_filtering(problem)?.optimal_q1,
    };
    let alloc = failure_allocations(problem, q1)?;
    let model = build_neumark(problem, &alloc)?;
    let scheme = povm_elements(&model);
    Ok((model, scheme))
}

/// Any of the three schemes; `q1` only applies to the POVM.
pub fn scheme_for(
    problem: &FilteringProblem,
    kind: SchemeKind,
    q1: Option<f64>,
) -> Result<MeasurementScheme> {
    match kind {
        SchemeKind::Povm => povm_scheme(problem, q1).map(|(_, s)| s),
        _ => projective_scheme(problem, kind),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn real(v: &[f64]) -> StateVector {
        StateVector::from_real(v).unwrap()
    }

    fn walsh_problem() -> FilteringProblem {
        let rows = [
            [1., 1., 1., -1.],
            [1., -1., 1., -1.],
            [1., 1., -1., -1.],
            [1., -1., -1., 1.],
        ];
        let states = rows.iter().map(|r| real(&r.map(|x| x / 2.0))).collect();
        FilteringProblem::new(states, vec![0.25; 4], 0).unwrap()
    }

    fn symmetric_pair() -> FilteringProblem {
        FilteringProblem::new(
            vec![real(&[1.0, 0.0]), real(&[0.6, 0.8])],
            vec![0.5, 0.5],
            0,
        )
        .unwrap()
    }

    fn fig_point() -> FilteringProblem {
        FilteringProblem::new(
            vec![
                real(&[0.5, 0.75f64.sqrt(), 0.0]),
                StateVector::basis(3, 0),
                StateVector::basis(3, 2),
            ],
            vec![0.4, 0.4, 0.2],
            0,
        )
        .unwrap()
    }

    fn check_unambiguous(problem: &FilteringProblem, scheme: &MeasurementScheme) {
        assert!(scheme.expectation(Outcome::IsComplement, problem.target().amplitudes()) <= 1e-10);
        for s in problem.complement() {
            assert!(scheme.expectation(Outcome::IsTarget, s.amplitudes()) <= 1e-10);
        }
    }

    #[test]
    fn allocations_zero_overlaps() {
        let p = FilteringProblem::new(
            vec![StateVector::basis(2, 0), StateVector::basis(2, 1)],
            vec![0.5, 0.5],
            0,
        )
        .unwrap();
        let a = failure_allocations(&p, 0.0).unwrap();
        assert_eq!(a.failure, vec![0.0, 0.0]);
    }

    #[test]
    fn allocations_walsh_optimum() {
        let p = walsh_problem();
        let a = failure_allocations(&p, 3f64.sqrt() / 2.0).unwrap();
        for q in &a.failure[1..] {
            assert_abs_diff_eq!(*q, 1.0 / (2.0 * 3f64.sqrt()), epsilon = 1e-12);
        }
        assert_eq!(a.phases[..3], [0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(a.phases[3].abs(), std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn allocations_real_positive_overlaps_have_zero_phase() {
        let a = failure_allocations(&symmetric_pair(), 0.6).unwrap();
        assert_eq!(a.phases, vec![0.0, 0.0]);
    }

    #[test]
    fn allocations_reject_q1_out_of_range() {
        let p = walsh_problem();
        assert!(matches!(
            failure_allocations(&p, 0.5),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            failure_allocations(&p, 1.1),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn success_gram_examples() {
        let p = FilteringProblem::new(
            vec![
                StateVector::basis(3, 0),
                StateVector::basis(3, 1),
                StateVector::basis(3, 2),
            ],
            vec![0.3, 0.3, 0.4],
            0,
        )
        .unwrap();
        let g = success_gram(&p, &failure_allocations(&p, 0.0).unwrap());
        assert_eq!(g.matrix, DMatrix::identity(3, 3));
        assert!(g.feasible);

        let g = success_gram(
            &symmetric_pair(),
            &failure_allocations(&symmetric_pair(), 0.6).unwrap(),
        );
        assert!(g.matrix[(0, 1)].norm() < 1e-15);

        let p = walsh_problem();
        let g = success_gram(&p, &failure_allocations(&p, 3f64.sqrt() / 2.0).unwrap());
        assert!(g.feasible, "min eigenvalue {}", g.min_eigenvalue);
        for i in 1..4 {
            assert!(g.matrix[(0, i)].norm() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_pair_needs_no_failure_branch() {
        let p = FilteringProblem::new(
            vec![StateVector::basis(2, 0), StateVector::basis(2, 1)],
            vec![0.5, 0.5],
            0,
        )
        .unwrap();
        let (model, scheme) = povm_scheme(&p, Some(0.0)).unwrap();
        assert!(max_abs(&(model.unitary() - DMatrix::identity(3, 3))) < 1e-15);
        let e_t = scheme.element(Outcome::IsTarget).unwrap();
        assert!(max_abs(&(e_t - outer(p.target().amplitudes(), p.target().amplitudes()))) < 1e-15);
        assert!(max_abs(scheme.element(Outcome::Fail).unwrap()) < 1e-15);
    }

    #[test]
    fn symmetric_pair_dilation() {
        let p = symmetric_pair();
        let (model, scheme) = povm_scheme(&p, None).unwrap();
        assert!(model.unitarity_defect() < 1e-10);
        for (i, s) in p.states().iter().enumerate() {
            let out = model.apply(s);
            assert_abs_diff_eq!(out[2].norm_sqr(), 0.6, epsilon = 1e-12);
            assert_abs_diff_eq!(norm_sqr(&out[..2]), 0.4, epsilon = 1e-12);
            assert_abs_diff_eq!(
                scheme.expectation(Outcome::Fail, s.amplitudes()),
                0.6,
                epsilon = 1e-12
            );
            assert!((model.failure_amplitudes()[i] - out[2]).norm() < 1e-12);
        }
        let o = model.success_outputs();
        assert!(inner(&o[0], &o[1]).norm() < 1e-12);
        // rank one with eigenvalue 2c/(1+c) for overlap c
        let ev = hermitian_eigenvalues(scheme.element(Outcome::Fail).unwrap());
        assert_abs_diff_eq!(ev[1], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn walsh_dilation() {
        let p = walsh_problem();
        let (model, scheme) = povm_scheme(&p, None).unwrap();
        assert_eq!(model.unitary().nrows(), 5);
        assert!(model.unitarity_defect() < 1e-10);
        assert!(scheme.completeness_defect() < 1e-10);
        assert_abs_diff_eq!(
            scheme.expectation(Outcome::Fail, p.target().amplitudes()),
            3f64.sqrt() / 2.0,
            epsilon = 1e-10
        );
        assert_eq!(numerical_rank(scheme.element(Outcome::Fail).unwrap()), 1);
        check_unambiguous(&p, &scheme);
    }

    #[test]
    fn target_always_fails_drops_outcome() {
        let (_, scheme) = povm_scheme(&fig_point(), Some(1.0)).unwrap();
        assert!(scheme.element(Outcome::IsTarget).is_none());
        assert_eq!(scheme.warnings().len(), 1);
        assert!(scheme.completeness_defect() < 1e-10);
    }

    #[test]
    fn dependent_complement_accepted() {
        // complement spans the x-y plane with three vectors
        let t = real(&[0.5, 0.5, 0.5f64.sqrt()]);
        let c = vec![
            real(&[1.0, 0.0, 0.0]),
            real(&[0.0, 1.0, 0.0]),
            real(&[0.5f64.sqrt(), 0.5f64.sqrt(), 0.0]),
        ];
        let mut states = vec![t];
        states.extend(c);
        let p = FilteringProblem::new(states, vec![0.25; 4], 0).unwrap();
        let (model, scheme) = povm_scheme(&p, None).unwrap();
        assert!(model.unitarity_defect() < 1e-10);
        check_unambiguous(&p, &scheme);
    }

    #[test]
    fn inconsistent_dependency_rejected() {
        let p = FilteringProblem::new(
            vec![
                real(&[0.5f64.sqrt(), 0.5f64.sqrt()]),
                StateVector::basis(2, 0),
                StateVector::basis(2, 1),
            ],
            vec![0.4, 0.3, 0.3],
            0,
        )
        .unwrap();
        let alloc = Allocations {
            failure: vec![0.8, 0.625, 0.625],
            phases: vec![0.0; 3],
        };
        assert!(matches!(
            build_neumark(&p, &alloc),
            Err(Error::InfeasibleDependency { .. })
        ));
    }

    #[test]
    fn non_orthogonal_allocation_rejected() {
        let p = symmetric_pair();
        let alloc = Allocations {
            failure: vec![0.5, 0.5],
            phases: vec![0.0; 2],
        };
        assert!(matches!(
            build_neumark(&p, &alloc),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn q1_below_parallel_norm_is_not_psd() {
        let p = walsh_problem();
        let alloc = Allocations {
            failure: vec![0.5; 4],
            phases: vec![0.0, 0.0, 0.0, std::f64::consts::PI],
        };
        assert!(!success_gram(&p, &alloc).feasible);
        assert!(matches!(
            build_neumark(&p, &alloc),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn sqm1_outcomes() {
        let p = fig_point();
        let s = projective_scheme(&p, SchemeKind::Sqm1).unwrap();
        assert_abs_diff_eq!(
            s.expectation(Outcome::Fail, p.target().amplitudes()),
            1.0,
            epsilon = 1e-15
        );
        assert!(s.element(Outcome::IsTarget).is_none());
        check_unambiguous(&p, &s);
    }

    #[test]
    fn sqm2_outcomes() {
        let p = fig_point();
        let s = projective_scheme(&p, SchemeKind::Sqm2).unwrap();
        let t = p.target().amplitudes();
        assert_abs_diff_eq!(s.expectation(Outcome::IsTarget, t), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(s.expectation(Outcome::Fail, t), 0.25, epsilon = 1e-12);
        // |c|²/f = 0.25/0.25
        assert_abs_diff_eq!(
            s.expectation(Outcome::Fail, p.states()[1].amplitudes()),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            s.expectation(Outcome::Fail, p.states()[2].amplitudes()),
            0.0,
            epsilon = 1e-12
        );
        check_unambiguous(&p, &s);
        assert!(s.completeness_defect() < 1e-12);
    }

    #[test]
    fn sqm2_degenerate_cases() {
        let contained = FilteringProblem::new(
            vec![
                real(&[0.5f64.sqrt(), 0.5f64.sqrt()]),
                StateVector::basis(2, 0),
                StateVector::basis(2, 1),
            ],
            vec![0.4, 0.3, 0.3],
            0,
        )
        .unwrap();
        assert!(matches!(
            projective_scheme(&contained, SchemeKind::Sqm2),
            Err(Error::DegenerateDecomposition(_))
        ));
        let orth = FilteringProblem::new(
            vec![StateVector::basis(2, 0), StateVector::basis(2, 1)],
            vec![0.5, 0.5],
            0,
        )
        .unwrap();
        let s = projective_scheme(&orth, SchemeKind::Sqm2).unwrap();
        assert_eq!(s.warnings().len(), 1);
        assert!(s.element(Outcome::Fail).is_none());
        assert!(projective_scheme(&orth, SchemeKind::Povm).is_err());
    }

    fn arb_problem() -> impl Strategy<Value = FilteringProblem> {
        (2usize..7, 2usize..8).prop_flat_map(|(dim, n)| {
            (
                prop::collection::vec(prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim), n),
                prop::collection::vec(0.05f64..1.0, n),
            )
                .prop_filter_map("degenerate", |(raw, w)| {
                    let states: Option<Vec<_>> = raw
                        .into_iter()
                        .map(|v| {
                            StateVector::normalized(
                                v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect(),
                            )
                            .ok()
                        })
                        .collect();
                    let t: f64 = w.iter().sum();
                    FilteringProblem::new(states?, w.iter().map(|x| x / t).collect(), 0).ok()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn optimal_dilation_properties(p in arb_problem()) {
            let report = optimal_filtering(&p).unwrap();
            let (model, scheme) = povm_scheme(&p, None).unwrap();
            prop_assert!(model.unitarity_defect() <= 1e-10);
            prop_assert!(scheme.completeness_defect() <= 1e-10);
            prop_assert!(scheme.min_eigenvalue() >= -1e-10);
            prop_assert!(numerical_rank(scheme.element(Outcome::Fail).unwrap()) <= 1);
            for (i, s) in p.states().iter().enumerate() {
                let qi = scheme.expectation(Outcome::Fail, s.amplitudes());
                prop_assert!((qi - report.per_state_failure[i]).abs() < 1e-9);
            }
            let outs: Vec<_> = p.states().iter().map(|s| model.apply(s)).collect();
            for i in 0..p.len() {
                for j in 0..p.len() {
                    let want = p.states()[i].inner(&p.states()[j]);
                    prop_assert!((inner(&outs[i], &outs[j]) - want).norm() < 1e-9);
                }
            }
            let succ = model.success_outputs();
            for i in 1..p.len() {
                prop_assert!(inner(&succ[0], &succ[i]).norm() < 1e-10);
            }
            prop_assert!(scheme.expectation(Outcome::IsComplement, p.target().amplitudes()) <= 1e-10);
            for s in p.complement() {
                prop_assert!(scheme.expectation(Outcome::IsTarget, s.amplitudes()) <= 1e-10);
            }
        }

        #[test]
        fn projective_schemes_match_closed_forms(p in arb_problem()) {
            let report = optimal_filtering(&p).unwrap();
            let avg_fail = |s: &MeasurementScheme| -> f64 {
                p.states().iter().zip(p.priors()).map(|(st, e)| e * s.expectation(Outcome::Fail, st.amplitudes())).sum()
            };
            let s1 = projective_scheme(&p, SchemeKind::Sqm1).unwrap();
            prop_assert!((avg_fail(&s1) - report.q_sqm1).abs() < 1e-9);
            if let Ok(s2) = projective_scheme(&p, SchemeKind::Sqm2) {
                prop_assert!((avg_fail(&s2) - report.q_sqm2).abs() < 1e-9);
                prop_assert!(s2.completeness_defect() < 1e-10);
                prop_assert!(s2.expectation(Outcome::IsComplement, p.target().amplitudes()) <= 1e-10);
            }
        }
    }
}
