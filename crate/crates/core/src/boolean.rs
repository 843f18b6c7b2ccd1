//! Boolean functions as quantum states, and filtering the biased family
//! `W_k` out of the balanced functions.
//!
//! A function `f` on `n` bits is encoded as
//! `|f⟩ = D^{-1/2} Σ_x (−1)^{f(x)} |x⟩` with `D = 2ⁿ`, the state left in the
//! query register by a phase oracle. Constant functions map to `±|c⟩`, the
//! uniform superposition; balanced functions map into the zero-sum subspace
//! orthogonal to it.
//!
//! `W_k` contains the two functions that flip value at
//! `x = (1 − 2^{-k}) D`. Both encode to `±|w_k⟩`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{FilteringProblem, StateVector};
use crate::strategies::{q_povm, q_sqm1, q_sqm2};
use crate::{Error, Result};

/// Largest `n` for which every balanced function is enumerated.
pub const MAX_FULL_BITS: u32 = 4;

/// Largest `n` accepted anywhere; dense vectors of length `2ⁿ`.
pub const MAX_BITS: u32 = 16;

const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionClass {
    Constant,
    Balanced,
    Biased { zeros: usize, ones: usize },
}

/// Truth table of a function `{0,1}ⁿ → {0,1}`, indexed by `x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BooleanFunction {
    n: u32,
    table: Vec<bool>,
}

impl BooleanFunction {
    pub fn new(n: u32, table: Vec<bool>) -> Result<Self> {
        check_bits(n)?;
        if table.len() != 1 << n {
            return Err(Error::InvalidInput(format!(
                "truth table has {} entries, expected {} for n = {n}",
                table.len(),
                1usize << n
            )));
        }
        Ok(Self { n, table })
    }

    pub fn from_fn(n: u32, f: impl Fn(usize) -> bool) -> Result<Self> {
        check_bits(n)?;
        Ok(Self {
            n,
            table: (0..1usize << n).map(f).collect(),
        })
    }

    pub fn constant(n: u32, value: bool) -> Result<Self> {
        Self::from_fn(n, |_| value)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn eval(&self, x: usize) -> bool {
        self.table[x]
    }

    pub fn ones(&self) -> usize {
        self.table.iter().filter(|&&b| b).count()
    }

    pub fn zeros(&self) -> usize {
        self.table.len() - self.ones()
    }

    pub fn class(&self) -> FunctionClass {
        let (zeros, ones) = (self.zeros(), self.ones());
        if zeros == 0 || ones == 0 {
            FunctionClass::Constant
        } else if zeros == ones {
            FunctionClass::Balanced
        } else {
            FunctionClass::Biased { zeros, ones }
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            n: self.n,
            table: self.table.iter().map(|b| !b).collect(),
        }
    }
}

fn check_bits(n: u32) -> Result<()> {
    if n == 0 || n > MAX_BITS {
        return Err(Error::InvalidInput(format!(
            "bit count must lie in 1..={MAX_BITS}, got {n}"
        )));
    }
    Ok(())
}

/// `D^{-1/2} Σ_x (−1)^{f(x)} |x⟩`.
pub fn dj_encode(f: &BooleanFunction) -> StateVector {
    let a = 1.0 / (f.table.len() as f64).sqrt();
    let amps = f
        .table
        .iter()
        .map(|&b| Complex64::new(if b { -a } else { a }, 0.0))
        .collect();
    StateVector::new(amps).expect("±1/√D amplitudes are normalized")
}

/// `(2^k − 1) / 2^{2k−2}`.
pub fn fk_closed_form(k: u32) -> f64 {
    ((1u64 << k) - 1) as f64 / 2f64.powi(2 * k as i32 - 2)
}

/// `1 − (1 − 2^{1−k})²`, i.e. one minus the squared overlap of `|w_k⟩` with
/// the constant direction.
pub fn fk_geometric(k: u32) -> f64 {
    let c = 1.0 - 2f64.powi(1 - k as i32);
    1.0 - c * c
}

/// The biased pair `W_k` and its encoding.
#[derive(Debug, Clone)]
pub struct WkSpec {
    pub n: u32,
    pub k: u32,
    /// First input on which the canonical member outputs 1.
    pub boundary: usize,
    /// Canonical member (0 below the boundary) and its negation.
    pub members: [BooleanFunction; 2],
    /// Encoding of the canonical member, `+1` amplitudes below the boundary.
    pub vector: StateVector,
    /// `‖w_k^∥‖²` against the balanced subspace.
    pub f_k: f64,
    /// `k = 1`: both members are balanced and filtering is impossible.
    pub degenerate: bool,
}

pub fn wk_spec(n: u32, k: u32) -> Result<WkSpec> {
    check_bits(n)?;
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "k must satisfy 1 <= k <= n = {n}, got {k}"
        )));
    }
    let d = 1usize << n;
    let boundary = d - (d >> k);
    let low = BooleanFunction::from_fn(n, |x| x >= boundary)?;
    let high = low.negated();
    let vector = dj_encode(&low);

    let constant = dj_encode(&BooleanFunction::constant(n, false)?);
    let f_geom = 1.0 - constant.inner(&vector).norm_sqr();
    let f_k = fk_closed_form(k);
    if (f_geom - f_k).abs() > IDENTITY_TOL {
        return Err(Error::Numerical(format!(
            "f_k closed form {f_k} disagrees with geometric value {f_geom}"
        )));
    }
    Ok(WkSpec {
        n,
        k,
        boundary,
        members: [low, high],
        vector,
        f_k,
        degenerate: k == 1,
    })
}

/// `D − 1` orthonormal encodings of balanced functions spanning the
/// zero-sum subspace.
#[derive(Debug, Clone)]
pub struct BalancedBasis {
    pub n: u32,
    pub functions: Vec<BooleanFunction>,
    pub vectors: Vec<StateVector>,
}

/// `x ↦ r·x mod 2` (bitwise dot product).
pub fn walsh_function(n: u32, r: usize) -> Result<BooleanFunction> {
    BooleanFunction::from_fn(n, |x| (r & x).count_ones() % 2 == 1)
}

/// The nonconstant Walsh functions `r = 1 … D−1`.
pub fn walsh_balanced_basis(n: u32) -> Result<BalancedBasis> {
    check_bits(n)?;
    let functions = (1..1usize << n)
        .map(|r| walsh_function(n, r))
        .collect::<Result<Vec<_>>>()?;
    let vectors = functions.iter().map(dj_encode).collect();
    Ok(BalancedBasis {
        n,
        functions,
        vectors,
    })
}

/// Average overlap computed two independent ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapCheck {
    /// `(1 − η₁) f_k / (D − 1)`.
    pub closed_form: f64,
    /// `Σ η |⟨w_k|v⟩|²` over the explicit complement set.
    pub direct: f64,
}

pub fn closed_form_overlap(n: u32, k: u32, eta1: f64) -> f64 {
    let d = (1u64 << n) as f64;
    (1.0 - eta1) * fk_closed_form(k) / (d - 1.0)
}

fn check_overlap_args(n: u32, k: u32, eta1: f64) -> Result<()> {
    check_bits(n)?;
    if k < 2 || k > n {
        return Err(Error::InvalidInput(format!(
            "k must satisfy 2 <= k <= n = {n}, got {k}"
        )));
    }
    if !(eta1 > 0.0 && eta1 <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "eta1 must lie in (0, 1], got {eta1}"
        )));
    }
    Ok(())
}

fn direct_overlap<'a>(
    target: &StateVector,
    vectors: impl Iterator<Item = &'a StateVector>,
    eta: f64,
) -> f64 {
    vectors.map(|v| eta * target.inner(v).norm_sqr()).sum()
}

fn agreed(check: OverlapCheck) -> Result<OverlapCheck> {
    if (check.closed_form - check.direct).abs() > IDENTITY_TOL {
        return Err(Error::Numerical(format!(
            "average overlap closed form {} disagrees with direct sum {}",
            check.closed_form, check.direct
        )));
    }
    Ok(check)
}

/// Average overlap of `|w_k⟩` with the Walsh basis at uniform complement
/// prior `(1 − η₁)/(D − 1)`.
pub fn average_overlap_basis(n: u32, k: u32, eta1: f64) -> Result<OverlapCheck> {
    check_overlap_args(n, k, eta1)?;
    let wk = wk_spec(n, k)?;
    let basis = walsh_balanced_basis(n)?;
    let eta = (1.0 - eta1) / basis.vectors.len() as f64;
    agreed(OverlapCheck {
        closed_form: closed_form_overlap(n, k, eta1),
        direct: direct_overlap(&wk.vector, basis.vectors.iter(), eta),
    })
}

/// `C(D, D/2)`, the number of balanced functions on `n` bits.
pub fn balanced_count(n: u32) -> Result<u64> {
    if n == 0 || n > 6 {
        return Err(Error::InvalidInput(format!(
            "balanced count supported for 1 <= n <= 6, got {n}"
        )));
    }
    let half = 1u128 << (n - 1);
    // C(half + i, i) built incrementally, every prefix is an exact binomial
    let c = (1..=half).fold(1u128, |acc, i| acc * (half + i) / i);
    Ok(c as u64)
}

/// Every balanced function on `n ≤ 4` bits, in lexicographic order of the
/// truth table read as `f(0) f(1) … f(D−1)`.
pub fn enumerate_balanced(n: u32) -> Result<Vec<BooleanFunction>> {
    check_bits(n)?;
    if n > MAX_FULL_BITS {
        return Err(Error::ResourceLimit(format!(
            "enumerating balanced functions is capped at n = {MAX_FULL_BITS} (got {n}); \
             use the Walsh basis variant instead"
        )));
    }
    let d = 1u32 << n;
    let mut out = Vec::with_capacity(balanced_count(n)? as usize);
    // bit d-1-x of `mask` holds f(x), so numeric order is lexicographic order
    for mask in 0u32..(1u32 << d) {
        if mask.count_ones() == d / 2 {
            out.push(BooleanFunction {
                n,
                table: (0..d).map(|x| mask >> (d - 1 - x) & 1 == 1).collect(),
            });
        }
    }
    Ok(out)
}

/// Average overlap of `|w_k⟩` with all balanced encodings at uniform
/// complement prior `(1 − η₁)/N`.
pub fn average_overlap_full(n: u32, k: u32, eta1: f64) -> Result<OverlapCheck> {
    check_overlap_args(n, k, eta1)?;
    let wk = wk_spec(n, k)?;
    let balanced: Vec<StateVector> = enumerate_balanced(n)?.iter().map(dj_encode).collect();
    let eta = (1.0 - eta1) / balanced.len() as f64;
    agreed(OverlapCheck {
        closed_form: closed_form_overlap(n, k, eta1),
        direct: direct_overlap(&wk.vector, balanced.iter(), eta),
    })
}

/// How the target prior `η₁` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PriorMode {
    /// `η₁ = 1/D`: equal priors against the `D − 1` basis states, or set
    /// weights proportional to dimension for the full set.
    EqualStatesBasis,
    /// `η₁ = 1/2`.
    EqualSets,
    /// `η₁ = 1/(N + 1)` with `N` the size of the complement set.
    EqualStatesFull,
    Custom(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Complement is the Walsh basis.
    Basis,
    /// Complement is every balanced function.
    Full,
}

fn target_prior(mode: PriorMode, d: usize, complement: usize) -> Result<f64> {
    let eta1 = match mode {
        PriorMode::EqualStatesBasis => 1.0 / d as f64,
        PriorMode::EqualSets => 0.5,
        PriorMode::EqualStatesFull => 1.0 / (complement + 1) as f64,
        PriorMode::Custom(x) => x,
    };
    if !(eta1 > 0.0 && eta1 < 1.0) {
        return Err(Error::InvalidInput(format!(
            "target prior must lie in (0, 1), got {eta1}"
        )));
    }
    Ok(eta1)
}

/// `|w_k⟩` against balanced encodings, complement priors uniform.
pub fn boolean_problem(
    n: u32,
    k: u32,
    mode: PriorMode,
    variant: Variant,
) -> Result<FilteringProblem> {
    check_bits(n)?;
    if k < 2 || k > n {
        return Err(Error::InvalidInput(format!(
            "k must satisfy 2 <= k <= n = {n}, got {k} (W_1 members are balanced)"
        )));
    }
    let wk = wk_spec(n, k)?;
    let complement: Vec<StateVector> = match variant {
        Variant::Basis => walsh_balanced_basis(n)?.vectors,
        Variant::Full => enumerate_balanced(n)?.iter().map(dj_encode).collect(),
    };
    let eta1 = target_prior(mode, 1 << n, complement.len())?;
    let eta = (1.0 - eta1) / complement.len() as f64;
    let mut priors = vec![eta1];
    priors.resize(complement.len() + 1, eta);
    let mut states = vec![wk.vector];
    states.extend(complement);
    FilteringProblem::new(states, priors, 0)
}

/// Ratio of POVM to projective failure probability at `η₁ = 1/D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Advantage {
    pub exact_ratio: f64,
    /// `4 / 2^{k/2}`.
    pub approx_ratio: f64,
    /// `|exact − approx| / exact`.
    pub relative_gap: f64,
    pub q_povm: f64,
    /// Both projective strategies coincide at this prior.
    pub q_sqm: f64,
}

pub fn povm_advantage(n: u32, k: u32) -> Result<Advantage> {
    let d = (1u64 << n) as f64;
    let eta1 = 1.0 / d;
    check_overlap_args(n, k, eta1)?;
    let f = fk_closed_form(k);
    let s = closed_form_overlap(n, k, eta1);
    let q_povm = q_povm(eta1, s);
    let q_sqm = q_sqm1(eta1, s).min(q_sqm2(eta1, f, s)?);
    let exact_ratio = q_povm / q_sqm;
    let approx_ratio = 4.0 / 2f64.powf(k as f64 / 2.0);
    Ok(Advantage {
        exact_ratio,
        approx_ratio,
        relative_gap: (exact_ratio - approx_ratio).abs() / exact_ratio,
        q_povm,
        q_sqm,
    })
}

/// Worst-case classical query counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QueryCounts {
    /// Constant vs balanced: `2^{n−1} + 1`.
    pub balanced_vs_constant: u64,
    /// `W_k` vs balanced: `2ⁿ(1/2 + 1/2^k) + 1`.
    pub wk_vs_balanced: u64,
}

pub fn classical_query_count(n: u32, k: u32) -> Result<QueryCounts> {
    if n == 0 || n > 62 || k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= n <= 62, got n = {n}, k = {k}"
        )));
    }
    Ok(QueryCounts {
        balanced_vs_constant: (1u64 << (n - 1)) + 1,
        wk_vs_balanced: (1u64 << (n - 1)) + (1u64 << (n - k)) + 1,
    })
}

/// Rough range of `D η₁` where the POVM regime applies:
/// `[2^{-(k−2)}, 2^{k−2}]`. Informational only; the exact regime comes from
/// [`crate::strategies::classify`].
pub fn approximate_povm_window(k: u32) -> (f64, f64) {
    let e = k as i32 - 2;
    (2f64.powi(-e), 2f64.powi(e))
}
