//! Monte Carlo sampling of measurement schemes.
//!
//! Every true state draws from its own ChaCha8 stream seeded with
//! `seed ^ state_index`, and trial `t` consumes exactly one 64-bit word pair at
//! stream position `2t`. Work can therefore be split into arbitrary chunks
//! (see [`simulate_chunked`]) without changing a single count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{FilteringProblem, StateVector};
use crate::neumark::{MeasurementScheme, Outcome, SchemeKind};
use crate::{Error, Result};

/// Probabilities below this are sampled as exact zeros.
pub const ZERO_PROB: f64 = 1e-12;

/// Born-rule outcome probabilities for one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    /// In the scheme's outcome order.
    pub probabilities: Vec<(Outcome, f64)>,
    /// Set when the raw probabilities drifted from 1 by more than `1e-12`.
    pub renormalized: bool,
}

impl Distribution {
    pub fn get(&self, outcome: Outcome) -> f64 {
        self.probabilities
            .iter()
            .find(|(o, _)| *o == outcome)
            .map_or(0.0, |(_, p)| *p)
    }

    /// Inverse-CDF draw for `u ∈ [0, 1)`. Zero-probability outcomes are
    /// never returned.
    pub fn sample(&self, u: f64) -> Outcome {
        let mut acc = 0.0;
        let mut last = None;
        for &(o, p) in &self.probabilities {
            if p == 0.0 {
                continue;
            }
            acc += p;
            last = Some(o);
            if u < acc {
                return o;
            }
        }
        last.expect("distribution has positive mass")
    }
}

pub fn outcome_distribution(
    scheme: &MeasurementScheme,
    state: &StateVector,
) -> Result<Distribution> {
    if state.dim() != scheme.dim() {
        return Err(Error::InvalidInput(format!(
            "state dimension {} does not match measured space dimension {}",
            state.dim(),
            scheme.dim()
        )));
    }
    let mut probabilities: Vec<(Outcome, f64)> = scheme
        .elements()
        .iter()
        .map(|(o, _)| {
            let p = scheme.expectation(*o, state.amplitudes()).clamp(0.0, 1.0);
            (*o, if p < ZERO_PROB { 0.0 } else { p })
        })
        .collect();
    let total: f64 = probabilities.iter().map(|(_, p)| p).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Numerical("outcome probabilities vanish".into()));
    }
    let renormalized = (total - 1.0).abs() > 1e-12;
    if renormalized {
        for (_, p) in &mut probabilities {
            *p /= total;
        }
    }
    Ok(Distribution {
        probabilities,
        renormalized,
    })
}

/// Outcome counts per true state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationStats {
    pub scheme_kind: SchemeKind,
    pub seed: u64,
    pub trials_per_state: u64,
    /// `counts[state][outcome.index()]`.
    pub counts: Vec<[u64; 3]>,
    /// Born-rule probabilities, same layout as `counts`.
    pub analytic_rates: Vec<[f64; 3]>,
}

impl SimulationStats {
    pub fn empirical_rate(&self, state: usize, outcome: Outcome) -> f64 {
        self.counts[state][outcome.index()] as f64 / self.trials_per_state as f64
    }

    pub fn analytic_rate(&self, state: usize, outcome: Outcome) -> f64 {
        self.analytic_rates[state][outcome.index()]
    }

    pub fn empirical_rates(&self) -> Vec<[f64; 3]> {
        (0..self.counts.len())
            .map(|i| Outcome::ALL.map(|o| self.empirical_rate(i, o)))
            .collect()
    }

    /// `(empirical − analytic) / √(analytic(1 − analytic)/T)`. Cells with zero
    /// variance score 0 on agreement and infinity otherwise.
    pub fn z_score(&self, state: usize, outcome: Outcome) -> f64 {
        let a = self.analytic_rate(state, outcome);
        let e = self.empirical_rate(state, outcome);
        let var = a * (1.0 - a) / self.trials_per_state as f64;
        if var > 0.0 {
            (e - a) / var.sqrt()
        } else if e == a {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn z_scores(&self) -> Vec<[f64; 3]> {
        (0..self.counts.len())
            .map(|i| Outcome::ALL.map(|o| self.z_score(i, o)))
            .collect()
    }

    /// Target answered as complement plus complement states answered as target.
    pub fn misidentifications(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    c[Outcome::IsComplement.index()]
                } else {
                    c[Outcome::IsTarget.index()]
                }
            })
            .sum()
    }

    pub fn total_trials(&self) -> u64 {
        self.trials_per_state * self.counts.len() as u64
    }
}

/// Uniform in `[0, 1)` from one 64-bit word.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn run_chunk(dist: &Distribution, seed: u64, start: u64, len: u64) -> [u64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * start as u128);
    let mut counts = [0u64; 3];
    for _ in 0..len {
        counts[dist.sample(uniform(&mut rng)).index()] += 1;
    }
    counts
}

/// Samples `trials_per_state` outcomes for each state of `problem`.
pub fn simulate(
    scheme: &MeasurementScheme,
    problem: &FilteringProblem,
    trials_per_state: u64,
    seed: u64,
) -> Result<SimulationStats> {
    simulate_chunked(scheme, problem, trials_per_state, seed, 1 << 16)
}

/// [`simulate`] with trials split into chunks of at most `chunk` for the
/// worker pool. The result does not depend on `chunk`.
pub fn simulate_chunked(
    scheme: &MeasurementScheme,
    problem: &FilteringProblem,
    trials_per_state: u64,
    seed: u64,
    chunk: u64,
) -> Result<SimulationStats> {
    if trials_per_state == 0 {
        return Err(Error::invalid("trials per state must be at least 1"));
    }
    let chunk = chunk.max(1);
    let dists = problem
        .states()
        .iter()
        .map(|s| outcome_distribution(scheme, s))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, u64, u64)> = (0..dists.len())
        .flat_map(|i| {
            (0..trials_per_state)
                .step_by(chunk as usize)
                .map(move |start| (i, start, chunk.min(trials_per_state - start)))
        })
        .collect();
    let partials: Vec<(usize, [u64; 3])> = jobs
        .par_iter()
        .map(|&(i, start, len)| (i, run_chunk(&dists[i], seed ^ i as u64, start, len)))
        .collect();

    let mut counts = vec![[0u64; 3]; dists.len()];
    for (i, c) in partials {
        for k in 0..3 {
            counts[i][k] += c[k];
        }
    }
    let analytic_rates = dists
        .iter()
        .map(|d| Outcome::ALL.map(|o| d.get(o)))
        .collect();
    Ok(SimulationStats {
        scheme_kind: scheme.kind,
        seed,
        trials_per_state,
        counts,
        analytic_rates,
    })
}

/// `Σ η_i × empirical FAIL rate of state i`.
pub fn aggregate_failure(stats: &SimulationStats, priors: &[f64]) -> f64 {
    priors
        .iter()
        .enumerate()
        .map(|(i, eta)| eta * stats.empirical_rate(i, Outcome::Fail))
        .sum()
}

/// Same average with the Born-rule rates.
pub fn analytic_failure(stats: &SimulationStats, priors: &[f64]) -> f64 {
    priors
        .iter()
        .enumerate()
        .map(|(i, eta)| eta * stats.analytic_rate(i, Outcome::Fail))
        .sum()
}
