//! Cost accounting, combinatorial inequality checks, and success-rate
//! estimation for the staged solver.
//!
//! The cost model charges `2n` register operations (forward plus backward)
//! per amplification iteration plus the per-stage arithmetic, giving
//! `2n(floor(pi/4 sqrt(M)) + n)` total against the classical `n^3`.

use std::f64::consts::FRAC_PI_4;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Pow, Zero};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::LinearSystem;
use crate::search::{dimred_solve, SearchError, StagePolicy};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("probability {0} must lie in [0, 1]")]
    InvalidProbability(f64),
    #[error("inequality requires n*p < 1, got n={n}, p={p}")]
    ProductTooLarge { n: u64, p: f64 },
    #[error("success bound requires n < M, got n={n}, M={m}")]
    BoundPrecondition { n: u64, m: u64 },
}

/// Amplification iterations one stage spends on a grid of `m` points with a
/// single surviving target: `floor(pi/4 * sqrt(m))`.
pub fn stage_iterations(m: u64) -> u64 {
    (FRAC_PI_4 * (m as f64).sqrt()).floor() as u64
}

/// Register operations for the staged solver on an `n`-dimensional grid of
/// `m` points per axis: `2n (stage_iterations(m) + n)`.
pub fn quantum_cost(n: u64, m: u64) -> u128 {
    2 * n as u128 * (stage_iterations(m) as u128 + n as u128)
}

/// Classical elimination cost model: `n^3`.
pub fn classical_cost(n: u64) -> u128 {
    (n as u128).pow(3)
}

/// Smallest dimension at which the classical model stops being cheaper.
/// The comparison `n^3 >= 2n(s + n)` is monotone in `n`, so a float guess
/// refined by exact integer checks is exact.
pub fn crossover(m: u64) -> u64 {
    let s = stage_iterations(m);
    let beats = |n: u64| classical_cost(n) >= quantum_cost(n, m);
    let mut n = ((1.0 + (1.0 + 2.0 * s as f64).sqrt()).floor() as u64).max(1);
    while !beats(n) {
        n += 1;
    }
    while n > 1 && beats(n - 1) {
        n -= 1;
    }
    n
}

/// Cost model evaluated at one `(n, M)` point.
#[derive(Debug, Clone, Serialize)]
pub struct CostModel {
    pub n: u64,
    pub m: u64,
    pub quantum_steps: u128,
    pub classical_steps: u128,
    pub crossover_n: u64,
}

impl CostModel {
    pub fn evaluate(n: u64, m: u64) -> Self {
        CostModel {
            n,
            m,
            quantum_steps: quantum_cost(n, m),
            classical_steps: classical_cost(n),
            crossover_n: crossover(m),
        }
    }
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Exact big-integer check of `C(n, k) <= n^k`.
pub fn lemma1_check(n: u64, k: u64) -> bool {
    binomial(n, k) <= Pow::pow(&BigUint::from(n), k)
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma2Outcome {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Check `(1 - p)^n > (1 - 2np) / (1 - np)` for `np < 1`.
/// At `p = 0` both sides equal one and the comparison relaxes to `>=`.
pub fn lemma2_check(p: f64, n: u64) -> Result<Lemma2Outcome, AnalysisError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalysisError::InvalidProbability(p));
    }
    let np = n as f64 * p;
    if np >= 1.0 {
        return Err(AnalysisError::ProductTooLarge { n, p });
    }
    let lhs = (1.0 - p).powf(n as f64);
    let rhs = (1.0 - 2.0 * np) / (1.0 - np);
    let holds = if p == 0.0 { lhs >= rhs } else { lhs > rhs };
    Ok(Lemma2Outcome { lhs, rhs, holds })
}

/// Overall success guarantee for `n` stages that each fail with probability
/// at most `1/M`.
#[derive(Debug, Clone, Serialize)]
pub struct SuccessBound {
    pub n: u64,
    pub m: u64,
    /// `(M - 2n) / (M - n)`, evaluated from the exact reduced rational.
    pub bound: f64,
    pub bound_numer: i128,
    pub bound_denom: i128,
    /// The unrounded per-stage product `(1 - 1/M)^n`.
    pub model: f64,
}

/// Lower bound `(1 - 2n/M) / (1 - n/M)` on the all-stages success
/// probability, together with the modeled product it approximates.
pub fn success_lower_bound(n: u64, m: u64) -> Result<SuccessBound, AnalysisError> {
    if n >= m {
        return Err(AnalysisError::BoundPrecondition { n, m });
    }
    let ratio = Ratio::new(m as i128 - 2 * n as i128, m as i128 - n as i128);
    let bound = *ratio.numer() as f64 / *ratio.denom() as f64;
    let model = (1.0 - 1.0 / m as f64).powf(n as f64);
    Ok(SuccessBound {
        n,
        m,
        bound,
        bound_numer: *ratio.numer(),
        bound_denom: *ratio.denom(),
        model,
    })
}

/// Empirical success estimate from repeated staged solves.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloOutcome {
    pub runs: u32,
    pub successes: u32,
    pub rate: f64,
    pub std_error: f64,
}

/// Run the staged solver `runs` times in parallel and count full successes
/// (every flag true and the final residual zero). Run `i` uses an
/// independent, deterministic random stream derived from `base_seed`, so the
/// outcome does not depend on thread scheduling.
pub fn monte_carlo_success(
    system: &LinearSystem,
    policy: &StagePolicy,
    runs: u32,
    base_seed: u64,
) -> Result<MonteCarloOutcome, SearchError> {
    policy.validate()?;
    let outcomes: Result<Vec<bool>, SearchError> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
            rng.set_stream(run as u64 + 1);
            let stats = dimred_solve(system, policy, &mut rng)?;
            Ok(stats.solution().is_some())
        })
        .collect();
    let successes = outcomes?.iter().filter(|&&ok| ok).count() as u32;
    let rate = successes as f64 / runs.max(1) as f64;
    let std_error = (rate * (1.0 - rate) / runs.max(1) as f64).sqrt();
    Ok(MonteCarloOutcome {
        runs,
        successes,
        rate,
        std_error,
    })
}
