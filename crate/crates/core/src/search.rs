//! Amplification schedules and the two grid solvers.
//!
//! `naive_solve` amplifies the full-system predicate once over all `M^n`
//! points. `dimred_solve` peels one row per stage: amplify the current row's
//! predicate inside the surviving subspace, measure the flag, and keep the
//! collapsed state, shrinking the space `M^n -> M^(n-1) -> ... -> 1`. Stage
//! iteration counts come from a known solution count (modeled or enumerated)
//! or from the exponential random schedule used when the count is unknown.

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::{GridPoint, LinearSystem, ModelError};
use crate::pipeline::{prepare_initial, LedgerError, LedgerEvent, RegisterLedger};
use crate::statevec::{Predicate, SearchState, StateError};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("solution count is zero; amplification has no target")]
    NoSolutions,
    #[error("solution count {solutions} exceeds space size {space}")]
    TooManySolutions { solutions: u64, space: u64 },
    #[error("invalid stage policy: {reason}")]
    InvalidPolicy { reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// How a dimensional-reduction stage chooses its iteration count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageMode {
    /// Trust the analytic model: stage `i` of `n` has `M^(n-i)` survivors.
    ModelCount,
    /// Enumerate the current support and count the marked points exactly.
    OracleCount,
    /// Solution count unknown: exponentially growing random schedule.
    Bbht,
}

/// Per-stage retry and schedule configuration.
#[derive(Debug, Clone, Serialize)]
pub struct StagePolicy {
    pub mode: StageMode,
    /// Extra attempts allowed after a failed flag measurement (or failed
    /// sample test in the unknown-count schedule).
    pub max_retries: u32,
    /// Growth factor for the unknown-count schedule bound (must exceed 1).
    pub bbht_growth: f64,
}

impl Default for StagePolicy {
    fn default() -> Self {
        StagePolicy {
            mode: StageMode::ModelCount,
            max_retries: 3,
            bbht_growth: 1.2,
        }
    }
}

impl StagePolicy {
    pub fn validate(&self) -> Result<(), SearchError> {
        if !(self.bbht_growth > 1.0) {
            return Err(SearchError::InvalidPolicy {
                reason: format!("growth factor {} must exceed 1", self.bbht_growth),
            });
        }
        Ok(())
    }
}

/// What one amplification stage did.
#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    /// Row peeled by this stage (1-based).
    pub stage: usize,
    /// Size of the space searched (current support).
    pub space_size: u64,
    /// Solution count the schedule assumed (`None` for the unknown-count mode).
    pub solution_count: Option<u64>,
    /// Scheduled amplification iterations per attempt (total drawn, for the
    /// unknown-count mode).
    pub iterations: u64,
    /// Iterations actually executed across all attempts.
    pub executed_iterations: u64,
    /// Oracle applications executed (plus one per classical sample test in
    /// the unknown-count mode).
    pub oracle_calls: u64,
    /// Marked-branch probability immediately before the final measurement.
    pub pre_measurement_success: f64,
    /// Final flag measurement outcome (false means the stage failed).
    pub flag_outcome: bool,
    /// Attempts used beyond the first.
    pub retries: u32,
    /// Modeled failure probability t/N of one attempt, when t was known.
    pub model_failure: Option<f64>,
}

impl StageRecord {
    /// Record for a stage whose predicate marks nothing in the support.
    fn unsatisfiable(stage: usize, space_size: u64) -> Self {
        StageRecord {
            stage,
            space_size,
            solution_count: Some(0),
            iterations: 0,
            executed_iterations: 0,
            oracle_calls: 0,
            pre_measurement_success: 0.0,
            flag_outcome: false,
            retries: 0,
            model_failure: None,
        }
    }
}

/// Full account of one solver run.
#[derive(Debug, Clone, Serialize)]
pub struct SearchStats {
    pub algorithm: &'static str,
    pub stages: Vec<StageRecord>,
    /// Sum of per-stage scheduled iteration counts.
    pub total_iterations: u64,
    /// Sum of iterations actually executed, retries included.
    pub total_executed_iterations: u64,
    pub total_oracle_calls: u64,
    pub total_retries: u32,
    /// Forward pipeline operations (preparation + row arithmetic).
    pub ledger_op_count: u64,
    /// Backward erasure operations.
    pub ledger_uncompute_count: u64,
    /// Product of per-stage modeled success probabilities, when every stage
    /// had a known count.
    pub model_success_probability: Option<f64>,
    /// Point produced by the final measurement (`None` if a stage failed).
    pub final_point: Option<GridPoint>,
    /// Exact residual check of `final_point`.
    pub residual_ok: bool,
    /// Pipeline transition log, exportable as JSON lines.
    #[serde(skip)]
    pub ledger_events: Vec<LedgerEvent>,
    /// Post-run register state, kept for state dumps.
    #[serde(skip)]
    pub final_state: Option<SearchState>,
}

impl SearchStats {
    fn assemble(
        algorithm: &'static str,
        stages: Vec<StageRecord>,
        ledger: &RegisterLedger,
        final_point: Option<GridPoint>,
        residual_ok: bool,
        final_state: Option<SearchState>,
    ) -> Self {
        let model_success_probability = stages
            .iter()
            .map(|s| s.model_failure.map(|f| 1.0 - f))
            .product::<Option<f64>>();
        SearchStats {
            algorithm,
            total_iterations: stages.iter().map(|s| s.iterations).sum(),
            total_executed_iterations: stages.iter().map(|s| s.executed_iterations).sum(),
            total_oracle_calls: stages.iter().map(|s| s.oracle_calls).sum(),
            total_retries: stages.iter().map(|s| s.retries).sum(),
            ledger_op_count: ledger.op_count(),
            ledger_uncompute_count: ledger.uncompute_count(),
            model_success_probability,
            stages,
            final_point,
            residual_ok,
            ledger_events: ledger.events().to_vec(),
            final_state,
        }
    }

    /// The verified solution: the final point when its residual checked out.
    pub fn solution(&self) -> Option<&GridPoint> {
        if self.residual_ok {
            self.final_point.as_ref()
        } else {
            None
        }
    }
}

/// Iterations for a space of `space` points with `solutions` marked:
/// `floor(pi/4 * sqrt(space/solutions))`, or zero when the marked fraction
/// is already at least one half.
pub fn iterations_known_t(space: u64, solutions: u64) -> Result<u64, SearchError> {
    if solutions == 0 {
        return Err(SearchError::NoSolutions);
    }
    if solutions > space {
        return Err(SearchError::TooManySolutions { solutions, space });
    }
    if 2 * solutions >= space {
        return Ok(0);
    }
    let ratio = space as f64 / solutions as f64;
    Ok((FRAC_PI_4 * ratio.sqrt()).floor() as u64)
}

/// Run `iterations` rounds of phase flip + reflection about `reference`.
pub fn amplify(
    state: &SearchState,
    pred: &Predicate,
    reference: &SearchState,
    iterations: u64,
) -> Result<SearchState, SearchError> {
    let mut s = state.clone();
    for _ in 0..iterations {
        s = s.oracle_phase_flip(pred).reflect_about(reference)?;
    }
    Ok(s)
}

/// Predicate marking the points where row `row`'s residual vanishes.
pub fn row_predicate(system: &LinearSystem, row: usize) -> Predicate {
    let sys = system.clone();
    Predicate::new(format!("f{row}(x) == 0"), move |x: &GridPoint| {
        sys.residual_row(x, row).map(|v| v == 0).unwrap_or(false)
    })
}

/// Predicate marking the points where every residual vanishes.
pub fn full_predicate(system: &LinearSystem) -> Predicate {
    let sys = system.clone();
    Predicate::new("f(x) == 0", move |x: &GridPoint| {
        sys.residual(x).map(|r| r.is_zero()).unwrap_or(false)
    })
}

fn known_t_round<R: Rng + ?Sized>(
    state: &SearchState,
    pred: &Predicate,
    solutions: u64,
    rng: &mut R,
) -> Result<(GridPoint, SearchState, StageRecord), SearchError> {
    let space = state.support_size();
    let k = iterations_known_t(space, solutions)?;
    let amplified = amplify(state, pred, state, k)?;
    let pre = amplified.success_probability(pred);
    let (outcome, collapsed, _) = amplified.measure_flag(pred, rng)?;
    let point = collapsed.sample_point(rng);
    let record = StageRecord {
        stage: 1,
        space_size: space,
        solution_count: Some(solutions),
        iterations: k,
        executed_iterations: k,
        oracle_calls: k,
        pre_measurement_success: pre,
        flag_outcome: outcome,
        retries: 0,
        model_failure: Some(solutions as f64 / space as f64),
    };
    Ok((point, collapsed, record))
}

/// One known-count amplification round: schedule, amplify, measure, sample.
/// The returned point is whatever the collapsed state yields, so callers must
/// consult `flag_outcome` / a residual check before trusting it.
pub fn grover_known_t<R: Rng + ?Sized>(
    state: &SearchState,
    pred: &Predicate,
    solutions: u64,
    rng: &mut R,
) -> Result<(GridPoint, StageRecord), SearchError> {
    known_t_round(state, pred, solutions, rng).map(|(point, _, record)| (point, record))
}

/// Draw the next iteration count for the unknown-count schedule: an integer
/// uniform below the current bound.
fn draw_schedule<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> u64 {
    (rng.random::<f64>() * bound).floor() as u64
}

/// Unknown-count search: grow the schedule bound by `policy.bbht_growth`
/// after each failed attempt, capped at `sqrt(space)`; each attempt amplifies
/// a fresh copy of `state`, samples, and tests the sample classically.
/// Exhausting the attempt budget returns `None` — a failure signal, never a
/// false positive.
pub fn bbht_search<R: Rng + ?Sized>(
    state: &SearchState,
    pred: &Predicate,
    policy: &StagePolicy,
    rng: &mut R,
) -> Result<(Option<GridPoint>, StageRecord), SearchError> {
    policy.validate()?;
    let space = state.support_size();
    let cap = (space as f64).sqrt().max(1.0);
    let mut bound = 1.0_f64;
    let mut executed = 0u64;
    let mut oracle_calls = 0u64;
    let mut last_pre = 0.0;
    let attempts = policy.max_retries as u64 + 1;
    for attempt in 0..attempts {
        let j = draw_schedule(rng, bound);
        let amplified = amplify(state, pred, state, j)?;
        executed += j;
        oracle_calls += j + 1; // j oracle applications + 1 classical test
        last_pre = amplified.success_probability(pred);
        let point = amplified.sample_point(rng);
        if pred.eval(&point) {
            let record = StageRecord {
                stage: 1,
                space_size: space,
                solution_count: None,
                iterations: executed,
                executed_iterations: executed,
                oracle_calls,
                pre_measurement_success: last_pre,
                flag_outcome: true,
                retries: attempt as u32,
                model_failure: None,
            };
            return Ok((Some(point), record));
        }
        bound = (bound * policy.bbht_growth).min(cap);
    }
    let record = StageRecord {
        stage: 1,
        space_size: space,
        solution_count: None,
        iterations: executed,
        executed_iterations: executed,
        oracle_calls,
        pre_measurement_success: last_pre,
        flag_outcome: false,
        retries: (attempts - 1) as u32,
        model_failure: None,
    };
    Ok((None, record))
}

/// Known-count stage with retries: every attempt re-amplifies a fresh copy of
/// the stage-start state, so a failed flag costs only the repeated work.
fn run_known_t_stage<R: Rng + ?Sized>(
    stage_start: &SearchState,
    pred: &Predicate,
    solutions: u64,
    max_retries: u32,
    stage: usize,
    rng: &mut R,
) -> Result<(Option<SearchState>, StageRecord), SearchError> {
    let space = stage_start.support_size();
    let k = iterations_known_t(space, solutions)?;
    let model_failure = Some(solutions as f64 / space as f64);
    let mut executed = 0u64;
    let mut retries = 0u32;
    loop {
        let amplified = amplify(stage_start, pred, stage_start, k)?;
        executed += k;
        let pre = amplified.success_probability(pred);
        let (outcome, collapsed, _) = amplified.measure_flag(pred, rng)?;
        if outcome {
            let record = StageRecord {
                stage,
                space_size: space,
                solution_count: Some(solutions),
                iterations: k,
                executed_iterations: executed,
                oracle_calls: executed,
                pre_measurement_success: pre,
                flag_outcome: true,
                retries,
                model_failure,
            };
            return Ok((Some(collapsed), record));
        }
        if retries >= max_retries {
            let record = StageRecord {
                stage,
                space_size: space,
                solution_count: Some(solutions),
                iterations: k,
                executed_iterations: executed,
                oracle_calls: executed,
                pre_measurement_success: pre,
                flag_outcome: false,
                retries,
                model_failure,
            };
            return Ok((None, record));
        }
        retries += 1;
    }
}

/// Unknown-count stage variant: the sample test is replaced by the flag
/// measurement so a success leaves the surviving subspace intact for the
/// next stage.
fn run_bbht_stage<R: Rng + ?Sized>(
    stage_start: &SearchState,
    pred: &Predicate,
    policy: &StagePolicy,
    stage: usize,
    rng: &mut R,
) -> Result<(Option<SearchState>, StageRecord), SearchError> {
    let space = stage_start.support_size();
    let cap = (space as f64).sqrt().max(1.0);
    let mut bound = 1.0_f64;
    let mut executed = 0u64;
    let mut oracle_calls = 0u64;
    let mut last_pre = 0.0;
    let attempts = policy.max_retries as u64 + 1;
    for attempt in 0..attempts {
        let j = draw_schedule(rng, bound);
        let amplified = amplify(stage_start, pred, stage_start, j)?;
        executed += j;
        oracle_calls += j + 1;
        last_pre = amplified.success_probability(pred);
        let (outcome, collapsed, _) = amplified.measure_flag(pred, rng)?;
        if outcome {
            let record = StageRecord {
                stage,
                space_size: space,
                solution_count: None,
                iterations: executed,
                executed_iterations: executed,
                oracle_calls,
                pre_measurement_success: last_pre,
                flag_outcome: true,
                retries: attempt as u32,
                model_failure: None,
            };
            return Ok((Some(collapsed), record));
        }
        bound = (bound * policy.bbht_growth).min(cap);
    }
    let record = StageRecord {
        stage,
        space_size: space,
        solution_count: None,
        iterations: executed,
        executed_iterations: executed,
        oracle_calls,
        pre_measurement_success: last_pre,
        flag_outcome: false,
        retries: (attempts - 1) as u32,
        model_failure: None,
    };
    Ok((None, record))
}

/// Solve in one shot: prepare the full pipeline, amplify the all-rows
/// predicate over all `M^n` points assuming a unique solution, measure.
pub fn naive_solve<R: Rng + ?Sized>(
    system: &LinearSystem,
    rng: &mut R,
) -> Result<SearchStats, SearchError> {
    let n = system.n();
    let (mut ledger, state) = prepare_initial(n, system.grid_modulus())?;
    for row in 1..=n {
        ledger = ledger.compute_row(system, row)?;
        ledger = ledger.uncompute_garbage(row)?;
    }
    let pred = full_predicate(system);
    let (point, collapsed, record) = known_t_round(&state, &pred, 1, rng)?;
    let residual_ok =
        record.flag_outcome && system.residual(&point).map(|r| r.is_zero()).unwrap_or(false);
    Ok(SearchStats::assemble(
        "naive",
        vec![record],
        &ledger,
        Some(point),
        residual_ok,
        Some(collapsed),
    ))
}

/// Solve by dimensional reduction: peel one row per stage, keeping the
/// measured subspace between stages. A stage that exhausts its retries stops
/// the run with `final_point = None`.
pub fn dimred_solve<R: Rng + ?Sized>(
    system: &LinearSystem,
    policy: &StagePolicy,
    rng: &mut R,
) -> Result<SearchStats, SearchError> {
    policy.validate()?;
    let n = system.n();
    let m = system.grid_modulus();
    let (mut ledger, mut state) = prepare_initial(n, m)?;
    let mut stages = Vec::with_capacity(n);
    let mut completed = true;
    for row in 1..=n {
        ledger = ledger.compute_row(system, row)?;
        let pred = row_predicate(system, row);
        let stage_start = state;
        let (next, record) = match policy.mode {
            StageMode::ModelCount => {
                let t_model = m.pow((n - row) as u32).min(stage_start.support_size());
                run_known_t_stage(&stage_start, &pred, t_model, policy.max_retries, row, rng)?
            }
            StageMode::OracleCount => {
                let t = stage_start.marked_count(&pred);
                if t == 0 {
                    (None, StageRecord::unsatisfiable(row, stage_start.support_size()))
                } else {
                    run_known_t_stage(&stage_start, &pred, t, policy.max_retries, row, rng)?
                }
            }
            StageMode::Bbht => run_bbht_stage(&stage_start, &pred, policy, row, rng)?,
        };
        ledger = ledger.uncompute_garbage(row)?;
        stages.push(record);
        match next {
            Some(s) => state = s,
            None => {
                completed = false;
                state = stage_start;
                break;
            }
        }
    }
    let (final_point, residual_ok, final_state) = if completed {
        let point = state.sample_point(rng);
        let ok = system.residual(&point).map(|r| r.is_zero()).unwrap_or(false);
        (Some(point), ok, Some(state))
    } else {
        (None, false, None)
    };
    Ok(SearchStats::assemble(
        "dimred",
        stages,
        &ledger,
        final_point,
        residual_ok,
        final_state,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, ArithmeticMode};
    use crate::statevec::{SearchState, TIGHT_TOL};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn index_below(t: u64, m: u64) -> Predicate {
        Predicate::new(format!("index < {t}"), move |p: &GridPoint| p.index(m) < t)
    }

    #[test]
    fn iteration_schedule_matches_quarter_pi_rule() {
        assert_eq!(iterations_known_t(64, 1).unwrap(), 6);
        assert_eq!(iterations_known_t(4, 1).unwrap(), 1);
        assert_eq!(iterations_known_t(64, 16).unwrap(), 1);
        assert_eq!(iterations_known_t(64, 32).unwrap(), 0);
        assert_eq!(iterations_known_t(64, 40).unwrap(), 0);
    }

    #[test]
    fn iteration_schedule_rejects_bad_counts() {
        assert!(matches!(
            iterations_known_t(64, 0),
            Err(SearchError::NoSolutions)
        ));
        assert!(matches!(
            iterations_known_t(4, 5),
            Err(SearchError::TooManySolutions { .. })
        ));
    }

    #[test]
    fn amplified_success_matches_closed_form() {
        for &(space, t) in &[(4u64, 1u64), (16, 1), (16, 4), (64, 1), (64, 8)] {
            let state = SearchState::uniform(1, space).unwrap();
            let pred = index_below(t, space);
            let k = iterations_known_t(space, t).unwrap();
            let amplified = amplify(&state, &pred, &state, k).unwrap();
            let theta = (t as f64 / space as f64).sqrt().asin();
            let expected = ((2 * k + 1) as f64 * theta).sin().powi(2);
            let got = amplified.success_probability(&pred);
            assert!(
                (got - expected).abs() < 1e-9,
                "space={space} t={t}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn four_point_search_is_certain() {
        let state = SearchState::uniform(1, 4).unwrap();
        let pred = index_below(1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let (point, record) = grover_known_t(&state, &pred, 1, &mut rng).unwrap();
        assert_eq!(record.iterations, 1);
        assert!(record.flag_outcome);
        assert!((record.pre_measurement_success - 1.0).abs() < TIGHT_TOL);
        assert_eq!(point.index(4), 0);
    }

    #[test]
    fn naive_solver_recovers_planted_solution() {
        let (sys, x_star) = generate_instance(2, 8, ArithmeticMode::ModularM, 42).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let stats = naive_solve(&sys, &mut rng).unwrap();
        assert_eq!(stats.solution(), Some(&x_star));
        assert_eq!(stats.total_iterations, 6); // floor(pi/4 * sqrt(64))
        assert_eq!(stats.ledger_op_count, 2 + 2 * 4); // n + 2n^2
        assert_eq!(stats.ledger_uncompute_count, 4); // n^2
        let model = stats.model_success_probability.unwrap();
        assert!((model - (1.0 - 1.0 / 64.0)).abs() < TIGHT_TOL);
    }

    #[test]
    fn dimred_model_mode_is_certain_on_quarter_fraction_stages() {
        // M = 4 makes every stage exact: t/N = 1/4 lands the full amplitude
        // on the marked branch after one iteration, so any seed succeeds.
        for seed in 0..10 {
            let (sys, x_star) = generate_instance(2, 4, ArithmeticMode::ModularM, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let stats = dimred_solve(&sys, &StagePolicy::default(), &mut rng).unwrap();
            assert_eq!(stats.solution(), Some(&x_star), "seed {seed}");
            assert_eq!(stats.total_iterations, 2); // n * floor(pi/4 * sqrt(M))
            assert_eq!(stats.total_retries, 0);
            for rec in &stats.stages {
                assert!((rec.pre_measurement_success - 1.0).abs() < TIGHT_TOL);
            }
        }
    }

    #[test]
    fn dimred_supports_shrink_by_a_factor_of_m() {
        let (sys, _) = generate_instance(3, 4, ArithmeticMode::ModularM, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let stats = dimred_solve(&sys, &StagePolicy::default(), &mut rng).unwrap();
        let sizes: Vec<u64> = stats.stages.iter().map(|s| s.space_size).collect();
        assert_eq!(sizes, vec![64, 16, 4]);
    }

    #[test]
    fn dimred_oracle_mode_counts_match_the_model() {
        // Modular instances keep every leading subsystem uniquely solvable,
        // so the enumerated stage counts must equal M^(n-i) exactly.
        let policy = StagePolicy {
            mode: StageMode::OracleCount,
            max_retries: 8,
            ..StagePolicy::default()
        };
        for seed in 0..5 {
            let (sys, x_star) = generate_instance(2, 8, ArithmeticMode::ModularM, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let stats = dimred_solve(&sys, &policy, &mut rng).unwrap();
            for (i, rec) in stats.stages.iter().enumerate() {
                assert_eq!(rec.space_size, 8u64.pow((2 - i) as u32));
                assert_eq!(rec.solution_count, Some(8u64.pow((1 - i) as u32)));
            }
            assert_eq!(stats.solution(), Some(&x_star), "seed {seed}");
        }
    }

    #[test]
    fn dimred_retries_recover_failed_stages() {
        // M = 8 stages succeed with p ~ 0.948, so across many seeds some
        // first attempts must fail; with retries every run still finishes.
        let policy = StagePolicy {
            max_retries: 8,
            ..StagePolicy::default()
        };
        let mut retried = 0u32;
        for seed in 0..60 {
            let (sys, x_star) = generate_instance(2, 8, ArithmeticMode::ModularM, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let stats = dimred_solve(&sys, &policy, &mut rng).unwrap();
            retried += stats.total_retries;
            assert_eq!(stats.solution(), Some(&x_star), "seed {seed}");
        }
        assert!(retried > 0, "expected at least one retried stage");
    }

    #[test]
    fn dimred_without_retries_reports_failure_honestly() {
        let policy = StagePolicy {
            max_retries: 0,
            ..StagePolicy::default()
        };
        let mut failures = 0u32;
        for seed in 0..200 {
            let (sys, _) = generate_instance(2, 8, ArithmeticMode::ModularM, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let stats = dimred_solve(&sys, &policy, &mut rng).unwrap();
            if stats.solution().is_none() {
                failures += 1;
                assert!(stats.final_point.is_none());
                assert!(!stats.stages.last().unwrap().flag_outcome);
            }
        }
        // Model failure rate is ~1 - (7/8)^2 ~ 0.23; demand the failures show up.
        assert!(failures > 5, "only {failures} failures in 200 runs");
    }

    #[test]
    fn dimred_bbht_mode_solves_with_generous_cap() {
        let policy = StagePolicy {
            mode: StageMode::Bbht,
            max_retries: 30,
            ..StagePolicy::default()
        };
        let mut solved = 0u32;
        for seed in 0..20 {
            let (sys, x_star) = generate_instance(2, 8, ArithmeticMode::ModularM, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 7 + 1);
            let stats = dimred_solve(&sys, &policy, &mut rng).unwrap();
            if stats.solution() == Some(&x_star) {
                solved += 1;
            }
        }
        assert!(solved >= 19, "only {solved}/20 runs solved");
    }

    #[test]
    fn bbht_with_no_solutions_signals_failure() {
        let state = SearchState::uniform(1, 64).unwrap();
        let never = Predicate::new("never", |_: &GridPoint| false);
        let policy = StagePolicy {
            mode: StageMode::Bbht,
            max_retries: 9,
            ..StagePolicy::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (found, record) = bbht_search(&state, &never, &policy, &mut rng).unwrap();
        assert!(found.is_none());
        assert!(!record.flag_outcome);
        assert_eq!(record.retries, 9);
    }

    #[test]
    fn bbht_with_every_point_marked_succeeds_immediately() {
        let state = SearchState::uniform(1, 64).unwrap();
        let always = Predicate::new("always", |_: &GridPoint| true);
        let policy = StagePolicy {
            mode: StageMode::Bbht,
            max_retries: 9,
            ..StagePolicy::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (found, record) = bbht_search(&state, &always, &policy, &mut rng).unwrap();
        assert!(found.is_some());
        assert_eq!(record.retries, 0);
        assert_eq!(record.oracle_calls, 1); // zero iterations + one test
    }

    #[test]
    fn bbht_finds_an_eighth_fraction_target() {
        let state = SearchState::uniform(1, 64).unwrap();
        let pred = index_below(8, 64);
        let policy = StagePolicy {
            mode: StageMode::Bbht,
            max_retries: 30,
            ..StagePolicy::default()
        };
        let mut successes = 0u32;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (found, _) = bbht_search(&state, &pred, &policy, &mut rng).unwrap();
            if let Some(p) = found {
                assert!(p.index(64) < 8);
                successes += 1;
            }
        }
        assert!(successes >= 49, "only {successes}/50 runs succeeded");
    }

    #[test]
    fn invalid_growth_factor_is_rejected() {
        let policy = StagePolicy {
            mode: StageMode::Bbht,
            bbht_growth: 1.0,
            ..StagePolicy::default()
        };
        let state = SearchState::uniform(1, 4).unwrap();
        let always = Predicate::new("always", |_: &GridPoint| true);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            bbht_search(&state, &always, &policy, &mut rng),
            Err(SearchError::InvalidPolicy { .. })
        ));
    }

    #[test]
    fn stats_totals_equal_stage_sums() {
        let (sys, _) = generate_instance(3, 4, ArithmeticMode::ModularM, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let stats = dimred_solve(&sys, &StagePolicy::default(), &mut rng).unwrap();
        assert_eq!(
            stats.total_iterations,
            stats.stages.iter().map(|s| s.iterations).sum::<u64>()
        );
        assert_eq!(
            stats.total_oracle_calls,
            stats.stages.iter().map(|s| s.oracle_calls).sum::<u64>()
        );
        assert_eq!(
            stats.total_retries,
            stats.stages.iter().map(|s| s.retries).sum::<u32>()
        );
    }

    #[test]
    fn solve_runs_are_deterministic_per_seed() {
        let (sys, _) = generate_instance(2, 8, ArithmeticMode::ModularM, 17).unwrap();
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let stats = dimred_solve(&sys, &StagePolicy::default(), &mut rng).unwrap();
            serde_json::to_string(&stats).unwrap()
        };
        assert_eq!(run(3), run(3));
    }

    #[test]
    fn stats_serialize_with_stable_field_names() {
        let (sys, _) = generate_instance(1, 4, ArithmeticMode::ModularM, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let stats = naive_solve(&sys, &mut rng).unwrap();
        let json = serde_json::to_string(&stats).unwrap();
        for key in [
            "algorithm",
            "stages",
            "total_iterations",
            "total_oracle_calls",
            "ledger_op_count",
            "ledger_uncompute_count",
            "final_point",
            "residual_ok",
        ] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
    }
}
