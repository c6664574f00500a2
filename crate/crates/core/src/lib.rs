//! Desk-scale simulator and analysis toolkit for solving integer linear
//! systems by staged amplitude amplification over a discrete grid.
//!
//! The solver searches the grid `{0, ..., M-1}^n` for the point where every
//! row residual `f_i(x) = sum_j a_ij x_j + b_i` vanishes. Two strategies are
//! simulated exactly with a dense state vector:
//!
//! - [`search::naive_solve`] amplifies the all-rows predicate over the whole
//!   grid in one shot;
//! - [`search::dimred_solve`] peels one row per stage, measuring a flag and
//!   keeping the surviving subspace, so the space shrinks by a factor of `M`
//!   each stage.
//!
//! [`model`] holds the exact integer problem representation, [`pipeline`]
//! audits the reversible register arithmetic that the cost model charges
//! for, [`statevec`] is the amplitude-level simulator, [`classical`] is the
//! exact elimination cross-check, and [`analysis`] carries the cost model,
//! inequality checks, and Monte Carlo estimators.

pub mod analysis;
pub mod classical;
pub mod model;
pub mod pipeline;
pub mod search;
pub mod statevec;

pub use analysis::{
    classical_cost, crossover, lemma1_check, lemma2_check, monte_carlo_success, quantum_cost,
    stage_iterations, success_lower_bound, AnalysisError, CostModel, Lemma2Outcome,
    MonteCarloOutcome, SuccessBound,
};
pub use classical::{classical_solve, ClassicalError};
pub use model::{
    checked_grid_size, generate_instance, ArithmeticMode, GridPoint, InstanceFile, LinearSystem,
    ModelError, Residual, DESK_SCALE_GUARD,
};
pub use pipeline::{prepare_initial, LedgerError, RegisterLedger};
pub use search::{
    amplify, bbht_search, dimred_solve, full_predicate, grover_known_t, iterations_known_t,
    naive_solve, row_predicate, SearchError, SearchStats, StageMode, StagePolicy, StageRecord,
};
pub use statevec::{Predicate, SearchState, StateError, COMPOSED_TOL, TIGHT_TOL};
