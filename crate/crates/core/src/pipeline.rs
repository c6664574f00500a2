//! Register bookkeeping for the reversible arithmetic pipeline.
//!
//! The machine carries three banks of `n` registers: the search coordinates,
//! `n` work registers holding intermediate products, and `n` residual
//! registers. Work registers must be returned to `|0>` (their products
//! uncomputed by running the multiplications backward) before the next row
//! is computed — the ledger enforces that discipline and keeps the forward /
//! backward operation counts that the cost model is checked against.

use serde::Serialize;
use thiserror::Error;

use crate::model::{checked_grid_size, LinearSystem, ModelError};
use crate::statevec::{SearchState, StateError};

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("row {row} out of range 1..={n}")]
    RowOutOfRange { row: usize, n: usize },
    #[error("ledger tracks {expected} rows but the system has {got}")]
    SystemMismatch { expected: usize, got: usize },
    #[error("work registers still hold products for row {row}; uncompute before the next row")]
    WorkRegistersDirty { row: usize },
    #[error("residual register {row} already holds a value")]
    ResidualAlreadyHeld { row: usize },
    #[error("work registers are clean; nothing to uncompute")]
    NothingToUncompute,
    #[error("work registers hold products for row {held}, not row {requested}")]
    WrongRowHeld { held: usize, requested: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// State of one work register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkRegister {
    Clean,
    /// Holds a product `a_ij * x_j` for the given row.
    HoldsProduct { row: usize },
}

/// State of one residual register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualRegister {
    Clean,
    HoldsResidual,
}

/// One ledger transition, kept for tracing.
#[derive(Debug, Clone, Serialize)]
pub struct LedgerEvent {
    pub op: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    pub op_count: u64,
    pub uncompute_count: u64,
}

/// Immutable ledger over the register banks; operations return the successor
/// ledger so failed transitions leave the original untouched.
#[derive(Debug, Clone)]
pub struct RegisterLedger {
    n: usize,
    work: Vec<WorkRegister>,
    residual: Vec<ResidualRegister>,
    op_count: u64,
    uncompute_count: u64,
    events: Vec<LedgerEvent>,
}

impl RegisterLedger {
    /// Fresh ledger: all registers clean, no operations recorded.
    pub fn new(n: usize) -> Self {
        RegisterLedger {
            n,
            work: vec![WorkRegister::Clean; n],
            residual: vec![ResidualRegister::Clean; n],
            op_count: 0,
            uncompute_count: 0,
            events: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Forward operations executed so far (preparation + row arithmetic).
    pub fn op_count(&self) -> u64 {
        self.op_count
    }

    /// Backward (erasure) operations executed so far.
    pub fn uncompute_count(&self) -> u64 {
        self.uncompute_count
    }

    pub fn work_registers(&self) -> &[WorkRegister] {
        &self.work
    }

    pub fn residual_registers(&self) -> &[ResidualRegister] {
        &self.residual
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    /// True when every work register is clean (a stage boundary).
    pub fn at_stage_boundary(&self) -> bool {
        self.work.iter().all(|w| *w == WorkRegister::Clean)
    }

    fn held_row(&self) -> Option<usize> {
        self.work.iter().find_map(|w| match w {
            WorkRegister::HoldsProduct { row } => Some(*row),
            WorkRegister::Clean => None,
        })
    }

    fn push_event(&mut self, op: &'static str, row: Option<usize>) {
        self.events.push(LedgerEvent {
            op,
            row,
            op_count: self.op_count,
            uncompute_count: self.uncompute_count,
        });
    }

    /// Compute row `row`'s residual: `n` multiplications into the work
    /// registers plus `n` additions into the residual register (2n forward
    /// operations). Requires clean work registers and a free residual slot.
    pub fn compute_row(
        &self,
        system: &LinearSystem,
        row: usize,
    ) -> Result<RegisterLedger, LedgerError> {
        if system.n() != self.n {
            return Err(LedgerError::SystemMismatch {
                expected: self.n,
                got: system.n(),
            });
        }
        if row == 0 || row > self.n {
            return Err(LedgerError::RowOutOfRange { row, n: self.n });
        }
        if let Some(held) = self.held_row() {
            return Err(LedgerError::WorkRegistersDirty { row: held });
        }
        if self.residual[row - 1] == ResidualRegister::HoldsResidual {
            return Err(LedgerError::ResidualAlreadyHeld { row });
        }
        let mut next = self.clone();
        for w in next.work.iter_mut() {
            *w = WorkRegister::HoldsProduct { row };
        }
        next.residual[row - 1] = ResidualRegister::HoldsResidual;
        next.op_count += 2 * self.n as u64;
        next.push_event("compute_row", Some(row));
        Ok(next)
    }

    /// Erase the work-register products for `row` by running the `n`
    /// multiplications backward. Residual registers are untouched.
    pub fn uncompute_garbage(&self, row: usize) -> Result<RegisterLedger, LedgerError> {
        if row == 0 || row > self.n {
            return Err(LedgerError::RowOutOfRange { row, n: self.n });
        }
        let held = self.held_row().ok_or(LedgerError::NothingToUncompute)?;
        if held != row {
            return Err(LedgerError::WrongRowHeld {
                held,
                requested: row,
            });
        }
        let mut next = self.clone();
        for w in next.work.iter_mut() {
            *w = WorkRegister::Clean;
        }
        next.uncompute_count += self.n as u64;
        next.push_event("uncompute_garbage", Some(row));
        Ok(next)
    }
}

/// Build the uniform superposition over the whole grid together with a fresh
/// ledger. Costs one preparation operation per coordinate register and
/// enforces the desk-scale guard on `M^n`.
pub fn prepare_initial(n: usize, m: u64) -> Result<(RegisterLedger, SearchState), LedgerError> {
    checked_grid_size(n, m)?;
    let state = SearchState::uniform(n, m)?;
    let mut ledger = RegisterLedger::new(n);
    ledger.op_count = n as u64;
    ledger.push_event("prepare", None);
    Ok((ledger, state))
}
