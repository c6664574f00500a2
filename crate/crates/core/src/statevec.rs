//! Dense state-vector simulation of amplitude amplification over the grid.
//!
//! Amplitudes are complex doubles indexed by grid point. After a flag
//! measurement the state is stored support-restricted: only the surviving
//! grid indices and their renormalized amplitudes are kept, so later stages
//! run on the shrunken space. Oracles act as phase flips on the points a
//! classical predicate marks; no gate-level decomposition is modeled.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::{checked_grid_size, GridPoint, ModelError};

/// Tolerance for single-operation identities (e.g. reference normalization).
pub const TIGHT_TOL: f64 = 1e-12;
/// Tolerance for composed-pipeline identities (norms after many operations).
pub const COMPOSED_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("states live on different grids ({n_a} dims mod {m_a} vs {n_b} dims mod {m_b})")]
    DomainMismatch {
        n_a: usize,
        m_a: u64,
        n_b: usize,
        m_b: u64,
    },
    #[error("states have different supports; reflection requires the same restriction")]
    SupportMismatch,
    #[error("reference state has norm {norm}, expected 1")]
    UnnormalizedReference { norm: f64 },
    #[error("measurement branch has probability {probability}; cannot collapse onto it")]
    ImpossibleBranch { probability: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A classical test on grid points, used both as the phase oracle and as the
/// flag condition of a measurement.
#[derive(Clone)]
pub struct Predicate {
    label: String,
    test: Arc<dyn Fn(&GridPoint) -> bool + Send + Sync>,
}

impl Predicate {
    pub fn new(
        label: impl Into<String>,
        test: impl Fn(&GridPoint) -> bool + Send + Sync + 'static,
    ) -> Self {
        Predicate {
            label: label.into(),
            test: Arc::new(test),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &GridPoint) -> bool {
        (self.test)(x)
    }
}

impl std::fmt::Debug for Predicate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Predicate({})", self.label)
    }
}

/// Simulated register state: amplitudes over the (possibly restricted) grid.
///
/// Invariant: when a support is present its indices are strictly ascending,
/// and `amps[i]` belongs to `support[i]`. Without a support the state is
/// dense over all `M^n` indices.
#[derive(Debug, Clone)]
pub struct SearchState {
    n: usize,
    m: u64,
    support: Option<Vec<u64>>,
    amps: Vec<Complex64>,
    oracle_evals: u64,
}

impl SearchState {
    /// Uniform superposition over the full grid (guarded by `M^n <= 2^26`).
    pub fn uniform(n: usize, m: u64) -> Result<Self, StateError> {
        let size = checked_grid_size(n, m)?;
        let amp = Complex64::new(1.0 / (size as f64).sqrt(), 0.0);
        Ok(SearchState {
            n,
            m,
            support: None,
            amps: vec![amp; size as usize],
            oracle_evals: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid_modulus(&self) -> u64 {
        self.m
    }

    /// Number of grid points currently carrying amplitude storage.
    pub fn support_size(&self) -> u64 {
        self.amps.len() as u64
    }

    /// Cumulative number of oracle (phase-flip) predicate evaluations.
    pub fn oracle_evals(&self) -> u64 {
        self.oracle_evals
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn grid_index_at(&self, pos: usize) -> u64 {
        match &self.support {
            None => pos as u64,
            Some(s) => s[pos],
        }
    }

    /// Amplitude at a grid index (zero when outside the support).
    pub fn amplitude(&self, grid_index: u64) -> Complex64 {
        match &self.support {
            None => self
                .amps
                .get(grid_index as usize)
                .copied()
                .unwrap_or_default(),
            Some(s) => match s.binary_search(&grid_index) {
                Ok(pos) => self.amps[pos],
                Err(_) => Complex64::default(),
            },
        }
    }

    fn same_domain(&self, other: &SearchState) -> Result<(), StateError> {
        if self.n != other.n || self.m != other.m {
            return Err(StateError::DomainMismatch {
                n_a: self.n,
                m_a: self.m,
                n_b: other.n,
                m_b: other.m,
            });
        }
        if self.support != other.support {
            return Err(StateError::SupportMismatch);
        }
        Ok(())
    }

    fn partition(&self, pred: &Predicate) -> (Vec<usize>, f64) {
        let mut marked = Vec::new();
        let mut p_marked = 0.0;
        let mut point = GridPoint::zeros(self.n);
        for pos in 0..self.amps.len() {
            point.decode_from(self.grid_index_at(pos), self.m);
            if pred.eval(&point) {
                p_marked += self.amps[pos].norm_sqr();
                marked.push(pos);
            }
        }
        (marked, p_marked)
    }

    /// Flip the sign of every amplitude the predicate marks. Counts one
    /// oracle evaluation per point in the support.
    pub fn oracle_phase_flip(&self, pred: &Predicate) -> SearchState {
        let mut next = self.clone();
        let mut point = GridPoint::zeros(self.n);
        for pos in 0..next.amps.len() {
            point.decode_from(next.grid_index_at(pos), next.m);
            if pred.eval(&point) {
                next.amps[pos] = -next.amps[pos];
            }
        }
        next.oracle_evals += next.amps.len() as u64;
        next
    }

    /// Reflect about `reference`: `state' = 2 <ref|state> ref - state`.
    /// The reference must be normalized and share this state's support.
    pub fn reflect_about(&self, reference: &SearchState) -> Result<SearchState, StateError> {
        self.same_domain(reference)?;
        let ref_norm = reference.norm();
        if (ref_norm - 1.0).abs() > COMPOSED_TOL {
            return Err(StateError::UnnormalizedReference { norm: ref_norm });
        }
        let inner: Complex64 = reference
            .amps
            .iter()
            .zip(self.amps.iter())
            .map(|(r, s)| r.conj() * s)
            .sum();
        let mut next = self.clone();
        for (a, r) in next.amps.iter_mut().zip(reference.amps.iter()) {
            *a = 2.0 * inner * r - *a;
        }
        Ok(next)
    }

    /// Probability that a flag measurement of `pred` would read true.
    pub fn success_probability(&self, pred: &Predicate) -> f64 {
        self.partition(pred).1
    }

    /// Number of support points the predicate marks (enumeration, not an
    /// oracle call; used by tests and the oracle-informed stage mode).
    pub fn marked_count(&self, pred: &Predicate) -> u64 {
        self.partition(pred).0.len() as u64
    }

    /// Project onto the `outcome` branch of the flag predicate and
    /// renormalize; returns the branch probability alongside the new state.
    pub fn collapse(
        &self,
        pred: &Predicate,
        outcome: bool,
    ) -> Result<(SearchState, f64), StateError> {
        let (marked, p_marked) = self.partition(pred);
        let p_branch = if outcome { p_marked } else { 1.0 - p_marked };
        if p_branch <= 0.0 {
            return Err(StateError::ImpossibleBranch {
                probability: p_branch,
            });
        }
        let keep: Vec<usize> = if outcome {
            marked
        } else {
            let marked_set: std::collections::HashSet<usize> = marked.into_iter().collect();
            (0..self.amps.len())
                .filter(|pos| !marked_set.contains(pos))
                .collect()
        };
        let scale = 1.0 / p_branch.sqrt();
        let support: Vec<u64> = keep.iter().map(|&pos| self.grid_index_at(pos)).collect();
        let amps: Vec<Complex64> = keep.iter().map(|&pos| self.amps[pos] * scale).collect();
        Ok((
            SearchState {
                n: self.n,
                m: self.m,
                support: Some(support),
                amps,
                oracle_evals: self.oracle_evals,
            },
            p_branch,
        ))
    }

    /// Measure the flag qubit for `pred`: Bernoulli draw on the marked
    /// probability, then collapse onto the observed branch.
    /// Returns `(outcome, collapsed state, p_true)`.
    pub fn measure_flag<R: Rng + ?Sized>(
        &self,
        pred: &Predicate,
        rng: &mut R,
    ) -> Result<(bool, SearchState, f64), StateError> {
        let p_true = self.success_probability(pred);
        let outcome = rng.random::<f64>() < p_true;
        let (collapsed, _) = self.collapse(pred, outcome)?;
        Ok((outcome, collapsed, p_true))
    }

    /// Sample a grid point from the Born distribution of this state.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> GridPoint {
        let total: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum();
        let target = rng.random::<f64>() * total;
        let mut cum = 0.0;
        let mut chosen = self.amps.len() - 1;
        for (pos, a) in self.amps.iter().enumerate() {
            cum += a.norm_sqr();
            if cum > target {
                chosen = pos;
                break;
            }
        }
        GridPoint::from_index(self.grid_index_at(chosen), self.n, self.m)
    }

    /// Grid indices and amplitudes with probability above `threshold`,
    /// ascending by index (debug/dump helper).
    pub fn nonzero_amplitudes(&self, threshold: f64) -> Vec<AmplitudeEntry> {
        (0..self.amps.len())
            .filter(|&pos| self.amps[pos].norm_sqr() > threshold)
            .map(|pos| {
                let index = self.grid_index_at(pos);
                AmplitudeEntry {
                    index,
                    point: GridPoint::from_index(index, self.n, self.m).coords().to_vec(),
                    re: self.amps[pos].re,
                    im: self.amps[pos].im,
                    probability: self.amps[pos].norm_sqr(),
                }
            })
            .collect()
    }
}

/// One row of a state dump: where the amplitude sits and how big it is.
#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeEntry {
    pub index: u64,
    pub point: Vec<u64>,
    pub re: f64,
    pub im: f64,
    pub probability: f64,
}
