//! Exact-integer representation of the linear system `Ax + b = 0` and the
//! discrete search grid it is solved over.
//!
//! Everything here is pure integer arithmetic: residual evaluation, the
//! brute-force enumeration oracle used by the tests, the complete-intersection
//! row check, and planted-instance generation.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard ceiling on enumerable/simulable grid size: M^n must stay below this.
pub const DESK_SCALE_GUARD: u64 = 1 << 26;

/// Cap on rejection sampling when generating instances.
const GENERATION_ATTEMPT_CAP: u32 = 10_000;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {value} at position {position} out of range [0, {m})")]
    CoordinateOutOfRange { position: usize, value: u64, m: u64 },
    #[error("grid modulus must be a power of two >= 2, got {0}")]
    InvalidModulus(u64),
    #[error("system must have at least one row")]
    EmptySystem,
    #[error("matrix is singular (determinant = 0)")]
    SingularMatrix,
    #[error("determinant not invertible modulo {m} (must be odd)")]
    NotInvertibleModM { m: u64 },
    #[error("row index {row} out of range 1..={n}")]
    RowOutOfRange { row: usize, n: usize },
    #[error("M^n = {m}^{n} too large to enumerate (guard: {guard})")]
    TooLargeToEnumerate { m: u64, n: usize, guard: u64 },
    #[error("residual value exceeds 64-bit integer range")]
    Overflow,
    #[error("instance generation failed after {attempts} rejection draws")]
    GenerationFailed { attempts: u32 },
}

/// Register arithmetic used when evaluating residuals.
///
/// `ModularM` wraps every value into `[0, M)` and is the register-faithful
/// default; `ExactInteger` keeps full-precision signed values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithmeticMode {
    #[serde(rename = "modular")]
    ModularM,
    #[serde(rename = "exact")]
    ExactInteger,
}

impl std::fmt::Display for ArithmeticMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ArithmeticMode::ModularM => write!(f, "modular"),
            ArithmeticMode::ExactInteger => write!(f, "exact"),
        }
    }
}

/// A point of the search grid: `n` coordinates, each in `[0, M)`.
///
/// Grid indexing is little-endian over coordinates (coordinate 1 fastest):
/// `index = x_1 + x_2 * M + x_3 * M^2 + ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct GridPoint {
    coords: Vec<u64>,
}

impl GridPoint {
    pub fn new(coords: Vec<u64>) -> Self {
        GridPoint { coords }
    }

    pub fn zeros(n: usize) -> Self {
        GridPoint {
            coords: vec![0; n],
        }
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Grid index of this point for modulus `m`.
    pub fn index(&self, m: u64) -> u64 {
        let mut idx = 0u64;
        for &c in self.coords.iter().rev() {
            idx = idx * m + c;
        }
        idx
    }

    /// Decode a grid index into a fresh point.
    pub fn from_index(index: u64, n: usize, m: u64) -> Self {
        let mut p = GridPoint::zeros(n);
        p.decode_from(index, m);
        p
    }

    /// Decode a grid index in place, reusing the coordinate buffer.
    pub fn decode_from(&mut self, mut index: u64, m: u64) {
        for c in self.coords.iter_mut() {
            *c = index % m;
            index /= m;
        }
    }
}

impl std::fmt::Display for GridPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Row residuals `f_i = sum_j a_ij x_j + b_i` of a candidate point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Residual {
    values: Vec<i64>,
}

impl Residual {
    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// True iff every row is satisfied in the system's arithmetic.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }
}

/// The problem instance: integer matrix `A`, integer vector `b`, grid
/// modulus `M`, and the arithmetic mode.
///
/// The system is always square with nonzero determinant (exact mode) or
/// determinant invertible modulo `M` (modular mode), so the solution on the
/// grid is unique.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    n: usize,
    m: u64,
    a: Vec<Vec<i64>>,
    b: Vec<i64>,
    mode: ArithmeticMode,
}

impl LinearSystem {
    pub fn new(
        a: Vec<Vec<i64>>,
        b: Vec<i64>,
        m: u64,
        mode: ArithmeticMode,
    ) -> Result<Self, ModelError> {
        let n = a.len();
        if n == 0 {
            return Err(ModelError::EmptySystem);
        }
        for row in &a {
            if row.len() != n {
                return Err(ModelError::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
        }
        if b.len() != n {
            return Err(ModelError::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        if m < 2 || !m.is_power_of_two() {
            return Err(ModelError::InvalidModulus(m));
        }
        match mode {
            ArithmeticMode::ModularM => {
                // Invertible mod a power of two iff the determinant is odd.
                if !det_is_odd(&a) {
                    return Err(ModelError::NotInvertibleModM { m });
                }
            }
            ArithmeticMode::ExactInteger => {
                if determinant(&a).is_zero() {
                    return Err(ModelError::SingularMatrix);
                }
            }
        }
        Ok(LinearSystem { n, m, a, b, mode })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid points per dimension (`M`).
    pub fn grid_modulus(&self) -> u64 {
        self.m
    }

    pub fn mode(&self) -> ArithmeticMode {
        self.mode
    }

    pub fn coefficients(&self) -> &[Vec<i64>] {
        &self.a
    }

    pub fn constants(&self) -> &[i64] {
        &self.b
    }

    /// `M^n` if it stays within the desk-scale guard.
    pub fn grid_size(&self) -> Result<u64, ModelError> {
        checked_grid_size(self.n, self.m)
    }

    fn check_point(&self, x: &GridPoint) -> Result<(), ModelError> {
        if x.len() != self.n {
            return Err(ModelError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        for (position, &value) in x.coords().iter().enumerate() {
            if value >= self.m {
                return Err(ModelError::CoordinateOutOfRange {
                    position,
                    value,
                    m: self.m,
                });
            }
        }
        Ok(())
    }

    /// Residual of a single row (1-based), without building the full vector.
    pub fn residual_row(&self, x: &GridPoint, row: usize) -> Result<i64, ModelError> {
        if row == 0 || row > self.n {
            return Err(ModelError::RowOutOfRange { row, n: self.n });
        }
        self.check_point(x)?;
        self.residual_row_unchecked(x, row)
    }

    fn residual_row_unchecked(&self, x: &GridPoint, row: usize) -> Result<i64, ModelError> {
        let r = row - 1;
        let mut acc = self.b[r] as i128;
        for (j, &xj) in x.coords().iter().enumerate() {
            acc += self.a[r][j] as i128 * xj as i128;
        }
        match self.mode {
            ArithmeticMode::ModularM => Ok(acc.rem_euclid(self.m as i128) as i64),
            ArithmeticMode::ExactInteger => i64::try_from(acc).map_err(|_| ModelError::Overflow),
        }
    }

    /// All row residuals `f_1..f_n` at `x`.
    pub fn residual(&self, x: &GridPoint) -> Result<Residual, ModelError> {
        self.check_point(x)?;
        let mut values = Vec::with_capacity(self.n);
        for row in 1..=self.n {
            values.push(self.residual_row_unchecked(x, row)?);
        }
        Ok(Residual { values })
    }

    /// Grid points whose first `k` residuals are all zero, sorted by grid
    /// index. `k = 0` returns every point; prefer [`brute_force_count`] there.
    ///
    /// [`brute_force_count`]: LinearSystem::brute_force_count
    pub fn brute_force_solutions(&self, k: usize) -> Result<Vec<GridPoint>, ModelError> {
        if k > self.n {
            return Err(ModelError::RowOutOfRange { row: k, n: self.n });
        }
        let size = self.grid_size()?;
        let mut out = Vec::new();
        let mut point = GridPoint::zeros(self.n);
        for idx in 0..size {
            point.decode_from(idx, self.m);
            if self.prefix_satisfied(&point, k)? {
                out.push(point.clone());
            }
        }
        Ok(out)
    }

    /// Number of grid points whose first `k` residuals are all zero.
    /// `k = 0` short-circuits to `M^n` without enumerating.
    pub fn brute_force_count(&self, k: usize) -> Result<u64, ModelError> {
        if k > self.n {
            return Err(ModelError::RowOutOfRange { row: k, n: self.n });
        }
        let size = self.grid_size()?;
        if k == 0 {
            return Ok(size);
        }
        let mut count = 0u64;
        let mut point = GridPoint::zeros(self.n);
        for idx in 0..size {
            point.decode_from(idx, self.m);
            if self.prefix_satisfied(&point, k)? {
                count += 1;
            }
        }
        Ok(count)
    }

    fn prefix_satisfied(&self, point: &GridPoint, k: usize) -> Result<bool, ModelError> {
        for row in 1..=k {
            if self.residual_row_unchecked(point, row)? != 0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Per-row complete-intersection test:
    /// `2 * max_j |a_ij| <= sum_j |a_ij| + |b_i| / M`, compared exactly by
    /// scaling both sides by `M` (no floating point).
    pub fn check_complete_intersection(&self) -> Vec<bool> {
        self.a
            .iter()
            .zip(self.b.iter())
            .map(|(row, &bi)| {
                let max_abs = row.iter().map(|&v| (v as i128).abs()).max().unwrap_or(0);
                let sum_abs: i128 = row.iter().map(|&v| (v as i128).abs()).sum();
                let m = self.m as i128;
                2 * m * max_abs <= m * sum_abs + (bi as i128).abs()
            })
            .collect()
    }
}

/// `M^n` guarded against the desk-scale ceiling.
pub fn checked_grid_size(n: usize, m: u64) -> Result<u64, ModelError> {
    let mut size: u64 = 1;
    for _ in 0..n {
        size = size
            .checked_mul(m)
            .filter(|&s| s <= DESK_SCALE_GUARD)
            .ok_or(ModelError::TooLargeToEnumerate {
                m,
                n,
                guard: DESK_SCALE_GUARD,
            })?;
    }
    Ok(size)
}

/// Draw a planted instance: solution `x*` uniform on the grid, coefficients
/// from `[-M/2, M/2)`, and `b = -A x*` so `x*` solves the system exactly.
///
/// Modular instances are redrawn until every leading principal minor of `A`
/// is invertible mod `M`, which pins the stage solution counts to `M^(n-i)`;
/// exact instances only need a nonzero determinant. Deterministic per seed.
pub fn generate_instance(
    n: usize,
    m: u64,
    mode: ArithmeticMode,
    seed: u64,
) -> Result<(LinearSystem, GridPoint), ModelError> {
    if n == 0 {
        return Err(ModelError::EmptySystem);
    }
    if m < 2 || !m.is_power_of_two() {
        return Err(ModelError::InvalidModulus(m));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = (m / 2) as i64;
    let lo = -half;
    let hi = half - 1;
    for _attempt in 0..GENERATION_ATTEMPT_CAP {
        let a: Vec<Vec<i64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(lo..=hi)).collect())
            .collect();
        let usable = match mode {
            ArithmeticMode::ModularM => leading_minors_odd(&a),
            ArithmeticMode::ExactInteger => !determinant(&a).is_zero(),
        };
        if !usable {
            continue;
        }
        let solution = GridPoint::new((0..n).map(|_| rng.random_range(0..m)).collect());
        let mut b = Vec::with_capacity(n);
        for row in &a {
            let mut acc: i128 = 0;
            for (j, &xj) in solution.coords().iter().enumerate() {
                acc += row[j] as i128 * xj as i128;
            }
            let bi = match mode {
                ArithmeticMode::ModularM => {
                    // Reduce -A x* into the same symmetric range as the coefficients.
                    let reduced = (-acc).rem_euclid(m as i128);
                    if reduced >= (m / 2) as i128 {
                        (reduced - m as i128) as i64
                    } else {
                        reduced as i64
                    }
                }
                ArithmeticMode::ExactInteger => {
                    i64::try_from(-acc).map_err(|_| ModelError::Overflow)?
                }
            };
            b.push(bi);
        }
        let system = LinearSystem::new(a, b, m, mode)?;
        return Ok((system, solution));
    }
    Err(ModelError::GenerationFailed {
        attempts: GENERATION_ATTEMPT_CAP,
    })
}

/// On-disk instance format. Round-trips losslessly through JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    #[serde(rename = "M")]
    pub m: u64,
    pub mode: ArithmeticMode,
    #[serde(rename = "A")]
    pub a: Vec<Vec<i64>>,
    pub b: Vec<i64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Vec<u64>>,
}

impl InstanceFile {
    pub fn from_system(system: &LinearSystem, seed: u64, solution: Option<&GridPoint>) -> Self {
        InstanceFile {
            n: system.n(),
            m: system.grid_modulus(),
            mode: system.mode(),
            a: system.coefficients().to_vec(),
            b: system.constants().to_vec(),
            seed,
            solution: solution.map(|p| p.coords().to_vec()),
        }
    }

    /// Validate and build the in-memory system (plus the recorded solution).
    pub fn into_system(self) -> Result<(LinearSystem, Option<GridPoint>), ModelError> {
        if self.a.len() != self.n {
            return Err(ModelError::DimensionMismatch {
                expected: self.n,
                got: self.a.len(),
            });
        }
        let system = LinearSystem::new(self.a, self.b, self.m, self.mode)?;
        let solution = match self.solution {
            Some(coords) => {
                let point = GridPoint::new(coords);
                system.check_point(&point)?;
                Some(point)
            }
            None => None,
        };
        Ok((system, solution))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Exact integer determinant (fraction-free Bareiss elimination).
fn determinant(a: &[Vec<i64>]) -> BigInt {
    let n = a.len();
    let mut m: Vec<Vec<BigInt>> = a
        .iter()
        .map(|row| row.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n.saturating_sub(1) {
        if m[k][k].is_zero() {
            let swap = (k + 1..n).find(|&i| !m[i][k].is_zero());
            match swap {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = num / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * m[n - 1][n - 1].clone()
}

/// Determinant parity via elimination over GF(2). Odd iff full rank mod 2.
fn det_is_odd(a: &[Vec<i64>]) -> bool {
    let n = a.len();
    let mut p: Vec<Vec<u8>> = a
        .iter()
        .map(|row| row.iter().map(|&v| (v & 1) as u8).collect())
        .collect();
    for k in 0..n {
        if p[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| p[i][k] == 1) else {
                return false;
            };
            p.swap(k, swap);
        }
        for i in k + 1..n {
            if p[i][k] == 1 {
                for j in k..n {
                    p[i][j] ^= p[k][j];
                }
            }
        }
    }
    true
}

/// All leading principal minors odd: GF(2) elimination must never need a
/// row swap (each pivot is the parity of the corresponding minor ratio).
fn leading_minors_odd(a: &[Vec<i64>]) -> bool {
    let n = a.len();
    let mut p: Vec<Vec<u8>> = a
        .iter()
        .map(|row| row.iter().map(|&v| (v & 1) as u8).collect())
        .collect();
    for k in 0..n {
        if p[k][k] == 0 {
            return false;
        }
        for i in k + 1..n {
            if p[i][k] == 1 {
                for j in k..n {
                    p[i][j] ^= p[k][j];
                }
            }
        }
    }
    true
}
