//! Exact classical elimination, used to cross-check the search solvers.
//!
//! Exact-integer systems are solved over the rationals and the result is
//! required to land on the grid. Modular systems are solved directly in
//! arithmetic mod `M` (a power of two), where every odd pivot is invertible.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::model::{ArithmeticMode, GridPoint, LinearSystem};

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("elimination found no usable pivot in column {col}")]
    NoPivot { col: usize },
    #[error("coordinate {position} solves to {value}, which is not an integer")]
    NonIntegerSolution { position: usize, value: String },
    #[error("coordinate {position} solves to {value}, outside [0, {m})")]
    OutsideGrid {
        position: usize,
        value: String,
        m: u64,
    },
}

/// Solve `A x + b = 0` on the grid by Gaussian elimination in the system's
/// own arithmetic. Errors when no grid point satisfies the system.
pub fn classical_solve(system: &LinearSystem) -> Result<GridPoint, ClassicalError> {
    match system.mode() {
        ArithmeticMode::ExactInteger => solve_exact(system),
        ArithmeticMode::ModularM => solve_modular(system),
    }
}

fn solve_exact(system: &LinearSystem) -> Result<GridPoint, ClassicalError> {
    let n = system.n();
    let mut mat: Vec<Vec<BigRational>> = system
        .coefficients()
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| BigRational::from_integer(BigInt::from(v)))
                .collect()
        })
        .collect();
    let mut rhs: Vec<BigRational> = system
        .constants()
        .iter()
        .map(|&v| BigRational::from_integer(BigInt::from(-v)))
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !mat[r][col].is_zero())
            .ok_or(ClassicalError::NoPivot { col })?;
        mat.swap(col, pivot);
        rhs.swap(col, pivot);
        let p = mat[col][col].clone();
        for v in mat[col].iter_mut() {
            *v /= &p;
        }
        rhs[col] /= &p;
        for r in 0..n {
            if r == col || mat[r][col].is_zero() {
                continue;
            }
            let factor = mat[r][col].clone();
            for j in 0..n {
                let delta = &factor * &mat[col][j];
                mat[r][j] -= delta;
            }
            let delta = &factor * &rhs[col];
            rhs[r] -= delta;
        }
    }
    let m = system.grid_modulus();
    let mut coords = Vec::with_capacity(n);
    for (position, value) in rhs.iter().enumerate() {
        if !value.is_integer() {
            return Err(ClassicalError::NonIntegerSolution {
                position,
                value: value.to_string(),
            });
        }
        let int = value.to_integer();
        if int < BigInt::zero() || int >= BigInt::from(m) {
            return Err(ClassicalError::OutsideGrid {
                position,
                value: int.to_string(),
                m,
            });
        }
        coords.push(u64::try_from(int).expect("bounded by m"));
    }
    Ok(GridPoint::new(coords))
}

/// Multiplicative inverse of an odd value mod a power of two, by Newton
/// iteration on wrapping arithmetic (each step doubles the correct bits).
fn inv_odd_mod_pow2(a: u64, mask: u64) -> u64 {
    debug_assert!(a & 1 == 1);
    let mut x = a; // already correct mod 8
    for _ in 0..5 {
        x = x.wrapping_mul(2u64.wrapping_sub(a.wrapping_mul(x)));
    }
    x & mask
}

fn solve_modular(system: &LinearSystem) -> Result<GridPoint, ClassicalError> {
    let n = system.n();
    let m = system.grid_modulus();
    let mask = m - 1;
    let reduce = |v: i128| -> u64 { v.rem_euclid(m as i128) as u64 };
    let mul = |x: u64, y: u64| -> u64 { x.wrapping_mul(y) & mask };
    let sub = |x: u64, y: u64| -> u64 { x.wrapping_sub(y) & mask };
    let mut mat: Vec<Vec<u64>> = system
        .coefficients()
        .iter()
        .map(|row| row.iter().map(|&v| reduce(v as i128)).collect())
        .collect();
    let mut rhs: Vec<u64> = system
        .constants()
        .iter()
        .map(|&v| reduce(-(v as i128)))
        .collect();
    for col in 0..n {
        // An odd pivot always exists below: the determinant is odd.
        let pivot = (col..n)
            .find(|&r| mat[r][col] & 1 == 1)
            .ok_or(ClassicalError::NoPivot { col })?;
        mat.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = inv_odd_mod_pow2(mat[col][col], mask);
        for v in mat[col].iter_mut() {
            *v = mul(*v, inv);
        }
        rhs[col] = mul(rhs[col], inv);
        for r in 0..n {
            if r == col || mat[r][col] == 0 {
                continue;
            }
            let factor = mat[r][col];
            for j in 0..n {
                mat[r][j] = sub(mat[r][j], mul(factor, mat[col][j]));
            }
            rhs[r] = sub(rhs[r], mul(factor, rhs[col]));
        }
    }
    Ok(GridPoint::new(rhs))
}
