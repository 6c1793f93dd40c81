//! Digit-level index maps and the selection matrices built on them.
//!
//! An index `a` in `[0, s^w)` is read as the digit vector
//! `(a_{w-1}, ..., a_0)`, most significant first. Digit `x` of `a` is
//! `(a / s^x) % s`.
//!
//! ```
//! use mdsa::indexing::phi;
//!
//! // (1,0) with a 1 inserted at digit position 2 is (1,1,0).
//! assert_eq!(phi(0b10, 2, 1, 2), 0b110);
//! // Inserted at position 0 it is (1,0,1).
//! assert_eq!(phi(0b10, 0, 1, 2), 0b101);
//! ```

use thiserror::Error;

use crate::gf::{Elem, Field};
use crate::linalg::{blkdiag_repeat, MatrixGF};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("index {index} is outside [0, {bound})")]
    OutOfRange { index: usize, bound: usize },
    #[error("digit {digit} is not below the base {base}")]
    BadDigit { digit: usize, base: usize },
    #[error("position {x} is not below the width {width}")]
    BadPosition { x: usize, width: usize },
    #[error("base must be at least 2, got {base}")]
    BadBase { base: usize },
}

/// A digit vector, most significant digit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DigitVector {
    base: usize,
    digits: Vec<usize>,
}

impl DigitVector {
    /// Builds from digits listed most significant first.
    pub fn from_msb(base: usize, digits: &[usize]) -> Result<DigitVector, IndexError> {
        if base < 2 {
            return Err(IndexError::BadBase { base });
        }
        if let Some(&d) = digits.iter().find(|&&d| d >= base) {
            return Err(IndexError::BadDigit { digit: d, base });
        }
        Ok(DigitVector {
            base,
            digits: digits.to_vec(),
        })
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn width(&self) -> usize {
        self.digits.len()
    }

    /// Digits, most significant first.
    pub fn msb(&self) -> &[usize] {
        &self.digits
    }

    /// Digit at position `x`, where position 0 is least significant.
    pub fn digit(&self, x: usize) -> usize {
        self.digits[self.digits.len() - 1 - x]
    }
}

/// Splits `a` into `w` base-`s` digits.
pub fn expand(a: usize, s: usize, w: usize) -> Result<DigitVector, IndexError> {
    if s < 2 {
        return Err(IndexError::BadBase { base: s });
    }
    let bound = s.pow(w as u32);
    if a >= bound {
        return Err(IndexError::OutOfRange { index: a, bound });
    }
    let digits = (0..w).rev().map(|x| digit(a, x, s)).collect();
    Ok(DigitVector { base: s, digits })
}

/// Inverse of [`expand`].
pub fn compose(v: &DigitVector) -> usize {
    v.digits.iter().fold(0, |acc, &d| acc * v.base + d)
}

/// Digit `x` of `a` in base `s`.
pub fn digit(a: usize, x: usize, s: usize) -> usize {
    (a / s.pow(x as u32)) % s
}

/// Replaces digit `x` of `a` with `u`.
pub fn pi(a: usize, x: usize, u: usize, s: usize) -> usize {
    let p = s.pow(x as u32);
    a - digit(a, x, s) * p + u * p
}

/// Inserts digit `u` at position `x`: the digits of `a` at positions `x`
/// and above move up by one. The result has one more digit than `a`.
pub fn phi(a: usize, x: usize, u: usize, s: usize) -> usize {
    let p = s.pow(x as u32);
    let (high, low) = (a / p, a % p);
    (high * s + u) * p + low
}

/// Removes digit `x` from `a`, the inverse of [`phi`] at position `x`.
pub fn remove_digit(a: usize, x: usize, s: usize) -> usize {
    let p = s.pow(x as u32);
    let (high, low) = (a / (p * s), a % p);
    high * p + low
}

/// Checked form of [`pi`] on a `w`-digit index.
pub fn pi_checked(a: usize, x: usize, u: usize, s: usize, w: usize) -> Result<usize, IndexError> {
    check(a, x, u, s, w, w)?;
    Ok(pi(a, x, u, s))
}

/// Checked form of [`phi`]: `a` has `w - 1` digits, the result `w`.
pub fn phi_checked(a: usize, x: usize, u: usize, s: usize, w: usize) -> Result<usize, IndexError> {
    if w == 0 {
        return Err(IndexError::BadPosition { x, width: 0 });
    }
    check(a, x, u, s, w - 1, w)?;
    Ok(phi(a, x, u, s))
}

fn check(a: usize, x: usize, u: usize, s: usize, width_a: usize, width_x: usize) -> Result<(), IndexError> {
    if s < 2 {
        return Err(IndexError::BadBase { base: s });
    }
    let bound = s.pow(width_a as u32);
    if a >= bound {
        return Err(IndexError::OutOfRange { index: a, bound });
    }
    if x >= width_x {
        return Err(IndexError::BadPosition { x, width: width_x });
    }
    if u >= s {
        return Err(IndexError::BadDigit { digit: u, base: s });
    }
    Ok(())
}

/// `V_{x,u}`: the `s^{w-1} x s^w` matrix whose rows are the unit vectors
/// `e_a` with `a_x = u`, in ascending order of `a`. Row `b` is
/// `e_{phi(b, x, u)}`.
pub fn v_matrix(field: &Field, x: usize, u: usize, s: usize, w: usize) -> Result<MatrixGF, IndexError> {
    if x >= w {
        return Err(IndexError::BadPosition { x, width: w });
    }
    if u >= s {
        return Err(IndexError::BadDigit { digit: u, base: s });
    }
    let rows = s.pow(w as u32 - 1);
    let mut m = MatrixGF::zeros(field, rows, rows * s);
    for b in 0..rows {
        m.set(b, phi(b, x, u, s), Elem::ONE);
    }
    Ok(m)
}

/// `Delta_u`: the `n' x (delta0 n')` matrix `[0 .. I .. 0]` with the
/// identity in block `u`. It picks part `u` of a vector.
pub fn delta_matrix(field: &Field, u: usize, n_prime: usize, delta0: usize) -> Result<MatrixGF, IndexError> {
    if u >= delta0 {
        return Err(IndexError::BadDigit { digit: u, base: delta0 });
    }
    let mut m = MatrixGF::zeros(field, n_prime, n_prime * delta0);
    for e in 0..n_prime {
        m.set(e, u * n_prime + e, Elem::ONE);
    }
    Ok(m)
}

/// `Phi_{alpha,u} = blkdiag(Delta_u, ..., Delta_u)` with `alpha` copies:
/// part `u` of each length-`delta0 n'` slice, concatenated.
pub fn phi_matrix(field: &Field, alpha: usize, u: usize, n_prime: usize, delta0: usize) -> Result<MatrixGF, IndexError> {
    Ok(blkdiag_repeat(&delta_matrix(field, u, n_prime, delta0)?, alpha))
}

/// Positions selected by `Phi_{alpha,u}`, in row order.
pub fn part_positions(alpha: usize, u: usize, n_prime: usize, delta0: usize) -> Vec<usize> {
    let n = n_prime * delta0;
    (0..alpha)
        .flat_map(|c| (0..n_prime).map(move |e| c * n + u * n_prime + e))
        .collect()
}

/// How a fragment made of `alpha` slices of length `delta0 n'` is cut into
/// `delta0` parts of `alpha n'` symbols each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PartSplit {
    pub alpha: usize,
    pub n_prime: usize,
    pub delta0: usize,
    /// `None`: contiguous blocks of each slice, as `Phi_{alpha,u}` does.
    /// `Some(x)`: the entries of each slice whose digit `x` equals the part
    /// index, in ascending order. Requires a slice length that is a power
    /// of `delta0` with more than `x` digits.
    pub axis: Option<usize>,
}

impl PartSplit {
    pub fn blocks(alpha: usize, n_prime: usize, delta0: usize) -> PartSplit {
        PartSplit { alpha, n_prime, delta0, axis: None }
    }

    pub fn digit(alpha: usize, n_prime: usize, delta0: usize, axis: usize) -> PartSplit {
        PartSplit { alpha, n_prime, delta0, axis: Some(axis) }
    }

    pub fn part_len(&self) -> usize {
        self.alpha * self.n_prime
    }

    /// Positions of part `u`, in row order.
    pub fn positions(&self, u: usize) -> Vec<usize> {
        let Some(x) = self.axis else {
            return part_positions(self.alpha, u, self.n_prime, self.delta0);
        };
        let n = self.n_prime * self.delta0;
        let low = self.delta0.pow(x as u32);
        (0..self.alpha)
            .flat_map(|c| {
                (0..self.n_prime).map(move |e| c * n + (e / low) * low * self.delta0 + u * low + e % low)
            })
            .collect()
    }

    /// The selection matrix whose rows pick [`PartSplit::positions`].
    pub fn matrix(&self, field: &Field, u: usize) -> Result<MatrixGF, IndexError> {
        if u >= self.delta0 {
            return Err(IndexError::BadDigit { digit: u, base: self.delta0 });
        }
        let mut m = MatrixGF::zeros(field, self.part_len(), self.alpha * self.n_prime * self.delta0);
        for (row, pos) in self.positions(u).into_iter().enumerate() {
            m.set(row, pos, Elem::ONE);
        }
        Ok(m)
    }
}
