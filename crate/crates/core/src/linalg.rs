//! Dense matrices over a finite field.
//!
//! Everything is row-major and exact. Products skip zero entries of the left
//! operand, which keeps the many selection-matrix products in the repair
//! code cheap without a separate sparse type.

use std::fmt;

use thiserror::Error;

use crate::gf::{Elem, Field};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("operands live in different fields")]
    FieldMismatch,
    #[error("matrix is singular (no pivot for row {pivot_row})")]
    Singular { pivot_row: usize },
    #[error("{what}")]
    Shape { what: String },
}

/// A `rows x cols` matrix over `field`.
#[derive(Clone, PartialEq, Eq)]
pub struct MatrixGF {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<Elem>,
}

impl fmt::Debug for MatrixGF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}x{} over {:?}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows.min(16) {
            writeln!(f, "  {:?}", &self.row(r)[..self.cols.min(16)])?;
        }
        Ok(())
    }
}

impl MatrixGF {
    pub fn zeros(field: &Field, rows: usize, cols: usize) -> MatrixGF {
        MatrixGF {
            field: field.clone(),
            rows,
            cols,
            data: vec![Elem::ZERO; rows * cols],
        }
    }

    pub fn identity(field: &Field, n: usize) -> MatrixGF {
        let mut m = MatrixGF::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, Elem::ONE);
        }
        m
    }

    /// Diagonal matrix with `c` on the diagonal.
    pub fn scalar(field: &Field, n: usize, c: Elem) -> MatrixGF {
        let mut m = MatrixGF::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, c);
        }
        m
    }

    pub fn from_vec(field: &Field, rows: usize, cols: usize, data: Vec<Elem>) -> Result<MatrixGF, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Shape {
                what: format!("{} entries cannot fill a {rows}x{cols} matrix", data.len()),
            });
        }
        Ok(MatrixGF {
            field: field.clone(),
            rows,
            cols,
            data,
        })
    }

    /// Builds a matrix from small integers, mostly for tests.
    pub fn from_rows(field: &Field, rows: &[Vec<u16>]) -> Result<MatrixGF, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Shape {
                what: "ragged rows".into(),
            });
        }
        let data = rows.iter().flatten().map(|&v| Elem(v)).collect();
        MatrixGF::from_vec(field, rows.len(), cols, data)
    }

    /// A column vector.
    pub fn column(field: &Field, v: &[Elem]) -> MatrixGF {
        MatrixGF {
            field: field.clone(),
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> Elem {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Elem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Elem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Elem] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[Elem] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn nonzeros(&self) -> usize {
        self.data.iter().filter(|v| !v.is_zero()).count()
    }

    /// Column indices of the nonzero entries of row `r`.
    pub fn row_support(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(r)
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(c, _)| c)
    }

    fn same_field(&self, other: &MatrixGF) -> Result<(), LinalgError> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(LinalgError::FieldMismatch)
        }
    }

    pub fn transpose(&self) -> MatrixGF {
        let mut t = MatrixGF::zeros(&self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn matmul(&self, other: &MatrixGF) -> Result<MatrixGF, LinalgError> {
        self.same_field(other)?;
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = MatrixGF::zeros(&self.field, self.rows, other.cols);
        for r in 0..self.rows {
            let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if !a.is_zero() {
                    self.field.axpy(dst, a, other.row(k));
                }
            }
        }
        Ok(out)
    }

    /// `self * v` for a column vector given as a slice.
    pub fn mul_vec(&self, v: &[Elem]) -> Result<Vec<Elem>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "mul_vec",
                left: self.shape(),
                right: (v.len(), 1),
            });
        }
        let f = &self.field;
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .filter(|(a, _)| !a.is_zero())
                    .fold(Elem::ZERO, |acc, (&a, &x)| f.add(acc, f.mul(a, x)))
            })
            .collect())
    }

    /// `acc += self * v`.
    pub fn mul_vec_add(&self, v: &[Elem], acc: &mut [Elem]) -> Result<(), LinalgError> {
        let prod = self.mul_vec(v)?;
        if acc.len() != prod.len() {
            return Err(LinalgError::DimensionMismatch {
                op: "mul_vec_add",
                left: self.shape(),
                right: (acc.len(), 1),
            });
        }
        for (a, p) in acc.iter_mut().zip(prod) {
            *a = self.field.add(*a, p);
        }
        Ok(())
    }

    pub fn add(&self, other: &MatrixGF) -> Result<MatrixGF, LinalgError> {
        self.same_field(other)?;
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "add",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = self.clone();
        for (a, &b) in out.data.iter_mut().zip(&other.data) {
            *a = self.field.add(*a, b);
        }
        Ok(out)
    }

    pub fn scaled(&self, c: Elem) -> MatrixGF {
        let mut out = self.clone();
        self.field.scale(&mut out.data, c);
        out
    }

    pub fn neg(&self) -> MatrixGF {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v = self.field.neg(*v);
        }
        out
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> MatrixGF {
        let mut out = MatrixGF::zeros(&self.field, rows, cols);
        for r in 0..rows {
            out.row_mut(r)
                .copy_from_slice(&self.row(r0 + r)[c0..c0 + cols]);
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> MatrixGF {
        let mut out = MatrixGF::zeros(&self.field, idx.len(), self.cols);
        for (r, &src) in idx.iter().enumerate() {
            out.row_mut(r).copy_from_slice(self.row(src));
        }
        out
    }

    pub fn select_columns(&self, idx: &[usize]) -> MatrixGF {
        let mut out = MatrixGF::zeros(&self.field, self.rows, idx.len());
        for r in 0..self.rows {
            for (c, &src) in idx.iter().enumerate() {
                out.data[r * idx.len() + c] = self.get(r, src);
            }
        }
        out
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &MatrixGF) -> Result<(), LinalgError> {
        self.same_field(block)?;
        if r0 + block.rows > self.rows || c0 + block.cols > self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "set_block",
                left: self.shape(),
                right: (r0 + block.rows, c0 + block.cols),
            });
        }
        for r in 0..block.rows {
            self.row_mut(r0 + r)[c0..c0 + block.cols].copy_from_slice(block.row(r));
        }
        Ok(())
    }

    /// Adds `block` into `self` at `(r0, c0)`.
    pub fn add_block(&mut self, r0: usize, c0: usize, block: &MatrixGF) -> Result<(), LinalgError> {
        self.same_field(block)?;
        if r0 + block.rows > self.rows || c0 + block.cols > self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "add_block",
                left: self.shape(),
                right: (r0 + block.rows, c0 + block.cols),
            });
        }
        let f = self.field.clone();
        for r in 0..block.rows {
            let dst = &mut self.row_mut(r0 + r)[c0..c0 + block.cols];
            f.axpy(dst, Elem::ONE, block.row(r));
        }
        Ok(())
    }

    /// Row echelon reduction in place. Returns the pivot column of each
    /// pivot row, in order.
    fn eliminate(&mut self, full: bool) -> Vec<usize> {
        let f = self.field.clone();
        let cols = self.cols;
        let mut pivots = Vec::new();
        let mut top = 0;
        for c in 0..cols {
            if top == self.rows {
                break;
            }
            let Some(p) = (top..self.rows).find(|&r| !self.get(r, c).is_zero()) else {
                continue;
            };
            if p != top {
                for k in 0..cols {
                    self.data.swap(p * cols + k, top * cols + k);
                }
            }
            let inv = f.inv(self.get(top, c)).expect("pivot is nonzero");
            f.scale(&mut self.row_mut(top)[c..], inv);
            let pivot_row: Vec<Elem> = self.row(top)[c..].to_vec();
            let start = if full { 0 } else { top + 1 };
            for r in start..self.rows {
                if r == top {
                    continue;
                }
                let factor = self.get(r, c);
                if !factor.is_zero() {
                    let neg = f.neg(factor);
                    f.axpy(&mut self.row_mut(r)[c..], neg, &pivot_row);
                }
            }
            pivots.push(c);
            top += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().eliminate(false).len()
    }

    /// Columns at which a left-to-right echelon form has its pivots.
    pub fn pivot_columns(&self) -> Vec<usize> {
        self.clone().eliminate(false)
    }

    pub fn inverse(&self) -> Result<MatrixGF, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "inverse",
                left: self.shape(),
                right: self.shape(),
            });
        }
        let n = self.rows;
        let aug = hstack(&[self, &MatrixGF::identity(&self.field, n)])?;
        let mut aug = aug;
        let pivots = aug.eliminate(true);
        if let Some(bad) = (0..n).find(|&k| pivots.get(k) != Some(&k)) {
            return Err(LinalgError::Singular { pivot_row: bad });
        }
        Ok(aug.submatrix(0, n, n, n))
    }

    /// Solves `self * x = b` for square nonsingular `self`; `b` may have
    /// several columns.
    pub fn solve(&self, b: &MatrixGF) -> Result<MatrixGF, LinalgError> {
        self.same_field(b)?;
        if self.rows != self.cols || b.rows != self.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "solve",
                left: self.shape(),
                right: b.shape(),
            });
        }
        let n = self.rows;
        let mut aug = hstack(&[self, b])?;
        let pivots = aug.eliminate(true);
        if let Some(bad) = (0..n).find(|&k| pivots.get(k) != Some(&k)) {
            return Err(LinalgError::Singular { pivot_row: bad });
        }
        Ok(aug.submatrix(0, n, n, b.cols))
    }
}

/// Block-diagonal matrix with the given blocks.
pub fn blkdiag(blocks: &[&MatrixGF]) -> Result<MatrixGF, LinalgError> {
    let first = blocks.first().ok_or_else(|| LinalgError::Shape {
        what: "blkdiag of no blocks".into(),
    })?;
    let rows = blocks.iter().map(|b| b.rows).sum();
    let cols = blocks.iter().map(|b| b.cols).sum();
    let mut out = MatrixGF::zeros(&first.field, rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.set_block(r0, c0, b)?;
        r0 += b.rows;
        c0 += b.cols;
    }
    Ok(out)
}

/// `blkdiag(m, m, ..., m)` with `copies` copies.
pub fn blkdiag_repeat(m: &MatrixGF, copies: usize) -> MatrixGF {
    let mut out = MatrixGF::zeros(&m.field, m.rows * copies, m.cols * copies);
    for c in 0..copies {
        out.set_block(c * m.rows, c * m.cols, m)
            .expect("blocks fit by construction");
    }
    out
}

pub fn hstack(blocks: &[&MatrixGF]) -> Result<MatrixGF, LinalgError> {
    let first = blocks.first().ok_or_else(|| LinalgError::Shape {
        what: "hstack of no blocks".into(),
    })?;
    let rows = first.rows;
    if let Some(b) = blocks.iter().find(|b| b.rows != rows) {
        return Err(LinalgError::DimensionMismatch {
            op: "hstack",
            left: first.shape(),
            right: b.shape(),
        });
    }
    let cols = blocks.iter().map(|b| b.cols).sum();
    let mut out = MatrixGF::zeros(&first.field, rows, cols);
    let mut c0 = 0;
    for b in blocks {
        out.set_block(0, c0, b)?;
        c0 += b.cols;
    }
    Ok(out)
}

pub fn vstack(blocks: &[&MatrixGF]) -> Result<MatrixGF, LinalgError> {
    let first = blocks.first().ok_or_else(|| LinalgError::Shape {
        what: "vstack of no blocks".into(),
    })?;
    let cols = first.cols;
    if let Some(b) = blocks.iter().find(|b| b.cols != cols) {
        return Err(LinalgError::DimensionMismatch {
            op: "vstack",
            left: first.shape(),
            right: b.shape(),
        });
    }
    let rows = blocks.iter().map(|b| b.rows).sum();
    let mut out = MatrixGF::zeros(&first.field, rows, cols);
    let mut r0 = 0;
    for b in blocks {
        out.set_block(r0, 0, b)?;
        r0 += b.rows;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f7() -> Field {
        Field::new(7).unwrap()
    }

    #[test]
    fn inverse_of_small_matrix() {
        let f = f7();
        let a = MatrixGF::from_rows(&f, &[vec![1, 2], vec![3, 4]]).unwrap();
        let inv = a.inverse().unwrap();
        assert_eq!(a.matmul(&inv).unwrap(), MatrixGF::identity(&f, 2));
    }

    #[test]
    fn singular_reports_pivot_row() {
        let f = f7();
        let a = MatrixGF::from_rows(&f, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(a.inverse().unwrap_err(), LinalgError::Singular { pivot_row: 1 });
        assert_eq!(a.rank(), 1);
    }

    #[test]
    fn shape_errors() {
        let f = f7();
        let a = MatrixGF::zeros(&f, 2, 3);
        assert!(matches!(a.matmul(&a), Err(LinalgError::DimensionMismatch { .. })));
        let g = Field::new(8).unwrap();
        assert_eq!(
            a.add(&MatrixGF::zeros(&g, 2, 3)).unwrap_err(),
            LinalgError::FieldMismatch
        );
    }

    #[test]
    fn block_builders() {
        let f = f7();
        let a = MatrixGF::identity(&f, 2);
        let b = MatrixGF::scalar(&f, 1, Elem(3));
        let d = blkdiag(&[&a, &b]).unwrap();
        assert_eq!(d.shape(), (3, 3));
        assert_eq!(d.get(2, 2), Elem(3));
        assert_eq!(hstack(&[&a, &a]).unwrap().shape(), (2, 4));
        assert_eq!(vstack(&[&a, &a]).unwrap().shape(), (4, 2));
        assert_eq!(blkdiag_repeat(&b, 4).rank(), 4);
    }
}
