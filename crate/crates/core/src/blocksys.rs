//! Block-banded linear systems with dense square blocks.
//!
//! Each block row stores a contiguous run of blocks starting at `first`.
//! Elimination runs block column by block column with partial pivoting only
//! inside the diagonal block (block Thomas generalized to a variable profile);
//! fill-in can only extend a row to the right, so the profile stays narrow as
//! long as the original one is.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2};

use crate::error::{domain, Error, Result};
use crate::linalg::Lu;

/// Dense LU is refused above this many unknowns.
pub const DENSE_LIMIT: usize = 5000;

/// Relative pivot floor: a diagonal block pivot below `PIVOT_RTOL · scale`
/// is a breakdown.
pub const PIVOT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct BlockRow {
    pub first: usize,
    pub blocks: Vec<Array2<f64>>,
}

#[derive(Debug, Clone)]
pub struct BlockBandedMatrix {
    block_size: usize,
    rows: Vec<BlockRow>,
}

impl BlockBandedMatrix {
    pub fn new(block_size: usize, rows: Vec<BlockRow>) -> Result<Self> {
        let n = rows.len();
        for (r, row) in rows.iter().enumerate() {
            if row.first + row.blocks.len() > n {
                return domain(format!("block row {r} extends past column {n}"));
            }
            if row.blocks.iter().any(|b| b.dim() != (block_size, block_size)) {
                return domain(format!("block row {r} has a block of the wrong size"));
            }
        }
        Ok(Self { block_size, rows })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn n_blocks(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.block_size * self.rows.len()
    }

    pub fn rows(&self) -> &[BlockRow] {
        &self.rows
    }

    pub fn matvec(&self, x: &Array1<f64>) -> Array1<f64> {
        let b = self.block_size;
        let mut y = Array1::zeros(self.dim());
        for (r, row) in self.rows.iter().enumerate() {
            let mut yr = y.slice_mut(s![r * b..(r + 1) * b]);
            for (o, blk) in row.blocks.iter().enumerate() {
                let c = row.first + o;
                yr += &blk.dot(&x.slice(s![c * b..(c + 1) * b]));
            }
        }
        y
    }

    pub fn to_dense(&self) -> Result<Array2<f64>> {
        let n = self.dim();
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge {
                unknowns: n,
                limit: DENSE_LIMIT,
            });
        }
        let b = self.block_size;
        let mut a = Array2::zeros((n, n));
        for (r, row) in self.rows.iter().enumerate() {
            for (o, blk) in row.blocks.iter().enumerate() {
                let c = row.first + o;
                a.slice_mut(s![r * b..(r + 1) * b, c * b..(c + 1) * b])
                    .assign(blk);
            }
        }
        Ok(a)
    }

    fn scale(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.blocks.iter())
            .flat_map(|b| b.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Solve `A x = rhs` by block elimination, consuming the matrix.
    pub fn solve(mut self, rhs: &Array1<f64>) -> Result<Array1<f64>> {
        let b = self.block_size;
        let n = self.rows.len();
        if rhs.len() != self.dim() {
            return domain(format!(
                "rhs has length {}, system has {} unknowns",
                rhs.len(),
                self.dim()
            ));
        }
        let tol = PIVOT_RTOL * self.scale();
        let mut y: Vec<Array1<f64>> = (0..n)
            .map(|r| rhs.slice(s![r * b..(r + 1) * b]).to_owned())
            .collect();

        for c in 0..n {
            let (done, rest) = self.rows.split_at_mut(c + 1);
            let pivot_row = &mut done[c];
            if pivot_row.first != c || pivot_row.blocks.is_empty() {
                return Err(Error::Singular { block: c, pivot: 0.0 });
            }
            let diag = pivot_row.blocks.remove(0);
            pivot_row.first = c + 1;
            let lu = Lu::factor_owned(diag, tol, c)?;
            for blk in pivot_row.blocks.iter_mut() {
                lu.solve_matrix_in_place(blk);
            }
            let (y_done, y_rest) = y.split_at_mut(c + 1);
            lu.solve_in_place(y_done[c].view_mut());
            let yc = &y_done[c];

            for (ri, row) in rest.iter_mut().enumerate() {
                if row.first != c || row.blocks.is_empty() {
                    continue;
                }
                let l = row.blocks.remove(0);
                row.first = c + 1;
                for (o, upper) in pivot_row.blocks.iter().enumerate() {
                    let idx = o;
                    while row.blocks.len() <= idx {
                        row.blocks.push(Array2::zeros((b, b)));
                    }
                    general_mat_mul(-1.0, &l, upper, 1.0, &mut row.blocks[idx]);
                }
                let yr = &mut y_rest[ri];
                *yr -= &l.dot(yc);
            }
        }

        // back substitution: rows now hold U with an implicit identity diagonal
        let mut x: Vec<Array1<f64>> = vec![Array1::zeros(b); n];
        for c in (0..n).rev() {
            let mut xc = y[c].clone();
            let row = &self.rows[c];
            for (o, blk) in row.blocks.iter().enumerate() {
                xc -= &blk.dot(&x[row.first + o]);
            }
            x[c] = xc;
        }
        let mut out = Array1::zeros(self.dim());
        for (c, xc) in x.into_iter().enumerate() {
            out.slice_mut(s![c * b..(c + 1) * b]).assign(&xc);
        }
        Ok(out)
    }
}

/// Dense partial-pivot LU solve, for cross-checking small systems.
pub fn solve_dense(a: &Array2<f64>, rhs: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            unknowns: n,
            limit: DENSE_LIMIT,
        });
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lu = Lu::factor(a, PIVOT_RTOL * scale, 0)?;
    Ok(lu.solve_vec(rhs))
}
