//! Dense LU factorization with partial pivoting.
//!
//! Used for the per-block pivots of the block-banded solver, the blockwise
//! inverse of Q, and the dense cross-validation path.

use ndarray::{Array1, Array2, ArrayViewMut1, ArrayViewMut2, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Lu {
    /// L (unit, strictly below diagonal) and U packed together.
    lu: Array2<f64>,
    perm: Vec<usize>,
    min_pivot: f64,
}

impl Lu {
    /// Factor a square matrix. Fails when a pivot magnitude falls below
    /// `tol`; `block` is reported in the error.
    pub fn factor(a: &Array2<f64>, tol: f64, block: usize) -> Result<Self> {
        Self::factor_owned(a.clone(), tol, block)
    }

    pub fn factor_owned(mut lu: Array2<f64>, tol: f64, block: usize) -> Result<Self> {
        let n = lu.nrows();
        assert_eq!(n, lu.ncols(), "LU needs a square matrix");
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (piv_row, piv_abs) = (k..n)
                .map(|i| (i, lu[[i, k]].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_abs.is_nan() || piv_abs < tol || piv_abs == 0.0 {
                return Err(Error::Singular {
                    block,
                    pivot: piv_abs,
                });
            }
            min_pivot = min_pivot.min(piv_abs);
            if piv_row != k {
                perm.swap(piv_row, k);
                swap_rows(&mut lu.view_mut(), piv_row, k);
            }
            let pivot = lu[[k, k]];
            let (top, mut bottom) = lu.view_mut().split_at(Axis(0), k + 1);
            let pivot_row = top.row(k);
            for mut row in bottom.rows_mut() {
                let m = row[k] / pivot;
                row[k] = m;
                if m != 0.0 {
                    for j in k + 1..n {
                        row[j] -= m * pivot_row[j];
                    }
                }
            }
        }
        Ok(Self {
            lu,
            perm,
            min_pivot,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Smallest pivot magnitude met during elimination.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve_vec(&self, b: &Array1<f64>) -> Array1<f64> {
        let mut x = b.clone();
        self.solve_in_place(x.view_mut());
        x
    }

    pub fn solve_in_place(&self, mut b: ArrayViewMut1<f64>) {
        let n = self.dim();
        let permuted: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for (i, v) in permuted.into_iter().enumerate() {
            b[i] = v;
        }
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.lu[[i, j]] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= self.lu[[i, j]] * b[j];
            }
            b[i] = s / self.lu[[i, i]];
        }
    }

    /// Overwrite `b` (n × m) with A⁻¹ b. Works row-wise so the inner loops
    /// run over contiguous memory.
    pub fn solve_matrix_in_place(&self, b: &mut Array2<f64>) {
        let n = self.dim();
        assert_eq!(b.nrows(), n);
        let src = b.clone();
        for (i, &p) in self.perm.iter().enumerate() {
            b.row_mut(i).assign(&src.row(p));
        }
        drop(src);
        for i in 1..n {
            let (done, mut rest) = b.view_mut().split_at(Axis(0), i);
            let mut row = rest.row_mut(0);
            for j in 0..i {
                let l = self.lu[[i, j]];
                if l != 0.0 {
                    row.scaled_add(-l, &done.row(j));
                }
            }
        }
        for i in (0..n).rev() {
            let (mut head, tail) = b.view_mut().split_at(Axis(0), i + 1);
            let mut row = head.row_mut(i);
            for j in i + 1..n {
                let u = self.lu[[i, j]];
                if u != 0.0 {
                    row.scaled_add(-u, &tail.row(j - i - 1));
                }
            }
            row /= self.lu[[i, i]];
        }
    }

    pub fn inverse(&self) -> Array2<f64> {
        let mut inv = Array2::eye(self.dim());
        self.solve_matrix_in_place(&mut inv);
        inv
    }
}

fn swap_rows(a: &mut ArrayViewMut2<f64>, i: usize, j: usize) {
    let n = a.ncols();
    for c in 0..n {
        a.swap([i, c], [j, c]);
    }
}

/// Infinity norm (max absolute row sum).
pub fn norm_inf(a: &Array2<f64>) -> f64 {
    a.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn solves_small_system_with_pivoting() {
        let a = array![[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]];
        let lu = Lu::factor(&a, 1e-14, 0).unwrap();
        let x = lu.solve_vec(&array![3.0, 2.0, 4.0]);
        let r = a.dot(&x) - array![3.0, 2.0, 4.0];
        assert!(max_abs(r.iter().copied()) < 1e-14);
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = array![[4.0, -1.0, 0.5], [2.0, 3.0, -1.0], [0.1, 0.2, 5.0]];
        let inv = Lu::factor(&a, 1e-14, 0).unwrap().inverse();
        let id = a.dot(&inv);
        for ((i, j), v) in id.indexed_iter() {
            assert_abs_diff_eq!(*v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
        }
    }

    #[test]
    fn matrix_rhs_matches_column_solves() {
        let a = array![[2.0, 1.0], [1.0, -3.0]];
        let lu = Lu::factor(&a, 1e-14, 0).unwrap();
        let mut b = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let orig = b.clone();
        lu.solve_matrix_in_place(&mut b);
        for c in 0..3 {
            let x = lu.solve_vec(&orig.column(c).to_owned());
            assert_abs_diff_eq!(x[0], b[[0, c]], epsilon = 1e-15);
            assert_abs_diff_eq!(x[1], b[[1, c]], epsilon = 1e-15);
        }
    }

    #[test]
    fn singular_matrix_reports_block() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        match Lu::factor(&a, 1e-13, 7) {
            Err(Error::Singular { block, .. }) => assert_eq!(block, 7),
            other => panic!("expected singular error, got {other:?}"),
        }
    }
}
