//! The two kernels every schedule is composed of.
//!
//! Both accumulate straight into the right-hand side, one source row at a
//! time in ascending order: element `(r, c)` receives `-= l[r][k] * x[k][c]`
//! for `k = 0, 1, ...`. Splitting the `k` range into consecutive pieces and
//! applying them in ascending order therefore reproduces the unsplit result
//! bit for bit, which is what makes every decomposition agree exactly with
//! the plain forward substitution.

use super::view::{BlockView, BlockViewMut, TriangularView};
use super::LinalgError;

/// Solves `l · x = b` in place, overwriting `b` with `x`.
pub fn ts_solve_block(l: TriangularView<'_>, mut b: BlockViewMut<'_>) -> Result<(), LinalgError> {
    let n = l.n();
    if b.rows() != n {
        return Err(LinalgError::DimensionMismatch {
            op: "ts_solve_block",
            expected: n,
            actual: b.rows(),
        });
    }
    let lv = l.as_block();
    for i in 0..n {
        let pivot = lv.get(i, i);
        if pivot == 0.0 || pivot.abs().partial_cmp(&l.diagonal_floor()).is_none_or(|o| o.is_lt()) {
            return Err(LinalgError::Singular {
                index: lv.row_offset() + i,
                value: pivot,
            });
        }
    }
    let l_rows = lv;
    for i in 0..n {
        let l_row = l_rows.row(i);
        let (solved, current) = b.split_at_row(i);
        for (k, &coef) in l_row[..i].iter().enumerate() {
            let src = solved.row(k);
            for (dst, &x) in current.iter_mut().zip(src) {
                *dst -= coef * x;
            }
        }
        let pivot = l_row[i];
        for dst in current.iter_mut() {
            *dst /= pivot;
        }
    }
    Ok(())
}

/// `b -= l · x` with `l: p×q`, `x: q×w`, `b: p×w`.
pub fn gemm_update(mut b: BlockViewMut<'_>, l: BlockView<'_>, x: BlockView<'_>) -> Result<(), LinalgError> {
    if l.cols() != x.rows() {
        return Err(LinalgError::DimensionMismatch {
            op: "gemm_update (inner)",
            expected: l.cols(),
            actual: x.rows(),
        });
    }
    if b.rows() != l.rows() {
        return Err(LinalgError::DimensionMismatch {
            op: "gemm_update (rows)",
            expected: l.rows(),
            actual: b.rows(),
        });
    }
    if b.cols() != x.cols() {
        return Err(LinalgError::DimensionMismatch {
            op: "gemm_update (cols)",
            expected: x.cols(),
            actual: b.cols(),
        });
    }
    for r in 0..b.rows() {
        let l_row = l.row(r);
        let dst_row = b.row_mut(r);
        for (k, &coef) in l_row.iter().enumerate() {
            let src = x.row(k);
            for (dst, &v) in dst_row.iter_mut().zip(src) {
                *dst -= coef * v;
            }
        }
    }
    Ok(())
}
