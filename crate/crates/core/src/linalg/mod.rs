//! Dense storage, views and the triangular-solve kernels.

mod kernel;
mod matrix;
mod random;
mod view;


use core::ops::Range;

pub use kernel::{gemm_update, ts_solve_block};
pub use matrix::{DenseMatrix, LowerTriangular, DEFAULT_DIAGONAL_FLOOR};
pub use random::{random_rhs, random_well_conditioned, seeded_problem};
pub use view::{BlockView, BlockViewMut, Region, TriangularView};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("expected {expected} elements, got {actual}")]
    DataLength { expected: usize, actual: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-zero entry above the diagonal at ({row}, {col})")]
    NotLowerTriangular { row: usize, col: usize },
    #[error("singular matrix: |L[{index}][{index}]| = {value:e} is below the diagonal floor")]
    Singular { index: usize, value: f64 },
    #[error("{op}: dimension mismatch, expected {expected}, got {actual}")]
    DimensionMismatch { op: &'static str, expected: usize, actual: usize },
    #[error("block rows {rows:?} cols {cols:?} exceed a {parent_rows}x{parent_cols} parent")]
    OutOfBounds {
        rows: Range<usize>,
        cols: Range<usize>,
        parent_rows: usize,
        parent_cols: usize,
    },
    #[error("cannot split a system of size {n}")]
    CannotSplit { n: usize },
    #[error("update target rows {target:?} overlap operand rows {source_rows:?}")]
    Overlap { target: Range<usize>, source_rows: Range<usize> },
}

/// Forward substitution over the whole system, the unrefined solve.
pub fn reference_solve(l: &LowerTriangular, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if b.rows() != l.n() {
        return Err(LinalgError::DimensionMismatch {
            op: "reference_solve",
            expected: l.n(),
            actual: b.rows(),
        });
    }
    let mut x = b.clone();
    ts_solve_block(l.tri_view(), x.view_mut())?;
    Ok(x)
}

/// The five blocks of one halving step.
///
/// `l_up` is `⌈n/2⌉` square, `l_low` is `⌊n/2⌋` square and `l_mid` is the
/// `⌊n/2⌋ × ⌈n/2⌉` block between them; `b` is cut at row `⌈n/2⌉`.
#[derive(Debug)]
pub struct Split<'l, 'b> {
    pub l_up: TriangularView<'l>,
    pub l_mid: BlockView<'l>,
    pub l_low: TriangularView<'l>,
    pub b_up: BlockViewMut<'b>,
    pub b_low: BlockViewMut<'b>,
}

pub fn split<'l, 'b>(l: &'l LowerTriangular, b: &'b mut DenseMatrix) -> Result<Split<'l, 'b>, LinalgError> {
    let n = l.n();
    if n < 2 {
        return Err(LinalgError::CannotSplit { n });
    }
    if b.rows() != n {
        return Err(LinalgError::DimensionMismatch {
            op: "split",
            expected: n,
            actual: b.rows(),
        });
    }
    let half = n.div_ceil(2);
    let (b_up, b_low) = b.view_mut().split_rows(half);
    Ok(Split {
        l_up: l.diag_block(0..half)?,
        l_mid: l.block(half..n, 0..half)?,
        l_low: l.diag_block(half..n)?,
        b_up,
        b_low,
    })
}

/// `b[target] -= l[target, source] · b[source]` on whole-row ranges of `b`.
///
/// The operand rows are read from the same matrix that is updated, so the two
/// row ranges must be disjoint.
pub fn gemm_update_rows(
    b: &mut DenseMatrix,
    l: &LowerTriangular,
    target: Range<usize>,
    source: Range<usize>,
) -> Result<(), LinalgError> {
    let cols = b.cols();
    matrix::check_bounds(&target, &(0..cols), b.rows(), cols)?;
    matrix::check_bounds(&source, &(0..cols), b.rows(), cols)?;
    if view::ranges_overlap(&target, &source) {
        return Err(LinalgError::Overlap {
            target,
            source_rows: source,
        });
    }
    let l_block = l.block(target.clone(), source.clone())?;
    if source.end <= target.start {
        let (head, tail) = b.view_mut().split_rows(target.start);
        let x = head.rb().sub(source, 0..cols);
        gemm_update(tail.into_sub(0..target.len(), 0..cols), l_block, x)
    } else {
        let (head, tail) = b.view_mut().split_rows(source.start);
        let x = tail.rb().sub(0..source.len(), 0..cols);
        gemm_update(head.into_sub(target, 0..cols), l_block, x)
    }
}

/// Solves the diagonal block `rows × rows` in place on whole rows of `b`.
pub fn ts_solve_rows(b: &mut DenseMatrix, l: &LowerTriangular, rows: Range<usize>) -> Result<(), LinalgError> {
    let cols = b.cols();
    let tri = l.diag_block(rows.clone())?;
    let target = b.block_mut(rows, 0..cols)?;
    ts_solve_block(tri, target)
}

/// `‖L·X − B‖_F / (‖L‖_F · ‖X‖_F + ‖B‖_F)`.
pub fn relative_residual(l: &LowerTriangular, x: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(x.rows(), l.n());
    assert_eq!((b.rows(), b.cols()), (x.rows(), x.cols()));
    let w = x.cols();
    let mut acc = alloc::vec![0.0; w];
    let mut sum_sq = 0.0;
    for r in 0..l.n() {
        acc.copy_from_slice(b.row(r));
        for k in 0..=r {
            let coef = l.get(r, k);
            for (a, &v) in acc.iter_mut().zip(x.row(k)) {
                *a -= coef * v;
            }
        }
        sum_sq += acc.iter().map(|v| v * v).sum::<f64>();
    }
    let denom = l.frobenius_norm() * x.frobenius_norm() + b.frobenius_norm();
    if denom == 0.0 {
        return libm::sqrt(sum_sq);
    }
    libm::sqrt(sum_sq) / denom
}
