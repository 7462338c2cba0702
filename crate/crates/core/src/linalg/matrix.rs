use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::view::{BlockView, BlockViewMut, TriangularView};
use super::LinalgError;

/// Magnitude below which a diagonal entry is treated as singular.
pub const DEFAULT_DIAGONAL_FLOOR: f64 = 1e-12;

/// Dense row-major matrix of finite `f64` values.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DataLength {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: index / cols.max(1),
                col: index % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.data[k * n + k] = 1.0;
        }
        m
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(LinalgError::DataLength {
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, LinalgError> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn view(&self) -> BlockView<'_> {
        BlockView::new(&self.data, self.cols, 0, 0, self.rows, self.cols)
    }

    pub fn view_mut(&mut self) -> BlockViewMut<'_> {
        BlockViewMut::new(&mut self.data, self.cols, 0, 0, self.rows, self.cols)
    }

    /// Read-only view over `rows × cols` of this matrix.
    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Result<BlockView<'_>, LinalgError> {
        check_bounds(&rows, &cols, self.rows, self.cols)?;
        Ok(self.view().sub(rows, cols))
    }

    pub fn block_mut(&mut self, rows: Range<usize>, cols: Range<usize>) -> Result<BlockViewMut<'_>, LinalgError> {
        check_bounds(&rows, &cols, self.rows, self.cols)?;
        Ok(self.view_mut().into_sub(rows, cols))
    }

    /// Row range `rows` as a standalone matrix.
    pub fn row_block(&self, rows: Range<usize>) -> Result<DenseMatrix, LinalgError> {
        check_bounds(&rows, &(0..self.cols), self.rows, self.cols)?;
        Ok(Self {
            rows: rows.len(),
            cols: self.cols,
            data: self.data[rows.start * self.cols..rows.end * self.cols].to_vec(),
        })
    }

    /// Frobenius norm, accumulated in row-major order.
    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum::<f64>())
    }
}

pub(crate) fn check_bounds(rows: &Range<usize>, cols: &Range<usize>, nrows: usize, ncols: usize) -> Result<(), LinalgError> {
    if rows.start > rows.end || cols.start > cols.end || rows.end > nrows || cols.end > ncols {
        return Err(LinalgError::OutOfBounds {
            rows: rows.clone(),
            cols: cols.clone(),
            parent_rows: nrows,
            parent_cols: ncols,
        });
    }
    Ok(())
}

/// Dense lower-triangular `n × n` matrix stored in full row-major form.
///
/// Entries above the diagonal are exactly zero and every diagonal entry has
/// magnitude at least `diagonal_floor`, so forward substitution never divides
/// by a vanishing pivot.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerTriangular {
    n: usize,
    data: Vec<f64>,
    diagonal_floor: f64,
}

impl LowerTriangular {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        Self::with_floor(n, data, DEFAULT_DIAGONAL_FLOOR)
    }

    pub fn with_floor(n: usize, data: Vec<f64>, diagonal_floor: f64) -> Result<Self, LinalgError> {
        let dense = DenseMatrix::new(n, n, data)?;
        Self::from_dense_with_floor(dense, diagonal_floor)
    }

    pub fn from_dense(dense: DenseMatrix) -> Result<Self, LinalgError> {
        Self::from_dense_with_floor(dense, DEFAULT_DIAGONAL_FLOOR)
    }

    pub fn from_dense_with_floor(dense: DenseMatrix, diagonal_floor: f64) -> Result<Self, LinalgError> {
        if dense.rows != dense.cols {
            return Err(LinalgError::NotSquare {
                rows: dense.rows,
                cols: dense.cols,
            });
        }
        let n = dense.rows;
        for r in 0..n {
            for c in r + 1..n {
                if dense.data[r * n + c] != 0.0 {
                    return Err(LinalgError::NotLowerTriangular { row: r, col: c });
                }
            }
            let d = dense.data[r * n + r];
            if d == 0.0 || d.abs() < diagonal_floor {
                return Err(LinalgError::Singular { index: r, value: d });
            }
        }
        Ok(Self {
            n,
            data: dense.data,
            diagonal_floor,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diagonal_floor(&self) -> f64 {
        self.diagonal_floor
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix {
            rows: self.n,
            cols: self.n,
            data: self.data.clone(),
        }
    }

    pub fn view(&self) -> BlockView<'_> {
        BlockView::new(&self.data, self.n, 0, 0, self.n, self.n)
    }

    /// The whole matrix as a triangular view.
    pub fn tri_view(&self) -> TriangularView<'_> {
        TriangularView::new(self.view(), self.diagonal_floor)
    }

    /// Arbitrary rectangular block, e.g. the sub-diagonal operand of an update.
    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Result<BlockView<'_>, LinalgError> {
        check_bounds(&rows, &cols, self.n, self.n)?;
        Ok(self.view().sub(rows, cols))
    }

    /// Square diagonal block `range × range`, itself lower-triangular.
    pub fn diag_block(&self, range: Range<usize>) -> Result<TriangularView<'_>, LinalgError> {
        check_bounds(&range, &range, self.n, self.n)?;
        Ok(TriangularView::new(self.view().sub(range.clone(), range), self.diagonal_floor))
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum::<f64>())
    }
}
