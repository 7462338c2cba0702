use core::ops::Range;

/// Position of a view inside its parent matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

impl Region {
    pub fn new(rows: Range<usize>, cols: Range<usize>) -> Self {
        Self { rows, cols }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() || self.cols.is_empty()
    }

    pub fn overlaps(&self, other: &Region) -> bool {
        !self.is_empty()
            && !other.is_empty()
            && ranges_overlap(&self.rows, &other.rows)
            && ranges_overlap(&self.cols, &other.cols)
    }
}

pub(crate) fn ranges_overlap(a: &Range<usize>, b: &Range<usize>) -> bool {
    a.start < b.end && b.start < a.end
}

fn span(stride: usize, rows: usize, cols: usize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * stride + cols
    }
}

/// Read-only strided window into a row-major parent.
#[derive(Clone, Copy, Debug)]
pub struct BlockView<'a> {
    data: &'a [f64],
    stride: usize,
    row_offset: usize,
    col_offset: usize,
    rows: usize,
    cols: usize,
}

impl<'a> BlockView<'a> {
    /// `data` starts at parent element `(row_offset, col_offset)`.
    pub(crate) fn new(data: &'a [f64], stride: usize, row_offset: usize, col_offset: usize, rows: usize, cols: usize) -> Self {
        debug_assert!(data.len() >= span(stride, rows, cols));
        Self {
            data,
            stride,
            row_offset,
            col_offset,
            rows,
            cols,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_offset(&self) -> usize {
        self.row_offset
    }

    pub fn col_offset(&self) -> usize {
        self.col_offset
    }

    pub fn region(&self) -> Region {
        Region::new(
            self.row_offset..self.row_offset + self.rows,
            self.col_offset..self.col_offset + self.cols,
        )
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.stride + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &'a [f64] {
        let start = row * self.stride;
        &self.data[start..start + self.cols]
    }

    /// Sub-window in coordinates relative to this view. Panics when out of range.
    pub fn sub(&self, rows: Range<usize>, cols: Range<usize>) -> BlockView<'a> {
        assert!(rows.start <= rows.end && rows.end <= self.rows, "row range out of view");
        assert!(cols.start <= cols.end && cols.end <= self.cols, "column range out of view");
        let start = (rows.start * self.stride + cols.start).min(self.data.len());
        let len = span(self.stride, rows.len(), cols.len());
        BlockView::new(
            &self.data[start..start + len],
            self.stride,
            self.row_offset + rows.start,
            self.col_offset + cols.start,
            rows.len(),
            cols.len(),
        )
    }
}

/// Mutable strided window into a row-major parent.
#[derive(Debug)]
pub struct BlockViewMut<'a> {
    data: &'a mut [f64],
    stride: usize,
    row_offset: usize,
    col_offset: usize,
    rows: usize,
    cols: usize,
}

impl<'a> BlockViewMut<'a> {
    pub(crate) fn new(data: &'a mut [f64], stride: usize, row_offset: usize, col_offset: usize, rows: usize, cols: usize) -> Self {
        debug_assert!(data.len() >= span(stride, rows, cols));
        Self {
            data,
            stride,
            row_offset,
            col_offset,
            rows,
            cols,
        }
    }

    /// Wraps a standalone row-major buffer whose rows sit at `row_offset` of some larger matrix.
    pub fn from_rows(data: &'a mut [f64], cols: usize, row_offset: usize) -> Self {
        let rows = data.len().checked_div(cols).unwrap_or(0);
        Self::new(data, cols, row_offset, 0, rows, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn region(&self) -> Region {
        Region::new(
            self.row_offset..self.row_offset + self.rows,
            self.col_offset..self.col_offset + self.cols,
        )
    }

    pub fn rb(&self) -> BlockView<'_> {
        BlockView::new(self.data, self.stride, self.row_offset, self.col_offset, self.rows, self.cols)
    }

    pub fn rb_mut(&mut self) -> BlockViewMut<'_> {
        BlockViewMut::new(self.data, self.stride, self.row_offset, self.col_offset, self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.stride + col]
    }

    #[inline]
    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        let start = row * self.stride;
        &mut self.data[start..start + self.cols]
    }

    /// Rows `..row` (read-only) and row `row` (mutable) at the same time.
    #[inline]
    pub(crate) fn split_at_row(&mut self, row: usize) -> (BlockView<'_>, &mut [f64]) {
        let (head, tail) = self.data.split_at_mut(row * self.stride);
        (
            BlockView::new(head, self.stride, self.row_offset, self.col_offset, row, self.cols),
            &mut tail[..self.cols],
        )
    }

    pub fn into_sub(self, rows: Range<usize>, cols: Range<usize>) -> BlockViewMut<'a> {
        assert!(rows.start <= rows.end && rows.end <= self.rows, "row range out of view");
        assert!(cols.start <= cols.end && cols.end <= self.cols, "column range out of view");
        let start = (rows.start * self.stride + cols.start).min(self.data.len());
        let len = span(self.stride, rows.len(), cols.len());
        BlockViewMut::new(
            &mut self.data[start..start + len],
            self.stride,
            self.row_offset + rows.start,
            self.col_offset + cols.start,
            rows.len(),
            cols.len(),
        )
    }

    /// Splits into rows `..at` and `at..`; the two halves are disjoint.
    pub fn split_rows(self, at: usize) -> (BlockViewMut<'a>, BlockViewMut<'a>) {
        assert!(at <= self.rows, "split row out of view");
        let cut = (at * self.stride).min(self.data.len());
        let (head, tail) = self.data.split_at_mut(cut);
        (
            BlockViewMut::new(head, self.stride, self.row_offset, self.col_offset, at, self.cols),
            BlockViewMut::new(tail, self.stride, self.row_offset + at, self.col_offset, self.rows - at, self.cols),
        )
    }
}

/// Square lower-triangular window; only the diagonal and below are read.
#[derive(Clone, Copy, Debug)]
pub struct TriangularView<'a> {
    inner: BlockView<'a>,
    diagonal_floor: f64,
}

impl<'a> TriangularView<'a> {
    pub(crate) fn new(inner: BlockView<'a>, diagonal_floor: f64) -> Self {
        debug_assert_eq!(inner.rows(), inner.cols());
        Self { inner, diagonal_floor }
    }

    pub fn n(&self) -> usize {
        self.inner.rows()
    }

    pub fn diagonal_floor(&self) -> f64 {
        self.diagonal_floor
    }

    /// Same view with a different singularity threshold.
    pub fn with_floor(self, diagonal_floor: f64) -> Self {
        Self { diagonal_floor, ..self }
    }

    pub fn as_block(&self) -> BlockView<'a> {
        self.inner
    }

    pub fn region(&self) -> Region {
        self.inner.region()
    }
}
