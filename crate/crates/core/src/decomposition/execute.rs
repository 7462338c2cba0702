use alloc::vec;

use super::validate::topological_order;
use super::{validate, DecompositionError, TaskGraph, TaskId, TaskKind};
use crate::linalg::{gemm_update_rows, ts_solve_rows, DenseMatrix, LowerTriangular};

/// Runs the graph's kernels one at a time in `order` and returns `X`.
///
/// `order` must be a topological order of the graph; any such order yields
/// the same result.
pub fn execute_in_order(
    graph: &TaskGraph,
    l: &LowerTriangular,
    b: &DenseMatrix,
    order: &[TaskId],
) -> Result<DenseMatrix, DecompositionError> {
    validate(graph)?;
    if l.n() != graph.n || b.rows() != graph.n {
        return Err(DecompositionError::SizeMismatch {
            expected: graph.n,
            actual: if l.n() != graph.n { l.n() } else { b.rows() },
        });
    }
    if b.cols() != graph.rhs {
        return Err(DecompositionError::SizeMismatch {
            expected: graph.rhs,
            actual: b.cols(),
        });
    }
    let mut done = vec![false; graph.tasks.len()];
    if order.len() != graph.tasks.len() {
        return Err(DecompositionError::OrderNotTopological);
    }
    let mut x = b.clone();
    for &id in order {
        let task = graph.tasks.get(id.index()).ok_or(DecompositionError::OrderNotTopological)?;
        if done[id.index()] || task.deps.iter().any(|d| !done[d.index()]) {
            return Err(DecompositionError::OrderNotTopological);
        }
        let result = match task.kind {
            TaskKind::Ts => ts_solve_rows(&mut x, l, task.rows.clone()),
            TaskKind::Gemm => gemm_update_rows(&mut x, l, task.rows.clone(), task.cols.clone()),
        };
        result.map_err(|source| DecompositionError::Kernel { task: id, source })?;
        done[id.index()] = true;
    }
    Ok(x)
}

/// [`execute_in_order`] with the smallest-id-first topological order.
pub fn execute_sequential(graph: &TaskGraph, l: &LowerTriangular, b: &DenseMatrix) -> Result<DenseMatrix, DecompositionError> {
    let order = topological_order(graph).map_err(|_| DecompositionError::OrderNotTopological)?;
    execute_in_order(graph, l, b, &order)
}
