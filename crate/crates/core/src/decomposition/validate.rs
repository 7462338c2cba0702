use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::fmt;
use core::ops::Range;

use super::{Placement, TaskGraph, TaskId, TaskKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValidationErrorKind {
    /// Task ids must equal their position in the task list.
    IdOrder,
    DanglingDependency,
    Cycle,
    Shape,
    Placement,
    /// Solve leaves or update blocks do not tile the matrix exactly once.
    Coverage,
    /// A required ordering between two tasks is missing.
    MissingDependency,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationError {
    pub kind: ValidationErrorKind,
    pub tasks: Vec<TaskId>,
    pub detail: String,
}

impl ValidationError {
    fn new(kind: ValidationErrorKind, tasks: Vec<TaskId>, detail: impl Into<String>) -> Self {
        Self {
            kind,
            tasks,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid task graph ({:?}): {}", self.kind, self.detail)?;
        if !self.tasks.is_empty() {
            f.write_str(" [")?;
            for (k, t) in self.tasks.iter().take(16).enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{t}")?;
            }
            if self.tasks.len() > 16 {
                write!(f, ", … {} more", self.tasks.len() - 16)?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

impl core::error::Error for ValidationError {}

/// Kahn's algorithm, smallest ready id first. Returns the ids left on a cycle on failure.
pub(crate) fn topological_order(graph: &TaskGraph) -> Result<Vec<TaskId>, Vec<TaskId>> {
    let n = graph.tasks.len();
    let mut indegree = vec![0usize; n];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in &graph.tasks {
        for d in &t.deps {
            indegree[t.id.index()] += 1;
            dependents[d.index()].push(t.id.index());
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&k| indegree[k] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(k)) = ready.pop() {
        order.push(TaskId(k as u32));
        for &d in &dependents[k] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.push(Reverse(d));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|&k| indegree[k] > 0).map(|k| TaskId(k as u32)).collect())
    }
}

struct Ancestors {
    words: usize,
    bits: Vec<u64>,
}

impl Ancestors {
    fn compute(graph: &TaskGraph, order: &[TaskId]) -> Self {
        let n = graph.tasks.len();
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; words * n];
        for &id in order {
            let k = id.index();
            for d in &graph.tasks[k].deps {
                let j = d.index();
                for w in 0..words {
                    bits[k * words + w] |= bits[j * words + w];
                }
                bits[k * words + j / 64] |= 1 << (j % 64);
            }
        }
        Self { words, bits }
    }

    /// `a` must finish before `b` starts.
    fn precedes(&self, a: TaskId, b: TaskId) -> bool {
        let (a, b) = (a.index(), b.index());
        self.bits[b * self.words + a / 64] & (1 << (a % 64)) != 0
    }
}

/// Leaf index range covering `range`, if it sits exactly on leaf boundaries.
fn aligned_span(starts: &[usize], ends: &[usize], range: &Range<usize>) -> Option<Range<usize>> {
    let first = starts.binary_search(&range.start).ok()?;
    let last = ends.binary_search(&range.end).ok()?;
    (first <= last).then_some(first..last + 1)
}

/// Checks structure, coverage and dependency completeness.
///
/// Beyond acyclicity, every update must run after the solves of the leaves
/// it reads and before the solves of the leaves it writes, updates writing
/// the same rows must be ordered, solve leaves must partition the diagonal,
/// and update blocks must tile the region below the leaf diagonal exactly
/// once.
pub fn validate(graph: &TaskGraph) -> Result<(), ValidationError> {
    use ValidationErrorKind as K;
    let count = graph.tasks.len();

    let misplaced: Vec<TaskId> = graph
        .tasks
        .iter()
        .enumerate()
        .filter(|(k, t)| t.id.index() != *k)
        .map(|(_, t)| t.id)
        .collect();
    if !misplaced.is_empty() {
        return Err(ValidationError::new(K::IdOrder, misplaced, "task ids must match their positions"));
    }
    let dangling: Vec<TaskId> = graph
        .tasks
        .iter()
        .filter(|t| t.deps.iter().any(|d| d.index() >= count || *d == t.id))
        .map(|t| t.id)
        .collect();
    if !dangling.is_empty() {
        return Err(ValidationError::new(K::DanglingDependency, dangling, "dependency on a missing task or on itself"));
    }
    let order = topological_order(graph).map_err(|stuck| ValidationError::new(K::Cycle, stuck, "dependency cycle"))?;

    let bad_shape: Vec<TaskId> = graph
        .tasks
        .iter()
        .filter(|t| {
            t.rows.is_empty()
                || t.cols.is_empty()
                || t.rows.end > graph.n
                || t.cols.end > graph.n
                || t.rhs != graph.rhs
                || (t.kind == TaskKind::Ts && t.rows != t.cols)
        })
        .map(|t| t.id)
        .collect();
    if !bad_shape.is_empty() {
        return Err(ValidationError::new(K::Shape, bad_shape, "empty, out-of-range or non-square block"));
    }
    let bad_placement: Vec<TaskId> = graph
        .tasks
        .iter()
        .filter(|t| match t.kind {
            TaskKind::Ts => t.placement != Placement::Host,
            TaskKind::Gemm => t.placement != Placement::Device,
        })
        .map(|t| t.id)
        .collect();
    if !bad_placement.is_empty() {
        return Err(ValidationError::new(
            K::Placement,
            bad_placement,
            "solves run on the host and updates on the device",
        ));
    }

    // Leaves must partition 0..n in order.
    let mut leaves: Vec<(Range<usize>, TaskId)> = graph.ts_tasks().map(|t| (t.rows.clone(), t.id)).collect();
    leaves.sort_by_key(|(r, _)| r.start);
    let mut cursor = 0;
    for (rows, id) in &leaves {
        if rows.start != cursor {
            return Err(ValidationError::new(K::Coverage, vec![*id], "solve leaves do not tile the diagonal"));
        }
        cursor = rows.end;
    }
    if cursor != graph.n {
        let tail = leaves.last().map(|(_, id)| vec![*id]).unwrap_or_default();
        return Err(ValidationError::new(K::Coverage, tail, "solve leaves do not reach the last row"));
    }
    let r = leaves.len();
    let starts: Vec<usize> = leaves.iter().map(|(rows, _)| rows.start).collect();
    let ends: Vec<usize> = leaves.iter().map(|(rows, _)| rows.end).collect();

    // Every cell (t, s), t > s, of the leaf grid is updated exactly once.
    let mut cover = vec![0u32; r * r];
    let mut spans = Vec::new();
    for g in graph.gemm_tasks() {
        let (Some(targets), Some(sources)) = (aligned_span(&starts, &ends, &g.rows), aligned_span(&starts, &ends, &g.cols)) else {
            return Err(ValidationError::new(K::Coverage, vec![g.id], "update block is not aligned to leaf boundaries"));
        };
        if sources.end > targets.start {
            return Err(ValidationError::new(K::Coverage, vec![g.id], "update block is not below the leaf diagonal"));
        }
        for t in targets.clone() {
            for s in sources.clone() {
                cover[t * r + s] += 1;
            }
        }
        spans.push((g.id, targets, sources));
    }
    for t in 0..r {
        for s in 0..t {
            match cover[t * r + s] {
                1 => {}
                0 => {
                    return Err(ValidationError::new(
                        K::Coverage,
                        vec![leaves[t].1, leaves[s].1],
                        alloc::format!("no update applies leaf {s} to leaf {t}"),
                    ))
                }
                _ => {
                    let dup = spans
                        .iter()
                        .filter(|(_, tg, sr)| tg.contains(&t) && sr.contains(&s))
                        .map(|(id, _, _)| *id)
                        .collect();
                    return Err(ValidationError::new(
                        K::Coverage,
                        dup,
                        alloc::format!("leaf {s} is applied to leaf {t} more than once"),
                    ));
                }
            }
        }
    }

    let anc = Ancestors::compute(graph, &order);
    let position: Vec<usize> = {
        let mut p = vec![0; count];
        for (k, id) in order.iter().enumerate() {
            p[id.index()] = k;
        }
        p
    };
    let mut writers: Vec<Vec<TaskId>> = vec![Vec::new(); r];
    for (g, targets, sources) in &spans {
        for s in sources.clone() {
            let producer = leaves[s].1;
            if !anc.precedes(producer, *g) {
                return Err(ValidationError::new(
                    K::MissingDependency,
                    vec![producer, *g],
                    "update may run before the solve producing its operand",
                ));
            }
        }
        for t in targets.clone() {
            let consumer = leaves[t].1;
            if !anc.precedes(*g, consumer) {
                return Err(ValidationError::new(
                    K::MissingDependency,
                    vec![*g, consumer],
                    "solve may run before an update of its rows",
                ));
            }
            writers[t].push(*g);
        }
    }
    for list in &mut writers {
        list.sort_by_key(|id| position[id.index()]);
        for pair in list.windows(2) {
            if !anc.precedes(pair[0], pair[1]) {
                return Err(ValidationError::new(
                    K::MissingDependency,
                    pair.to_vec(),
                    "two updates of the same rows are unordered",
                ));
            }
        }
    }
    Ok(())
}
