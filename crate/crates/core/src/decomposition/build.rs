use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::{refinement, DecompositionError, Model, Placement, RefinementLevel, Task, TaskGraph, TaskId, TaskKind};

/// Problem shape beyond `n`: right-hand-side width and element size used for payloads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphOptions {
    pub rhs: usize,
    pub element_bytes: u64,
}

impl GraphOptions {
    /// `n` right-hand sides of `f64`.
    pub fn square(n: usize) -> Self {
        Self { rhs: n, element_bytes: 8 }
    }
}

pub fn build(model: Model, n: usize, iteration: u32) -> Result<TaskGraph, DecompositionError> {
    build_with(model, n, iteration, GraphOptions::square(n))
}

pub fn build_recursive(n: usize, iteration: u32) -> Result<TaskGraph, DecompositionError> {
    build(Model::Recursive, n, iteration)
}

pub fn build_iterative(n: usize, iteration: u32) -> Result<TaskGraph, DecompositionError> {
    build(Model::Iterative, n, iteration)
}

pub fn build_blocked(n: usize, iteration: u32) -> Result<TaskGraph, DecompositionError> {
    build(Model::Blocked, n, iteration)
}

pub fn build_with(model: Model, n: usize, iteration: u32, options: GraphOptions) -> Result<TaskGraph, DecompositionError> {
    let level = refinement(iteration)?;
    if n == 0 {
        return Err(DecompositionError::EmptyProblem);
    }
    if (n as u64) < level.level() {
        return Err(DecompositionError::RefinementTooDeep { n, level: level.level() });
    }
    let tasks = match model {
        Model::Recursive => recursive_tasks(n, level, options),
        Model::Iterative => iterative_tasks(n, level, options),
        Model::Blocked => blocked_tasks(n, level, options)?,
    };
    Ok(TaskGraph {
        model,
        n,
        rhs: options.rhs,
        element_bytes: options.element_bytes,
        refinement: level,
        tasks,
    })
}

/// `r` leaves of `n / r` rows; the remainder goes to the last leaf.
fn uniform_leaves(n: usize, r: usize) -> Vec<Range<usize>> {
    let b = n / r;
    (0..r)
        .map(|j| {
            let end = if j + 1 == r { n } else { (j + 1) * b };
            j * b..end
        })
        .collect()
}

/// Leaves of the halving recursion, `⌈len/2⌉` on top.
fn halving_leaves(range: Range<usize>, depth: u32, out: &mut Vec<Range<usize>>) {
    if depth == 0 {
        out.push(range);
        return;
    }
    let mid = range.start + range.len().div_ceil(2);
    halving_leaves(range.start..mid, depth - 1, out);
    halving_leaves(mid..range.end, depth - 1, out);
}

/// Emits tasks in program order and derives dependencies from leaf-level
/// reads and writes of `B`.
struct Emitter {
    leaves: Vec<Range<usize>>,
    last_writer: Vec<Option<TaskId>>,
    readers: Vec<Vec<TaskId>>,
    tasks: Vec<Task>,
    options: GraphOptions,
}

impl Emitter {
    fn new(leaves: Vec<Range<usize>>, options: GraphOptions) -> Self {
        let r = leaves.len();
        Self {
            leaves,
            last_writer: vec![None; r],
            readers: vec![Vec::new(); r],
            tasks: Vec::new(),
            options,
        }
    }

    /// Leaf indices covering `rows`; `rows` always sits on leaf boundaries.
    fn leaf_span(&self, rows: &Range<usize>) -> Range<usize> {
        let first = self.leaves.partition_point(|l| l.end <= rows.start);
        let last = self.leaves.partition_point(|l| l.end <= rows.end.saturating_sub(1));
        debug_assert_eq!(self.leaves[first].start, rows.start);
        debug_assert_eq!(self.leaves[last].end, rows.end);
        first..last + 1
    }

    fn solve(&mut self, leaf: usize) -> TaskId {
        let rows = self.leaves[leaf].clone();
        self.push(TaskKind::Ts, rows.clone(), rows, None, None)
    }

    fn update(&mut self, rows: Range<usize>, cols: Range<usize>, round: Option<u32>, depth: Option<u32>) -> TaskId {
        self.push(TaskKind::Gemm, rows, cols, round, depth)
    }

    fn push(&mut self, kind: TaskKind, rows: Range<usize>, cols: Range<usize>, round: Option<u32>, depth: Option<u32>) -> TaskId {
        let id = TaskId(self.tasks.len() as u32);
        let written = self.leaf_span(&rows);
        let read = self.leaf_span(&cols);
        let mut deps = Vec::new();
        for leaf in written.clone() {
            deps.extend(self.last_writer[leaf]);
            deps.extend(self.readers[leaf].iter().copied());
        }
        if kind == TaskKind::Gemm {
            for leaf in read.clone() {
                deps.extend(self.last_writer[leaf]);
            }
        }
        deps.sort_unstable();
        deps.dedup();

        if kind == TaskKind::Gemm {
            for leaf in read {
                self.readers[leaf].push(id);
            }
        }
        for leaf in written {
            self.last_writer[leaf] = Some(id);
            self.readers[leaf].clear();
        }

        let (p, q, w) = (rows.len() as u64, cols.len() as u64, self.options.rhs as u64);
        let eb = self.options.element_bytes;
        let (placement, h2d, d2h) = match kind {
            TaskKind::Ts => (Placement::Host, 0, 0),
            // L block and X panel go up, the updated B panel comes back.
            TaskKind::Gemm => (Placement::Device, (p * q + q * w) * eb, p * w * eb),
        };
        self.tasks.push(Task {
            id,
            kind,
            placement,
            rows,
            cols,
            rhs: self.options.rhs,
            round,
            depth,
            deps,
            payload_bytes_h2d: h2d,
            payload_bytes_d2h: d2h,
        });
        id
    }
}

fn recursive_tasks(n: usize, level: RefinementLevel, options: GraphOptions) -> Vec<Task> {
    let mut leaves = Vec::with_capacity(level.leaves());
    halving_leaves(0..n, level.iteration(), &mut leaves);
    let mut em = Emitter::new(leaves, options);
    let mut next_leaf = 0;
    recurse(&mut em, 0..n, 0, level.iteration(), &mut next_leaf);
    em.tasks
}

fn recurse(em: &mut Emitter, range: Range<usize>, depth: u32, max_depth: u32, next_leaf: &mut usize) {
    if depth == max_depth {
        em.solve(*next_leaf);
        *next_leaf += 1;
        return;
    }
    let mid = range.start + range.len().div_ceil(2);
    recurse(em, range.start..mid, depth + 1, max_depth, next_leaf);
    em.update(mid..range.end, range.start..mid, None, Some(depth));
    recurse(em, mid..range.end, depth + 1, max_depth, next_leaf);
}

fn iterative_tasks(n: usize, level: RefinementLevel, options: GraphOptions) -> Vec<Task> {
    let r = level.leaves();
    let leaves = uniform_leaves(n, r);
    let mut em = Emitter::new(leaves.clone(), options);
    for (j, leaf) in leaves.iter().enumerate() {
        em.solve(j);
        if j + 1 < r {
            em.update(leaf.end..n, leaf.clone(), None, None);
        }
    }
    em.tasks
}

/// Blocked schedule: `(r-1)·r/2` square updates in `r-1` rounds of `r/2`.
///
/// Block `(t, s)` updates leaf rows `t` with solved leaf `s < t`. A round
/// only takes blocks whose source leaf was solved before the round starts,
/// in ascending `(t, s)` order, so the next diagonal leaf is unblocked as
/// early as possible and each target receives its updates in ascending
/// source order.
fn blocked_tasks(n: usize, level: RefinementLevel, options: GraphOptions) -> Result<Vec<Task>, DecompositionError> {
    let r = level.leaves();
    let leaves = uniform_leaves(n, r);
    let mut em = Emitter::new(leaves.clone(), options);
    let mut assigned = vec![0usize; r];
    let mut solved = vec![false; r];
    let mut pending: Vec<(usize, usize)> = (1..r).flat_map(|t| (0..t).map(move |s| (t, s))).collect();

    for round in 0..r.saturating_sub(1) {
        for t in 0..r {
            if !solved[t] && assigned[t] == t {
                em.solve(t);
                solved[t] = true;
            }
        }
        let per_round = r / 2;
        let mut picked = Vec::with_capacity(per_round);
        pending.retain(|&(t, s)| {
            if picked.len() < per_round && solved[s] {
                picked.push((t, s));
                false
            } else {
                true
            }
        });
        if picked.len() < per_round {
            return Err(DecompositionError::RoundAssignment { round: round as u32 });
        }
        for (t, s) in picked {
            em.update(leaves[t].clone(), leaves[s].clone(), Some(round as u32), None);
            assigned[t] += 1;
        }
    }
    for (t, done) in solved.iter().enumerate() {
        if !done {
            em.solve(t);
        }
    }
    Ok(em.tasks)
}
