//! Threaded execution of a task graph: leaf solves on a host worker pool,
//! updates on a pluggable device backend.
//!
//! `B` is cut into one block per solve leaf and every block sits behind its
//! own lock. A coordinator dispatches ready tasks in id order; workers only
//! ever `try_` the locks, so two tasks touching the same rows at once is
//! reported as an error instead of being silently serialized. Each update is
//! applied target leaf by target leaf, source leaves ascending, which keeps
//! the floating-point accumulation order identical to the sequential
//! executor whatever the thread count.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::RwLock;
use std::time::Instant;

use crossbeam_channel::{unbounded, Receiver, Sender};
use redsea_core::decomposition::{validate, DecompositionError, TaskGraph, TaskId, TaskKind};
use redsea_core::linalg::{gemm_update, ts_solve_block, BlockView, BlockViewMut, DenseMatrix, LinalgError, LowerTriangular};
use redsea_core::sim::{ExecutionConfig, Resource, Timeline, TimelineEvent};

/// Where update tasks run. Implementations must compute exactly `b -= l · x`
/// with the accumulation order of [`gemm_update`] to keep results bitwise
/// reproducible.
pub trait DeviceBackend: Sync {
    fn name(&self) -> &str;
    fn gemm(&self, b: BlockViewMut<'_>, l: BlockView<'_>, x: BlockView<'_>) -> Result<(), LinalgError>;
}

/// Runs updates on the calling device-queue thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct CpuBackend;

impl DeviceBackend for CpuBackend {
    fn name(&self) -> &str {
        "cpu"
    }

    fn gemm(&self, b: BlockViewMut<'_>, l: BlockView<'_>, x: BlockView<'_>) -> Result<(), LinalgError> {
        gemm_update(b, l, x)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HybridError {
    #[error(transparent)]
    Graph(#[from] DecompositionError),
    #[error("host_workers and device_queues must be at least 1")]
    NoWorkers,
    #[error("task {task}: its rows were in use by another task")]
    Conflict { task: TaskId },
    #[error("task {task} panicked")]
    Panicked { task: TaskId },
    #[error("execution stopped with {remaining} tasks never ready")]
    Stalled { remaining: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridOutput {
    pub x: DenseMatrix,
    /// Wall-clock timeline; environment dependent.
    pub timeline: Timeline,
}

struct Shared<'a> {
    graph: &'a TaskGraph,
    l: &'a LowerTriangular,
    starts: Vec<usize>,
    blocks: Vec<RwLock<DenseMatrix>>,
    backend: &'a dyn DeviceBackend,
    epoch: Instant,
}

struct Done {
    task: TaskId,
    resource: Resource,
    start_s: f64,
    end_s: f64,
    result: Result<(), HybridError>,
}

impl Shared<'_> {
    fn leaf(&self, row: usize) -> usize {
        self.starts.partition_point(|&s| s <= row) - 1
    }

    fn kernel(id: TaskId) -> impl Fn(LinalgError) -> HybridError {
        move |source| HybridError::Graph(DecompositionError::Kernel { task: id, source })
    }

    fn run(&self, id: TaskId) -> Result<(), HybridError> {
        let task = self.graph.task(id);
        let conflict = || HybridError::Conflict { task: id };
        match task.kind {
            TaskKind::Ts => {
                let k = self.leaf(task.rows.start);
                let mut block = self.blocks[k].try_write().map_err(|_| conflict())?;
                let l = self.l.diag_block(task.rows.clone()).map_err(Self::kernel(id))?;
                ts_solve_block(l, block.view_mut()).map_err(Self::kernel(id))
            }
            TaskKind::Gemm => {
                let targets = self.leaf(task.rows.start)..self.leaf(task.rows.end - 1) + 1;
                let sources = self.leaf(task.cols.start)..self.leaf(task.cols.end - 1) + 1;
                for t in targets {
                    let mut target = self.blocks[t].try_write().map_err(|_| conflict())?;
                    let t_rows = self.starts[t]..self.starts[t] + target.rows();
                    for s in sources.clone() {
                        let source = self.blocks[s].try_read().map_err(|_| conflict())?;
                        let s_rows = self.starts[s]..self.starts[s] + source.rows();
                        let l = self.l.block(t_rows.clone(), s_rows).map_err(Self::kernel(id))?;
                        self.backend
                            .gemm(target.view_mut(), l, source.view())
                            .map_err(Self::kernel(id))?;
                    }
                }
                Ok(())
            }
        }
    }

    fn worker(&self, jobs: Receiver<TaskId>, done: Sender<Done>, resource: Resource) {
        for id in jobs {
            let start_s = self.epoch.elapsed().as_secs_f64();
            let result = catch_unwind(AssertUnwindSafe(|| self.run(id))).unwrap_or(Err(HybridError::Panicked { task: id }));
            let end_s = self.epoch.elapsed().as_secs_f64();
            if done.send(Done { task: id, resource, start_s, end_s, result }).is_err() {
                return;
            }
        }
    }
}

/// Solves `L · X = B` by running `graph` with leaf solves on `config.host_workers`
/// threads and updates on `config.device_queues` threads driving `backend`.
///
/// With overlap disabled tasks run one at a time. `X` does not depend on
/// the thread counts or on the overlap flag.
pub fn execute_hybrid_with(
    l: &LowerTriangular,
    b: &DenseMatrix,
    graph: &TaskGraph,
    config: &ExecutionConfig,
    backend: &dyn DeviceBackend,
) -> Result<HybridOutput, HybridError> {
    validate(graph).map_err(DecompositionError::from)?;
    if l.n() != graph.n || b.rows() != graph.n {
        return Err(DecompositionError::SizeMismatch {
            expected: graph.n,
            actual: if l.n() != graph.n { l.n() } else { b.rows() },
        }
        .into());
    }
    if b.cols() != graph.rhs {
        return Err(DecompositionError::SizeMismatch {
            expected: graph.rhs,
            actual: b.cols(),
        }
        .into());
    }
    if config.host_workers == 0 || config.device_queues == 0 {
        return Err(HybridError::NoWorkers);
    }

    let mut leaves: Vec<_> = graph.ts_tasks().map(|t| t.rows.clone()).collect();
    leaves.sort_by_key(|r| r.start);
    let blocks = leaves
        .iter()
        .map(|r| RwLock::new(b.row_block(r.clone()).expect("leaves lie inside B")))
        .collect();
    let shared = Shared {
        graph,
        l,
        starts: leaves.iter().map(|r| r.start).collect(),
        blocks,
        backend,
        epoch: Instant::now(),
    };

    let count = graph.tasks.len();
    let mut indegree: Vec<usize> = graph.tasks.iter().map(|t| t.deps.len()).collect();
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); count];
    for t in &graph.tasks {
        for d in &t.deps {
            dependents[d.index()].push(t.id.index());
        }
    }

    let mut events = Vec::with_capacity(count);
    let mut failures: Vec<(TaskId, HybridError)> = Vec::new();
    let mut completed = 0usize;
    std::thread::scope(|scope| {
        let (host_tx, host_rx) = unbounded::<TaskId>();
        let (dev_tx, dev_rx) = unbounded::<TaskId>();
        let (done_tx, done_rx) = unbounded::<Done>();
        for w in 0..config.host_workers {
            let (rx, tx, shared) = (host_rx.clone(), done_tx.clone(), &shared);
            scope.spawn(move || shared.worker(rx, tx, Resource::HostPool(w)));
        }
        for q in 0..config.device_queues {
            let (rx, tx, shared) = (dev_rx.clone(), done_tx.clone(), &shared);
            scope.spawn(move || shared.worker(rx, tx, Resource::DeviceQueue(q)));
        }
        drop(done_tx);

        let mut ready: BTreeSet<usize> = (0..count).filter(|&k| indegree[k] == 0).collect();
        let mut in_flight = 0usize;
        loop {
            while failures.is_empty() && (config.overlap_enabled || in_flight == 0) {
                let Some(k) = ready.pop_first() else { break };
                let id = TaskId(k as u32);
                let tx = match graph.tasks[k].kind {
                    TaskKind::Ts => &host_tx,
                    TaskKind::Gemm => &dev_tx,
                };
                tx.send(id).expect("workers outlive the coordinator loop");
                in_flight += 1;
            }
            if in_flight == 0 {
                break;
            }
            let done = done_rx.recv().expect("a worker holds the completion channel");
            in_flight -= 1;
            events.push(TimelineEvent {
                task: done.task,
                resource: done.resource,
                start_s: done.start_s,
                end_s: done.end_s,
            });
            match done.result {
                Ok(()) => {
                    completed += 1;
                    for &d in &dependents[done.task.index()] {
                        indegree[d] -= 1;
                        if indegree[d] == 0 {
                            ready.insert(d);
                        }
                    }
                }
                Err(e) => failures.push((done.task, e)),
            }
        }
        drop(host_tx);
        drop(dev_tx);
    });

    if let Some((_, e)) = failures.into_iter().min_by_key(|(id, _)| *id) {
        return Err(e);
    }
    if completed != count {
        return Err(HybridError::Stalled { remaining: count - completed });
    }
    let mut data = Vec::with_capacity(b.rows() * b.cols());
    for block in shared.blocks {
        data.extend_from_slice(block.into_inner().expect("no worker panicked holding a lock").as_slice());
    }
    let x = DenseMatrix::new(b.rows(), b.cols(), data).expect("solution has the shape of B");
    events.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then(a.task.cmp(&b.task)));
    Ok(HybridOutput {
        x,
        timeline: Timeline::from_events(events),
    })
}

/// [`execute_hybrid_with`] on the [`CpuBackend`].
pub fn execute_hybrid(l: &LowerTriangular, b: &DenseMatrix, graph: &TaskGraph, config: &ExecutionConfig) -> Result<HybridOutput, HybridError> {
    execute_hybrid_with(l, b, graph, config, &CpuBackend)
}

#[cfg(test)]
mod tests {
    use redsea_core::costmodel::{DeviceProfile, HostTsLatency};
    use redsea_core::decomposition::{build, build_blocked, execute_sequential, Model};
    use redsea_core::linalg::{reference_solve, relative_residual, seeded_problem};

    use super::*;

    fn config(workers: u32, queues: u32, overlap: bool) -> ExecutionConfig {
        let mut c = ExecutionConfig::serial(DeviceProfile {
            host_ts_latency: HostTsLatency::Table(vec![1.0]),
            device_gemm_rate: 1e12,
            h2d_bandwidth: 1e10,
            d2h_bandwidth: 1e10,
            link_latency: 0.0,
            sync_overhead: 0.0,
            host_cores: 1,
            element_bytes: 8,
        });
        c.host_workers = workers;
        c.device_queues = queues;
        c.overlap_enabled = overlap;
        c
    }

    #[test]
    fn single_leaf_is_the_reference_solve() {
        let (l, b) = seeded_problem(32, 32, 42);
        let g = build(Model::Recursive, 32, 0).unwrap();
        let out = execute_hybrid(&l, &b, &g, &config(2, 1, true)).unwrap();
        assert_eq!(out.x, reference_solve(&l, &b).unwrap());
        assert_eq!(out.timeline.events.len(), 1);
    }

    #[test]
    fn matches_the_sequential_executor_bitwise() {
        for model in Model::ALL {
            for i in 0..=4 {
                let (l, b) = seeded_problem(96, 48, 7);
                let g = redsea_core::decomposition::build_with(
                    model,
                    96,
                    i,
                    redsea_core::decomposition::GraphOptions { rhs: 48, element_bytes: 8 },
                )
                .unwrap();
                let seq = execute_sequential(&g, &l, &b).unwrap();
                for (w, q, o) in [(1, 1, false), (3, 2, true), (8, 4, true)] {
                    let out = execute_hybrid(&l, &b, &g, &config(w, q, o)).unwrap();
                    assert_eq!(out.x, seq, "{model} i={i} workers={w}");
                }
                assert!(relative_residual(&l, &seq, &b) <= 1e-12);
            }
        }
    }

    struct Failing;

    impl DeviceBackend for Failing {
        fn name(&self) -> &str {
            "failing"
        }

        fn gemm(&self, _: BlockViewMut<'_>, _: BlockView<'_>, _: BlockView<'_>) -> Result<(), LinalgError> {
            Err(LinalgError::CannotSplit { n: 0 })
        }
    }

    #[test]
    fn backend_errors_name_the_task() {
        let (l, b) = seeded_problem(16, 16, 1);
        let g = build_blocked(16, 2).unwrap();
        let err = execute_hybrid_with(&l, &b, &g, &config(2, 2, true), &Failing).unwrap_err();
        let first_gemm = g.gemm_tasks().next().unwrap().id;
        match err {
            HybridError::Graph(DecompositionError::Kernel { task, .. }) => assert_eq!(task, first_gemm),
            other => panic!("unexpected {other:?}"),
        }
    }

    struct Panicking;

    impl DeviceBackend for Panicking {
        fn name(&self) -> &str {
            "panicking"
        }

        fn gemm(&self, _: BlockViewMut<'_>, _: BlockView<'_>, _: BlockView<'_>) -> Result<(), LinalgError> {
            panic!("device lost")
        }
    }

    #[test]
    fn backend_panics_are_contained() {
        let (l, b) = seeded_problem(16, 16, 1);
        let g = build_blocked(16, 1).unwrap();
        let err = execute_hybrid_with(&l, &b, &g, &config(1, 1, false), &Panicking).unwrap_err();
        assert!(matches!(err, HybridError::Panicked { .. }));
    }

    #[test]
    fn shape_and_config_errors() {
        let (l, b) = seeded_problem(16, 8, 1);
        let g = build_blocked(16, 1).unwrap();
        assert!(matches!(
            execute_hybrid(&l, &b, &g, &config(1, 1, false)),
            Err(HybridError::Graph(DecompositionError::SizeMismatch { expected: 16, actual: 8 }))
        ));
        let (l, b) = seeded_problem(16, 16, 1);
        assert!(matches!(execute_hybrid(&l, &b, &g, &config(0, 1, false)), Err(HybridError::NoWorkers)));
    }

    #[test]
    fn serial_mode_never_overlaps() {
        let (l, b) = seeded_problem(64, 64, 3);
        let g = build_blocked(64, 3).unwrap();
        let out = execute_hybrid(&l, &b, &g, &config(4, 4, false)).unwrap();
        let ev = &out.timeline.events;
        for pair in ev.windows(2) {
            assert!(pair[0].end_s <= pair[1].start_s);
        }
        assert_eq!(ev.len(), g.tasks.len());
    }
}
