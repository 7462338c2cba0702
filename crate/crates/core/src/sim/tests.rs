use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::costmodel::{estimate, HostTsLatency, Problem};
use crate::decomposition::{build, build_blocked, build_with, GraphOptions, Model};

fn profile() -> DeviceProfile {
    DeviceProfile {
        host_ts_latency: HostTsLatency::Table(vec![1.0, 0.4, 0.15, 0.06, 0.03, 0.02, 0.015]),
        device_gemm_rate: 1e9,
        h2d_bandwidth: 5e9,
        d2h_bandwidth: 5e9,
        link_latency: 1e-5,
        sync_overhead: 1e-4,
        host_cores: 4,
        element_bytes: 8,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Independent legality check: per-resource exclusivity, dependency order,
/// phase order within a device task and the makespan definition.
fn audit(graph: &TaskGraph, tl: &Timeline, serial: bool) {
    let mut by_task: Vec<Vec<&TimelineEvent>> = vec![Vec::new(); graph.tasks.len()];
    for e in &tl.events {
        assert!(e.start_s >= 0.0 && e.end_s >= e.start_s, "{e:?}");
        by_task[e.task.index()].push(e);
    }
    for t in &graph.tasks {
        let ev = &by_task[t.id.index()];
        match t.kind {
            TaskKind::Ts => {
                assert_eq!(ev.len(), 1);
                assert!(matches!(ev[0].resource, Resource::HostPool(_)));
            }
            TaskKind::Gemm => {
                assert_eq!(ev.len(), 3);
                assert_eq!(ev[0].resource, Resource::LinkH2D);
                assert!(matches!(ev[1].resource, Resource::DeviceQueue(_)));
                assert_eq!(ev[2].resource, Resource::LinkD2H);
                assert!(ev[0].end_s <= ev[1].start_s && ev[1].end_s <= ev[2].start_s);
            }
        }
        let start = ev.iter().map(|e| e.start_s).fold(f64::INFINITY, f64::min);
        for d in &t.deps {
            let dep_end = by_task[d.index()].iter().map(|e| e.end_s).fold(0.0, f64::max);
            assert!(start >= dep_end, "{} starts before {} ends", t.id, d);
        }
    }
    let mut sorted: Vec<&TimelineEvent> = tl.events.iter().collect();
    sorted.sort_by(|a, b| a.resource.cmp(&b.resource).then(a.start_s.total_cmp(&b.start_s)));
    for pair in sorted.windows(2) {
        if pair[0].resource == pair[1].resource {
            assert!(pair[0].end_s <= pair[1].start_s, "{:?} overlaps {:?}", pair[0], pair[1]);
        }
    }
    if serial {
        // Whole tasks never overlap each other.
        let mut spans: Vec<(f64, f64)> = by_task
            .iter()
            .filter(|ev| !ev.is_empty())
            .map(|ev| (ev[0].start_s, ev[ev.len() - 1].end_s))
            .collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in spans.windows(2) {
            assert!(pair[0].1 <= pair[1].0);
        }
    }
    let max_end = tl.events.iter().map(|e| e.end_s).fold(0.0, f64::max);
    assert_eq!(tl.makespan_s, max_end);
}

#[test]
fn empty_graph_has_zero_makespan() {
    let g = TaskGraph {
        model: Model::Blocked,
        n: 0,
        rhs: 0,
        element_bytes: 8,
        refinement: crate::decomposition::refinement(0).unwrap(),
        tasks: Vec::new(),
    };
    let tl = simulate(&g, &ExecutionConfig::serial(profile())).unwrap();
    assert_eq!(tl.makespan_s, 0.0);
    assert!(tl.events.is_empty());
}

#[test]
fn blocked_two_leaves_is_a_single_chain() {
    let p = profile();
    let g = build_blocked(64, 1).unwrap();
    let tl = simulate(&g, &ExecutionConfig::serial(p.clone())).unwrap();
    audit(&g, &tl, true);
    let ts = 0.4;
    let term = p.gemm_term(32.0, 32.0, 64.0);
    let expected = ts + term.h2d_s + term.sync_s + term.comp_s + term.d2h_s + ts;
    assert!(rel(tl.makespan_s, expected) <= 1e-15);
}

#[test]
fn overlap_with_four_queues_is_strictly_faster() {
    let p = profile();
    let g = build_blocked(512, 3).unwrap();
    let serial = simulate(&g, &ExecutionConfig::serial(p.clone())).unwrap();
    let mut cfg = ExecutionConfig::serial(p);
    cfg.overlap_enabled = true;
    cfg.device_queues = 4;
    let fast = simulate(&g, &cfg).unwrap();
    audit(&g, &fast, false);
    assert!(fast.makespan_s < serial.makespan_s, "{} vs {}", fast.makespan_s, serial.makespan_s);
}

#[test]
fn resident_l_uploads_less() {
    let g = build_blocked(256, 2).unwrap();
    let mut cfg = ExecutionConfig::serial(profile());
    let full = simulate(&g, &cfg).unwrap();
    cfg.resident_l = true;
    let resident = simulate(&g, &cfg).unwrap();
    assert!(resident.makespan_s < full.makespan_s);
}

#[test]
fn invalid_graphs_and_configs_are_rejected() {
    let mut g = build_blocked(64, 2).unwrap();
    let mut cfg = ExecutionConfig::serial(profile());
    cfg.host_workers = 0;
    assert_eq!(simulate(&g, &cfg), Err(SimError::NoResources));
    g.tasks[5].deps.clear();
    assert!(matches!(simulate(&g, &ExecutionConfig::serial(profile())), Err(SimError::Invalid(_))));
}

fn random_profile() -> impl Strategy<Value = DeviceProfile> {
    (
        prop::collection::vec(1e-4f64..1.0, 7),
        1e8f64..1e13,
        1e8f64..1e11,
        1e8f64..1e11,
        0.0f64..1e-4,
        0.0f64..1e-3,
    )
        .prop_map(|(table, rate, h2d, d2h, link, sync)| DeviceProfile {
            host_ts_latency: HostTsLatency::Table(table),
            device_gemm_rate: rate,
            h2d_bandwidth: h2d,
            d2h_bandwidth: d2h,
            link_latency: link,
            sync_overhead: sync,
            host_cores: 8,
            element_bytes: 8,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn serial_makespan_matches_the_formula(
        p in random_profile(),
        model in prop::sample::select(Model::ALL.to_vec()),
        iteration in 0u32..=6,
        extra in 0u32..3,
        rhs in 1usize..64,
    ) {
        let n = 1usize << (iteration.max(1) + extra);
        let g = build_with(model, n, iteration, GraphOptions { rhs, element_bytes: 8 }).unwrap();
        let tl = simulate(&g, &ExecutionConfig::serial(p.clone())).unwrap();
        audit(&g, &tl, true);
        let formula = estimate(model, Problem { n, rhs }, iteration, &p).unwrap();
        prop_assert!(rel(tl.makespan_s, formula.total_s()) <= 1e-9, "{} vs {}", tl.makespan_s, formula.total_s());
    }

    #[test]
    fn overlap_never_hurts(
        p in random_profile(),
        model in prop::sample::select(Model::ALL.to_vec()),
        iteration in 0u32..=6,
        workers in 1u32..5,
        queues in 1u32..5,
        resident in any::<bool>(),
    ) {
        let g = build(model, 128, iteration).unwrap();
        let cfg = ExecutionConfig {
            mode: ExecMode::Simulate,
            host_workers: workers,
            device_queues: queues,
            overlap_enabled: false,
            resident_l: resident,
            profile: p,
        };
        let off = simulate(&g, &cfg).unwrap();
        let on = simulate(&g, &ExecutionConfig { overlap_enabled: true, ..cfg }).unwrap();
        audit(&g, &off, true);
        audit(&g, &on, false);
        prop_assert!(on.makespan_s <= off.makespan_s);
    }
}
