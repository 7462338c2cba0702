use redsea_core::costmodel::{estimate, graph_cost, DeviceProfile, HostTsLatency, Problem};
use redsea_core::decomposition::{build_with, execute_sequential, validate, GraphOptions, Model};
use redsea_core::dse::explore;
use redsea_core::linalg::{reference_solve, relative_residual, seeded_problem};
use redsea_core::sim::{simulate, ExecutionConfig};

fn profile() -> DeviceProfile {
    DeviceProfile {
        host_ts_latency: HostTsLatency::Analytic { core_flop_rate: 1e9, leaf_overhead_s: 1e-4 },
        device_gemm_rate: 1e12,
        h2d_bandwidth: 1e10,
        d2h_bandwidth: 1e10,
        link_latency: 5e-6,
        sync_overhead: 2e-5,
        host_cores: 8,
        element_bytes: 8,
    }
}

#[test]
fn graph_solve_cost_and_simulation_agree() {
    let (n, rhs) = (128, 40);
    let (l, b) = seeded_problem(n, rhs, 11);
    let reference = reference_solve(&l, &b).unwrap();
    let p = profile();
    for model in Model::ALL {
        for i in 0..=4 {
            let g = build_with(model, n, i, GraphOptions { rhs, element_bytes: 8 }).unwrap();
            validate(&g).unwrap();
            let x = execute_sequential(&g, &l, &b).unwrap();
            assert!(relative_residual(&l, &x, &b) <= 1e-12);
            if i == 0 {
                assert_eq!(x, reference);
            }
            let formula = estimate(model, Problem { n, rhs }, i, &p).unwrap();
            let summed = graph_cost(&g, &p).unwrap();
            assert!((formula.total_s() - summed.total_s()).abs() <= 1e-9 * formula.total_s());
            let tl = simulate(&g, &ExecutionConfig::serial(p.clone())).unwrap();
            assert!((tl.makespan_s - formula.total_s()).abs() <= 1e-9 * formula.total_s());
        }
    }
}

#[test]
fn graphs_survive_json() {
    let g = build_with(Model::Blocked, 64, 3, GraphOptions { rhs: 64, element_bytes: 8 }).unwrap();
    let text = serde_json::to_string(&g).unwrap();
    let back: redsea_core::decomposition::TaskGraph = serde_json::from_str(&text).unwrap();
    assert_eq!(back, g);
}

#[test]
fn exploration_beats_host_only() {
    let r = explore(&[Problem::square(4096), Problem::square(2048)], &profile(), u64::MAX).unwrap();
    assert_eq!(r.picks.len(), 2);
    assert!(!r.fallback);
    assert!(r.baseline_s.is_some_and(|b| r.predicted_total_s < b));
    assert!(r.predicted_speedup.is_some_and(|s| s > 1.0));
}
