use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::decomposition::{build_with, GraphOptions};

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn table_profile(table: Vec<f64>) -> DeviceProfile {
    DeviceProfile {
        host_ts_latency: HostTsLatency::Table(table),
        device_gemm_rate: 1e12,
        h2d_bandwidth: 1e10,
        d2h_bandwidth: 1e10,
        link_latency: 1e-6,
        sync_overhead: 1e-5,
        host_cores: 8,
        element_bytes: 8,
    }
}

fn term(comp: f64, comm: f64) -> GemmTerm {
    GemmTerm {
        comp_s: comp,
        h2d_s: comm,
        d2h_s: 0.0,
        sync_s: 0.0,
    }
}

#[test]
fn recursive_hand_examples() {
    let e = recursive_formula(0, 7.0, &[]).unwrap();
    assert_eq!(e.total_s(), 7.0);
    assert_eq!(e.comm_s(), 0.0);

    let e = recursive_formula(1, 10.0, &[term(4.0, 1.0)]).unwrap();
    assert!(rel(e.comp_s(), 24.0) <= 1e-12);
    assert!(rel(e.comm_s(), 1.0) <= 1e-12);

    let e = recursive_formula(2, 3.0, &[term(4.0, 0.0), term(1.0, 0.0)]).unwrap();
    assert!(rel(e.comp_s(), 18.0) <= 1e-12);
}

#[test]
fn iterative_hand_examples() {
    assert_eq!(iterative_formula(0, 5.0, &[]).unwrap().total_s(), 5.0);
    let e = iterative_formula(1, 2.0, &[term(0.5, 0.0)]).unwrap();
    assert_eq!(e.comp_s(), 2.0 * 2.0 + 0.5);
    let e = iterative_formula(2, 3.0, &[term(1.0, 0.0); 3]).unwrap();
    assert!(rel(e.comp_s(), 15.0) <= 1e-12);
}

#[test]
fn blocked_hand_examples() {
    let e = blocked_formula(0, 4.0, term(9.0, 9.0)).unwrap();
    assert_eq!(e.total_s(), 4.0);
    let e = blocked_formula(3, 1.0, term(0.5, 0.25)).unwrap();
    assert!(rel(e.comp_s(), 22.0) <= 1e-12);
    assert!(rel(e.comm_s(), 28.0 * 0.25) <= 1e-12);
}

#[test]
fn term_counts_are_checked() {
    assert_eq!(
        recursive_formula(2, 1.0, &[term(1.0, 0.0)]),
        Err(CostError::TermCount { expected: 2, actual: 1 })
    );
    assert_eq!(
        iterative_formula(2, 1.0, &[term(1.0, 0.0)]),
        Err(CostError::TermCount { expected: 3, actual: 1 })
    );
}

#[test]
fn node_cost_examples() {
    let mut profile = table_profile(vec![1.0]);
    profile.h2d_bandwidth = f64::INFINITY;
    profile.d2h_bandwidth = f64::INFINITY;
    profile.link_latency = 0.0;
    profile.sync_overhead = 0.0;
    let g = build_with(Model::Blocked, 2048, 1, GraphOptions { rhs: 1024, element_bytes: 8 }).unwrap();
    let gemm = g.gemm_tasks().next().unwrap();
    assert_eq!(gemm.dims(), (1024, 1024, 1024));
    let c = node_cost(gemm, Model::Blocked, 1, &profile).unwrap();
    assert!(rel(c.device_comp_s(), 2.0 * 1024f64.powi(3) / 1e12) <= 1e-15);
    assert!((c.device_comp_s() - 2.147e-3).abs() < 1e-6);
    assert_eq!(c.host_comp_s(), 0.0);

    let mut zero = gemm.clone();
    zero.payload_bytes_h2d = 0;
    zero.payload_bytes_d2h = 0;
    let p = table_profile(vec![1.0]);
    let c = node_cost(&zero, Model::Blocked, 1, &p).unwrap();
    assert_eq!(c.h2d_s(), p.link_latency);
    assert_eq!(c.d2h_s(), p.link_latency);

    let ts = g.ts_tasks().next().unwrap();
    let c = node_cost(ts, Model::Blocked, 0, &p).unwrap();
    assert_eq!(c.host_comp_s(), 1.0);
    assert_eq!((c.device_comp_s(), c.h2d_s(), c.d2h_s(), c.sync_s()), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn missing_table_entry_requires_calibration() {
    let p = table_profile(vec![1.0, 0.5]);
    assert_eq!(
        estimate(Model::Blocked, Problem::square(64), 2, &p),
        Err(CostError::CalibrationRequired { iteration: 2 })
    );
    let g = crate::decomposition::build_blocked(64, 2).unwrap();
    assert_eq!(graph_cost(&g, &p), Err(CostError::CalibrationRequired { iteration: 2 }));
}

#[test]
fn too_deep_is_rejected() {
    let p = table_profile(vec![1.0; 8]);
    assert!(matches!(estimate(Model::Recursive, Problem::square(4), 3, &p), Err(CostError::TooDeep { .. })));
    assert!(matches!(estimate(Model::Recursive, Problem::square(4), 31, &p), Err(CostError::TooDeep { .. })));
}

#[test]
fn validate_rejects_bad_fields() {
    let mut p = table_profile(vec![1.0]);
    assert!(p.validate().is_ok());
    p.h2d_bandwidth = 0.0;
    assert!(matches!(p.validate(), Err(CostError::InvalidProfile { field: "h2d_bandwidth", .. })));
    let mut p = table_profile(vec![1.0]);
    p.sync_overhead = -1.0;
    assert!(p.validate().is_err());
    let mut p = table_profile(vec![1.0]);
    p.host_cores = 0;
    assert!(p.validate().is_err());
}

#[test]
fn speedup_examples() {
    let e = CostEstimate::new(Model::Blocked, 0, 4.0, 0.0, 0.0, 0.0, 0.0);
    assert_eq!(speedup(&e, 4.0), 1.0);
    assert_eq!(speedup(&e, 8.0), 2.0);
}

#[test]
fn working_set_examples() {
    let p = Problem::square(8);
    assert_eq!(working_set_bytes(Model::Blocked, p, 0, 8).unwrap(), 0);
    // r = 2: one 4x4 block against 8 columns.
    assert_eq!(working_set_bytes(Model::Blocked, p, 1, 8).unwrap(), (16 + 32 + 32) * 8);
    assert_eq!(working_set_bytes(Model::Iterative, p, 2, 1).unwrap(), 6 * 2 + 2 * 8 + 6 * 8);
    assert_eq!(working_set_bytes(Model::Recursive, Problem::square(7), 1, 1).unwrap(), 3 * 4 + 4 * 7 + 3 * 7);
}

#[test]
fn estimate_round_trips_through_serde_with_recomputed_total() {
    let e = CostEstimate::new(Model::Iterative, 2, 1.0, 2.0, 3.0, 4.0, 5.0);
    let json = serde_json::to_string(&e).unwrap();
    assert_eq!(serde_json::from_str::<CostEstimate>(&json).unwrap(), e);
    let forged = json.replace("\"total_s\":15.0", "\"total_s\":99.0");
    assert_eq!(serde_json::from_str::<CostEstimate>(&forged).unwrap().total_s(), 15.0);
}

fn profile_strategy() -> impl Strategy<Value = DeviceProfile> {
    (
        prop::bool::ANY,
        prop::collection::vec(1e-4f64..1.0, 7),
        1e9f64..1e14,
        (1e9f64..1e9 + 1e11, 1e9f64..1e9 + 1e11),
        (0.0f64..1e-4, 0.0f64..1e-3),
        1u32..128,
        1e8f64..1e10,
    )
        .prop_map(|(tabled, table, rate, (h2d, d2h), (link, sync), cores, core_rate)| DeviceProfile {
            host_ts_latency: if tabled {
                HostTsLatency::Table(table)
            } else {
                HostTsLatency::Analytic {
                    core_flop_rate: core_rate,
                    leaf_overhead_s: sync,
                }
            },
            device_gemm_rate: rate,
            h2d_bandwidth: h2d,
            d2h_bandwidth: d2h,
            link_latency: link,
            sync_overhead: sync,
            host_cores: cores,
            element_bytes: 8,
        })
}

fn assert_close(a: &CostEstimate, b: &CostEstimate, tol: f64) -> Result<(), TestCaseError> {
    let pairs = [
        (a.host_comp_s(), b.host_comp_s()),
        (a.device_comp_s(), b.device_comp_s()),
        (a.h2d_s(), b.h2d_s()),
        (a.d2h_s(), b.d2h_s()),
        (a.sync_s(), b.sync_s()),
        (a.total_s(), b.total_s()),
    ];
    for (x, y) in pairs {
        prop_assert!(rel(x, y) <= tol, "{x} vs {y}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn formulas_match_graph_sums(
        profile in profile_strategy(),
        model in prop::sample::select(Model::ALL.to_vec()),
        iteration in 0u32..=6,
        extra in 0u32..3,
        rhs in 1usize..96,
    ) {
        let n = 1usize << (iteration.max(1) + extra);
        let problem = Problem { n, rhs };
        let formula = estimate(model, problem, iteration, &profile).unwrap();
        let g = build_with(model, n, iteration, GraphOptions { rhs, element_bytes: 8 }).unwrap();
        let summed = graph_cost(&g, &profile).unwrap();
        assert_close(&formula, &summed, 1e-9)?;
        prop_assert!(formula.is_non_negative());
    }

    #[test]
    fn doubling_the_rate_halves_device_time(
        profile in profile_strategy(),
        model in prop::sample::select(Model::ALL.to_vec()),
        iteration in 0u32..=6,
    ) {
        let problem = Problem::square(256);
        let a = estimate(model, problem, iteration, &profile).unwrap();
        let mut faster = profile.clone();
        faster.device_gemm_rate *= 2.0;
        let b = estimate(model, problem, iteration, &faster).unwrap();
        prop_assert!(rel(b.device_comp_s(), a.device_comp_s() / 2.0) <= 1e-15);
        prop_assert_eq!(a.host_comp_s(), b.host_comp_s());
    }

    #[test]
    fn totals_are_the_component_sum(parts in prop::collection::vec(0.0f64..1e3, 5)) {
        let e = CostEstimate::new(Model::Recursive, 0, parts[0], parts[1], parts[2], parts[3], parts[4]);
        prop_assert_eq!(e.total_s(), parts[0] + parts[1] + parts[2] + parts[3] + parts[4]);
    }
}
