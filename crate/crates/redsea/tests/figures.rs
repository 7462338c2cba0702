use redsea::cli::paperlike_profile;
use redsea::figures::{breakdown, emit_figure_data, BREAKDOWN_FILE, LATENCY_FILE, SPEEDUP_FILE};
use redsea::sweep::{sweep, SweepOptions};
use redsea_core::costmodel::Problem;
use redsea_core::decomposition::Model;

fn rows() -> Vec<redsea::sweep::SweepRow> {
    sweep(Problem::square(16384), &paperlike_profile(), &Model::ALL, &SweepOptions::default()).unwrap()
}

#[test]
fn breakdown_sums_exactly_to_total() {
    for r in rows() {
        let b = breakdown(&r);
        assert_eq!(b[5], r.estimate.total_s(), "{} i={}", r.model, r.iteration);
    }
}

#[test]
fn speedup_starts_at_one_and_blocked_ends_communication_bound() {
    let rows = rows();
    for model in Model::ALL {
        let first = rows.iter().find(|r| r.model == model).unwrap();
        assert_eq!((first.iteration, first.speedup), (0, 1.0));
    }
    let blocked: Vec<_> = rows.iter().filter(|r| r.model == Model::Blocked).collect();
    for r in &blocked[blocked.len() - 2..] {
        assert!(r.estimate.comm_s() > r.estimate.host_comp_s(), "i={}", r.iteration);
    }
}

#[test]
fn files_hold_one_block_per_model() {
    let dir = tempfile::tempdir().unwrap();
    let rows = rows();
    let paths = emit_figure_data(&rows, dir.path()).unwrap();
    assert_eq!(paths.len(), 3);
    for name in [LATENCY_FILE, SPEEDUP_FILE, BREAKDOWN_FILE] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.split("\n\n\n").count(), 3, "{name}");
        let data_lines = text.lines().filter(|l| !l.is_empty() && !l.starts_with('#')).count();
        assert_eq!(data_lines, rows.len(), "{name}");
    }
    let speed = std::fs::read_to_string(dir.path().join(SPEEDUP_FILE)).unwrap();
    assert!(speed.starts_with("# recursive\n# refinement speedup\n1 1\n"));
}
