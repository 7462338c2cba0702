use alloc::string::String;
use core::fmt::Write;

use super::{DseResult, RefinementTrace, StopReason};

fn sweep_table(out: &mut String, trace: &RefinementTrace) {
    let _ = writeln!(
        out,
        "  {} (n={}, rhs={}):",
        trace.model, trace.problem.n, trace.problem.rhs
    );
    let _ = writeln!(
        out,
        "    {:>3} {:>8} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "i", "r", "TS(i) s", "host s", "device s", "comm s", "total s"
    );
    for step in &trace.steps {
        let e = &step.estimate;
        let _ = writeln!(
            out,
            "    {:>3} {:>8} {:>12.6e} {:>12.6e} {:>12.6e} {:>12.6e} {:>12.6e}{}",
            step.iteration,
            1u64 << step.iteration,
            step.ts_s,
            e.host_comp_s(),
            e.device_comp_s(),
            e.comm_s(),
            e.total_s(),
            if step.accepted { "" } else { "  (rejected)" }
        );
    }
    let _ = match trace.stop {
        StopReason::Stalled { at } => writeln!(
            out,
            "    refinement stalls at i={at}: 2*TS({at}) >= TS({}); deepest accepted i={}",
            at - 1,
            trace.last_accepted()
        ),
        StopReason::SizeFloor => writeln!(out, "    refinement reached the size floor at i={}", trace.last_accepted()),
        StopReason::TableExhausted => writeln!(
            out,
            "    latency table ends after i={}; calibrate deeper levels to continue",
            trace.last_accepted()
        ),
        StopReason::MaxIteration => writeln!(out, "    refinement reached the iteration limit"),
    };
    match trace.steps.iter().find(|s| s.estimate.comm_s() > s.estimate.host_comp_s()) {
        Some(s) => {
            let _ = writeln!(out, "    communication exceeds host computation from i={}", s.iteration);
        }
        None => {
            let _ = writeln!(out, "    communication stays below host computation");
        }
    }
}

/// Human-readable summary of a selection and the sweeps behind it.
pub fn explain(result: &DseResult) -> String {
    let mut out = String::new();
    if result.picks.is_empty() {
        out.push_str("no candidates\n");
        return out;
    }
    if !result.traces.is_empty() {
        out.push_str("refinement sweeps:\n");
        for trace in &result.traces {
            sweep_table(&mut out, trace);
        }
    }
    let _ = writeln!(out, "selection (budget {} bytes, used {}):", result.budget, result.budget_used);
    if result.fallback {
        out.push_str("  no selection fits the budget; falling back to host-only execution\n");
    }
    for c in &result.picks {
        let _ = writeln!(
            out,
            "  [{}] {}: total {:.6e} s, device memory {} bytes",
            c.id,
            c.description(),
            c.predicted.total_s(),
            c.resource_cost
        );
    }
    let _ = write!(out, "predicted latency {:.6e} s", result.predicted_total_s);
    if let Some(s) = result.predicted_speedup {
        let _ = write!(out, ", speedup {s:.3}x over host only");
    }
    out.push('\n');
    let s = &result.search_stats;
    let _ = writeln!(
        out,
        "search: {} nodes explored, {} pruned by bound, {} pruned as infeasible",
        s.explored, s.pruned_bound, s.pruned_infeasible
    );
    out
}
