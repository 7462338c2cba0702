//! Plot-ready data files in gnuplot's indexed-block layout: one block per
//! model, blocks separated by two blank lines, `#` comment headers.

use std::path::{Path, PathBuf};

use redsea_core::decomposition::Model;

use crate::format::fmt_g;
use crate::io::{atomic_write, FileError};
use crate::sweep::SweepRow;

pub const LATENCY_FILE: &str = "latency.dat";
pub const SPEEDUP_FILE: &str = "speedup.dat";
pub const BREAKDOWN_FILE: &str = "breakdown.dat";

/// Per-row component breakdown; `sum` is the exact component sum.
pub fn breakdown(row: &SweepRow) -> [f64; 6] {
    let e = &row.estimate;
    let parts = [e.host_comp_s(), e.device_comp_s(), e.h2d_s(), e.d2h_s(), e.sync_s()];
    [parts[0], parts[1], parts[2], parts[3], parts[4], parts.iter().sum()]
}

fn blocks(rows: &[SweepRow], header: &str, line: impl Fn(&SweepRow) -> Vec<f64>) -> String {
    let mut models: Vec<Model> = Vec::new();
    for r in rows {
        if !models.contains(&r.model) {
            models.push(r.model);
        }
    }
    let mut out = String::new();
    for (k, model) in models.iter().enumerate() {
        if k > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!("# {model}\n# {header}\n"));
        for r in rows.iter().filter(|r| r.model == *model) {
            let values: Vec<String> = line(r).into_iter().map(fmt_g).collect();
            out.push_str(&format!("{} {}\n", r.refinement, values.join(" ")));
        }
    }
    out
}

pub fn latency_data(rows: &[SweepRow]) -> String {
    blocks(rows, "refinement total_s", |r| vec![r.estimate.total_s()])
}

pub fn speedup_data(rows: &[SweepRow]) -> String {
    blocks(rows, "refinement speedup", |r| vec![r.speedup])
}

pub fn breakdown_data(rows: &[SweepRow]) -> String {
    blocks(rows, "refinement host_comp_s device_comp_s h2d_s d2h_s sync_s sum_s", |r| breakdown(r).to_vec())
}

/// Writes the latency, speedup and breakdown files into `dir`, returning their paths.
pub fn emit_figure_data(rows: &[SweepRow], dir: &Path) -> Result<Vec<PathBuf>, FileError> {
    std::fs::create_dir_all(dir).map_err(|source| FileError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let files = [
        (LATENCY_FILE, latency_data(rows)),
        (SPEEDUP_FILE, speedup_data(rows)),
        (BREAKDOWN_FILE, breakdown_data(rows)),
    ];
    let mut paths = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        atomic_write(&path, text.as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}
