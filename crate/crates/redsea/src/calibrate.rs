//! Host leaf-solve microbenchmarks.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use redsea_core::linalg::{random_rhs, random_well_conditioned, ts_solve_block, DenseMatrix, LinalgError};

use crate::io::{CalibrationEntry, CalibrationTable};

/// Timings below this are dominated by timer resolution.
pub const TIMER_FLOOR_S: f64 = 10e-6;

pub const DEFAULT_RUNS: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub leaf_size: usize,
    /// Median of the runs.
    pub seconds: f64,
    pub runs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub measurements: Vec<Measurement>,
    pub warnings: Vec<String>,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Splits `b` into `parts` column blocks of near-equal width.
fn column_chunks(b: &DenseMatrix, parts: usize) -> Vec<DenseMatrix> {
    let cols = b.cols();
    let parts = parts.clamp(1, cols.max(1));
    (0..parts)
        .map(|k| {
            let (lo, hi) = (k * cols / parts, (k + 1) * cols / parts);
            DenseMatrix::from_fn(b.rows(), hi - lo, |r, c| b.get(r, lo + c)).expect("finite copy")
        })
        .collect()
}

/// One timed solve of `l · X = b`, right-hand sides split across `cores` threads.
fn timed_solve(l: &redsea_core::linalg::LowerTriangular, b: &DenseMatrix, cores: usize) -> Result<f64, LinalgError> {
    let mut chunks = column_chunks(b, cores);
    let start = Instant::now();
    if chunks.len() == 1 {
        ts_solve_block(l.tri_view(), chunks[0].view_mut())?;
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunks
                .iter_mut()
                .map(|c| s.spawn(move || ts_solve_block(l.tri_view(), c.view_mut())))
                .collect();
            handles.into_iter().try_for_each(|h| h.join().expect("solver thread"))
        })?;
    }
    Ok(start.elapsed().as_secs_f64())
}

/// Median wall time of `runs` leaf solves for every size, on random
/// well-conditioned inputs with `rhs` right-hand sides.
pub fn calibrate(sizes: &[usize], rhs: usize, cores: usize, runs: usize, seed: u64) -> Result<Calibration, LinalgError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut measurements = Vec::with_capacity(sizes.len());
    let mut warnings = Vec::new();
    for &size in sizes {
        let l = random_well_conditioned(size, &mut rng);
        let b = random_rhs(size, rhs, &mut rng);
        let times = (0..runs.max(1)).map(|_| timed_solve(&l, &b, cores)).collect::<Result<Vec<_>, _>>()?;
        if times.iter().any(|&t| t < TIMER_FLOOR_S) {
            warnings.push(format!(
                "leaf size {size}: a run took under {} us; the timing is near the timer resolution",
                TIMER_FLOOR_S * 1e6
            ));
        }
        measurements.push(Measurement {
            leaf_size: size,
            seconds: median(&times),
            runs: times,
        });
    }
    Ok(Calibration { measurements, warnings })
}

/// Leaf sizes `n / 2^i` for `i = 0 ..= max_iteration`, stopping at one row.
pub fn leaf_sizes(n: usize, max_iteration: u32) -> Vec<usize> {
    (0..=max_iteration.min(redsea_core::decomposition::MAX_ITERATION))
        .map(|i| n >> i)
        .take_while(|&s| s >= 1)
        .collect()
}

/// Measures `TS(i)` for a system of size `n`.
pub fn calibrate_table(n: usize, rhs: usize, cores: usize, max_iteration: u32, seed: u64) -> Result<(CalibrationTable, Vec<String>), LinalgError> {
    let sizes = leaf_sizes(n, max_iteration);
    let cal = calibrate(&sizes, rhs, cores, DEFAULT_RUNS, seed)?;
    let entries = cal
        .measurements
        .iter()
        .enumerate()
        .map(|(i, m)| CalibrationEntry {
            iteration: i as u32,
            leaf_size: m.leaf_size,
            seconds: m.seconds,
        })
        .collect();
    Ok((CalibrationTable { n, rhs, cores, entries }, cal.warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn sizes_halve_down_to_one() {
        assert_eq!(leaf_sizes(8, 10), vec![8, 4, 2, 1]);
        assert_eq!(leaf_sizes(100, 2), vec![100, 50, 25]);
    }

    #[test]
    fn chunks_cover_every_column() {
        let b = DenseMatrix::from_fn(2, 7, |r, c| (r * 7 + c) as f64).unwrap();
        let chunks = column_chunks(&b, 3);
        assert_eq!(chunks.iter().map(DenseMatrix::cols).collect::<Vec<_>>(), vec![2, 2, 3]);
        assert_eq!(chunks[2].get(1, 2), 13.0);
        assert_eq!(column_chunks(&b, 50).len(), 7);
    }

    #[test]
    fn size_one_is_near_zero_and_flagged() {
        let cal = calibrate(&[1], 1, 1, 5, 42).unwrap();
        assert!(cal.measurements[0].seconds < 1e-3);
        assert_eq!(cal.measurements[0].runs.len(), 5);
        assert_eq!(cal.warnings.len(), 1);
    }
}
