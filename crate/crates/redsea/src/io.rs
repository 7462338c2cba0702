//! Matrix, profile and calibration files.
//!
//! Binary matrices are two little-endian `u64` dimensions followed by the
//! row-major `f64` values. CSV matrices have one row per line and no header.
//! Profiles are TOML (`.toml`, `.cfg`) or JSON; content starting with `{` is
//! always read as JSON.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use redsea_core::costmodel::{DeviceProfile, HostTsLatency};
use redsea_core::linalg::{DenseMatrix, LinalgError};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Matrix { path: PathBuf, source: LinalgError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FileError + '_ {
    move |source| FileError::Io { path: path.to_path_buf(), source }
}

fn parse_err(path: &Path, message: impl ToString) -> FileError {
    FileError::Parse {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Writes through a temporary file in the target directory, then renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), FileError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| FileError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>, FileError> {
    fs::read(path).map_err(io_err(path))
}

fn read_text(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn is_csv(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn matrix_to_bin(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * m.as_slice().len());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn matrix_from_bin(bytes: &[u8]) -> Result<DenseMatrix, String> {
    if bytes.len() < 16 {
        return Err("truncated header".into());
    }
    let dim = |k: usize| u64::from_le_bytes(bytes[k * 8..k * 8 + 8].try_into().expect("8 bytes"));
    let (rows, cols) = (dim(0), dim(1));
    let count = rows.checked_mul(cols).and_then(|c| c.checked_mul(8)).ok_or("dimensions overflow")?;
    let body = &bytes[16..];
    if body.len() as u64 != count {
        return Err(format!("{rows}x{cols} matrix needs {count} data bytes, found {}", body.len()));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    DenseMatrix::new(rows as usize, cols as usize, data).map_err(|e| e.to_string())
}

/// CSV text; values use the shortest representation that reads back exactly.
pub fn matrix_to_csv(m: &DenseMatrix) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in 0..m.rows() {
        w.write_record(m.row(r).iter().map(|v| v.to_string())).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn matrix_from_csv(text: &[u8]) -> Result<DenseMatrix, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| format!("row {}: `{f}`: {e}", line + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows).map_err(|e| e.to_string())
}

/// Reads a matrix, CSV for `.csv` files and binary otherwise.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix, FileError> {
    let bytes = read(path)?;
    if is_csv(path) {
        matrix_from_csv(&bytes)
    } else {
        matrix_from_bin(&bytes)
    }
    .map_err(|m| parse_err(path, m))
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<(), FileError> {
    let bytes = if is_csv(path) { matrix_to_csv(m) } else { matrix_to_bin(m) };
    atomic_write(path, &bytes)
}

/// Parses a profile and checks its invariants.
pub fn parse_profile(text: &str, json: bool) -> Result<DeviceProfile, String> {
    let profile: DeviceProfile = if json || text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| e.to_string())?
    } else {
        toml::from_str(text).map_err(|e| e.to_string())?
    };
    profile.validate().map_err(|e| e.to_string())?;
    Ok(profile)
}

fn is_json(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn load_profile(path: &Path) -> Result<DeviceProfile, FileError> {
    parse_profile(&read_text(path)?, is_json(path)).map_err(|m| parse_err(path, m))
}

pub fn profile_to_string(profile: &DeviceProfile, json: bool) -> String {
    if json {
        let mut s = serde_json::to_string_pretty(profile).expect("profiles serialize");
        s.push('\n');
        s
    } else {
        toml::to_string(profile).expect("profiles serialize")
    }
}

pub fn save_profile(path: &Path, profile: &DeviceProfile) -> Result<(), FileError> {
    atomic_write(path, profile_to_string(profile, is_json(path)).as_bytes())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub iteration: u32,
    pub leaf_size: usize,
    pub seconds: f64,
}

/// Measured `TS(i)` for one system size, reusable across runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub n: usize,
    pub rhs: usize,
    pub cores: usize,
    pub entries: Vec<CalibrationEntry>,
}

impl CalibrationTable {
    /// Latency table indexed by iteration. Entries must be `0, 1, 2, …` in order.
    pub fn to_latency(&self) -> Result<HostTsLatency, String> {
        for (k, e) in self.entries.iter().enumerate() {
            if e.iteration as usize != k {
                return Err(format!("entry {k} has iteration {}", e.iteration));
            }
        }
        Ok(HostTsLatency::Table(self.entries.iter().map(|e| e.seconds).collect()))
    }
}

pub fn load_calibration(path: &Path) -> Result<CalibrationTable, FileError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| parse_err(path, e))
}

pub fn save_calibration(path: &Path, table: &CalibrationTable) -> Result<(), FileError> {
    let mut s = serde_json::to_string_pretty(table).expect("tables serialize");
    s.push('\n');
    atomic_write(path, s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_rejects_bad_lengths() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let mut bytes = matrix_to_bin(&m);
        assert_eq!(matrix_from_bin(&bytes).unwrap(), m);
        bytes.pop();
        assert!(matrix_from_bin(&bytes).is_err());
        assert!(matrix_from_bin(&[0; 8]).is_err());
    }

    #[test]
    fn csv_reports_bad_fields() {
        assert!(matrix_from_csv(b"1,2\n3,x\n").unwrap_err().contains("row 2"));
        assert!(matrix_from_csv(b"1,2\n3\n").is_err());
        let m = matrix_from_csv(b" 1, 0.5\n-2,1e-3\n").unwrap();
        assert_eq!(m.get(1, 1), 1e-3);
    }

    #[test]
    fn profiles_are_validated() {
        let bad = r#"{"host_ts_latency":[1.0],"device_gemm_rate":0,"h2d_bandwidth":1,"d2h_bandwidth":1,
            "link_latency":0,"sync_overhead":0,"host_cores":1,"element_bytes":8}"#;
        assert!(parse_profile(bad, false).unwrap_err().contains("device_gemm_rate"));
        assert!(parse_profile("device_gemm_rate = 1", false).is_err());
    }

    #[test]
    fn calibration_entries_must_be_consecutive() {
        let t = CalibrationTable {
            n: 8,
            rhs: 8,
            cores: 1,
            entries: vec![CalibrationEntry { iteration: 1, leaf_size: 4, seconds: 1.0 }],
        };
        assert!(t.to_latency().is_err());
    }
}
