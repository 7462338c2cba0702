use proptest::prelude::*;
use redsea::cli::paperlike_profile;
use redsea::io::{
    load_calibration, load_profile, matrix_from_bin, matrix_from_csv, matrix_to_bin, matrix_to_csv, read_matrix, save_calibration,
    save_profile, write_matrix, CalibrationEntry, CalibrationTable,
};
use redsea_core::costmodel::HostTsLatency;
use redsea_core::linalg::{seeded_problem, DenseMatrix};

#[test]
fn profile_survives_save_and_load_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let mut tabled = paperlike_profile();
    tabled.host_ts_latency = HostTsLatency::Table(vec![1.5, 0.75, 0.3125, 1.0 / 3.0]);
    for profile in [paperlike_profile(), tabled] {
        for name in ["p.toml", "p.json", "p.cfg"] {
            let path = dir.path().join(name);
            save_profile(&path, &profile).unwrap();
            let once = load_profile(&path).unwrap();
            save_profile(&path, &once).unwrap();
            let twice = load_profile(&path).unwrap();
            assert_eq!(once, profile, "{name}");
            assert_eq!(twice, profile, "{name}");
        }
    }
}

#[test]
fn calibration_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let table = CalibrationTable {
        n: 64,
        rhs: 64,
        cores: 2,
        entries: (0..3)
            .map(|i| CalibrationEntry { iteration: i, leaf_size: 64 >> i, seconds: 0.1 / f64::from(i + 1) })
            .collect(),
    };
    let path = dir.path().join("cal.json");
    save_calibration(&path, &table).unwrap();
    assert_eq!(load_calibration(&path).unwrap(), table);
}

#[test]
fn matrix_files_round_trip_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let (_, b) = seeded_problem(17, 5, 3);
    for name in ["b.bin", "b.csv"] {
        let path = dir.path().join(name);
        write_matrix(&path, &b).unwrap();
        assert_eq!(read_matrix(&path).unwrap(), b, "{name}");
    }
}

#[test]
fn missing_file_is_an_error() {
    assert!(read_matrix(std::path::Path::new("/nonexistent/m.bin")).is_err());
    assert!(load_profile(std::path::Path::new("/nonexistent/p.toml")).is_err());
}

proptest! {
    #[test]
    fn encodings_are_lossless(rows in 1usize..8, cols in 1usize..8, seed in any::<u64>(), scale in -300i32..300) {
        let mut state = seed;
        let m = DenseMatrix::from_fn(rows, cols, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 10f64.powi(scale)
        })
        .unwrap();
        prop_assert_eq!(&matrix_from_bin(&matrix_to_bin(&m)).unwrap(), &m);
        prop_assert_eq!(&matrix_from_csv(&matrix_to_csv(&m)).unwrap(), &m);
    }
}
