use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn irs_illum(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irs-illum"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.txt");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn verify_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = irs_illum(dir.path(), &["verify", "--trials", "10"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = fs::read_to_string(dir.path().join("verify_report.txt")).unwrap();
    assert!(report.contains("RESULT: PASS"));
    assert!(dir.path().join("manifest.txt").exists());
}

#[test]
fn corrupted_convention_fails_verify_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = irs_illum(
        dir.path(),
        &["verify", "--trials", "5", "--corrupt-phase-convention"],
    );
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL  consistency"), "{stdout}");
}

#[test]
fn validation_errors_exit_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "irs.colour = red\n");
    let out = irs_illum(dir.path(), &["verify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));

    let out = irs_illum(
        dir.path(),
        &["snr-sweep", "--start-m", "1", "--stop-m", "-1"],
    );
    assert_eq!(out.status.code(), Some(1));

    let out = irs_illum(dir.path(), &["protocol-sim"]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "blockage diameter has no default"
    );

    let out = irs_illum(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn high_carrier_needs_explicit_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "carrier.frequency_hz = 28e9\n");
    let args = [
        "snr-sweep",
        "--config",
        &cfg,
        "--start-m",
        "0",
        "--stop-m",
        "0",
        "--points",
        "1",
    ];
    let out = irs_illum(dir.path(), &args);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--enable-28ghz"));
    let mut gated = args.to_vec();
    gated.push("--enable-28ghz");
    let out = irs_illum(dir.path(), &gated);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn snr_map_writes_heatmap_and_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = irs_illum(
        dir.path(),
        &["snr-map", "--points", "9", "--half-width-m", "4"],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let pgm = fs::read(dir.path().join("snr_map.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n9 9\n255\n"));
    assert_eq!(pgm.len(), b"P5\n9 9\n255\n".len() + 81);
    let range = fs::read_to_string(dir.path().join("snr_map.range.txt")).unwrap();
    assert!(range.contains("white_db"));
    assert_eq!(
        fs::read_to_string(dir.path().join("snr_map.csv"))
            .unwrap()
            .lines()
            .count(),
        82
    );
}

#[test]
fn manifest_records_seed_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "blockage.diameter_m = 10\n");
    let out = irs_illum(
        dir.path(),
        &["protocol-sim", "--config", &cfg, "--seed", "42"],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.starts_with("tool = irs-illum "));
    assert!(manifest.contains("seed = 42"));
    assert!(manifest.contains("run.seed = 42"));
    assert!(manifest.contains("blockage.diameter_m = 10"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = write_config(a.path(), "blockage.diameter_m = 12\n");
    let runs: [(&[&str], &str); 3] = [
        (&["protocol-sim", "--seed", "7"], "protocol_trace.csv"),
        (
            &[
                "overhead-vs-snr",
                "--seeds",
                "4",
                "--gamma-thr-db",
                "5,10",
                "--grid-spacing-m",
                "0.5",
            ],
            "overhead_vs_snr.csv",
        ),
        (
            &["min-power", "--d-blk-m", "2,4", "--grid-spacing-m", "0.25"],
            "min_power.csv",
        ),
    ];
    for (args, file) in runs {
        let mut full = args.to_vec();
        full.extend(["--config", &cfg]);
        for dir in [a.path(), b.path()] {
            let out = irs_illum(dir, &full);
            assert_eq!(
                out.status.code(),
                Some(0),
                "{}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs between runs");
    }
}
