use std::process::Command;

fn wpmec(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_wpmec")).args(args).output().unwrap()
}

#[test]
fn baseline_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let file = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    for run in ["a", "b"] {
        let out = wpmec(&[
            "baseline",
            "--kind",
            "no_irs",
            "--seed",
            "7",
            "--quiet",
            "--out",
            &file(&format!("{run}.csv")),
            "--trace",
            &file(&format!("{run}.trace.csv")),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for ext in ["csv", "trace.csv"] {
        let a = std::fs::read(file(&format!("a.{ext}"))).unwrap();
        let b = std::fs::read(file(&format!("b.{ext}"))).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
    }
}

#[test]
fn summary_reports_feasibility() {
    let out = wpmec(&["baseline", "--kind", "no_irs", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("objective_bits"));
    assert!(text.contains("feasibility     ok"), "{text}");
}

#[test]
fn missing_config_exits_2_with_path() {
    let out = wpmec(&["--config", "/no/such/file.cfg", "solve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/file.cfg"));
}

#[test]
fn unknown_flag_exits_2() {
    let out = wpmec(&["solve", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("usage"));
}

#[test]
fn empty_seed_list_rejected_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.sweep");
    std::fs::write(&spec, "param = P_max\nvalues = 10, 20\nseeds =\n").unwrap();
    let out = wpmec(&["sweep", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn sweep_writes_rows_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.sweep");
    let csv = dir.path().join("rows.csv");
    std::fs::write(&spec, "param = P_max\nvalues = 10, 40\nseeds = 0..2\nschemes = no_irs\n").unwrap();
    let out = wpmec(&["sweep", "--spec", spec.to_str().unwrap(), "--out", csv.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = wpmec::io::read_rows(&csv).unwrap();
    let keys: Vec<(f64, u64)> = rows.iter().map(|r| (r.value, r.seed)).collect();
    assert_eq!(keys, vec![(10.0, 0), (10.0, 1), (40.0, 0), (40.0, 1)]);
    assert!(rows.iter().all(|r| r.status == "ok"));
    // paired channels: more transmit power never hurts here
    assert!(rows[2].objective_bits >= rows[0].objective_bits);
    assert!(rows[3].objective_bits >= rows[1].objective_bits);
}

#[test]
fn bad_config_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "eta = 3\n").unwrap();
    let out = wpmec(&["--config", cfg.to_str().unwrap(), "baseline", "--kind", "no_irs"]);
    assert_eq!(out.status.code(), Some(2));
}
