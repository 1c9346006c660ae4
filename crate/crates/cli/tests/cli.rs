use std::path::Path;
use std::process::{Command, Output};

fn tidelink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tidelink")).args(args).output().expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("scenario.toml");
    std::fs::write(
        &path,
        "seed = 9\nsea_state = [4, 6]\n\n[radio]\nantennas = 2\nris_elements = 8\n\n[optimizer]\nsdp_tol = 1e-4\n",
    )
    .unwrap();
    path.to_str().unwrap().to_owned()
}

fn sweep(cfg: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["sweep", "--config", cfg, "--var", "hr0", "--values", "2,10", "--trials", "4"];
    args.extend_from_slice(&["--out", out.to_str().unwrap()]);
    args.extend_from_slice(extra);
    tidelink(&args)
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("sweep.csv");
    let res = sweep(&cfg, &out, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("sweep_var,value,sea_state,mean_rate_ris"));
    assert!(lines[1].starts_with("hr0,2,4,"));
    assert!(lines[4].starts_with("hr0,10,6,"));
    assert!(lines[1].ends_with(",4,9"));
}

#[test]
fn csv_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    assert!(sweep(&cfg, &a, &["--threads", "1"]).status.success());
    assert!(sweep(&cfg, &b, &["--threads", "4"]).status.success());
    assert!(sweep(&cfg, &c, &["--threads", "1"]).status.success());
    let a = std::fs::read(a).unwrap();
    assert_eq!(a, std::fs::read(b).unwrap());
    assert_eq!(a, std::fs::read(c).unwrap());
}

#[test]
fn seed_flag_changes_the_draws() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(sweep(&cfg, &a, &[]).status.success());
    assert!(sweep(&cfg, &b, &["--seed", "10"]).status.success());
    assert_ne!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn structured_output_is_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("sweep.json");
    assert!(sweep(&cfg, &out, &["--format", "structured"]).status.success());
    let table = tidelink_core::harness::read_structured(&out).unwrap();
    assert_eq!(table.cells.len(), 4);
    assert_eq!(table.cells[0].records.len(), 4);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\nris_height = 30\n").unwrap();
    let out = dir.path().join("x.csv");
    let res = sweep(bad.to_str().unwrap(), &out, &[]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("ris_height"));

    let cfg = small_config(dir.path());
    let o = out.to_str().unwrap();
    for args in [
        vec!["sweep", "--config", &cfg, "--var", "depth", "--values", "1", "--out", o],
        vec!["sweep", "--config", &cfg, "--var", "n", "--values", "2.5", "--out", o],
        vec!["sweep", "--config", &cfg, "--var", "sea", "--values", "12", "--out", o],
        vec!["sweep", "--config", &cfg, "--var", "hr0", "--values", "5", "--out", o, "--format", "xml"],
        vec!["sweep", "--config", "/nonexistent.toml", "--var", "hr0", "--values", "5", "--out", o],
        vec!["sweep", "--var", "hr0", "--values", "5"],
        vec!["frobnicate"],
    ] {
        assert_eq!(tidelink(&args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn unwritable_output_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let res = sweep(&cfg, Path::new("/nonexistent/dir/out.csv"), &[]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("/nonexistent/dir/out.csv"));
}

#[test]
fn los_prob_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("los.csv");
    let res = tidelink(&[
        "los-prob", "--states", "3,>8", "--heights", "2,30", "--samples", "500", "--out", out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = rows.lines().collect();
    assert_eq!(lines[0], "sea_state,rx_mast_height_m,tx_mast_height_m,distance_m,los_probability,samples,seed");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("3,2.0,2.0,1000.0,1.0,"));
    assert!(lines[3].starts_with(">8,2.0"));
}

#[test]
fn pathloss_table() {
    let res = tidelink(&["pathloss", "--d-min", "100", "--d-max", "1000", "--step", "100"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').filter_map(|s| s.parse().ok()).collect();
        // distance, los, nlos, free space, shadowed los, shadowed nlos
        assert!(f[2] > f[3], "NLoS below free space: {line}");
    }
    assert_eq!(tidelink(&["pathloss", "--step", "0"]).status.code(), Some(1));
}

#[test]
fn validate_passes() {
    let res = tidelink(&["validate"]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(res.status.success(), "{stdout}");
    assert!(stdout.contains("10/10 checks passed"));
}

#[test]
fn help_exits_cleanly() {
    let res = tidelink(&["--help"]);
    assert_eq!(res.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&res.stdout).contains("los-prob"));
}

#[test]
fn shipped_config_matches_the_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let cfg = tidelink_core::harness::ScenarioConfig::load(&path).unwrap();
    let d = tidelink_core::harness::ScenarioConfig::default();
    assert_eq!(cfg.geometry, d.geometry);
    assert_eq!(cfg.radio.antennas, d.radio.antennas);
    assert!((cfg.radio.sigma2 - d.radio.sigma2).abs() / d.radio.sigma2 < 1e-12);
    assert!((cfg.energy.p_max - d.energy.p_max).abs() < 1e-9);
    assert_eq!(cfg.optimizer, d.optimizer);
    assert_eq!(cfg.sea_states, d.sea_states);
}
