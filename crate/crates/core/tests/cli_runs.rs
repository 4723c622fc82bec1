use std::path::Path;
use std::process::Command;

use topofreq::cli::RunManifest;

fn topofreq(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_topofreq")).args(args).env_remove("TOPOFREQ_WORKERS").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn chern_prints_integer() {
    let dir = tempfile::tempdir().unwrap();
    let out = topofreq(&["chern", "--m", "0.9", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "C = 1");
    assert!(dir.path().join("chern.json").exists());
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let bad = write(dir.path(), "bad.toml", "[drive]\nspeed = 1\n");
    assert_eq!(topofreq(&["gap", "--config", &bad, "--out", d]).status.code(), Some(2));
    assert_eq!(topofreq(&["chern", "--m", "-0.01", "--out", d]).status.code(), Some(3));
    assert_eq!(topofreq(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn trajectory_outputs_are_reproducible_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[drive]\nm = 0.9\n[integration]\nt_final_s = 2e-5\nrecord_stride = 10\n[noise]\nt2star_s = 1e-7\n[dd]\n[ensemble]\ninstances = 6\nbase_seed = 42\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(topofreq(&["trajectory", "--config", &cfg, "--out", a.to_str().unwrap(), "--workers", "1"]).status.success());
    assert!(topofreq(&["trajectory", "--config", &cfg, "--out", b.to_str().unwrap(), "--workers", "3"]).status.success());
    let ca = std::fs::read(a.join("trajectory.csv")).unwrap();
    assert_eq!(ca, std::fs::read(b.join("trajectory.csv")).unwrap());
    let text = String::from_utf8(ca).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "t_us,e1_2pi_mhz,e2_2pi_mhz,fidelity");

    let man: RunManifest = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let parsed = man.parsed_config().unwrap();
    assert_eq!(parsed, topofreq::config::parse_config(Path::new(&cfg)).unwrap());
    assert_eq!(man.seeds, (0..6u64).map(|i| 42 ^ i).collect::<Vec<_>>());
    assert!(man.outputs.iter().all(|p| p.exists()));
}

#[test]
fn sweep_and_htraj_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[integration]\nt_final_s = 2e-5\nrecord_stride = 10\n[sweep]\nm_values = [0.9, 3.0]\ntau_s = [1e-6, 1e-3]\n[noise]\n[dd]\n[ensemble]\ninstances = 2\n",
    );
    let d = dir.path().to_str().unwrap();
    assert!(topofreq(&["sweep-m", "--config", &cfg, "--out", d]).status.success());
    assert!(topofreq(&["sweep-tau", "--config", &cfg, "--out", d]).status.success());
    assert!(topofreq(&["htraj", "--config", &cfg, "--out", d]).status.success());
    for f in ["sweep_m.csv", "sweep_m_series.csv", "sweep_m.json", "sweep_tau.csv", "sweep_tau_series.csv", "htraj.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("sweep_tau.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().nth(1).unwrap().starts_with("tau_s,"));
    let h = std::fs::read_to_string(dir.path().join("htraj.csv")).unwrap();
    assert_eq!(h.lines().nth(1).unwrap(), "t_us,hx_rad_s,hy_rad_s,hz_rad_s");
}
