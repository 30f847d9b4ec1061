//! End-to-end checks of the `muskat` binary.
#![cfg(feature = "cli")]

use std::path::Path;
use std::process::{Command, Output};

use muskat::cli_io::config::{InitialSpec, SimConfig};
use muskat::cli_io::{read_snapshot, save_config};

fn muskat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muskat")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(path: &Path, out_dir: &Path) {
    let mut cfg = SimConfig::minimal(16, 0.3);
    cfg.report_interval = 0.1;
    cfg.seed = 5;
    cfg.output_dir = out_dir.to_path_buf();
    cfg.quadrature.radial = 16;
    cfg.quadrature.angular = 16;
    let mut spec = InitialSpec::named("random_bandlimited");
    spec.kmax = Some(3);
    spec.slope = Some(0.2);
    cfg.initial = spec;
    save_config(&cfg, path).unwrap();
}

#[test]
fn identity_suite_passes_with_default_seed() {
    let out = muskat(&["verify-identities", "--seed", "7"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn config_runs_are_reproducible_and_reloadable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("sim.toml");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    write_config(&cfg_path, &a);

    let first = muskat(&["run", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let second = muskat(&["run", "--config", cfg_path.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(code(&second), 0);

    let csv_a = std::fs::read(a.join("ledger.csv")).unwrap();
    let csv_b = std::fs::read(b.join("ledger.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert_eq!(std::fs::read(a.join("final.musk")).unwrap(), std::fs::read(b.join("final.musk")).unwrap());
    let header = String::from_utf8_lossy(&csv_a)
        .lines()
        .find(|l| !l.starts_with('#'))
        .unwrap()
        .to_string();
    assert_eq!(
        header,
        "t,h2,h52,lipschitz,d_of_t,de_dt,dissipation_budget,energy_residual,slope_residual"
    );
    assert!(a.join("ledger.json").exists());

    // Continue from the final snapshot as initial data.
    let snap = a.join("final.musk");
    let c = dir.path().join("c");
    let resumed = muskat(&[
        "run",
        "--n",
        "16",
        "--t-final",
        "0.1",
        "--file",
        snap.to_str().unwrap(),
        "--out",
        c.to_str().unwrap(),
    ]);
    assert_eq!(code(&resumed), 0, "{}", String::from_utf8_lossy(&resumed.stderr));
    let start = muskat::cli_io::ledger_io::parse_ledger_csv(&std::fs::read_to_string(c.join("ledger.csv")).unwrap())
        .unwrap()[0];
    let saved = read_snapshot(&snap).unwrap();
    let expected = muskat::norms::sobolev_seminorm(&saved.field, 2.0);
    assert!((start.h2 - expected).abs() <= 1e-14 * expected.max(1.0));
}

#[test]
fn criterion_verdicts() {
    let pass = muskat(&["check-criterion", "--n", "64", "--slope", "5", "--width", "0.5", "--scale", "1e-3"]);
    assert_eq!(code(&pass), 0, "{}", String::from_utf8_lossy(&pass.stdout));
    let fail = muskat(&["check-criterion", "--n", "64", "--slope", "5", "--width", "0.5"]);
    assert_eq!(code(&fail), 1);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&muskat(&[])), 2);
    assert_eq!(code(&muskat(&["run", "--n", "0"])), 2);
    assert_eq!(code(&muskat(&["run", "--profile", "nope", "--n", "16"])), 2);
    assert_eq!(code(&muskat(&["check-criterion", "--profile", "single_mode", "--width", "0.3"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "n = 16\nt_final = 1.0\ntypo_key = 3\n").unwrap();
    let out = muskat(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo_key"));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(code(&muskat(&["--help"])), 0);
    assert_eq!(code(&muskat(&["run", "--help"])), 0);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = muskat::cli_io::load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.validate().unwrap();
            count += 1;
        }
    }
    assert!(count >= 2);
}
