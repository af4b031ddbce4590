use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tpns_core::diagnostics::RunManifest;

fn tpns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpns")).args(args).output().expect("binary runs")
}

fn manifests() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../manifests")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("tpns-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn shipped_manifests_parse() {
    let mut n = 0;
    for e in std::fs::read_dir(manifests()).unwrap() {
        let p = e.unwrap().path();
        if p.file_name().unwrap() == "forcing.toml" {
            continue;
        }
        let m = RunManifest::from_path(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert!(m.experiment.is_some(), "{}", p.display());
        m.linear_config(m.seed).unwrap();
        n += 1;
    }
    assert!(n >= 8);
}

#[test]
fn custom_motion_manifest_describes_its_comment() {
    let m = RunManifest::from_path(&manifests().join("custom_motion.toml")).unwrap();
    let spec = m.motion.as_ref().unwrap().to_spec().unwrap();
    let w = spec.omega_at(0.25);
    assert!((w[0] - 0.3).abs() < 1e-12 && w[1].abs() < 1e-12, "{w:?}");
    let x = spec.xi_at(0.0);
    assert!((x[0] - 0.2).abs() < 1e-12 && (x[1] - 0.05).abs() < 1e-12, "{x:?}");
    assert_eq!(m.forcing().unwrap().forces.len(), 1);
}

#[test]
fn run_then_report() {
    let out = scratch("run");
    let manifest = manifests().join("custom_motion.toml");
    let o = tpns(&["solve-linear", "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let stdout = text(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}\n{}", text(&o.stderr));
    assert!(stdout.contains("linear:") && stdout.contains("PASS"), "{stdout}");
    for f in ["ledger.jsonl", "report.json", "field.bin", "manifest.toml"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let ledger = std::fs::read(out.join("ledger.jsonl")).unwrap();

    let o = tpns(&["report", "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert_eq!(std::fs::read(out.join("ledger.jsonl")).unwrap(), ledger);

    // the written manifest runs again to the same ledger
    let again = scratch("again");
    let o = tpns(&[
        "solve-linear",
        "--manifest",
        out.join("manifest.toml").to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert_eq!(std::fs::read(again.join("ledger.jsonl")).unwrap(), ledger);
    for d in [out, again] {
        std::fs::remove_dir_all(d).unwrap();
    }
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let dir = scratch("bad");
    let src = std::fs::read_to_string(manifests().join("basis.toml")).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, src.replace("k = 16", "k = 16\nwobble = 2")).unwrap();
    let out = dir.join("out");
    let o = tpns(&["basis", "--manifest", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("wobble"), "{}", text(&o.stderr));
    let err = std::fs::read_to_string(out.join("error.json")).unwrap();
    assert!(err.contains("\"manifest\"") && err.contains("wobble"), "{err}");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn subcommand_must_match_the_selector() {
    let dir = scratch("mismatch");
    let m = manifests().join("basis.toml");
    let o = tpns(&["oseen", "--manifest", m.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("basis"), "{}", text(&o.stderr));
    assert!(dir.join("error.json").is_file());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn report_without_a_run_is_an_error() {
    let dir = scratch("empty");
    let m = manifests().join("nonlinear.toml");
    let o = tpns(&["report", "--manifest", m.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("ledger.jsonl"), "{}", text(&o.stderr));
    std::fs::remove_dir_all(dir).unwrap();
}
