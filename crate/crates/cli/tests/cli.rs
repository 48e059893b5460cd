use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use colombeau_wave_cli::bundle::{Manifest, CSV_COLUMNS, MANIFEST, RUNTIMES};
use colombeau_wave_cli::exit;
use tempfile::TempDir;

fn cwave(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cwave"))
        .args(args)
        .current_dir(dir)
        .env_remove("CWAVE_OUT_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

const SMOOTH: &str = r#"{ "output_dir": "out", "scenarios": [ { "id": "smooth_consistency" } ] }"#;

#[test]
fn smooth_run_writes_a_verified_bundle() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMOOTH);
    let o = cwave(tmp.path(), &["run", &cfg]);
    assert_eq!(code(&o), exit::PASS, "{}", String::from_utf8_lossy(&o.stderr));

    let out = tmp.path().join("out");
    let mut names: Vec<String> =
        fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert_eq!(names, ["manifest.json", "runtimes.json", "smooth_consistency.csv"]);

    let csv = fs::read_to_string(out.join("smooth_consistency.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_COLUMNS.join(","));
    assert!(csv.lines().count() > 1);

    let m = Manifest::load(&out).unwrap();
    m.verify(&out).unwrap();
    assert_eq!(m.exit_code, exit::PASS);
    assert!(m.files.iter().all(|f| f.path != RUNTIMES));

    let r = cwave(tmp.path(), &["report", "out"]);
    assert_eq!(code(&r), exit::PASS);
    assert!(String::from_utf8_lossy(&r.stdout).contains("smooth_consistency"));
}

#[test]
fn plots_are_listed_in_the_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMOOTH);
    assert_eq!(code(&cwave(tmp.path(), &["run", &cfg, "--plots"])), exit::PASS);
    let out = tmp.path().join("out");
    let m = Manifest::load(&out).unwrap();
    assert!(m.files.iter().any(|f| f.path.ends_with(".svg")));
    m.verify(&out).unwrap();
}

#[test]
fn environment_overrides_output_dir() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMOOTH);
    let o = Command::new(env!("CARGO_BIN_EXE_cwave"))
        .args(["run", &cfg])
        .current_dir(tmp.path())
        .env("CWAVE_OUT_DIR", "elsewhere")
        .output()
        .unwrap();
    assert_eq!(code(&o), exit::PASS);
    assert!(tmp.path().join("elsewhere").join(MANIFEST).exists());
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn failed_checks_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{ "output_dir": "out", "scenarios": [
            { "id": "smooth_consistency", "tolerances": { "analytic_c": 1e-30 } } ] }"#,
    );
    let o = cwave(tmp.path(), &["run", &cfg]);
    assert_eq!(code(&o), exit::FAIL, "{}", String::from_utf8_lossy(&o.stderr));
    let m = Manifest::load(&tmp.path().join("out")).unwrap();
    assert_eq!(m.exit_code, exit::FAIL);
}

#[test]
fn violated_hypothesis_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{ "output_dir": "out", "scenarios": [ { "id": "delta_wave", "f": { "kind": "linear", "k": 1.0 } } ] }"#,
    );
    for sub in ["run", "validate"] {
        let o = cwave(tmp.path(), &[sub, &cfg]);
        assert_eq!(code(&o), exit::ERROR, "{sub}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("bounded"), "{sub}");
    }
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn unknown_keys_are_reported_with_their_path() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{ "scenarios": [ { "id": "smooth_consistency" }, { "id": "delta_wave", "params": { "bogus": 1 } } ] }"#,
    );
    let o = cwave(tmp.path(), &["validate", &cfg]);
    assert_eq!(code(&o), exit::ERROR);
    assert!(String::from_utf8_lossy(&o.stderr).contains("scenarios[1].params.bogus"));
}

#[test]
fn validate_accepts_the_shipped_suite() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = TempDir::new().unwrap();
    for name in ["default_suite.json", "smooth_only.json"] {
        let path = configs.join(name);
        let o = cwave(tmp.path(), &["validate", path.to_str().unwrap()]);
        assert_eq!(code(&o), exit::PASS, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let bad = configs.join("unbounded_delta_wave.json");
    assert_eq!(code(&cwave(tmp.path(), &["validate", bad.to_str().unwrap()])), exit::ERROR);
}

#[test]
fn report_rejects_tampered_and_missing_bundles() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMOOTH);
    assert_eq!(code(&cwave(tmp.path(), &["run", &cfg])), exit::PASS);
    let csv = tmp.path().join("out/smooth_consistency.csv");
    let mut bytes = fs::read(&csv).unwrap();
    bytes.extend_from_slice(b"tampered\n");
    fs::write(&csv, bytes).unwrap();
    let o = cwave(tmp.path(), &["report", "out"]);
    assert_eq!(code(&o), exit::ERROR);
    assert!(String::from_utf8_lossy(&o.stderr).contains("smooth_consistency.csv"));

    fs::create_dir(tmp.path().join("empty")).unwrap();
    assert_eq!(code(&cwave(tmp.path(), &["report", "empty"])), exit::ERROR);
    assert_eq!(code(&cwave(tmp.path(), &["run", "missing.json"])), exit::ERROR);
}
