//! End-to-end checks of the command-line interface: exit codes, output
//! files, and the data/diagnostics split between stdout and stderr.

use std::path::Path;
use std::process::{Command, Output};

fn varen(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varen"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to spawn varen")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

const GOOD_SCENE: &str = r#"<scene name="demo" order="0">
  <source name="s">
    <position t="0" x="2" y="0" z="0"/>
    <sine f="440" a="0.5"/>
  </source>
  <receiver name="out" format="vmic">
    <position t="0" x="0" y="0" z="0"/>
  </receiver>
</scene>"#;

const DUP_SCENE: &str = r#"<scene>
  <source name="x"><position t="0" x="1" y="0" z="0"/></source>
  <receiver name="x" format="vmic"><position t="0" x="0" y="0" z="0"/></receiver>
</scene>"#;

#[test]
fn render_writes_wav_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("scene.xml"), GOOD_SCENE).unwrap();
    let out = varen(
        &[
            "render",
            "--scene",
            "scene.xml",
            "--duration",
            "0.5",
            "--out",
            "out.wav",
            "--diag",
            "report.txt",
            "--csv",
            "blocks.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(dir.path().join("out.wav").exists());
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("realtime factor"));
    let csv = std::fs::read_to_string(dir.path().join("blocks.csv")).unwrap();
    assert!(csv.starts_with("block,"));
    assert!(stdout(&out).contains("wrote out.wav"));
}

#[test]
fn render_json_mode_emits_machine_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("scene.xml"), GOOD_SCENE).unwrap();
    let out = varen(
        &["--json", "render", "--scene", "scene.xml", "--duration", "0.25", "--out", "o.wav"],
        dir.path(),
    );
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert!(v["blocks"].as_u64().unwrap() > 0);
}

#[test]
fn validate_rejects_duplicate_names() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.xml"), DUP_SCENE).unwrap();
    let out = varen(&["validate", "bad.xml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("DUP_NAME"), "stderr: {}", stderr(&out));
}

#[test]
fn validate_accepts_good_scene() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("scene.xml"), GOOD_SCENE).unwrap();
    let out = varen(&["validate", "scene.xml"], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
}

#[test]
fn validate_json_reports_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.xml"), DUP_SCENE).unwrap();
    let out = varen(&["--json", "validate", "bad.xml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["ok"], serde_json::Value::Bool(false));
    let codes: Vec<&str> =
        v["diagnostics"].as_array().unwrap().iter().map(|d| d["code"].as_str().unwrap()).collect();
    assert!(codes.contains(&"DUP_NAME"));
}

#[test]
fn missing_scene_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = varen(&["validate", "nope.xml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_arguments_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = varen(&["render", "--scene"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let out = varen(&["fit-absorption", "--targets", "125;0.1"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn kmax_matches_published_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = varen(
        &[
            "kmax", "--a0", ".096", "--a1", ".014", "--a2", "8e-4", "--a3", "5.3e-4", "--a4",
            "2.7e-5", "--load", "0.9", "--p", "1024", "--n", "48",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let k: f64 = stdout(&out).trim().parse().unwrap();
    assert!((k - 410.0).abs() / 410.0 < 0.03, "k_max = {k}");
}

#[test]
fn fit_absorption_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    // Targets generated from rho = 0.7, delta = 0.3 at octave bands.
    let mut targets = Vec::new();
    for f in [125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0f64] {
        let theta = 2.0 * std::f64::consts::PI * f / 44100.0;
        let denom = ((1.0 - 0.3 * theta.cos()).powi(2) + (0.3 * theta.sin()).powi(2)).sqrt();
        let alpha = (1.0 - 0.7 * 0.7 / denom).powi(2);
        targets.push(format!("{f}:{alpha}"));
    }
    let out = varen(
        &["--json", "fit-absorption", "--targets", &targets.join(",")],
        dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert!((v["rho"].as_f64().unwrap() - 0.7).abs() < 1e-3);
    assert!((v["delta"].as_f64().unwrap() - 0.3).abs() < 1e-3);
}

#[test]
fn fit_model_recovers_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    // Synthetic measurements from known coefficients.
    let coeffs = [0.1, 0.01, 1e-3, 5e-4, 5e-5];
    let mut csv = String::from("K,N,P,format,l_d,rep,tau_P,C\n");
    for k in [1usize, 10, 100] {
        for n in [8usize, 48] {
            for p in [64usize, 1024] {
                let tau = coeffs[0]
                    + coeffs[1] * k as f64
                    + coeffs[2] * k as f64 * p as f64
                    + coeffs[3] * n as f64 * p as f64
                    + coeffs[4] * n as f64 * k as f64 * p as f64;
                csv.push_str(&format!("{k},{n},{p},hoa2d,10,0,{tau},{}\n", tau / p as f64));
            }
        }
    }
    std::fs::write(dir.path().join("m.csv"), csv).unwrap();
    let out = varen(&["--json", "fit-model", "--csv", "m.csv"], dir.path());
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    for (key, want) in [("a0", 0.1), ("a1", 0.01), ("a2", 1e-3), ("a3", 5e-4), ("a4", 5e-5)] {
        let got = v[key].as_f64().unwrap();
        assert!((got - want).abs() / want < 0.01, "{key}: {got} vs {want}");
    }
}

#[test]
fn bench_smoke_emits_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = varen(
        &[
            "bench", "--k", "1", "--n", "8", "--p", "1024", "--formats", "nsp", "--ld", "1",
            "--reps", "1", "--inner", "1", "--duration", "0.2",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let data = stdout(&out);
    assert!(data.starts_with("K,N,P,format,l_d,rep,tau_P,C"), "{data}");
    assert_eq!(data.lines().count(), 2);
}

#[test]
fn info_summarizes_scene() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("scene.xml"), GOOD_SCENE).unwrap();
    let out = varen(&["--json", "info", "scene.xml"], dir.path());
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["sources"], 1);
    assert_eq!(v["receivers"], 1);
    assert!(v["delay_memory_bytes"].as_u64().unwrap() > 0);
}
