use std::path::Path;
use std::process::{Command, Output};

fn muxphoton(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muxphoton"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn eval_succeeds_with_defaults() {
    let o = muxphoton(&["eval"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("eta "));
    assert!(text.contains("bin,pic,b_r"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for body in ["n_bins = 0\n", "eta_sw = 1.5\n", "bogus = 1\n", "n_bins = 4\nn_bins = 8\n"] {
        let cfg = write_config(dir.path(), body);
        let o = muxphoton(&["--config", &cfg, "eval"]);
        assert_eq!(o.status.code(), Some(2), "{body:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(muxphoton(&["--trials", "0", "mc"]).status.code(), Some(2));
}

#[test]
fn crossing_without_sign_change_exits_with_three() {
    // with perfect switches the single detector wins everywhere on the bracket
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eta_sw = 1.0\nalpha_inc = 0\n");
    let o = muxphoton(&["--config", &cfg, "crossing"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

#[test]
fn missing_config_file_exits_with_one() {
    let o = muxphoton(&["--config", "/nonexistent/run.cfg", "eval"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn json_output_parses() {
    for cmd in ["eval", "optimize", "bell", "crossing"] {
        let o = muxphoton(&["--json", cmd]);
        assert_eq!(o.status.code(), Some(0), "{cmd}");
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).expect(cmd);
        assert!(v.is_object() || v.is_array());
    }
}

#[test]
fn literal_exponent_flag_changes_eval() {
    let json = |args: &[&str]| -> serde_json::Value {
        serde_json::from_str(&stdout(&muxphoton(args))).unwrap()
    };
    let dflt = json(&["--json", "eval"]);
    let strict = json(&["--json", "--strict-eq6", "eval"]);
    let a = dflt["breakdown"]["eta_total"].as_f64().unwrap();
    let b = strict["breakdown"]["eta_total"].as_f64().unwrap();
    assert!(b < a, "{b} vs {a}");
}

#[test]
fn fig3_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(muxphoton(&["--out", out, "fig3"]).status.code(), Some(0));
    let first_line = |name: &str| {
        std::fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    let ab = "N,eta_binary_single,eta_binary_array,eta_singleline_single,eta_singleline_array";
    assert_eq!(first_line("fig3a.csv"), ab);
    assert_eq!(first_line("fig3b.csv"), ab);
    assert_eq!(
        first_line("fig3c.csv"),
        "N,avglin_lambda0.02,avglin_lambda0.06,avglin_lambda0.10,avglin_control"
    );
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig3.json")).unwrap()).unwrap();
    assert_eq!(meta["rng_algorithm"], "ChaCha8");
}

#[test]
fn schedule_for_eight_bins() {
    // the default 31-bin frame has no binary schedule
    assert_eq!(muxphoton(&["schedule"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_bins = 8\n");
    let o = muxphoton(&["--config", &cfg, "schedule"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, "bin,delay_bins,phi_2,phi_3,phi_4,phi_5");
    assert_eq!(lines.count(), 8);
}
