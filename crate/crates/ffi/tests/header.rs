use std::path::{Path, PathBuf};
use std::process::Command;

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("muxphoton.h")
}

#[test]
fn declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "typedef struct MpParams MpParams;",
        "typedef struct MpScheme MpScheme;",
        "MP_STATUS_BUFFER_TOO_SMALL = 5",
        "mp_params_new",
        "mp_params_set",
        "mp_params_free",
        "mp_scheme_new",
        "mp_total_efficiency",
        "mp_bin_success",
        "mp_detection_efficiency",
        "mp_avg_lin",
        "mp_estimate_eta",
        "mp_composed_success",
        "mp_phase_schedule",
        "mp_select_last",
        "mp_pair_count_distribution(const struct MpParams *params, int64_t n",
        "mp_last_error_message",
    ] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn compiles_as_c_and_cpp() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"muxphoton.h\"\n\
         int main(void) {\n\
           MpParams *p = 0;\n\
           MpStatus s = mp_params_new(&p);\n\
           mp_params_free(p);\n\
           return s == MP_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let include = header().parent().unwrap().to_path_buf();
    for lang in ["c", "c++"] {
        let status = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg("-I")
            .arg(&include)
            .arg(&src)
            .status()
            .expect("a C compiler on PATH");
        assert!(status.success(), "header does not compile as {lang}");
    }
}

#[test]
fn links_and_runs_from_c() {
    // the static library sits next to the deps/ directory holding this test binary
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    let lib = lib_dir.join("libmuxphoton_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("run.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "muxphoton.h"
int main(void) {
  MpParams *p = 0;
  MpScheme *s = 0;
  double eta = 0.0;
  if (mp_params_new(&p) != MP_STATUS_OK) return 1;
  if (mp_scheme_new(31, MP_TOPOLOGY_BINARY_DELAY, MP_DETECTION_SINGLE_DETECTOR, &s) != MP_STATUS_OK) return 2;
  if (mp_total_efficiency(p, s, &eta) != MP_STATUS_OK) return 3;
  if (mp_params_set(p, "eta_f", 2.0) != MP_STATUS_DOMAIN) return 4;
  char msg[128];
  mp_last_error_message(msg, sizeof msg);
  printf("%.6f\n%s\n", eta, msg);
  mp_scheme_free(s);
  mp_params_free(p);
  return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("run");
    let status = Command::new("cc")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let eta: f64 = lines.next().unwrap().parse().unwrap();
    assert!((eta - 0.2797).abs() < 1e-3, "{eta}");
    assert!(lines.next().unwrap().contains("eta_f"));
}
