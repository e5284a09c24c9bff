use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use uqtsc::arch::{build, save_checkpoint, InputShape, ModelConfig, UqMethod};
use uqtsc::metrics::{predictive_entropy, predictive_posterior};
use uqtsc::nn::Tensor;
use uqtsc_ffi::*;

fn last_error() -> String {
    let p = uqtsc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn metric_entry_points() {
    let mut h = 0.0;
    assert_eq!(unsafe { uqtsc_entropy([0.5, 0.5].as_ptr(), 2, &mut h) }, UqtscStatus::Ok);
    assert!((h - 2f64.ln()).abs() < 1e-12);

    let probs = [0.1, 0.9, 0.9, 0.1, 0.6, 0.4, 0.4, 0.6];
    let labels = [1u8, 0, 1, 1];
    let mut e = 0.0;
    assert_eq!(unsafe { uqtsc_ece(probs.as_ptr(), labels.as_ptr(), 4, 4, false, &mut e) }, UqtscStatus::Ok);
    assert!((e - 0.1).abs() < 1e-12);

    let mut s = UqtscScores::default();
    assert_eq!(unsafe { uqtsc_f1([0u8, 1, 1, 1].as_ptr(), [0u8, 0, 1, 1].as_ptr(), 4, &mut s) }, UqtscStatus::Ok);
    assert!((s.f1_cl0 - 2.0 / 3.0).abs() < 1e-12 && (s.f1_cl1 - 0.8).abs() < 1e-12);
    assert!((s.weighted_f1 - 11.0 / 15.0).abs() < 1e-12 && s.accuracy == 0.75);

    assert!(uqtsc_select(0.9942, 0.9814, 0.0142));
    assert!(uqtsc_select(0.9, 0.9, 0.1));
    assert!(!uqtsc_select(0.9, 0.89, 0.1));

    let mut n = 0;
    assert_eq!(unsafe { uqtsc_window_count(2000, 400, 100, &mut n) }, UqtscStatus::Ok);
    assert_eq!(n, 17);
    assert_eq!(unsafe { uqtsc_hyperband_total_epochs(16, 50, 3, 20, false, &mut n) }, UqtscStatus::Ok);
    assert_eq!(n, 3960);
}

#[test]
fn failures_set_status_and_message() {
    let mut h = 0.0;
    assert_eq!(unsafe { uqtsc_entropy(ptr::null(), 2, &mut h) }, UqtscStatus::NullPointer);
    assert!(last_error().contains("probs"));
    assert_eq!(unsafe { uqtsc_entropy([0.7, 0.2].as_ptr(), 2, &mut h) }, UqtscStatus::InvalidArgument);
    assert_eq!(h, 0.0);
    let mut n = 7;
    assert_eq!(unsafe { uqtsc_window_count(10, 0, 1, &mut n) }, UqtscStatus::InvalidArgument);
    assert_eq!(n, 7);
    assert_eq!(unsafe { uqtsc_hyperband_total_epochs(50, 16, 3, 1, false, &mut n) }, UqtscStatus::InvalidArgument);
    let mut s = UqtscScores::default();
    assert_eq!(unsafe { uqtsc_f1([2u8].as_ptr(), [0u8].as_ptr(), 1, &mut s) }, UqtscStatus::InvalidArgument);
    assert!(last_error().contains("preds"));
    assert!(!unsafe { CStr::from_ptr(uqtsc_version()) }.to_bytes().is_empty());
}

fn checkpoint(dir: &Path) -> (CString, uqtsc::arch::Network) {
    let config = ModelConfig::cnn(&[16], &[5], 2).with_uq(UqMethod::McDropout, 0.3);
    let net = build(&config, InputShape { channels: 3, length: 20 }, 5).unwrap();
    let path = dir.join("m.ckpt");
    save_checkpoint(&net, &path).unwrap();
    (CString::new(path.to_str().unwrap()).unwrap(), net)
}

#[test]
fn model_handle_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (path, net) = checkpoint(dir.path());
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { uqtsc_model_load(path.as_ptr(), &mut model) }, UqtscStatus::Ok);
    let (mut c, mut l) = (0, 0);
    assert_eq!(unsafe { uqtsc_model_input_shape(model, &mut c, &mut l) }, UqtscStatus::Ok);
    assert_eq!((c, l), (3, 20));

    let x: Vec<f64> = (0..2 * 3 * 20).map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0).collect();
    let (mut mean, mut entropy) = ([0.0; 4], [0.0; 2]);
    let status = unsafe { uqtsc_model_predict(model, x.as_ptr(), 2, 8, 42, mean.as_mut_ptr(), entropy.as_mut_ptr()) };
    assert_eq!(status, UqtscStatus::Ok);
    let want = predictive_posterior(&net, &Tensor::new(vec![2, 3, 20], x.clone()).unwrap(), 8, 42, 1).unwrap();
    for (i, d) in want.iter().enumerate() {
        assert_eq!([mean[2 * i], mean[2 * i + 1]], d.mean);
        assert_eq!(entropy[i], predictive_entropy(&d.mean).unwrap());
    }
    let status = unsafe { uqtsc_model_predict(model, x.as_ptr(), 2, 0, 42, mean.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(status, UqtscStatus::InvalidArgument);
    unsafe { uqtsc_model_free(model) };
    unsafe { uqtsc_model_free(ptr::null_mut()) };

    let missing = CString::new(dir.path().join("nope.ckpt").to_str().unwrap()).unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { uqtsc_model_load(missing.as_ptr(), &mut model) }, UqtscStatus::Io);
    assert!(model.is_null());
    std::fs::write(dir.path().join("bad.ckpt"), "not a checkpoint\n").unwrap();
    let bad = CString::new(dir.path().join("bad.ckpt").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { uqtsc_model_load(bad.as_ptr(), &mut model) }, UqtscStatus::Checkpoint);
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "uqtsc.h"

int main(int argc, char **argv) {
    size_t n = 0, epochs = 0, c = 0, l = 0;
    double h = 0.0, p[2] = {0.5, 0.5};
    UqtscModel *m = NULL;
    if (uqtsc_window_count(2000, 400, 100, &n) != UQTSC_STATUS_OK) return 1;
    if (uqtsc_hyperband_total_epochs(16, 50, 3, 20, false, &epochs) != UQTSC_STATUS_OK) return 2;
    if (uqtsc_entropy(p, 2, &h) != UQTSC_STATUS_OK) return 3;
    if (uqtsc_window_count(1, 0, 1, &n) != UQTSC_STATUS_INVALID_ARGUMENT || !uqtsc_last_error()) return 4;
    if (uqtsc_model_load(argv[1], &m) != UQTSC_STATUS_OK) return 5;
    uqtsc_model_input_shape(m, &c, &l);
    uqtsc_model_free(m);
    printf("%zu %zu %.12f %zu %zu\n", n, epochs, h, c, l);
    return 0;
}
"#;

#[test]
fn c_program_links_against_static_library() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("cc not found; skipping");
        return;
    }
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.join("libuqtsc_ffi.a");
    assert!(lib.is_file(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = checkpoint(dir.path());
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).arg(path.to_str().unwrap()).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "17 3960 0.693147180560 3 20\n");
}
