use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use relaybf_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rbf_last_error()) }.to_string_lossy().into_owned()
}

fn config(kind: &str, toml: Option<&str>) -> *mut RbfConfig {
    let kind = CString::new(kind).unwrap();
    let toml = toml.map(|t| CString::new(t).unwrap());
    let mut cfg = ptr::null_mut();
    let status = unsafe { rbf_config_new(kind.as_ptr(), toml.as_ref().map_or(ptr::null(), |t| t.as_ptr()), &mut cfg) };
    assert_eq!(status, RbfStatus::Ok, "{}", last_error());
    cfg
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(rbf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn two_relay_example_through_arrays() {
    let cfg = config("sinr_vs_snr", Some("m = 2\nk = 1\nm_min = 1\nn_select = 1\nsnr_db = 0\np_t_dbw = 0\nrelay_noise = \"coherent\""));
    let (f_re, f_im) = ([1.0, 1.0], [0.0, 0.0]);
    let (g_re, g_im) = ([1.0, 1.0], [0.0, 0.0]);
    let mut ch = ptr::null_mut();
    unsafe {
        assert_eq!(
            rbf_channel_from_arrays(2, 1, f_re.as_ptr(), f_im.as_ptr(), g_re.as_ptr(), g_im.as_ptr(), &mut ch),
            RbfStatus::Ok
        );
        let mut sel = ptr::null_mut();
        assert_eq!(rbf_solve(cfg, ch, ptr::null(), 0, &mut sel), RbfStatus::Ok, "{}", last_error());
        let mut sinr = 0.0;
        assert_eq!(rbf_selection_sinr(sel, &mut sinr), RbfStatus::Ok);
        assert!((sinr - 0.5).abs() < 1e-12);
        let (mut re, mut im) = ([0.0; 2], [0.0; 2]);
        assert_eq!(rbf_selection_weights(sel, re.as_mut_ptr(), im.as_mut_ptr(), 2), RbfStatus::Ok);
        assert!(re.iter().all(|w| (w - 0.5).abs() < 1e-12));
        assert!(im.iter().all(|w| w.abs() < 1e-12));
        rbf_selection_free(sel);
        rbf_channel_free(ch);
        rbf_config_free(cfg);
    }
}

#[test]
fn selection_handles_report_mask_and_calls() {
    let cfg = config("sinr_vs_snr", Some("m = 8\nm_min = 3\nseed = 11"));
    unsafe {
        let m = rbf_config_relays(cfg);
        assert_eq!(m, 8);
        assert_eq!(rbf_config_sources(cfg), 3);
        let mut ch = ptr::null_mut();
        assert_eq!(rbf_channel_draw(cfg, 0, &mut ch), RbfStatus::Ok);
        assert_eq!(rbf_channel_relays(ch), 8);

        let mut sel = ptr::null_mut();
        assert_eq!(rbf_select(cfg, ch, RbfAlgorithm::Resrs, 0, &mut sel), RbfStatus::Ok);
        assert_eq!(rbf_selection_solver_calls(sel), 219);
        let mut mask = [9u8; 8];
        assert_eq!(rbf_selection_mask(sel, mask.as_mut_ptr(), 8), RbfStatus::Ok);
        assert!(mask.iter().all(|&b| b <= 1) && mask.iter().filter(|&&b| b == 1).count() >= 3);
        let (mut re, mut im) = ([0.0; 8], [0.0; 8]);
        assert_eq!(rbf_selection_weights(sel, re.as_mut_ptr(), im.as_mut_ptr(), 8), RbfStatus::Ok);
        for i in 0..8 {
            if mask[i] == 0 {
                assert_eq!((re[i], im[i]), (0.0, 0.0));
            }
        }
        rbf_selection_free(sel);

        assert_eq!(rbf_select(cfg, ch, RbfAlgorithm::Rrrs, 0, &mut sel), RbfStatus::Ok);
        assert_eq!(rbf_selection_solver_calls(sel), 1);
        rbf_selection_free(sel);
        rbf_channel_free(ch);
        rbf_config_free(cfg);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let kind = CString::new("nope").unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(rbf_config_new(kind.as_ptr(), ptr::null(), &mut cfg), RbfStatus::InvalidArgument);
        assert!(cfg.is_null());
        assert!(last_error().contains("kind"));

        let cfg = config("sinr_vs_snr", Some("m = 4\nm_min = 2"));
        let mut sel = ptr::null_mut();
        assert_eq!(rbf_select(cfg, ptr::null(), RbfAlgorithm::None, 0, &mut sel), RbfStatus::NullPointer);
        assert!(last_error().contains("ch"));

        let mut ch = ptr::null_mut();
        assert_eq!(rbf_channel_draw(cfg, 0, &mut ch), RbfStatus::Ok);
        assert!(last_error().is_empty());
        let mask = [0u8; 3];
        assert_eq!(rbf_solve(cfg, ch, mask.as_ptr(), 3, &mut sel), RbfStatus::DimensionMismatch);
        let mask = [0u8; 4];
        assert_eq!(rbf_solve(cfg, ch, mask.as_ptr(), 4, &mut sel), RbfStatus::InvalidArgument);
        assert!(sel.is_null());

        let bad = CString::new("m = 4\nunknown_key = 1").unwrap();
        let mut other = ptr::null_mut();
        assert_eq!(rbf_config_new(CString::new("sinr_vs_m").unwrap().as_ptr(), bad.as_ptr(), &mut other), RbfStatus::InvalidArgument);

        rbf_channel_free(ch);
        rbf_config_free(cfg);
        rbf_config_free(ptr::null_mut());
        rbf_channel_free(ptr::null_mut());
        rbf_selection_free(ptr::null_mut());
        rbf_string_free(ptr::null_mut());
    }
}

#[test]
fn experiment_csv_is_thread_count_invariant() {
    let cfg = config("sinr_vs_snr", Some("trials = 20\nx_grid = [0, 10]\nm = 5\nalgorithms = \"rgsrs,rrrs\""));
    let run = |threads| unsafe {
        let mut csv = ptr::null_mut();
        assert_eq!(rbf_run_experiment(cfg, threads, &mut csv), RbfStatus::Ok, "{}", last_error());
        let text = CStr::from_ptr(csv).to_str().unwrap().to_owned();
        rbf_string_free(csv);
        text
    };
    let one = run(1);
    assert!(one.starts_with("x,rgsrs_mean,rgsrs_stderr,rrrs_mean,rrrs_stderr\n"));
    assert_eq!(one.lines().count(), 3);
    assert_eq!(one, run(4));
    unsafe { rbf_config_free(cfg) };
}

/// Compiles and runs a C program against the generated header and the
/// static library.
#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("relaybf.h").exists());
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .and_then(|deps| deps.parent())
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("librelaybf_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let Ok(cc) = which_cc() else {
        eprintln!("skipping: no C compiler");
        return;
    };
    let dir = tempfile_dir();
    let src = dir.join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "relaybf.h"
int main(void) {
    RbfConfig *cfg = NULL;
    if (rbf_config_new("sinr_vs_snr", "m = 6\nm_min = 2", &cfg) != RBF_STATUS_OK) return 1;
    RbfChannel *ch = NULL;
    if (rbf_channel_draw(cfg, 3, &ch) != RBF_STATUS_OK) return 2;
    RbfSelection *sel = NULL;
    if (rbf_select(cfg, ch, RBF_ALGORITHM_RGSRS, 0, &sel) != RBF_STATUS_OK) return 3;
    double sinr = 0.0;
    if (rbf_selection_sinr(sel, &sinr) != RBF_STATUS_OK || !(sinr > 0.0)) return 4;
    if (rbf_select(cfg, NULL, RBF_ALGORITHM_NONE, 0, &sel) != RBF_STATUS_NULL_POINTER) return 5;
    printf("%s %zu\n", rbf_version(), rbf_selection_solver_calls(sel));
    rbf_selection_free(sel);
    rbf_channel_free(ch);
    rbf_config_free(cfg);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.join("smoke");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with(env!("CARGO_PKG_VERSION")));
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("relaybf-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
