use std::ffi::{CStr, CString};
use std::ptr;

use spfl_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(spfl_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn diag(values: &[f64]) -> *mut SpflOperator {
    let n = values.len();
    let mut re = vec![0.0; n * n];
    for (i, v) in values.iter().enumerate() {
        re[i * n + i] = *v;
    }
    let mut op = ptr::null_mut();
    assert_eq!(
        unsafe { spfl_operator_new(n, re.as_ptr(), ptr::null(), &mut op) },
        SpflStatus::Ok
    );
    op
}

#[test]
fn linear_path_flow_matches_oracle() {
    let a = diag(&[-1.0, -0.5, 2.0]);
    let b = diag(&[0.6, 1.5, 2.0]);
    let mut path = ptr::null_mut();
    unsafe {
        assert_eq!(spfl_path_linear(a, b, &mut path), SpflStatus::Ok);
        assert_eq!(spfl_path_dim(path), 3);
        let mut flow = 0;
        assert_eq!(spfl_spectral_flow(path, ptr::null(), &mut flow), SpflStatus::Ok);
        assert_eq!(flow, 2);
        let opts = spfl_flow_options_default();
        let mut flow2 = 0;
        assert_eq!(spfl_spectral_flow(path, &opts, &mut flow2), SpflStatus::Ok);
        assert_eq!(flow2, 2);
        let mut oracle = 0;
        assert_eq!(spfl_spectral_flow_oracle(path, 200, &mut oracle), SpflStatus::Ok);
        assert_eq!(oracle, 2);
        spfl_path_free(path);
        spfl_operator_free(a);
        spfl_operator_free(b);
    }
}

#[test]
fn eigenvalues_are_ascending() {
    let re = [2.0, 1.0, 1.0, 2.0];
    let mut op = ptr::null_mut();
    unsafe {
        assert_eq!(spfl_operator_new(2, re.as_ptr(), ptr::null(), &mut op), SpflStatus::Ok);
        assert_eq!(spfl_operator_dim(op), 2);
        let mut out = [0.0; 2];
        assert_eq!(spfl_operator_eigenvalues(op, out.as_mut_ptr(), 2), SpflStatus::Ok);
        assert!((out[0] - 1.0).abs() < 1e-12 && (out[1] - 3.0).abs() < 1e-12);
        assert_eq!(
            spfl_operator_eigenvalues(op, out.as_mut_ptr(), 1),
            SpflStatus::InvalidArgument
        );
        spfl_operator_free(op);
    }
}

#[test]
fn non_hermitian_input_reports_validation() {
    let re = [0.0, 1.0, 0.0, 0.0];
    let mut op = ptr::null_mut();
    let status = unsafe { spfl_operator_new(2, re.as_ptr(), ptr::null(), &mut op) };
    assert_eq!(status, SpflStatus::Validation);
    assert!(op.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_arguments_are_rejected() {
    let mut out = 0;
    assert_eq!(
        unsafe { spfl_spectral_flow(ptr::null(), ptr::null(), &mut out) },
        SpflStatus::NullPointer
    );
    assert!(last_error().contains("path"));
    assert_eq!(unsafe { spfl_path_dim(ptr::null()) }, 0);
    unsafe {
        spfl_path_free(ptr::null_mut());
        spfl_operator_free(ptr::null_mut());
    }
}

#[test]
fn generator_loop_has_unit_flow_and_winding() {
    let mut path = ptr::null_mut();
    unsafe {
        assert_eq!(spfl_path_generator_loop(3, &mut path), SpflStatus::Ok);
        let mut flow = 0;
        assert_eq!(spfl_spectral_flow(path, ptr::null(), &mut flow), SpflStatus::Ok);
        assert_eq!(flow, 1);
        let mut w = 0;
        assert_eq!(spfl_exp_loop_winding(path, 1, 513, &mut w), SpflStatus::Ok);
        assert_eq!(w, flow);
        assert_eq!(spfl_exp_loop_winding(path, 0, 513, &mut w), SpflStatus::InvalidArgument);
        spfl_path_free(path);
    }
}

#[test]
fn sampled_and_parsed_paths() {
    // Two samples of diag(-1, 1) -> diag(1, 1).
    let re = [-1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
    let mut path = ptr::null_mut();
    unsafe {
        assert_eq!(
            spfl_path_from_samples(2, 2, 0.0, 1.0, re.as_ptr(), ptr::null(), &mut path),
            SpflStatus::Ok
        );
        let mut flow = 0;
        assert_eq!(spfl_spectral_flow(path, ptr::null(), &mut flow), SpflStatus::Ok);
        assert_eq!(flow, 1);
        spfl_path_free(path);
    }
    let text = CString::new("dim 1\nsamples 2\ninterval 0 1\n1,0\n-1,0\n").unwrap();
    let mut parsed = ptr::null_mut();
    unsafe {
        assert_eq!(spfl_path_parse(text.as_ptr(), &mut parsed), SpflStatus::Ok);
        let mut flow = 0;
        assert_eq!(spfl_spectral_flow(parsed, ptr::null(), &mut flow), SpflStatus::Ok);
        assert_eq!(flow, -1);
        spfl_path_free(parsed);
    }
    let bad = CString::new("dim 1\nsamples 2\ninterval 0 1\n1,0\n").unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(
        unsafe { spfl_path_parse(bad.as_ptr(), &mut none) },
        SpflStatus::Ingestion
    );
    assert!(last_error().contains("byte offset 33"), "{}", last_error());
}

#[test]
fn projection_index_of_coordinate_pair() {
    let p = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    let q = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let mut ind = 0;
    let status = unsafe { spfl_projection_index(3, p.as_ptr(), ptr::null(), q.as_ptr(), ptr::null(), &mut ind) };
    assert_eq!(status, SpflStatus::Ok);
    let mut rev = 0;
    unsafe { spfl_projection_index(3, q.as_ptr(), ptr::null(), p.as_ptr(), ptr::null(), &mut rev) };
    assert_eq!(ind, -rev);
    assert_eq!(ind.abs(), 1);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/spfl.h")).unwrap();
    for name in [
        "SPFL_H",
        "typedef struct SpflOperator SpflOperator;",
        "typedef struct SpflPath SpflPath;",
        "SPFL_STATUS_OK = 0",
        "SPFL_STATUS_PANIC",
        "spfl_last_error(void)",
        "spfl_flow_options_default(void)",
        "spfl_operator_new(",
        "spfl_operator_free(",
        "spfl_operator_dim(",
        "spfl_operator_eigenvalues(",
        "spfl_path_linear(",
        "spfl_path_from_samples(",
        "spfl_path_parse(",
        "spfl_path_generator_loop(",
        "spfl_path_free(",
        "spfl_path_dim(",
        "spfl_spectral_flow(",
        "spfl_spectral_flow_oracle(",
        "spfl_exp_loop_winding(",
        "spfl_projection_index(",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler on PATH; header syntax check not run");
        return;
    };
    let dir = tempdir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        "#include \"spfl.h\"\nint main(void) { SpflFlowOptions o = spfl_flow_options_default(); return (int)o.max_depth - 40; }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("spfl-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
