use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use pflame_ffi::*;

fn scenario_path(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(format!("{name}.json"));
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe {
        let n = pflame_last_error(ptr::null_mut(), 0);
        assert!(n > 0);
        let mut buf = vec![0 as c_char; n];
        assert_eq!(pflame_last_error(buf.as_mut_ptr(), n), n);
        CStr::from_ptr(buf.as_ptr()).to_str().unwrap().to_owned()
    }
}

#[test]
fn sweep_round_trip() {
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(
            pflame_scenario_load(scenario_path("trivial-affine").as_ptr(), &mut sc),
            PflameStatus::Ok
        );
        assert_eq!(pflame_last_error(ptr::null_mut(), 0), 0);
        let mut sw = ptr::null_mut();
        assert_eq!(pflame_sweep_run(sc, false, &mut sw), PflameStatus::Ok);

        let mut stages = 0;
        assert_eq!(pflame_sweep_stage_count(sw, &mut stages), PflameStatus::Ok);
        assert_eq!(stages, 2);
        let mut summary = std::mem::zeroed::<PflameStageSummary>();
        assert_eq!(
            pflame_sweep_stage_summary(sw, 1, &mut summary),
            PflameStatus::Ok
        );
        assert_eq!(summary.eps, 0.01);
        assert!(summary.converged);
        assert_eq!(summary.fb_points, 0);
        assert!(summary.fb_mean_slope.is_nan());
        assert_eq!(
            pflame_sweep_stage_summary(sw, 2, &mut summary),
            PflameStatus::InvalidArgument
        );
        assert!(last_error().contains("stage 2"));

        let mut n = 0;
        assert_eq!(pflame_sweep_node_count(sw, &mut n), PflameStatus::Ok);
        assert_eq!(n, 41 * 41);
        let mut small = vec![0.0; n - 1];
        assert_eq!(
            pflame_sweep_solution(sw, 1, small.as_mut_ptr(), small.len()),
            PflameStatus::BufferTooSmall
        );
        let mut u = vec![0.0; n];
        assert_eq!(
            pflame_sweep_solution(sw, 1, u.as_mut_ptr(), n),
            PflameStatus::Ok
        );
        let h = 1.0 / 40.0;
        for j in 0..41 {
            for i in 0..41 {
                let (x, y) = (1.0 + i as f64 * h, 1.0 + j as f64 * h);
                assert!((u[j * 41 + i] - (x + 2.0 * y)).abs() < 1e-6, "{i} {j}");
            }
        }

        let (mut passed, mut failed) = (0, 0);
        assert_eq!(
            pflame_sweep_verify(sw, &mut passed, &mut failed),
            PflameStatus::Ok
        );
        assert!(passed > 0);
        assert_eq!(failed, 0);

        let dir = tempfile::tempdir().unwrap();
        let cdir = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(
            pflame_sweep_write_outputs(sw, cdir.as_ptr()),
            PflameStatus::Ok
        );
        assert!(dir.path().join("convergence_table.csv").is_file());

        let mut fine = ptr::null_mut();
        assert_eq!(pflame_scenario_refined(sc, 2, &mut fine), PflameStatus::Ok);
        assert_eq!(
            pflame_scenario_refined(sc, 0, &mut fine),
            PflameStatus::InvalidArgument
        );
        pflame_scenario_free(fine);
        pflame_sweep_free(sw);
        pflame_scenario_free(sc);
        pflame_sweep_free(ptr::null_mut());
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut sc = ptr::null_mut();
        let missing = CString::new("/nonexistent/x.json").unwrap();
        assert_eq!(
            pflame_scenario_load(missing.as_ptr(), &mut sc),
            PflameStatus::Io
        );
        assert!(last_error().contains("/nonexistent/x.json"));
        assert!(sc.is_null());

        let bad = CString::new(r#"{"name": 3}"#).unwrap();
        assert_eq!(
            pflame_scenario_from_json(bad.as_ptr(), &mut sc),
            PflameStatus::Config
        );
        assert!(last_error().contains("name"));

        assert_eq!(
            pflame_scenario_load(ptr::null(), &mut sc),
            PflameStatus::NullPointer
        );
        assert_eq!(
            pflame_sweep_run(ptr::null(), true, ptr::null_mut()),
            PflameStatus::NullPointer
        );

        let mut v = 0.0;
        assert_eq!(
            pflame_lambda_star(1.0, 0.5, &mut v),
            PflameStatus::InvalidArgument
        );
    }
}

#[test]
fn scalar_entry_points() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(pflame_lambda_star(2.0, 0.5, &mut v), PflameStatus::Ok);
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(pflame_lambda_star(3.0, 1.0, &mut v), PflameStatus::Ok);
        assert!((v - 1.5f64.cbrt()).abs() < 1e-14);
        assert_eq!(
            pflame_oracle_reaction_integral(3.0, 1.0, 0.01, &mut v),
            PflameStatus::Ok
        );
        assert!((v - 1.5f64.powf(2.0 / 3.0)).abs() < 1e-6);
    }
}

#[test]
fn header_declares_every_entry_point_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/pflame.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "pflame_last_error",
        "pflame_scenario_load",
        "pflame_scenario_from_json",
        "pflame_scenario_refined",
        "pflame_scenario_free",
        "pflame_sweep_run",
        "pflame_sweep_free",
        "pflame_sweep_stage_count",
        "pflame_sweep_node_count",
        "pflame_sweep_stage_summary",
        "pflame_sweep_solution",
        "pflame_sweep_verify",
        "pflame_sweep_write_outputs",
        "pflame_lambda_star",
        "pflame_oracle_reaction_integral",
        "typedef struct PflameSweep PflameSweep;",
        "PFLAME_STATUS_BUFFER_TOO_SMALL = 6",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"pflame.h\"\n\
         int main(void) {\n\
           PflameScenario *s = NULL;\n\
           PflameStatus st = pflame_scenario_load(\"x.json\", &s);\n\
           PflameStageSummary sum;\n\
           (void)sum;\n\
           pflame_scenario_free(s);\n\
           return st == PFLAME_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler on PATH; header syntax not checked");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
