//! Compiles and runs a small C program against the generated header and the
//! cdylib, exercising the ABI the way a foreign binding would.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "fracpow.h"

int main(void) {
    FpFixture *fx = NULL;
    if (fp_fixture_dyadic(4, 2, 7, &fx) != FP_STATUS_OK) return 1;
    if (fp_fixture_dim(fx) != 4) return 2;

    FpRunStats stats;
    FpStatus status = fp_measure_power(fx, 0.5, 2, 1, FP_MODE_STANDARD, 8, 7, &stats);
    if (status != FP_STATUS_OK) {
        fprintf(stderr, "measure failed: %s\n", fp_status_message(status));
        return 3;
    }
    if (stats.max_err > 1e-10) return 4;
    if (stats.calls_cu != 3 || stats.calls_cuinv != 3) return 5;

    /* dim 3 is invalid and must come back as a status, not a crash */
    FpFixture *bad = NULL;
    if (fp_fixture_dyadic(3, 2, 0, &bad) != FP_STATUS_INVALID) return 6;

    fp_fixture_free(fx);
    printf("c-abi ok, version %s, max_err %.3e\n", fp_version(), stats.max_err);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    assert!(
        include_dir.join("fracpow.h").exists(),
        "header must be generated by the build script"
    );
    // the cdylib sits unhashed in target/<profile>/deps during `cargo test`
    // and is also linked into target/<profile> by `cargo build`
    let mut deps_dir = PathBuf::from(std::env::current_exe().unwrap());
    deps_dir.pop(); // test binary name
    let lib_dir = if deps_dir.join("libfracpow_ffi.so").exists() {
        deps_dir
    } else {
        let parent = deps_dir.parent().unwrap().to_path_buf();
        assert!(
            parent.join("libfracpow_ffi.so").exists(),
            "cdylib missing under {} and {}",
            deps_dir.display(),
            parent.display()
        );
        parent
    };

    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("smoke.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = work.path().join("smoke");

    let compile = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include_dir)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lfracpow_ffi")
        .arg("-o")
        .arg(&exe)
        .output()
        .expect("cc is available");
    assert!(
        compile.status.success(),
        "cc failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&exe)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .output()
        .expect("smoke binary runs");
    assert!(
        run.status.success(),
        "smoke exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    let out = String::from_utf8_lossy(&run.stdout);
    assert!(out.contains("c-abi ok"), "stdout: {out}");
}
