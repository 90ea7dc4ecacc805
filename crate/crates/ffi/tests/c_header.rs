// SPDX-License-Identifier: Apache-2.0

//! Compiles a C program against the generated header and static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "rtlseek.h"

int main(void) {
    RtlTree *a = NULL, *b = NULL;
    if (rtlseek_parse("module m(input p, output q); assign q = p; endmodule", &a) != RTL_STATUS_OK) return 1;
    if (rtlseek_parse("module n(input r, output s); assign s = r; endmodule", &b) != RTL_STATUS_OK) return 2;
    bool eq = false;
    if (rtlseek_equivalent(a, b, &eq) != RTL_STATUS_OK || !eq) return 3;
    char *digest = NULL;
    if (rtlseek_tree_digest(a, &digest) != RTL_STATUS_OK || strlen(digest) != 64) return 4;
    rtlseek_string_free(digest);
    RtlTree *bad = NULL;
    if (rtlseek_parse("module", &bad) != RTL_STATUS_SYNTAX || rtlseek_last_error() == NULL) return 5;
    double v = 0.0;
    if (rtlseek_pass_at_k(10, 10, 5, &v) != RTL_STATUS_OK || v != 1.0) return 6;
    rtlseek_tree_free(a);
    rtlseek_tree_free(b);
    puts("ok");
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("librtlseek_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.path().join("main");
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout), "ok\n");
}
