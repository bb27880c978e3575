use std::path::Path;
use std::process::Command;

const PROGRAM: &str = r#"
#include "khm.h"
#include <stdio.h>

int main(void) {
    KhmConfig *cfg = NULL;
    KhmField *field = NULL;
    KhmEnergyReport rep;
    double r = 0.0;
    if (khm_config_load("run.ini", &cfg) != KHM_STATUS_OK) {
        fprintf(stderr, "%s\n", khm_last_error());
        return 1;
    }
    khm_field_random(16, 1, 1.0, &field);
    khm_monin_residual(field, 0, &r);
    (void)rep;
    khm_run_command(cfg, KHM_COMMAND_VERIFY, "out", 0);
    khm_field_free(field);
    khm_config_free(cfg);
    return 0;
}
"#;

#[test]
fn generated_header_compiles_as_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("khm.h").is_file());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = match Command::new(&cc).arg("-std=c99").arg("-Wall").arg("-Werror").arg("-fsyntax-only").arg("-I").arg(&include).arg(&src).output() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("skipping: no C compiler `{cc}` ({e})");
            return;
        }
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
