//! Compiles `examples/smoke.c` against the generated header and the static
//! library, then runs it. Skipped when no C compiler is on PATH.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_client_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test binary>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libbhcluster_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let dir = tempfile_dir();
    let exe = dir.join("smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("examples/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "smoke failed: {stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("schema 1"));
    assert!(stdout.contains("bad model status 2"));
}

fn tempfile_dir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("bhcluster-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
