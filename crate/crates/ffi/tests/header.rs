use std::path::Path;
use std::process::Command;

fn header() -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/swipt_mac.h");
    std::fs::read_to_string(path).expect("header is generated by the build script")
}

#[test]
fn header_declares_the_api() {
    let h = header();
    for name in [
        "swipt_version",
        "swipt_last_error_message",
        "swipt_scenario_from_toml",
        "swipt_scenario_free",
        "swipt_sum_rate",
        "swipt_dual_solve",
        "swipt_point_rates",
        "swipt_trace",
        "swipt_trace_point_status",
        "swipt_simulate",
        "swipt_sim_free",
        "typedef struct SwiptScenario SwiptScenario",
        "SWIPT_STATUS_BUFFER_TOO_SMALL = 11",
        "SWIPT_MODEL_POWER_SPLITTING = 2",
    ] {
        assert!(h.contains(name), "missing {name}");
    }
}

/// Compile the C smoke program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libswipt_mac_ffi.a");
    if !lib.exists() {
        eprintln!("static library not built at {}; skipping", lib.display());
        return;
    }
    let bin = std::env::temp_dir().join(format!("swipt_smoke_{}", std::process::id()));
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    let _ = std::fs::remove_file(&bin);
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let line = String::from_utf8(run.stdout).unwrap();
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(fields[0], env!("CARGO_PKG_VERSION"));
    let sum: f64 = fields[1].parse().unwrap();
    assert!((sum - 1.843947).abs() < 1e-5, "{line}");
}
