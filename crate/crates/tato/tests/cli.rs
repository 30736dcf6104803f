//! End-to-end tests of the `tato` binary: exit codes, config handling, and
//! the file workflow between subcommands.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tato"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("tato-bin-test-{}-{name}", std::process::id()));
    p
}

fn desk_args(tag: &str) -> Vec<String> {
    [
        "grid_n=33",
        "n_detectors=150",
        "n_theta=80",
        "quad_order=64",
    ]
    .iter()
    .flat_map(|kv| ["--set".to_string(), kv.to_string()])
    .chain([
        "--set".to_string(),
        format!("cache={}", tmp(&format!("{tag}-cache.bin")).display()),
        "--set".to_string(),
        format!("projections={}", tmp(&format!("{tag}-proj.bin")).display()),
        "--set".to_string(),
        format!("image={}", tmp(&format!("{tag}-img.bin")).display()),
    ])
    .collect()
}

fn cleanup(tag: &str) {
    for suffix in [
        "cache.bin",
        "proj.bin",
        "img.bin",
        "img.bin.pgm",
        "img.bin.pgm.window.txt",
        "ref.bin",
        "ref.bin.pgm",
        "ref.bin.pgm.window.txt",
    ] {
        let _ = std::fs::remove_file(tmp(&format!("{tag}-{suffix}")));
    }
}

#[test]
fn full_workflow_and_exit_codes() {
    let tag = "flow";
    let args = desk_args(tag);

    let status = bin()
        .args(&args)
        .arg("precompute")
        .env("TATO_THREADS", "2")
        .status()
        .unwrap();
    assert!(status.success());

    let status = bin().args(&args).arg("simulate").status().unwrap();
    assert!(status.success());

    let status = bin().args(&args).arg("reconstruct").status().unwrap();
    assert!(status.success());
    assert!(tmp(&format!("{tag}-img.bin")).exists());
    assert!(tmp(&format!("{tag}-img.bin.pgm")).exists());

    // a projections file from a different geometry must be refused with
    // exit code 2
    let mut mismatched = args.clone();
    mismatched.extend(["--set".into(), "n_detectors=151".into()]);
    let status = bin().args(&mismatched).arg("simulate").status().unwrap();
    assert!(status.success());
    let output = bin().args(&args).arg("reconstruct").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("hash mismatch"), "stderr: {stderr}");

    cleanup(tag);
}

#[test]
fn compare_and_phantom_render() {
    let tag = "cmp";
    let args = desk_args(tag);
    let status = bin().args(&args).arg("phantom-render").status().unwrap();
    assert!(status.success());
    let img = tmp(&format!("{tag}-img.bin"));
    let output = bin()
        .arg("compare")
        .arg(&img)
        .arg(&img)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("max 0.0"), "stdout: {stdout}");
    cleanup(tag);
}

#[test]
fn config_file_and_bad_input() {
    let tag = "cfg";
    let cfg_path = tmp(&format!("{tag}-run.cfg"));
    std::fs::write(
        &cfg_path,
        format!(
            "grid_n=33\nn_detectors=40\nquad_order=64\nphantom=zero\nprojections={}\n",
            tmp(&format!("{tag}-proj.bin")).display()
        ),
    )
    .unwrap();
    let status = bin()
        .arg("--config")
        .arg(&cfg_path)
        .arg("simulate")
        .status()
        .unwrap();
    assert!(status.success());

    // K <= 1 is rejected with exit code 1
    let output = bin()
        .arg("--config")
        .arg(&cfg_path)
        .args(["--set", "k_reg=0.5"])
        .args([
            "--set",
            &format!("cache={}", tmp(&format!("{tag}-cache.bin")).display()),
        ])
        .arg("precompute")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));

    // unknown key is rejected
    let status = bin()
        .arg("--config")
        .arg(&cfg_path)
        .args(["--set", "bogus=1"])
        .arg("simulate")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    let _ = std::fs::remove_file(&cfg_path);
    cleanup(tag);
}
