//! End-to-end checks of the binary: exit codes, diagnostics, output
//! files, and thread-count independence of the CSV.

use std::process::{Command, Output};

fn topodemon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topodemon"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn calibrate_prints_the_pinned_product() {
    let out = topodemon(&["calibrate", "--target-nmax", "78"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "epsilon_m*r0 = 0.00154794437\n"
    );
}

#[test]
fn shot_trace_is_deterministic() {
    let args = ["shot", "--n", "20", "--l", "3", "--p", "0.01", "--r", "20", "--seed", "7"];
    let a = topodemon(&args);
    let b = topodemon(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8_lossy(&a.stdout);
    assert!(text.contains("# success"));
    assert!(text.starts_with("# geometry N=20 L=3"));
}

#[test]
fn geometry_dump_reports_counts() {
    let out = topodemon(&["geometry-dump", "--n", "3", "--l", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("edges=17 vertices=12 plaquettes=6 euler=-1"));
}

#[test]
fn invalid_parameter_exits_two_with_field_name() {
    let out = topodemon(&["shot", "--n", "20", "--l", "3", "--p", "0.9", "--r", "5", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: invalid parameter `p`"), "stderr: {}", err);
    assert_eq!(err.lines().count(), 1);

    let out = topodemon(&["calibrate", "--p-succ", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_lists_the_defaults() {
    let out = topodemon(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in ["146.5", "8000", "r0 = 1", "1.54794437e-3", "0.002, 0.020"] {
        assert!(text.contains(needle), "help does not mention {}", needle);
    }
}

#[test]
fn sweep_outputs_are_thread_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for (threads, sub) in [("1", "a"), ("4", "b")] {
        let out_dir = dir.path().join(sub);
        let out = topodemon(&[
            "suppression",
            "--seed",
            "11",
            "--shots",
            "120",
            "--n",
            "5",
            "--p",
            "0.03",
            "--r",
            "3",
            "--threads",
            threads,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = std::fs::read(out_dir.join("suppression.csv")).unwrap();
        assert!(out_dir.join("suppression.json").exists());
        csvs.push(csv);
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn config_file_feeds_the_spec_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let spec = topodemon_core::experiments::ExperimentSpec {
        shots: 80,
        master_seed: 5,
        n_list: vec![4],
        l_list: vec![2],
        p_list: vec![0.02, 0.05],
        rounds: topodemon_core::experiments::RoundsPolicy::Fixed(2),
        ..topodemon_core::experiments::ExperimentSpec::suppression(5)
    };
    let cfg = dir.path().join("spec.json");
    std::fs::write(&cfg, serde_json::to_string(&spec).unwrap()).unwrap();
    let out_dir = dir.path().join("out");
    let out = topodemon(&[
        "suppression",
        "--config",
        cfg.to_str().unwrap(),
        "--shots",
        "40",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sidecar: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("suppression.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(sidecar["metadata"]["spec"]["shots"], 40);
    assert_eq!(sidecar["metadata"]["spec"]["p_list"][1], 0.05);
}
