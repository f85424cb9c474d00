//! End-to-end checks of the `hgsc` binary and of pipeline-level
//! rate-distortion behavior on the synthetic corpus.

use std::path::Path;
use std::process::Command;

use hgsc::container::{rd_sweep, EncodeConfig, Preset};
use hgsc::synth::{synth_cloud, synth_rig, SynthConfig};

fn hgsc_bin(args: &[&str], cwd: &Path) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hgsc"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn full_cli_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let (ok, stdout, stderr) = hgsc_bin(
        &[
            "synth",
            "--count",
            "4000",
            "--sh-degree",
            "1",
            "--output",
            "scene.ply",
            "--cameras-out",
            "rig.json",
            "--eval-cameras-out",
            "eval.json",
            "--views",
            "5",
            "--view-size",
            "96",
        ],
        d,
    );
    assert!(ok, "synth failed: {stderr}");
    assert!(stdout.contains("4000 synthetic primitives"));

    let (ok, stdout, stderr) = hgsc_bin(
        &[
            "encode",
            "--input",
            "scene.ply",
            "--output",
            "scene.hgsc",
            "--cameras",
            "rig.json",
            "--stats",
            "stats.json",
            "--cdf-out",
            "cdf.csv",
            "--preset",
            "high",
        ],
        d,
    );
    assert!(ok, "encode failed: {stderr}");
    assert!(stdout.contains("encoded 4000 -> 1600 primitives"), "{stdout}");
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["input_primitives"], 4000);
    assert_eq!(stats["surviving_primitives"], 1600);
    let cdf = std::fs::read_to_string(d.join("cdf.csv")).unwrap();
    assert_eq!(cdf.lines().count(), 102); // header + 101 samples

    let (ok, _, stderr) = hgsc_bin(
        &["decode", "--input", "scene.hgsc", "--output", "decoded.ply"],
        d,
    );
    assert!(ok, "decode failed: {stderr}");

    let (ok, stdout, stderr) = hgsc_bin(
        &[
            "metrics",
            "--input",
            "decoded.ply",
            "--reference",
            "scene.ply",
            "--cameras",
            "eval.json",
            "--render-dir",
            "renders",
        ],
        d,
    );
    assert!(ok, "metrics failed: {stderr}");
    assert!(stdout.contains("mean: psnr"));
    assert!(d.join("renders/view00_test.png").exists());

    let (ok, stdout, stderr) = hgsc_bin(
        &[
            "rd",
            "--input",
            "scene.ply",
            "--cameras",
            "rig.json",
            "--eval-cameras",
            "eval.json",
            "--configs",
            "low,high",
            "--output",
            "rd.csv",
        ],
        d,
    );
    assert!(ok, "rd failed: {stderr}");
    assert!(stdout.contains("low:") && stdout.contains("high:"));
    let rd = std::fs::read_to_string(d.join("rd.csv")).unwrap();
    assert_eq!(rd.lines().count(), 3); // header + two configs
}

#[test]
fn cli_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("junk.ply"), b"not a ply").unwrap();
    let (ok, _, stderr) = hgsc_bin(
        &["encode", "--input", "junk.ply", "--output", "x.hgsc", "--ablate-no-prune"],
        d,
    );
    assert!(!ok);
    assert!(stderr.contains("ply"), "stderr: {stderr}");

    // pruning without cameras must fail with a clear message
    let (ok, _, _) = hgsc_bin(
        &["synth", "--count", "100", "--sh-degree", "0", "--output", "s.ply"],
        d,
    );
    assert!(ok);
    let (ok, _, stderr) = hgsc_bin(&["encode", "--input", "s.ply", "--output", "s.hgsc"], d);
    assert!(!ok);
    assert!(stderr.contains("cameras"), "stderr: {stderr}");

    std::fs::write(d.join("junk.hgsc"), b"XXXXjunkjunk").unwrap();
    let (ok, _, stderr) = hgsc_bin(&["decode", "--input", "junk.hgsc", "--output", "y.ply"], d);
    assert!(!ok);
    assert!(stderr.contains("magic"), "stderr: {stderr}");
}

#[test]
fn seedless_synth_varies_while_seeded_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a.ply", "b.ply"] {
        let (ok, _, _) = hgsc_bin(
            &["synth", "--count", "200", "--sh-degree", "0", "--seed", "5", "--output", name],
            d,
        );
        assert!(ok);
    }
    assert_eq!(
        std::fs::read(d.join("a.ply")).unwrap(),
        std::fs::read(d.join("b.ply")).unwrap()
    );
    // seedless runs are overwhelmingly unlikely to repeat
    for name in ["c.ply", "e.ply"] {
        let (ok, _, _) = hgsc_bin(
            &["synth", "--count", "200", "--sh-degree", "0", "--seedless", "--output", name],
            d,
        );
        assert!(ok);
    }
    assert_ne!(
        std::fs::read(d.join("c.ply")).unwrap(),
        std::fs::read(d.join("e.ply")).unwrap()
    );
}

#[test]
fn sweep_psnr_rises_with_bit_depth_and_ignores_order() {
    let cloud = synth_cloud(&SynthConfig {
        count: 6000,
        sh_degree: 1,
        seed: 21,
    });
    let rig = synth_rig(4, 96, 96, 0.0);
    let eval = synth_rig(4, 96, 96, 0.39);
    let mk = |bits: u8| EncodeConfig {
        bits: [bits, bits.saturating_sub(2).max(2), bits, bits, bits],
        ..Default::default()
    };
    let configs = vec![
        ("q5".to_string(), mk(5)),
        ("q8".to_string(), mk(8)),
        ("q12".to_string(), mk(12)),
    ];
    let points = rd_sweep(&cloud, &rig, &eval, &configs).unwrap();
    assert!(
        points[0].psnr_db <= points[1].psnr_db && points[1].psnr_db <= points[2].psnr_db,
        "psnr not monotone over bit depth: {:?}",
        points.iter().map(|p| p.psnr_db).collect::<Vec<_>>()
    );

    // rows don't depend on sweep order
    let reversed: Vec<(String, EncodeConfig)> = configs.iter().rev().cloned().collect();
    let rev_points = rd_sweep(&cloud, &rig, &eval, &reversed).unwrap();
    for p in &points {
        let q = rev_points.iter().find(|q| q.label == p.label).unwrap();
        assert_eq!(p.size_bytes, q.size_bytes);
        assert_eq!(p.psnr_db, q.psnr_db);
    }

    // low/high presets land on the expected side of each other
    let presets = vec![
        ("low".to_string(), EncodeConfig::default().with_preset(Preset::Low)),
        ("high".to_string(), EncodeConfig::default().with_preset(Preset::High)),
    ];
    let pts = rd_sweep(&cloud, &rig, &eval, &presets).unwrap();
    assert!(pts[0].size_bytes < pts[1].size_bytes);
}
