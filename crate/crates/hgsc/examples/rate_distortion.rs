//! Sweep encoder operating points, write the rate-distortion table and
//! compare two sweeps with the Bjontegaard delta rate.
//!
//! ```bash
//! cargo run --release --example rate_distortion
//! ```

use hgsc::container::{rd_sweep, EncodeConfig};
use hgsc::metrics::{bd_rate, write_rd_csv};
use hgsc::synth::{synth_cloud, synth_rig, SynthConfig};

fn main() -> hgsc::Result<()> {
    let out = std::path::Path::new("target/examples");
    std::fs::create_dir_all(out)?;

    let cloud = synth_cloud(&SynthConfig {
        count: 12_000,
        sh_degree: 1,
        seed: 8,
    });
    let rig = synth_rig(5, 128, 128, 0.0);
    let eval = synth_rig(5, 128, 128, 0.39);

    let bits = |n: u8| -> EncodeConfig {
        EncodeConfig {
            bits: [n, n.saturating_sub(2).max(2), n, n, n],
            ..Default::default()
        }
    };
    // stay below quality saturation (the voxel-grid limit near 59 dB);
    // BD-rate over a flat quality segment is meaningless
    let sweep: Vec<(String, EncodeConfig)> =
        [4u8, 5, 6, 7].iter().map(|&n| (format!("q{n}"), bits(n))).collect();
    let points = rd_sweep(&cloud, &rig, &eval, &sweep)?;
    for p in &points {
        println!(
            "{:>4}: {:>7} bytes  {:>6.2} dB  ssim {:.4}",
            p.label, p.size_bytes, p.psnr_db, p.ssim
        );
    }
    write_rd_csv(&points, out.join("rd_curve.csv"))?;

    // the same sweep without the color transform, compared by BD-rate
    let sweep_no_yuv: Vec<(String, EncodeConfig)> = [4u8, 5, 6, 7]
        .iter()
        .map(|&n| {
            let mut c = bits(n);
            c.no_yuv = true;
            (format!("q{n}-rgb"), c)
        })
        .collect();
    let rgb_points = rd_sweep(&cloud, &rig, &eval, &sweep_no_yuv)?;
    match bd_rate(&rgb_points, &points) {
        Ok(delta) => println!(
            "BD-rate of YUV coding against RGB coding: {delta:+.2}% (negative = cheaper)"
        ),
        Err(e) => println!("BD-rate not computable on this corpus: {e}"),
    }
    println!("curve written to target/examples/rd_curve.csv");
    Ok(())
}
