//! Score every Gaussian by global (rendered blending weight) and local
//! (normalized volume) significance, export the cumulative importance
//! curve and prune the least important fraction.
//!
//! ```bash
//! cargo run --release --example importance_pruning
//! ```

use hgsc::prune::{importance_cdf, importance_report, prune, write_cdf_csv};
use hgsc::synth::{synth_cloud, synth_rig, SynthConfig};

fn main() -> hgsc::Result<()> {
    let out = std::path::Path::new("target/examples");
    std::fs::create_dir_all(out)?;

    let cloud = synth_cloud(&SynthConfig {
        count: 15_000,
        sh_degree: 1,
        seed: 4,
    });
    let rig = synth_rig(8, 192, 192, 0.0);

    let report = importance_report(&cloud, &rig, 0.1)?;
    let curve = importance_cdf(&report.combined)?;
    let csv = out.join("importance_cdf.csv");
    write_cdf_csv(&curve, &csv)?;

    // how much of the total importance do the weakest 60% carry?
    let at60 = curve[60].1;
    println!("90th-percentile volume: {:.3e}", report.v_max90);
    println!(
        "weakest 60% of Gaussians carry {:.1}% of total importance",
        at60 * 100.0
    );
    println!("cumulative curve written to {}", csv.display());

    for tau in [30.0, 60.0, 66.0] {
        let kept = prune(&cloud, &report, tau)?;
        println!("tau {tau:>4}%: {} survivors", kept.len());
    }
    Ok(())
}
