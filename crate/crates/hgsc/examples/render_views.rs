//! Render a scene from a ring of viewpoints with the CPU reference
//! renderer and export PNGs.
//!
//! ```bash
//! cargo run --release --example render_views
//! ```

use hgsc::render::render;
use hgsc::synth::{synth_cloud, synth_rig, SynthConfig};

fn main() -> hgsc::Result<()> {
    let out = std::path::Path::new("target/examples/renders");
    std::fs::create_dir_all(out)?;

    let cloud = synth_cloud(&SynthConfig {
        count: 25_000,
        sh_degree: 2,
        seed: 12,
    });
    for (i, cam) in synth_rig(4, 512, 512, 0.2).iter().enumerate() {
        let result = render(&cloud, cam, true);
        let path = out.join(format!("view{i}.png"));
        result.image.save_png(&path)?;

        let weights = result.weights.unwrap();
        let visible = weights.iter().filter(|&&w| w > 0.0).count();
        let top = weights.iter().cloned().fold(0.0f64, f64::max);
        println!(
            "{}: {} of {} splats contribute, max blending weight {top:.1}",
            path.display(),
            visible,
            cloud.len()
        );
    }
    Ok(())
}
