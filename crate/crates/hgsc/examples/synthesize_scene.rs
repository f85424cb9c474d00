//! Generate a synthetic Gaussian scene with camera rigs and save it as a
//! standard 3DGS PLY plus two JSON rigs (one for pruning, one held out for
//! evaluation).
//!
//! ```bash
//! cargo run --release --example synthesize_scene
//! ```

use hgsc::synth::{synth_cloud, synth_rig, SynthConfig};

fn main() -> hgsc::Result<()> {
    let out = std::path::Path::new("target/examples");
    std::fs::create_dir_all(out)?;

    let cloud = synth_cloud(&SynthConfig {
        count: 20_000,
        sh_degree: 2,
        seed: 7,
    });
    let ply = out.join("scene.ply");
    hgsc::save_ply(&cloud, &ply)?;

    let rig = synth_rig(8, 256, 256, 0.0);
    let eval = synth_rig(8, 256, 256, 0.39);
    hgsc::save_camera_rig(&rig, out.join("rig.json"))?;
    hgsc::save_camera_rig(&eval, out.join("eval_rig.json"))?;

    println!(
        "wrote {} primitives (sh degree {}) to {}",
        cloud.len(),
        cloud.sh_degree,
        ply.display()
    );
    println!("bbox: {:?} .. {:?}", cloud.bbox.min.as_slice(), cloud.bbox.max.as_slice());
    println!("rigs: target/examples/rig.json, target/examples/eval_rig.json");
    Ok(())
}
