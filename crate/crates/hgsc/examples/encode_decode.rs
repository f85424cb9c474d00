//! Compress a scene end to end and decompress it again, printing section
//! sizes and the per-channel reconstruction error against the preprocessed
//! attributes.
//!
//! ```bash
//! cargo run --release --example encode_decode
//! ```

use hgsc::attr::{recolor, transform_colors};
use hgsc::container::{decode_bytes, encode_cloud_detailed, EncodeConfig, Preset};
use hgsc::geometry::voxelize;
use hgsc::synth::{synth_cloud, synth_rig, SynthConfig};

fn main() -> hgsc::Result<()> {
    let cloud = synth_cloud(&SynthConfig {
        count: 30_000,
        sh_degree: 2,
        seed: 3,
    });
    let rig = synth_rig(6, 192, 192, 0.0);

    let config = EncodeConfig::default().with_preset(Preset::High);
    let out = encode_cloud_detailed(&cloud, &rig, &config)?;
    let raw_bytes = cloud.len() * (4 * (3 + 3 * cloud.primitives[0].sh.len() + 8));
    println!(
        "{} primitives -> {} after pruning -> {} voxels",
        out.stats.input_primitives, out.stats.surviving_primitives, out.stats.voxel_primitives
    );
    println!(
        "stream: {} bytes ({:.1}% of raw storage)",
        out.stats.total_bytes,
        100.0 * out.stats.total_bytes as f64 / raw_bytes as f64
    );
    println!(
        "  geometry {} B | anchors {} B ({}) | lods {:?} B {:?}",
        out.stats.geometry_bytes,
        out.stats.anchor_bytes,
        out.stats.anchor_count,
        out.stats.lod_bytes,
        out.stats.lod_counts
    );

    let decoded = decode_bytes(&out.bytes)?;
    println!(
        "decoded {} primitives in {:.2}s",
        decoded.cloud.len(),
        decoded.decode_seconds
    );

    // measure against what the encoder actually coded: recolored voxel
    // centers in the YUV domain
    let report = hgsc::prune::importance_report(&cloud, &rig, config.beta)?;
    let pruned = hgsc::prune::prune(&cloud, &report, config.tau_percent)?;
    let (grid, _) = voxelize(&pruned.positions(), config.octree_depth)?;
    let b = cloud.primitives[0].sh.len();
    let mut preprocessed = recolor(&grid.centers(), &pruned)?;
    for a in &mut preprocessed {
        transform_colors(a, b, true);
    }
    let mut worst = 0.0f64;
    for (pre, dec) in preprocessed.iter().zip(&decoded.coded_attributes) {
        for (x, y) in pre.iter().zip(dec) {
            worst = worst.max((x - y).abs());
        }
    }
    println!("worst attribute channel error vs preprocessed: {worst:.2e}");
    Ok(())
}
