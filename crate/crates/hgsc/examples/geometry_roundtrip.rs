//! Voxelize positions onto octree grids of increasing depth, code the
//! occupancy and report payload size against the worst-case position error.
//!
//! ```bash
//! cargo run --release --example geometry_roundtrip
//! ```

use hgsc::geometry::{decode_geometry, encode_geometry, voxelize};
use hgsc::synth::{synth_cloud, SynthConfig};

fn main() -> hgsc::Result<()> {
    let cloud = synth_cloud(&SynthConfig {
        count: 40_000,
        sh_degree: 0,
        seed: 2,
    });
    let positions = cloud.positions();

    println!("depth  voxels  payload  bits/voxel  max position error");
    for depth in [6u8, 8, 10, 12] {
        let (grid, surjection) = voxelize(&positions, depth)?;
        let payload = encode_geometry(&grid);
        let decoded = decode_geometry(&payload)?;
        assert_eq!(decoded, grid, "voxel-level losslessness");

        let max_err = positions
            .iter()
            .enumerate()
            .map(|(i, p)| (grid.center(&grid.coords[surjection[i]]) - p).norm())
            .fold(0.0f64, f64::max);
        println!(
            "{depth:>5}  {:>6}  {:>7}  {:>10.2}  {max_err:.5} (bound {:.5})",
            grid.coords.len(),
            payload.len(),
            8.0 * payload.len() as f64 / grid.coords.len() as f64,
            grid.position_error_bound()
        );
    }
    Ok(())
}
