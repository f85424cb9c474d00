//! Hierarchical codec for 3D Gaussian Splatting scenes.
//!
//! The pipeline prunes low-importance Gaussians, codes positions with a
//! context-modeled octree, recolors and partitions the decoded voxels into
//! anchors and LoD levels, transforms anchor attributes with a
//! region-adaptive hierarchical transform and predicts each LoD from the
//! growing anchor set, coding the residuals with DEFLATE. Everything the
//! decoder needs beyond the payload bytes is recomputed from decoded
//! geometry, so the bitstream carries no partition side information.
//!
//! See the `examples/` directory for one runnable example per capability
//! and the `hgsc` binary for the command-line interface.

pub mod anchor;
pub mod attr;
pub mod camera;
pub mod container;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod lod;
pub mod metrics;
pub mod morton;
pub mod partition;
pub mod ply;
pub mod prune;
pub mod raht;
pub mod render;
pub mod scene;
pub mod sh;
pub mod spatial;
pub mod synth;
#[cfg(test)]
pub(crate) mod testutil;
pub mod wire;

pub use camera::{load_camera_rig, save_camera_rig};
pub use container::{
    decode_bytes, decode_file, encode_cloud, encode_cloud_detailed, encode_file, rd_sweep,
    DecodeResult, EncodeConfig, EncodeOutput, EncodeStats, Preset,
};
pub use error::{Error, Result};
pub use ply::{load_ply, save_ply};
pub use scene::{CameraView, GaussianCloud, GaussianPrimitive};
