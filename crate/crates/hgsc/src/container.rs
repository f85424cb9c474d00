//! Bitstream container and the end-to-end pipeline: prune, octree
//! geometry, recolor, color transform, partition, RAHT anchors and LoD
//! residuals on the way in; the exact mirror on the way out. The header
//! carries everything the decoder cannot recompute (fractions, tree depth,
//! k, flags); partition membership is never transmitted.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::anchor::{decode_anchor_attributes, encode_anchor_attributes, NEAR_LOSSLESS_STEPS};
use crate::attr::{
    primitive_from_attributes, recolor, transform_colors, AttributeVector,
    GROUP_COUNT,
};
use crate::error::{Error, Result};
use crate::geometry::{decode_geometry, encode_geometry, voxelize};
use crate::lod::{decode_lod, encode_lod, AnchorSet, GroupBits, HIGHRATE_BITS, LOWRATE_BITS};
use crate::partition::build_partition;
use crate::prune::{importance_report, opacity_only_report, prune};
use crate::raht::RahtPlan;
use crate::scene::{sh_coeff_count, CameraView, GaussianCloud};
use crate::wire::{ByteReader, ByteWriter};

const MAGIC: &[u8; 4] = b"HGSC";
const VERSION: u8 = 1;
/// Flag bit 0: LoD FPS pools the remainder across blocks (the only rule
/// this decoder implements). Bit 1: SH coefficients are in YUV.
const FLAG_POOLED_LOD_FPS: u8 = 1;
const FLAG_YUV: u8 = 2;

/// Relative scale of the IDW epsilon.
const KNN_EPSILON_SCALE: f64 = 1e-12;

/// Both sides must partition with bit-identical fractions: the f32 values
/// that travel in the header, renormalized to sum exactly to 1.
fn wire_fractions(anchor: f32, lods: &[f32]) -> (f64, Vec<f64>) {
    let sum: f64 = anchor as f64 + lods.iter().map(|&f| f as f64).sum::<f64>();
    let norm = 1.0 / sum;
    (
        anchor as f64 * norm,
        lods.iter().map(|&f| f as f64 * norm).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Low,
    High,
}

impl Preset {
    pub fn bits(self) -> GroupBits {
        match self {
            Preset::Low => LOWRATE_BITS,
            Preset::High => HIGHRATE_BITS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EncodeConfig {
    pub tau_percent: f64,
    pub beta: f64,
    pub octree_depth: u8,
    pub anchor_frac: f64,
    pub lod_fracs: Vec<f64>,
    pub max_leaf: usize,
    pub k: usize,
    pub bits: GroupBits,
    pub anchor_steps: [f64; GROUP_COUNT],
    pub no_prune: bool,
    pub prune_opacity_only: bool,
    pub no_yuv: bool,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            tau_percent: 60.0,
            beta: 0.1,
            octree_depth: 12,
            anchor_frac: 0.10,
            lod_fracs: vec![0.30, 0.60],
            max_leaf: 2048,
            k: 3,
            bits: HIGHRATE_BITS,
            anchor_steps: NEAR_LOSSLESS_STEPS,
            no_prune: false,
            prune_opacity_only: false,
            no_yuv: false,
        }
    }
}

impl EncodeConfig {
    pub fn with_preset(mut self, preset: Preset) -> Self {
        self.bits = preset.bits();
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EncodeStats {
    pub input_primitives: usize,
    pub surviving_primitives: usize,
    pub voxel_primitives: usize,
    pub header_bytes: usize,
    pub geometry_bytes: usize,
    pub anchor_bytes: usize,
    pub lod_bytes: Vec<usize>,
    /// Residual quantization step per channel group, one row per LoD.
    pub lod_steps: Vec<[f64; GROUP_COUNT]>,
    pub total_bytes: usize,
    pub anchor_count: usize,
    pub lod_counts: Vec<usize>,
    /// LoDs whose prediction had to clamp k to the reference-set size.
    pub knn_clamped_lods: Vec<usize>,
    pub encode_seconds: f64,
}

#[derive(Debug)]
pub struct DecodeResult {
    pub cloud: GaussianCloud,
    /// Reconstructed attribute vectors in Morton order after the inverse
    /// color transform, before quaternion canonicalization.
    pub attributes: Vec<AttributeVector>,
    /// The same vectors in the coded domain (pre inverse color
    /// transform); fidelity bounds and encoder/decoder lockstep are
    /// stated on this surface.
    pub coded_attributes: Vec<AttributeVector>,
    pub decode_seconds: f64,
}

/// Encoder output including the decoder-identical reconstruction.
pub struct EncodeOutput {
    pub bytes: Vec<u8>,
    pub stats: EncodeStats,
    /// Coded-domain reconstruction of every primitive, Morton order;
    /// byte-for-byte what the decoder will compute.
    pub reconstruction: Vec<AttributeVector>,
}

/// Run the full encoder on an in-memory cloud.
pub fn encode_cloud(
    cloud: &GaussianCloud,
    cams: &[CameraView],
    config: &EncodeConfig,
) -> Result<(Vec<u8>, EncodeStats)> {
    let out = encode_cloud_detailed(cloud, cams, config)?;
    Ok((out.bytes, out.stats))
}

/// [`encode_cloud`] that also returns the closed-loop reconstruction.
pub fn encode_cloud_detailed(
    cloud: &GaussianCloud,
    cams: &[CameraView],
    config: &EncodeConfig,
) -> Result<EncodeOutput> {
    let start = Instant::now();
    if cloud.is_empty() {
        return Err(Error::Argument("cannot encode an empty cloud".into()));
    }
    let frac_total: f64 = config.anchor_frac + config.lod_fracs.iter().sum::<f64>();
    if (frac_total - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!(
            "anchor and LoD fractions sum to {frac_total}, expected 1"
        )));
    }
    if config.lod_fracs.len() > 255 {
        return Err(Error::Argument("at most 255 LoD levels".into()));
    }

    // pruning
    let surviving = if config.no_prune {
        cloud.clone()
    } else {
        let report = if config.prune_opacity_only {
            opacity_only_report(cloud)
        } else {
            if cams.is_empty() {
                return Err(Error::Argument(
                    "pruning needs cameras; pass a rig or disable pruning".into(),
                ));
            }
            importance_report(cloud, cams, config.beta)?
        };
        prune(cloud, &report, config.tau_percent)?
    };
    let surviving_count = surviving.len();

    // geometry
    let positions = surviving.positions();
    let (grid, _surjection) = voxelize(&positions, config.octree_depth)
        .map_err(|e| e.in_stage("geometry"))?;
    let geometry_section = encode_geometry(&grid);
    let centers = grid.centers();
    let n = centers.len();
    let b = sh_coeff_count(surviving.sh_degree);

    // attribute preprocessing
    let mut attrs = recolor(&centers, &surviving).map_err(|e| e.in_stage("recolor"))?;
    if !config.no_yuv {
        for a in &mut attrs {
            transform_colors(a, b, true);
        }
    }

    // partition and anchors
    let wire_lod_fracs: Vec<f32> = config.lod_fracs.iter().map(|&f| f as f32).collect();
    let (anchor_frac, lod_fracs) = wire_fractions(config.anchor_frac as f32, &wire_lod_fracs);
    let part = build_partition(&centers, anchor_frac, &lod_fracs, config.max_leaf)
        .map_err(|e| e.in_stage("partition"))?;
    let anchor_coords: Vec<[u32; 3]> = part.anchor_indices.iter().map(|&i| grid.coords[i]).collect();
    let plan = RahtPlan::build(&anchor_coords, grid.depth).map_err(|e| e.in_stage("anchor"))?;
    let anchor_attrs: Vec<AttributeVector> =
        part.anchor_indices.iter().map(|&i| attrs[i].clone()).collect();
    let (anchor_section, anchor_recon) =
        encode_anchor_attributes(&plan, &anchor_attrs, &config.anchor_steps, b)
            .map_err(|e| e.in_stage("anchor"))?;

    let mut anchor_set = AnchorSet::new(
        part.anchor_indices.clone(),
        part.anchor_indices.iter().map(|&i| centers[i]).collect(),
        anchor_recon,
    );
    let epsilon = KNN_EPSILON_SCALE * grid.cube_size;

    // LoDs, closed loop
    let mut lod_sections = Vec::with_capacity(part.lod_indices.len());
    let mut lod_steps = Vec::with_capacity(part.lod_indices.len());
    let mut knn_clamped_lods = Vec::new();
    for (lod_index, members) in part.lod_indices.iter().enumerate() {
        if config.k > anchor_set.len() && !members.is_empty() {
            knn_clamped_lods.push(lod_index);
        }
        let member_positions: Vec<_> = members.iter().map(|&i| centers[i]).collect();
        let member_attrs: Vec<_> = members.iter().map(|&i| attrs[i].clone()).collect();
        let (payload, recon) = encode_lod(
            &member_positions,
            &member_attrs,
            &anchor_set,
            &config.bits,
            config.k,
            epsilon,
            b,
        )
        .map_err(|e| e.in_stage("lod"))?;
        anchor_set.absorb(members, &member_positions, &recon);
        lod_steps.push(crate::lod::payload_steps(&payload)?);
        lod_sections.push(payload);
    }

    // container
    let mut w = ByteWriter::new();
    w.put_bytes(MAGIC);
    w.put_u8(VERSION);
    let mut flags = FLAG_POOLED_LOD_FPS;
    if !config.no_yuv {
        flags |= FLAG_YUV;
    }
    w.put_u8(flags);
    w.put_u8(surviving.sh_degree);
    w.put_u8(config.lod_fracs.len() as u8);
    w.put_f32(config.anchor_frac as f32);
    for f in &config.lod_fracs {
        w.put_f32(*f as f32);
    }
    w.put_varint(config.max_leaf as u64);
    w.put_varint(config.k as u64);
    let header_bytes = w.len();
    w.put_varint(geometry_section.len() as u64);
    w.put_bytes(&geometry_section);
    w.put_varint(anchor_section.len() as u64);
    w.put_bytes(&anchor_section);
    for payload in &lod_sections {
        w.put_varint(payload.len() as u64);
        w.put_bytes(payload);
    }
    let bytes = w.into_bytes();

    let stats = EncodeStats {
        input_primitives: cloud.len(),
        surviving_primitives: surviving_count,
        voxel_primitives: n,
        header_bytes,
        geometry_bytes: geometry_section.len(),
        anchor_bytes: anchor_section.len(),
        lod_bytes: lod_sections.iter().map(Vec::len).collect(),
        lod_steps,
        total_bytes: bytes.len(),
        anchor_count: part.anchor_indices.len(),
        lod_counts: part.lod_indices.iter().map(Vec::len).collect(),
        knn_clamped_lods,
        encode_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(EncodeOutput {
        bytes,
        stats,
        reconstruction: anchor_set.attributes,
    })
}

/// Decode a bitstream back to a cloud (plus the raw attribute vectors).
pub fn decode_bytes(bytes: &[u8]) -> Result<DecodeResult> {
    let start = Instant::now();
    let mut r = ByteReader::new(bytes);
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::decode(0, "not an HGSC stream (bad magic)"));
    }
    let version = r.get_u8()?;
    if version != VERSION {
        return Err(Error::decode(4, format!("unsupported version {version}")));
    }
    let flags = r.get_u8()?;
    if flags & FLAG_POOLED_LOD_FPS == 0 {
        return Err(Error::decode(5, "per-block LoD FPS streams are not supported"));
    }
    let yuv = flags & FLAG_YUV != 0;
    let sh_degree = r.get_u8()?;
    if sh_degree > 3 {
        return Err(Error::decode(6, format!("SH degree {sh_degree} out of range")));
    }
    let lod_count = r.get_u8()? as usize;
    let anchor_frac = r.get_f32()?;
    let mut lod_fracs: Vec<f32> = Vec::with_capacity(lod_count);
    for _ in 0..lod_count {
        lod_fracs.push(r.get_f32()?);
    }
    let max_leaf = r.get_varint()? as usize;
    let k = r.get_varint()? as usize;
    if max_leaf == 0 || k == 0 {
        return Err(Error::decode(r.offset(), "zero max_leaf or k in header"));
    }

    let section = |r: &mut ByteReader, name: &'static str| -> Result<Vec<u8>> {
        let len = r.get_varint()? as usize;
        r.take(len)
            .map(<[u8]>::to_vec)
            .map_err(|e| Error::corrupt(name, e.to_string()))
    };
    let geometry_section = section(&mut r, "geometry")?;
    let anchor_section = section(&mut r, "anchor")?;
    let mut lod_sections = Vec::with_capacity(lod_count);
    for _ in 0..lod_count {
        lod_sections.push(section(&mut r, "lod")?);
    }
    if r.remaining() != 0 {
        return Err(Error::decode(r.offset(), "trailing bytes after last section"));
    }

    let grid = decode_geometry(&geometry_section)?;
    let centers = grid.centers();
    let n = centers.len();
    let b = sh_coeff_count(sh_degree);

    // the partition is a pure function of decoded geometry
    let frac_sum: f64 = anchor_frac as f64 + lod_fracs.iter().map(|&f| f as f64).sum::<f64>();
    if (frac_sum - 1.0).abs() > 1e-6 {
        return Err(Error::corrupt("header", "fractions do not sum to 1"));
    }
    let (anchor_frac, lod_fracs) = wire_fractions(anchor_frac, &lod_fracs);
    let part = build_partition(&centers, anchor_frac, &lod_fracs, max_leaf)?;

    let anchor_coords: Vec<[u32; 3]> = part.anchor_indices.iter().map(|&i| grid.coords[i]).collect();
    let plan = RahtPlan::build(&anchor_coords, grid.depth)?;
    let anchor_attrs = decode_anchor_attributes(&plan, &anchor_section, b)?;

    let mut anchor_set = AnchorSet::new(
        part.anchor_indices.clone(),
        part.anchor_indices.iter().map(|&i| centers[i]).collect(),
        anchor_attrs,
    );
    let epsilon = KNN_EPSILON_SCALE * grid.cube_size;
    for (members, payload) in part.lod_indices.iter().zip(&lod_sections) {
        let member_positions: Vec<_> = members.iter().map(|&i| centers[i]).collect();
        let recon = decode_lod(payload, &member_positions, &anchor_set, k, epsilon, b)?;
        anchor_set.absorb(members, &member_positions, &recon);
    }

    // anchor_set now holds every primitive in global (Morton) order
    debug_assert_eq!(anchor_set.global_indices, (0..n).collect::<Vec<_>>());
    let coded_attributes = anchor_set.attributes;
    let mut attributes = coded_attributes.clone();
    if yuv {
        for a in &mut attributes {
            transform_colors(a, b, false);
        }
    }

    let primitives = centers
        .iter()
        .zip(&attributes)
        .enumerate()
        .map(|(i, (pos, attrs))| {
            primitive_from_attributes(*pos, attrs, b).map_err(|e| {
                Error::corrupt("lod", format!("primitive {i} reconstruction: {e}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cloud = GaussianCloud::new(primitives, sh_degree)?;
    Ok(DecodeResult {
        cloud,
        attributes,
        coded_attributes,
        decode_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn encode_file(
    input: impl AsRef<Path>,
    cameras: Option<&Path>,
    config: &EncodeConfig,
    output: impl AsRef<Path>,
) -> Result<EncodeStats> {
    let cloud = crate::ply::load_ply(input).map_err(|e| e.in_stage("load"))?;
    let cams = match cameras {
        Some(path) => crate::camera::load_camera_rig(path)?,
        None => Vec::new(),
    };
    let (bytes, stats) = encode_cloud(&cloud, &cams, config)?;
    std::fs::write(output.as_ref(), &bytes)?;
    Ok(stats)
}

pub fn decode_file(input: impl AsRef<Path>, output: impl AsRef<Path>) -> Result<DecodeResult> {
    let bytes = std::fs::read(input.as_ref())?;
    let result = decode_bytes(&bytes)?;
    crate::ply::save_ply(&result.cloud, output)?;
    Ok(result)
}

/// Encode/decode once per config, render the held-out views and collect
/// one rate-distortion point per config. The reference for quality is the
/// pruned original of that config.
pub fn rd_sweep(
    cloud: &GaussianCloud,
    prune_cams: &[CameraView],
    eval_cams: &[CameraView],
    configs: &[(String, EncodeConfig)],
) -> Result<Vec<crate::metrics::RdPoint>> {
    if configs.len() < 2 {
        return Err(Error::Argument("a sweep needs at least 2 configs".into()));
    }
    if eval_cams.is_empty() {
        return Err(Error::Argument("a sweep needs evaluation cameras".into()));
    }
    configs
        .iter()
        .map(|(label, config)| {
            let (bytes, stats) = encode_cloud(cloud, prune_cams, config)?;
            let decoded = decode_bytes(&bytes)?;
            // the reference is what the encoder kept after pruning
            let reference = if config.no_prune {
                cloud.clone()
            } else {
                let report = if config.prune_opacity_only {
                    opacity_only_report(cloud)
                } else {
                    importance_report(cloud, prune_cams, config.beta)?
                };
                prune(cloud, &report, config.tau_percent)?
            };
            let (mut psnr_sum, mut ssim_sum) = (0.0f64, 0.0f64);
            for cam in eval_cams {
                let ref_img = crate::render::render(&reference, cam, false).image;
                let dec_img = crate::render::render(&decoded.cloud, cam, false).image;
                psnr_sum += crate::metrics::psnr(&ref_img, &dec_img)?;
                ssim_sum += crate::metrics::ssim(&ref_img, &dec_img)?;
            }
            Ok(crate::metrics::RdPoint {
                size_bytes: bytes.len() as u64,
                psnr_db: psnr_sum / eval_cams.len() as f64,
                ssim: ssim_sum / eval_cams.len() as f64,
                encode_seconds: stats.encode_seconds,
                decode_seconds: decoded.decode_seconds,
                label: label.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_cloud, synth_rig, SynthConfig};

    fn small_scene() -> (GaussianCloud, Vec<CameraView>) {
        let cloud = synth_cloud(&SynthConfig {
            count: 1500,
            sh_degree: 1,
            seed: 11,
        });
        let rig = synth_rig(4, 96, 96, 0.0);
        (cloud, rig)
    }

    #[test]
    fn encode_decode_round_trip_succeeds() {
        let (cloud, rig) = small_scene();
        let config = EncodeConfig::default();
        let (bytes, stats) = encode_cloud(&cloud, &rig, &config).unwrap();
        assert_eq!(stats.total_bytes, bytes.len());
        assert_eq!(stats.input_primitives, 1500);
        assert_eq!(stats.surviving_primitives, 600); // tau 60
        let decoded = decode_bytes(&bytes).unwrap();
        assert_eq!(decoded.cloud.len(), stats.voxel_primitives);
        assert_eq!(decoded.attributes.len(), stats.voxel_primitives);
        assert!(decoded
            .attributes
            .iter()
            .all(|a| a.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn decoding_twice_is_bit_identical() {
        let (cloud, rig) = small_scene();
        let (bytes, _) = encode_cloud(&cloud, &rig, &EncodeConfig::default()).unwrap();
        let a = decode_bytes(&bytes).unwrap();
        let b = decode_bytes(&bytes).unwrap();
        assert_eq!(a.cloud, b.cloud);
        assert_eq!(a.attributes, b.attributes);
    }

    #[test]
    fn truncated_stream_names_the_missing_section() {
        let (cloud, rig) = small_scene();
        let (bytes, stats) = encode_cloud(&cloud, &rig, &EncodeConfig::default()).unwrap();
        // cut inside the anchor section
        let cut = stats.header_bytes + stats.geometry_bytes + 8;
        let err = decode_bytes(&bytes[..cut]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("anchor") || msg.contains("geometry"), "got: {msg}");
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let (cloud, rig) = small_scene();
        let (mut bytes, _) = encode_cloud(&cloud, &rig, &EncodeConfig::default()).unwrap();
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(decode_bytes(&wrong).is_err());
        bytes[4] = 99; // version
        assert!(decode_bytes(&bytes).is_err());
    }

    #[test]
    fn ablation_flags_reach_the_header() {
        let (cloud, rig) = small_scene();
        let config = EncodeConfig {
            no_yuv: true,
            ..Default::default()
        };
        let (bytes, _) = encode_cloud(&cloud, &rig, &config).unwrap();
        assert_eq!(bytes[5] & FLAG_YUV, 0);
        assert!(decode_bytes(&bytes).is_ok());

        let config = EncodeConfig {
            no_prune: true,
            ..Default::default()
        };
        let (bytes, stats) = encode_cloud(&cloud, &[], &config).unwrap();
        assert_eq!(stats.surviving_primitives, cloud.len());
        assert!(decode_bytes(&bytes).is_ok());

        let config = EncodeConfig {
            prune_opacity_only: true,
            ..Default::default()
        };
        let (bytes, _) = encode_cloud(&cloud, &[], &config).unwrap();
        assert!(decode_bytes(&bytes).is_ok());
    }

    #[test]
    fn tiny_clouds_still_code_with_one_forced_anchor() {
        // round(0.1 * 3) = 0 anchors would leave nothing to predict from
        let cloud = synth_cloud(&SynthConfig {
            count: 3,
            sh_degree: 1,
            seed: 44,
        });
        let config = EncodeConfig {
            no_prune: true,
            ..Default::default()
        };
        let (bytes, stats) = encode_cloud(&cloud, &[], &config).unwrap();
        assert_eq!(stats.anchor_count, 1);
        let decoded = decode_bytes(&bytes).unwrap();
        assert_eq!(decoded.cloud.len(), stats.voxel_primitives);
    }

    #[test]
    fn missing_cameras_with_pruning_is_an_error() {
        let (cloud, _) = small_scene();
        assert!(encode_cloud(&cloud, &[], &EncodeConfig::default()).is_err());
    }

    #[test]
    fn file_round_trip_and_morton_output_order() {
        let dir = tempfile::tempdir().unwrap();
        let (cloud, rig) = small_scene();
        let in_ply = dir.path().join("in.ply");
        crate::ply::save_ply(&cloud, &in_ply).unwrap();
        let rig_path = dir.path().join("rig.json");
        crate::camera::save_camera_rig(&rig, &rig_path).unwrap();

        let stream = dir.path().join("scene.hgsc");
        let stats = encode_file(&in_ply, Some(rig_path.as_path()), &EncodeConfig::default(), &stream).unwrap();
        let out_ply = dir.path().join("out.ply");
        let result = decode_file(&stream, &out_ply).unwrap();
        assert_eq!(result.cloud.len(), stats.voxel_primitives);

        // decoding the same file twice gives bit-identical PLYs
        let out_ply2 = dir.path().join("out2.ply");
        decode_file(&stream, &out_ply2).unwrap();
        assert_eq!(
            std::fs::read(&out_ply).unwrap(),
            std::fs::read(&out_ply2).unwrap()
        );
    }

    #[test]
    fn rd_sweep_yields_one_row_per_config() {
        let (cloud, rig) = small_scene();
        let eval = synth_rig(2, 64, 64, 0.37);
        let configs = vec![
            ("low".to_string(), EncodeConfig::default().with_preset(Preset::Low)),
            ("high".to_string(), EncodeConfig::default().with_preset(Preset::High)),
        ];
        let points = rd_sweep(&cloud, &rig, &eval, &configs).unwrap();
        assert_eq!(points.len(), 2);
        assert!(points.iter().all(|p| p.size_bytes > 0));
        assert!(points.iter().all(|p| (-1.0..=1.0).contains(&p.ssim)));
    }
}
