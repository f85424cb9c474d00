//! Predictive coding of non-anchor primitives. Each LoD member is
//! predicted by inverse-distance-weighted interpolation of its k nearest
//! anchors; residuals are quantized with per-group steps derived from the
//! residual range and the declared bit depth, serialized as minimal-width
//! planes and DEFLATE-coded. Prediction runs closed-loop: the encoder
//! keeps the decoder-identical reconstruction and both sides grow the
//! anchor set with it before the next LoD.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::anchor::quantize;
use crate::attr::{channel_count, group_of, AttributeVector, GROUP_COUNT};
use crate::entropy::{lz_compress, lz_decompress};
use crate::error::{Error, Result};
use crate::spatial::KdTree;
use crate::wire::{unzigzag, zigzag, ByteReader, ByteWriter};

/// Quantization bit depths per channel group (luma, chroma, scale,
/// rotation, opacity).
pub type GroupBits = [u8; GROUP_COUNT];

pub const HIGHRATE_BITS: GroupBits = [10, 8, 10, 10, 10];
pub const LOWRATE_BITS: GroupBits = [8, 6, 8, 8, 8];

/// Reference primitives available for prediction, kept in ascending global
/// (Morton) index order so distance ties resolve to the lower Morton rank.
pub struct AnchorSet {
    pub global_indices: Vec<usize>,
    pub positions: Vec<Vector3<f64>>,
    pub attributes: Vec<AttributeVector>,
}

impl AnchorSet {
    pub fn new(
        global_indices: Vec<usize>,
        positions: Vec<Vector3<f64>>,
        attributes: Vec<AttributeVector>,
    ) -> Self {
        debug_assert!(global_indices.windows(2).all(|w| w[0] < w[1]));
        Self {
            global_indices,
            positions,
            attributes,
        }
    }

    pub fn len(&self) -> usize {
        self.global_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global_indices.is_empty()
    }

    /// Merge a reconstructed LoD into the set, preserving global order.
    pub fn absorb(&mut self, indices: &[usize], positions: &[Vector3<f64>], attrs: &[AttributeVector]) {
        let mut gi = Vec::with_capacity(self.len() + indices.len());
        let mut pos = Vec::with_capacity(gi.capacity());
        let mut at = Vec::with_capacity(gi.capacity());
        let (mut a, mut b) = (0usize, 0usize);
        while a < self.global_indices.len() || b < indices.len() {
            let take_old = b >= indices.len()
                || (a < self.global_indices.len() && self.global_indices[a] < indices[b]);
            if take_old {
                gi.push(self.global_indices[a]);
                pos.push(self.positions[a]);
                at.push(std::mem::take(&mut self.attributes[a]));
                a += 1;
            } else {
                gi.push(indices[b]);
                pos.push(positions[b]);
                at.push(attrs[b].clone());
                b += 1;
            }
        }
        self.global_indices = gi;
        self.positions = pos;
        self.attributes = at;
    }
}

/// Inverse-distance-weighted prediction from the k nearest anchors. A
/// zero-distance anchor short-circuits to a verbatim copy. `k` is clamped
/// to the anchor count.
pub fn knn_predict(
    target: &Vector3<f64>,
    anchors: &AnchorSet,
    tree: &KdTree,
    k: usize,
    epsilon: f64,
) -> AttributeVector {
    debug_assert!(!anchors.is_empty() && k >= 1);
    let neighbors = tree.k_nearest(target, k.min(anchors.len()));
    if neighbors[0].0 == 0.0 {
        return anchors.attributes[neighbors[0].1].clone();
    }
    let channels = anchors.attributes[0].len();
    let mut acc = vec![0.0f64; channels];
    let mut total = 0.0f64;
    for &(d2, idx) in &neighbors {
        let w = 1.0 / (d2.sqrt() + epsilon);
        total += w;
        for (a, v) in acc.iter_mut().zip(&anchors.attributes[idx]) {
            *a += w * v;
        }
    }
    for a in &mut acc {
        *a /= total;
    }
    acc
}

fn predictions(
    member_positions: &[Vector3<f64>],
    anchors: &AnchorSet,
    k: usize,
    epsilon: f64,
) -> Vec<AttributeVector> {
    let tree = KdTree::build(&anchors.positions);
    member_positions
        .par_iter()
        .map(|p| knn_predict(p, anchors, &tree, k, epsilon))
        .collect()
}

fn group_step(range_min: f32, range_max: f32, bits: u8) -> f64 {
    let range = (range_max as f64 - range_min as f64).max(1e-8);
    range / (1u64 << bits) as f64
}

/// Encode one LoD. Returns the payload and the decoder-identical
/// reconstruction of the members' attributes.
pub fn encode_lod(
    member_positions: &[Vector3<f64>],
    actual: &[AttributeVector],
    anchors: &AnchorSet,
    bits: &GroupBits,
    k: usize,
    epsilon: f64,
    b: usize,
) -> Result<(Vec<u8>, Vec<AttributeVector>)> {
    if member_positions.len() != actual.len() {
        return Err(Error::Argument("positions and attributes disagree".into()));
    }
    let n = member_positions.len();
    let n_channels = channel_count(b);
    let mut w = ByteWriter::new();

    if n == 0 {
        for _ in 0..GROUP_COUNT {
            w.put_f32(0.0);
            w.put_f32(0.0);
            w.put_u8(0);
        }
        w.put_varint(0);
        let empty = lz_compress(&[]);
        w.put_varint(empty.len() as u64);
        w.put_bytes(&empty);
        return Ok((w.into_bytes(), Vec::new()));
    }

    let preds = predictions(member_positions, anchors, k, epsilon);
    let mut residuals = vec![vec![0.0f64; n_channels]; n];
    for i in 0..n {
        for ch in 0..n_channels {
            residuals[i][ch] = actual[i][ch] - preds[i][ch];
        }
    }

    // residual range per group, committed to f32 before deriving the step
    let mut range = [(f32::INFINITY, f32::NEG_INFINITY); GROUP_COUNT];
    for row in &residuals {
        for (ch, &v) in row.iter().enumerate() {
            let g = group_of(ch, b) as usize;
            range[g].0 = range[g].0.min(v as f32);
            range[g].1 = range[g].1.max(v as f32);
        }
    }
    for g in &mut range {
        if !g.0.is_finite() {
            *g = (0.0, 0.0);
        }
    }

    let steps: [f64; GROUP_COUNT] = std::array::from_fn(|g| group_step(range[g].0, range[g].1, bits[g]));
    let mut quantized = vec![vec![0i64; n_channels]; n];
    for i in 0..n {
        for ch in 0..n_channels {
            quantized[i][ch] = quantize(residuals[i][ch], steps[group_of(ch, b) as usize]);
        }
    }

    // minimal-width planes, group-major; primitive-major, channel-minor
    // inside each plane
    let mut planes = Vec::new();
    for g in 0..GROUP_COUNT {
        let chans: Vec<usize> = (0..n_channels).filter(|&ch| group_of(ch, b) as usize == g).collect();
        let max_z = chans
            .iter()
            .flat_map(|&ch| quantized.iter().map(move |row| zigzag(row[ch])))
            .max()
            .unwrap_or(0);
        let width = (64 - max_z.leading_zeros() as usize).div_ceil(8);
        planes.push(width as u8);
        for row in &quantized {
            for &ch in &chans {
                planes.extend_from_slice(&zigzag(row[ch]).to_le_bytes()[..width]);
            }
        }
    }
    let deflated = lz_compress(&planes);

    for g in 0..GROUP_COUNT {
        w.put_f32(range[g].0);
        w.put_f32(range[g].1);
        w.put_u8(bits[g]);
    }
    w.put_varint(n as u64);
    w.put_varint(deflated.len() as u64);
    w.put_bytes(&deflated);

    // reconstruction (prediction + dequantized residual), shared verbatim
    // with the decoder
    let recon = (0..n)
        .map(|i| {
            (0..n_channels)
                .map(|ch| preds[i][ch] + quantized[i][ch] as f64 * steps[group_of(ch, b) as usize])
                .collect()
        })
        .collect();
    Ok((w.into_bytes(), recon))
}

/// Quantization steps a LoD payload commits to, one per channel group.
pub fn payload_steps(payload: &[u8]) -> Result<[f64; GROUP_COUNT]> {
    let mut r = ByteReader::new(payload);
    let mut steps = [0f64; GROUP_COUNT];
    for s in steps.iter_mut() {
        let lo = r.get_f32()?;
        let hi = r.get_f32()?;
        let bits = r.get_u8()?;
        *s = group_step(lo, hi, bits);
    }
    Ok(steps)
}

/// Decode one LoD against the same anchors the encoder used.
pub fn decode_lod(
    payload: &[u8],
    member_positions: &[Vector3<f64>],
    anchors: &AnchorSet,
    k: usize,
    epsilon: f64,
    b: usize,
) -> Result<Vec<AttributeVector>> {
    let n = member_positions.len();
    let n_channels = channel_count(b);
    let mut r = ByteReader::new(payload);
    let mut range = [(0f32, 0f32); GROUP_COUNT];
    let mut bits = [0u8; GROUP_COUNT];
    for g in 0..GROUP_COUNT {
        range[g].0 = r.get_f32()?;
        range[g].1 = r.get_f32()?;
        bits[g] = r.get_u8()?;
    }
    let member_count = r.get_varint()? as usize;
    if member_count != n {
        return Err(Error::corrupt(
            "lod",
            format!("payload covers {member_count} members, partition says {n}"),
        ));
    }
    let deflated_len = r.get_varint()? as usize;
    let deflated = r.take(deflated_len)?;
    let planes = lz_decompress(deflated)?;
    if n == 0 {
        if !planes.is_empty() {
            return Err(Error::corrupt("lod", "residual plane for an empty LoD"));
        }
        return Ok(Vec::new());
    }

    let steps: [f64; GROUP_COUNT] = std::array::from_fn(|g| group_step(range[g].0, range[g].1, bits[g]));
    let mut quantized = vec![vec![0i64; n_channels]; n];
    let mut cursor = 0usize;
    for g in 0..GROUP_COUNT {
        let chans: Vec<usize> = (0..n_channels).filter(|&ch| group_of(ch, b) as usize == g).collect();
        if cursor >= planes.len() {
            return Err(Error::corrupt("lod", "residual planes truncated"));
        }
        let width = planes[cursor] as usize;
        cursor += 1;
        if width > 8 {
            return Err(Error::corrupt("lod", format!("plane width {width} out of range")));
        }
        let need = width * n * chans.len();
        if cursor + need > planes.len() {
            return Err(Error::corrupt(
                "lod",
                format!(
                    "residual payload holds {} bytes, group {g} needs {need} more",
                    planes.len()
                ),
            ));
        }
        for row in quantized.iter_mut() {
            for &ch in &chans {
                let mut v = 0u64;
                for (byte_idx, &byte) in planes[cursor..cursor + width].iter().enumerate() {
                    v |= (byte as u64) << (8 * byte_idx);
                }
                cursor += width;
                row[ch] = unzigzag(v);
            }
        }
    }
    if cursor != planes.len() {
        return Err(Error::corrupt(
            "lod",
            format!(
                "residual payload has {} trailing bytes",
                planes.len() - cursor
            ),
        ));
    }

    let preds = predictions(member_positions, anchors, k, epsilon);
    Ok((0..n)
        .map(|i| {
            (0..n_channels)
                .map(|ch| preds[i][ch] + quantized[i][ch] as f64 * steps[group_of(ch, b) as usize])
                .collect()
        })
        .collect())
}
