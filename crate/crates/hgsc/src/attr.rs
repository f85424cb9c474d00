//! Attribute preprocessing: recoloring decoded voxels from the nearest
//! original Gaussian, the BT.709 color transform applied bandwise to the
//! SH coefficients, and the flat per-primitive attribute layout used by
//! the anchor and LoD coders.
//!
//! Layout of an attribute vector (3B + 8 channels): B color triples in
//! band order, then 3 log-scales, 4 quaternion components, 1 opacity
//! logit. Channels are grouped for quantization: SH luma, SH chroma,
//! scale, rotation, opacity.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scene::{canonicalize_quaternion, GaussianCloud, GaussianPrimitive};
use crate::spatial::KdTree;

pub type AttributeVector = Vec<f64>;

pub const GROUP_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelGroup {
    ShLuma = 0,
    ShChroma = 1,
    Scale = 2,
    Rotation = 3,
    Opacity = 4,
}

pub const ALL_GROUPS: [ChannelGroup; GROUP_COUNT] = [
    ChannelGroup::ShLuma,
    ChannelGroup::ShChroma,
    ChannelGroup::Scale,
    ChannelGroup::Rotation,
    ChannelGroup::Opacity,
];

/// Channels per primitive for `b` SH triples.
pub fn channel_count(b: usize) -> usize {
    3 * b + 8
}

/// Group of channel index `ch` in a vector with `b` SH triples.
pub fn group_of(ch: usize, b: usize) -> ChannelGroup {
    debug_assert!(ch < channel_count(b));
    if ch < 3 * b {
        if ch.is_multiple_of(3) {
            ChannelGroup::ShLuma
        } else {
            ChannelGroup::ShChroma
        }
    } else if ch < 3 * b + 3 {
        ChannelGroup::Scale
    } else if ch < 3 * b + 7 {
        ChannelGroup::Rotation
    } else {
        ChannelGroup::Opacity
    }
}

/// Flatten a primitive's coded attributes (color channels still RGB).
pub fn attributes_of(p: &GaussianPrimitive) -> AttributeVector {
    let mut v = Vec::with_capacity(channel_count(p.sh.len()));
    for triple in &p.sh {
        v.extend_from_slice(triple);
    }
    for i in 0..3 {
        v.push(p.log_scale[i]);
    }
    v.extend_from_slice(&p.rotation);
    v.push(p.opacity_logit);
    v
}

/// Rebuild a primitive from a decoded attribute vector. The quaternion is
/// canonicalized (decoded values are near-unit, not exact).
pub fn primitive_from_attributes(
    position: Vector3<f64>,
    attrs: &[f64],
    b: usize,
) -> Result<GaussianPrimitive> {
    if attrs.len() != channel_count(b) {
        return Err(Error::Argument(format!(
            "attribute vector has {} channels, expected {}",
            attrs.len(),
            channel_count(b)
        )));
    }
    let sh: Vec<[f64; 3]> = (0..b)
        .map(|j| [attrs[3 * j], attrs[3 * j + 1], attrs[3 * j + 2]])
        .collect();
    let s = 3 * b;
    GaussianPrimitive::new(
        position,
        Vector3::new(attrs[s], attrs[s + 1], attrs[s + 2]),
        [attrs[s + 3], attrs[s + 4], attrs[s + 5], attrs[s + 6]],
        attrs[s + 7],
        sh,
    )
}

// BT.709 analysis: Y = 0.2126 R + 0.7152 G + 0.0722 B,
// U = (B - Y) / 1.8556, V = (R - Y) / 1.5748
const KR: f64 = 0.2126;
const KG: f64 = 0.7152;
const KB: f64 = 0.0722;
const U_SCALE: f64 = 1.8556;
const V_SCALE: f64 = 1.5748;

pub fn rgb_to_yuv(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb;
    let y = KR * r + KG * g + KB * b;
    [y, (b - y) / U_SCALE, (r - y) / V_SCALE]
}

pub fn yuv_to_rgb(yuv: [f64; 3]) -> [f64; 3] {
    let [y, u, v] = yuv;
    let b = y + U_SCALE * u;
    let r = y + V_SCALE * v;
    let g = (y - KR * r - KB * b) / KG;
    [r, g, b]
}

/// Apply the color transform to every SH band of an attribute vector.
pub fn transform_colors(attrs: &mut [f64], b: usize, forward: bool) {
    for j in 0..b {
        let triple = [attrs[3 * j], attrs[3 * j + 1], attrs[3 * j + 2]];
        let out = if forward {
            rgb_to_yuv(triple)
        } else {
            yuv_to_rgb(triple)
        };
        attrs[3 * j..3 * j + 3].copy_from_slice(&out);
    }
}

/// Attributes for each decoded position, copied verbatim from the
/// Euclidean-nearest primitive of the (pruned) original cloud; ties take
/// the lowest index. Color channels stay RGB here.
pub fn recolor(
    decoded_positions: &[Vector3<f64>],
    original: &GaussianCloud,
) -> Result<Vec<AttributeVector>> {
    if original.is_empty() {
        return Err(Error::Argument("recolor needs a non-empty original cloud".into()));
    }
    let positions = original.positions();
    let tree = KdTree::build(&positions);
    Ok(decoded_positions
        .iter()
        .map(|q| attributes_of(&original.primitives[tree.nearest(q)]))
        .collect())
}

/// Canonicalize the quaternion channels in place (sign fix, and
/// normalization when meaningfully off-unit).
pub fn canonicalize_rotation_channels(attrs: &mut [f64], b: usize) -> Result<()> {
    let s = 3 * b + 3;
    let q = canonicalize_quaternion([attrs[s], attrs[s + 1], attrs[s + 2], attrs[s + 3]])?;
    attrs[s..s + 4].copy_from_slice(&q);
    Ok(())
}
