//! Near-lossless anchor attribute coding: RAHT coefficients are uniformly
//! quantized per channel group, zigzag-mapped, binarized with order-0
//! Exp-Golomb and range-coded under per-(group, bit-position) adaptive
//! models. The encoder returns the decoder-identical reconstruction so the
//! LoD predictor can run closed-loop.

use crate::attr::{group_of, AttributeVector, GROUP_COUNT};
use crate::entropy::{ModelTable, RangeDecoder, RangeEncoder};
use crate::error::{Error, Result};
use crate::raht::{raht_forward, raht_inverse, CoeffStream, RahtPlan};
use crate::wire::{unzigzag, zigzag, ByteReader, ByteWriter};

/// Quantization steps per channel group, luma/scale/rotation/opacity fine
/// and chroma a bit coarser, small enough that anchor error stays
/// negligible next to the LoD residual steps.
pub const NEAR_LOSSLESS_STEPS: [f64; GROUP_COUNT] = [1e-4, 2e-4, 1e-4, 1e-4, 1e-4];

/// Bit positions beyond this share the last model.
const MAX_BIT_POS: usize = 80;

fn model_id(group: usize, bit_pos: usize) -> usize {
    group * MAX_BIT_POS + bit_pos.min(MAX_BIT_POS - 1)
}

/// Round half away from zero, saturating into i64.
pub fn quantize(value: f64, step: f64) -> i64 {
    let q = (value / step).round();
    if q >= i64::MAX as f64 {
        i64::MAX
    } else if q <= i64::MIN as f64 {
        i64::MIN
    } else {
        q as i64
    }
}

fn encode_eg0(enc: &mut RangeEncoder, models: &mut ModelTable, group: usize, v: u64) {
    let m = v + 1; // v < u64::MAX by the saturating quantizer
    let len = 64 - m.leading_zeros() as usize;
    let mut pos = 0;
    for _ in 0..len - 1 {
        enc.encode_bit(false, models.get_mut(model_id(group, pos)));
        pos += 1;
    }
    enc.encode_bit(true, models.get_mut(model_id(group, pos)));
    pos += 1;
    for i in (0..len - 1).rev() {
        enc.encode_bit(m >> i & 1 == 1, models.get_mut(model_id(group, pos)));
        pos += 1;
    }
}

fn decode_eg0(dec: &mut RangeDecoder, models: &mut ModelTable, group: usize) -> Result<u64> {
    let mut zeros = 0usize;
    let mut pos = 0;
    while !dec.decode_bit(models.get_mut(model_id(group, pos)))? {
        pos += 1;
        zeros += 1;
        if zeros > 63 {
            return Err(Error::corrupt("anchor", "Exp-Golomb prefix overflow"));
        }
    }
    pos += 1;
    let mut m = 1u64;
    for _ in 0..zeros {
        let bit = dec.decode_bit(models.get_mut(model_id(group, pos)))?;
        m = m << 1 | bit as u64;
        pos += 1;
    }
    Ok(m - 1)
}

/// Channel indices of each group, ascending, for `b` SH triples.
fn group_channels(b: usize) -> [Vec<usize>; GROUP_COUNT] {
    let mut out: [Vec<usize>; GROUP_COUNT] = Default::default();
    for ch in 0..crate::attr::channel_count(b) {
        out[group_of(ch, b) as usize].push(ch);
    }
    out
}

/// Transform, quantize and code anchor attributes. Returns the payload and
/// the reconstruction the decoder will produce.
pub fn encode_anchor_attributes(
    plan: &RahtPlan,
    attrs: &[AttributeVector],
    steps: &[f64; GROUP_COUNT],
    b: usize,
) -> Result<(Vec<u8>, Vec<AttributeVector>)> {
    let n = plan.anchor_count();
    if attrs.len() != n {
        return Err(Error::Argument(format!(
            "{} attribute vectors for {n} anchors",
            attrs.len()
        )));
    }
    let stream = raht_forward(plan, attrs);
    let channels = group_channels(b);

    // commit to the f32 steps that travel in the payload
    let wire_steps: [f32; GROUP_COUNT] = std::array::from_fn(|g| steps[g] as f32);
    let mut w = ByteWriter::new();
    for s in wire_steps {
        w.put_f32(s);
    }
    for chans in &channels {
        w.put_varint((n * chans.len()) as u64);
    }

    let coeff_at = |ch: usize, j: usize| -> f64 {
        if j == 0 {
            stream.dc[ch]
        } else {
            stream.acs[j - 1][ch]
        }
    };

    let mut models = ModelTable::new(GROUP_COUNT * MAX_BIT_POS);
    let mut enc = RangeEncoder::new();
    let mut quantized = vec![vec![0i64; n]; crate::attr::channel_count(b)];
    for (g, chans) in channels.iter().enumerate() {
        let step = wire_steps[g] as f64;
        for &ch in chans {
            for j in 0..n {
                let q = quantize(coeff_at(ch, j), step);
                quantized[ch][j] = q;
                encode_eg0(&mut enc, &mut models, g, zigzag(q));
            }
        }
    }
    w.put_bytes(&enc.finish());

    // decoder-identical reconstruction from the dequantized coefficients
    let recon = reconstruct(plan, &quantized, &wire_steps, b)?;
    Ok((w.into_bytes(), recon))
}

fn reconstruct(
    plan: &RahtPlan,
    quantized: &[Vec<i64>],
    wire_steps: &[f32; GROUP_COUNT],
    b: usize,
) -> Result<Vec<AttributeVector>> {
    let n = plan.anchor_count();
    let n_channels = crate::attr::channel_count(b);
    let mut dc = vec![0.0; n_channels];
    let mut acs = vec![vec![0.0; n_channels]; n - 1];
    for ch in 0..n_channels {
        let step = wire_steps[group_of(ch, b) as usize] as f64;
        dc[ch] = quantized[ch][0] as f64 * step;
        for j in 1..n {
            acs[j - 1][ch] = quantized[ch][j] as f64 * step;
        }
    }
    raht_inverse(plan, &CoeffStream { dc, acs })
}

/// Decode an anchor payload back to attribute vectors.
pub fn decode_anchor_attributes(
    plan: &RahtPlan,
    section: &[u8],
    b: usize,
) -> Result<Vec<AttributeVector>> {
    let n = plan.anchor_count();
    let channels = group_channels(b);
    let mut r = ByteReader::new(section);
    let mut wire_steps = [0f32; GROUP_COUNT];
    for s in wire_steps.iter_mut() {
        *s = r.get_f32()?;
        if !(*s > 0.0) || !s.is_finite() {
            return Err(Error::corrupt("anchor", format!("bad quantization step {s}")));
        }
    }
    for (g, chans) in channels.iter().enumerate() {
        let count = r.get_varint()?;
        let expect = (n * chans.len()) as u64;
        if count != expect {
            return Err(Error::corrupt(
                "anchor",
                format!("group {g} carries {count} coefficients, expected {expect}"),
            ));
        }
    }

    let coded = r.take(r.remaining())?;
    let mut models = ModelTable::new(GROUP_COUNT * MAX_BIT_POS);
    let mut dec = RangeDecoder::new(coded)?;
    let mut quantized = vec![vec![0i64; n]; crate::attr::channel_count(b)];
    for (g, chans) in channels.iter().enumerate() {
        for &ch in chans {
            for j in 0..n {
                quantized[ch][j] = unzigzag(decode_eg0(&mut dec, &mut models, g)?);
            }
        }
    }
    reconstruct(plan, &quantized, &wire_steps, b)
}
