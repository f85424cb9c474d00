//! Byte-renormalized binary range coder with count-based adaptive models.
//!
//! Stream format (bit-exact): 32-bit range register initialized to
//! `0xFFFF_FFFF`, renormalization emits one byte whenever the range drops
//! below `2^24`, carry propagation via a cache byte and a pending-0xFF
//! counter. Flush shifts the low register out four more times and then
//! drains the carry cache, so a stream holds exactly `renorms + 5` bytes
//! (five for an empty bit sequence) and the decoder consumes all of them.
//! The decoder primes its code register with five bytes, the first of
//! which is the encoder's initial zero cache byte.

use crate::error::{Error, Result};

const TOP: u32 = 1 << 24;
const RESCALE_LIMIT: u32 = 65536;

/// Two counts; `P(bit = 1) = c1 / (c0 + c1)`. Counts start at 1 and are
/// halved (flooring at 1) when their sum would exceed 65536.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaptiveBinModel {
    c0: u32,
    c1: u32,
}

impl Default for AdaptiveBinModel {
    fn default() -> Self {
        Self::new()
    }
}

impl AdaptiveBinModel {
    pub fn new() -> Self {
        Self { c0: 1, c1: 1 }
    }

    pub fn prob_one(&self) -> f64 {
        self.c1 as f64 / (self.c0 + self.c1) as f64
    }

    pub fn prob_of(&self, bit: bool) -> f64 {
        if bit {
            self.prob_one()
        } else {
            1.0 - self.prob_one()
        }
    }

    /// Width of the sub-range assigned to bit 0. Nonzero and strictly less
    /// than `range` whenever `range >= 2^24`.
    fn zero_width(&self, range: u32) -> u32 {
        ((range as u64 * self.c0 as u64) / (self.c0 + self.c1) as u64) as u32
    }

    pub fn update(&mut self, bit: bool) {
        if bit {
            self.c1 += 1;
        } else {
            self.c0 += 1;
        }
        if self.c0 + self.c1 > RESCALE_LIMIT {
            self.c0 = (self.c0 >> 1).max(1);
            self.c1 = (self.c1 >> 1).max(1);
        }
    }
}

/// A table of adaptive models addressed by dense ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelTable {
    models: Vec<AdaptiveBinModel>,
}

impl ModelTable {
    pub fn new(count: usize) -> Self {
        Self {
            models: vec![AdaptiveBinModel::new(); count],
        }
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get_mut(&mut self, id: usize) -> &mut AdaptiveBinModel {
        &mut self.models[id]
    }
}

pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    pending: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            pending: 1,
            out: Vec::new(),
        }
    }

    pub fn encode_bit(&mut self, bit: bool, model: &mut AdaptiveBinModel) {
        let r0 = model.zero_width(self.range);
        debug_assert!(r0 > 0 && r0 < self.range);
        if bit {
            self.low += r0 as u64;
            self.range -= r0;
        } else {
            self.range = r0;
        }
        while self.range < TOP {
            self.shift_low();
            self.range <<= 8;
        }
        model.update(bit);
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low > 0xFFFF_FFFF {
            let carry = (self.low >> 32) as u8;
            self.out.push(self.cache.wrapping_add(carry));
            for _ in 1..self.pending {
                self.out.push(0xFFu8.wrapping_add(carry));
            }
            self.cache = (self.low >> 24) as u8;
            self.pending = 0;
        }
        self.pending += 1;
        self.low = (self.low << 8) & 0xFFFF_FFFF;
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..4 {
            self.shift_low();
        }
        // no arithmetic follows, so the queued bytes can no longer carry
        self.out.push(self.cache);
        for _ in 1..self.pending {
            self.out.push(0xFF);
        }
        self.out
    }
}

pub struct RangeDecoder<'a> {
    buf: &'a [u8],
    pos: usize,
    range: u32,
    code: u32,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(buf: &'a [u8]) -> Result<Self> {
        let mut d = Self {
            buf,
            pos: 0,
            range: u32::MAX,
            code: 0,
        };
        // the first of the five priming bytes is the encoder's initial
        // zero cache byte and carries no information
        d.next_byte()?;
        for _ in 0..4 {
            let b = d.next_byte()?;
            d.code = d.code << 8 | b as u32;
        }
        Ok(d)
    }

    fn next_byte(&mut self) -> Result<u8> {
        if self.pos >= self.buf.len() {
            return Err(Error::decode(self.pos, "range-coded stream truncated"));
        }
        let b = self.buf[self.pos];
        self.pos += 1;
        Ok(b)
    }

    /// Bytes consumed so far, including the five priming bytes.
    pub fn consumed(&self) -> usize {
        self.pos
    }

    pub fn decode_bit(&mut self, model: &mut AdaptiveBinModel) -> Result<bool> {
        let r0 = model.zero_width(self.range);
        let bit = self.code >= r0;
        if bit {
            self.code -= r0;
            self.range -= r0;
        } else {
            self.range = r0;
        }
        while self.range < TOP {
            let b = self.next_byte()?;
            self.code = self.code << 8 | b as u32;
            self.range <<= 8;
        }
        model.update(bit);
        Ok(bit)
    }
}

/// Encode a sequence of `(bit, model_id)` decisions against a model table.
pub fn range_encode(bits: &[(bool, usize)], models: &mut ModelTable) -> Vec<u8> {
    let mut enc = RangeEncoder::new();
    for &(bit, id) in bits {
        enc.encode_bit(bit, models.get_mut(id));
    }
    enc.finish()
}

/// Decode `schedule.len()` bits with the given per-bit model ids. The model
/// table must start in the same state the encoder's table started in.
pub fn range_decode(buf: &[u8], schedule: &[usize], models: &mut ModelTable) -> Result<Vec<bool>> {
    let mut dec = RangeDecoder::new(buf)?;
    schedule
        .iter()
        .map(|&id| dec.decode_bit(models.get_mut(id)))
        .collect()
}
