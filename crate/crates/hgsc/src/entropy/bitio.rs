//! Bit-level buffers in RFC 1951 order: bits fill each byte starting from
//! the least significant position.

use crate::error::{Error, Result};

#[derive(Default)]
pub struct BitSink {
    bytes: Vec<u8>,
    /// Bits already written into the trailing partial byte (0..8).
    bit_pos: u32,
}

impl BitSink {
    pub fn new() -> Self {
        Self::default()
    }

    /// Write the low `n` bits of `value`, least significant first. `n <= 57`.
    pub fn put_bits(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 57);
        debug_assert!(n == 64 || value < (1u64 << n));
        let mut acc = value;
        let mut left = n;
        while left > 0 {
            if self.bit_pos == 0 {
                self.bytes.push(0);
            }
            let free = 8 - self.bit_pos;
            let take = free.min(left);
            let byte = self.bytes.last_mut().unwrap();
            *byte |= ((acc & ((1u64 << take) - 1)) as u8) << self.bit_pos;
            acc >>= take;
            self.bit_pos = (self.bit_pos + take) % 8;
            left -= take;
        }
    }

    /// Pad with zero bits to the next byte boundary.
    pub fn align_byte(&mut self) {
        self.bit_pos = 0;
    }

    pub fn put_bytes_aligned(&mut self, data: &[u8]) {
        debug_assert_eq!(self.bit_pos, 0);
        self.bytes.extend_from_slice(data);
    }

    /// Total length in bits written so far.
    pub fn bit_len(&self) -> u64 {
        self.bytes.len() as u64 * 8 - if self.bit_pos == 0 { 0 } else { (8 - self.bit_pos) as u64 }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

pub struct BitSource<'a> {
    bytes: &'a [u8],
    /// Next bit to read, counted from the start of the buffer.
    bit_cursor: u64,
}

impl<'a> BitSource<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self {
            bytes,
            bit_cursor: 0,
        }
    }

    /// Byte offset of the next unread bit (for error reporting).
    pub fn byte_offset(&self) -> usize {
        (self.bit_cursor / 8) as usize
    }

    pub fn get_bit(&mut self) -> Result<u64> {
        let byte = (self.bit_cursor / 8) as usize;
        if byte >= self.bytes.len() {
            return Err(Error::decode(byte, "bit stream exhausted"));
        }
        let bit = (self.bytes[byte] >> (self.bit_cursor % 8)) & 1;
        self.bit_cursor += 1;
        Ok(bit as u64)
    }

    /// Read `n` bits, least significant first.
    pub fn get_bits(&mut self, n: u32) -> Result<u64> {
        let mut v = 0u64;
        for i in 0..n {
            v |= self.get_bit()? << i;
        }
        Ok(v)
    }

    /// Skip to the next byte boundary.
    pub fn align_byte(&mut self) {
        self.bit_cursor = self.bit_cursor.div_ceil(8) * 8;
    }

    pub fn get_bytes_aligned(&mut self, n: usize) -> Result<&'a [u8]> {
        debug_assert_eq!(self.bit_cursor % 8, 0);
        let start = (self.bit_cursor / 8) as usize;
        if start + n > self.bytes.len() {
            return Err(Error::decode(self.bytes.len(), "byte run exhausted"));
        }
        self.bit_cursor += n as u64 * 8;
        Ok(&self.bytes[start..start + n])
    }
}
