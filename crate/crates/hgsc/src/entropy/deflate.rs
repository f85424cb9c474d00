//! Raw DEFLATE (RFC 1951) compressor and decompressor.
//!
//! The compressor runs greedy longest-match LZ77 over a 32 KiB window with
//! minimum match length 3, then emits each block as stored, fixed-Huffman
//! or dynamic-Huffman, whichever is cheapest. Dynamic code lengths are
//! length-limited with package-merge. The decompressor accepts any
//! conformant RFC 1951 stream and reports malformed input with the byte
//! offset where parsing stopped.

use crate::entropy::bitio::{BitSink, BitSource};
use crate::error::{Error, Result};

const MIN_MATCH: usize = 3;
const MAX_MATCH: usize = 258;
const WINDOW_SIZE: usize = 32 * 1024;
const MAX_PROBES: usize = 1024;
const MAX_TOKENS_PER_BLOCK: usize = 32 * 1024;
const MAX_STORED_BLOCK: usize = 65535;

const LENGTH_BASE: [u16; 29] = [
    3, 4, 5, 6, 7, 8, 9, 10, 11, 13, 15, 17, 19, 23, 27, 31, 35, 43, 51, 59, 67, 83, 99, 115,
    131, 163, 195, 227, 258,
];
const LENGTH_EXTRA: [u32; 29] = [
    0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4, 5, 5, 5, 5, 0,
];
const DIST_BASE: [u16; 30] = [
    1, 2, 3, 4, 5, 7, 9, 13, 17, 25, 33, 49, 65, 97, 129, 193, 257, 385, 513, 769, 1025, 1537,
    2049, 3073, 4097, 6145, 8193, 12289, 16385, 24577,
];
const DIST_EXTRA: [u32; 30] = [
    0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6, 7, 7, 8, 8, 9, 9, 10, 10, 11, 11, 12, 12,
    13, 13,
];
/// Transmission order of the code-length-code lengths.
const CLEN_ORDER: [usize; 19] = [16, 17, 18, 0, 8, 7, 9, 6, 10, 5, 11, 4, 12, 3, 13, 2, 14, 1, 15];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Literal(u8),
    Match { len: u16, dist: u16 },
}

impl Token {
    fn byte_len(&self) -> usize {
        match self {
            Token::Literal(_) => 1,
            Token::Match { len, .. } => *len as usize,
        }
    }
}

/// Code index and extra-bits value for a match length in 3..=258.
fn length_code(len: u16) -> (usize, u64, u32) {
    let idx = match LENGTH_BASE.binary_search(&len) {
        Ok(i) => i,
        Err(i) => i - 1,
    };
    (idx, (len - LENGTH_BASE[idx]) as u64, LENGTH_EXTRA[idx])
}

/// Code index and extra-bits value for a match distance in 1..=32768.
fn dist_code(dist: u16) -> (usize, u64, u32) {
    let idx = match DIST_BASE.binary_search(&dist) {
        Ok(i) => i,
        Err(i) => i - 1,
    };
    (idx, (dist - DIST_BASE[idx]) as u64, DIST_EXTRA[idx])
}

/// Greedy longest-match parse with hash chains.
fn tokenize(input: &[u8]) -> Vec<Token> {
    const HASH_BITS: u32 = 15;
    const NONE: u32 = u32::MAX;
    let n = input.len();
    let mut head = vec![NONE; 1usize << HASH_BITS];
    let mut prev = vec![NONE; n];
    let hash_at = |i: usize| -> usize {
        let v = (input[i] as u32) << 16 | (input[i + 1] as u32) << 8 | input[i + 2] as u32;
        (v.wrapping_mul(0x9E37_79B1) >> (32 - HASH_BITS)) as usize
    };

    let mut tokens = Vec::new();
    let mut i = 0usize;
    while i < n {
        let mut best_len = 0usize;
        let mut best_dist = 0usize;
        if i + MIN_MATCH <= n {
            let mut cand = head[hash_at(i)];
            let max_len = (n - i).min(MAX_MATCH);
            let mut probes = 0;
            while cand != NONE && probes < MAX_PROBES {
                let c = cand as usize;
                if i - c > WINDOW_SIZE {
                    break;
                }
                if best_len == 0 || input[c + best_len] == input[i + best_len] {
                    let mut l = 0;
                    while l < max_len && input[c + l] == input[i + l] {
                        l += 1;
                    }
                    if l > best_len {
                        best_len = l;
                        best_dist = i - c;
                        if l == max_len {
                            break;
                        }
                    }
                }
                cand = prev[c];
                probes += 1;
            }
        }

        let advance = if best_len >= MIN_MATCH {
            tokens.push(Token::Match {
                len: best_len as u16,
                dist: best_dist as u16,
            });
            best_len
        } else {
            tokens.push(Token::Literal(input[i]));
            1
        };
        for p in i..i + advance {
            if p + MIN_MATCH <= n {
                let h = hash_at(p);
                prev[p] = head[h];
                head[h] = p as u32;
            }
        }
        i += advance;
    }
    tokens
}

/// Fraction of input bytes covered by back-references; used by tests to
/// check the parser actually finds the long matches it should.
#[cfg(test)]
fn match_coverage(input: &[u8]) -> f64 {
    if input.is_empty() {
        return 1.0;
    }
    let matched: usize = tokenize(input)
        .iter()
        .map(|t| match t {
            Token::Match { len, .. } => *len as usize,
            Token::Literal(_) => 0,
        })
        .sum();
    matched as f64 / input.len() as f64
}

/// Optimal length-limited Huffman code lengths (package-merge). Unused
/// symbols get length 0. With fewer than two used symbols the result is
/// padded so the canonical code stays complete and decodable everywhere.
fn limited_code_lengths(freqs: &[u64], max_len: usize) -> Vec<u8> {
    let mut freqs = freqs.to_vec();
    // force at least two used symbols so every emitted tree is complete
    let used_count = freqs.iter().filter(|&&f| f > 0).count();
    if used_count < 2 {
        for sym in 0..freqs.len() {
            if freqs[sym] == 0 {
                freqs[sym] = 1;
                if freqs.iter().filter(|&&f| f > 0).count() >= 2 {
                    break;
                }
            }
        }
    }

    let items: Vec<(u64, usize)> = {
        let mut v: Vec<(u64, usize)> = freqs
            .iter()
            .enumerate()
            .filter(|(_, &f)| f > 0)
            .map(|(s, &f)| (f, s))
            .collect();
        v.sort_unstable();
        v
    };
    let n = items.len();
    debug_assert!(n >= 2 && (1usize << max_len) >= n);

    // entries are (weight, item indices); level lists per package-merge
    let singles: Vec<(u64, Vec<u16>)> = items
        .iter()
        .enumerate()
        .map(|(idx, &(w, _))| (w, vec![idx as u16]))
        .collect();
    let mut level = singles.clone();
    for _ in 1..max_len {
        let mut packages = Vec::with_capacity(level.len() / 2);
        for pair in level.chunks_exact(2) {
            let mut syms = pair[0].1.clone();
            syms.extend_from_slice(&pair[1].1);
            packages.push((pair[0].0 + pair[1].0, syms));
        }
        let mut merged = Vec::with_capacity(singles.len() + packages.len());
        let (mut a, mut b) = (0usize, 0usize);
        while a < singles.len() || b < packages.len() {
            let take_single =
                b >= packages.len() || (a < singles.len() && singles[a].0 <= packages[b].0);
            if take_single {
                merged.push(singles[a].clone());
                a += 1;
            } else {
                merged.push(std::mem::take(&mut packages[b]));
                b += 1;
            }
        }
        level = merged;
    }

    let mut counts = vec![0u8; n];
    for entry in level.iter().take(2 * (n - 1)) {
        for &idx in &entry.1 {
            counts[idx as usize] += 1;
        }
    }
    let mut lengths = vec![0u8; freqs.len()];
    for (idx, &(_, sym)) in items.iter().enumerate() {
        lengths[sym] = counts[idx];
    }
    lengths
}

fn reverse_bits(code: u16, len: u32) -> u16 {
    code.reverse_bits() >> (16 - len)
}

/// Canonical codes per RFC 1951, pre-reversed for the LSB-first bit writer.
fn canonical_codes(lengths: &[u8]) -> Vec<u16> {
    let max_len = lengths.iter().copied().max().unwrap_or(0) as usize;
    let mut bl_count = vec![0u16; max_len + 1];
    for &l in lengths {
        if l > 0 {
            bl_count[l as usize] += 1;
        }
    }
    let mut next_code = vec![0u16; max_len + 1];
    let mut code = 0u16;
    for bits in 1..=max_len {
        code = (code + bl_count[bits - 1]) << 1;
        next_code[bits] = code;
    }
    lengths
        .iter()
        .map(|&l| {
            if l == 0 {
                0
            } else {
                let c = next_code[l as usize];
                next_code[l as usize] += 1;
                reverse_bits(c, l as u32)
            }
        })
        .collect()
}

fn fixed_litlen_lengths() -> Vec<u8> {
    let mut l = vec![8u8; 288];
    l[144..256].iter_mut().for_each(|v| *v = 9);
    l[256..280].iter_mut().for_each(|v| *v = 7);
    l
}

fn fixed_dist_lengths() -> Vec<u8> {
    vec![5u8; 30]
}

fn token_frequencies(tokens: &[Token]) -> (Vec<u64>, Vec<u64>) {
    let mut lit = vec![0u64; 286];
    let mut dist = vec![0u64; 30];
    for t in tokens {
        match *t {
            Token::Literal(b) => lit[b as usize] += 1,
            Token::Match { len, dist: d } => {
                lit[257 + length_code(len).0] += 1;
                dist[dist_code(d).0] += 1;
            }
        }
    }
    lit[256] += 1; // end of block
    (lit, dist)
}

fn token_cost_bits(tokens: &[Token], lit_len: &[u8], dist_len: &[u8]) -> u64 {
    let mut bits = lit_len[256] as u64;
    for t in tokens {
        bits += match *t {
            Token::Literal(b) => lit_len[b as usize] as u64,
            Token::Match { len, dist } => {
                let (lc, _, le) = length_code(len);
                let (dc, _, de) = dist_code(dist);
                lit_len[257 + lc] as u64 + le as u64 + dist_len[dc] as u64 + de as u64
            }
        };
    }
    bits
}

/// Run-length encode the combined code-length list with ops 16/17/18.
fn rle_code_lengths(combined: &[u8]) -> Vec<(u8, u64, u32)> {
    let mut out = Vec::new(); // (cl symbol, extra value, extra bits)
    let mut i = 0;
    while i < combined.len() {
        let v = combined[i];
        let mut run = 1;
        while i + run < combined.len() && combined[i + run] == v {
            run += 1;
        }
        if v == 0 {
            let mut left = run;
            while left >= 11 {
                let take = left.min(138);
                out.push((18, take as u64 - 11, 7));
                left -= take;
            }
            if left >= 3 {
                out.push((17, left as u64 - 3, 3));
                left = 0;
            }
            for _ in 0..left {
                out.push((0, 0, 0));
            }
        } else {
            out.push((v, 0, 0));
            let mut left = run - 1;
            while left >= 3 {
                let take = left.min(6);
                out.push((16, take as u64 - 3, 2));
                left -= take;
            }
            for _ in 0..left {
                out.push((v, 0, 0));
            }
        }
        i += run;
    }
    out
}

struct DynamicHeader {
    hlit: usize,
    hdist: usize,
    hclen: usize,
    cl_lengths: Vec<u8>,
    cl_tokens: Vec<(u8, u64, u32)>,
}

fn build_dynamic_header(lit_len: &[u8], dist_len: &[u8]) -> DynamicHeader {
    let hlit = lit_len
        .iter()
        .rposition(|&l| l > 0)
        .map_or(257, |p| (p + 1).max(257));
    let hdist = dist_len.iter().rposition(|&l| l > 0).map_or(1, |p| p + 1);
    let mut combined = Vec::with_capacity(hlit + hdist);
    combined.extend_from_slice(&lit_len[..hlit]);
    combined.extend_from_slice(&dist_len[..hdist]);
    let cl_tokens = rle_code_lengths(&combined);

    let mut cl_freqs = vec![0u64; 19];
    for &(sym, _, _) in &cl_tokens {
        cl_freqs[sym as usize] += 1;
    }
    let cl_lengths = limited_code_lengths(&cl_freqs, 7);
    let hclen = CLEN_ORDER
        .iter()
        .rposition(|&s| cl_lengths[s] > 0)
        .map_or(4, |p| (p + 1).max(4));

    DynamicHeader {
        hlit,
        hdist,
        hclen,
        cl_lengths,
        cl_tokens,
    }
}

fn dynamic_header_bits(h: &DynamicHeader) -> u64 {
    let mut bits = 5 + 5 + 4 + 3 * h.hclen as u64;
    for &(sym, _, extra) in &h.cl_tokens {
        bits += h.cl_lengths[sym as usize] as u64 + extra as u64;
    }
    bits
}

fn write_tokens(sink: &mut BitSink, tokens: &[Token], lit: (&[u8], &[u16]), dist: (&[u8], &[u16])) {
    for t in tokens {
        match *t {
            Token::Literal(b) => {
                sink.put_bits(lit.1[b as usize] as u64, lit.0[b as usize] as u32);
            }
            Token::Match { len, dist: d } => {
                let (lc, lextra, lbits) = length_code(len);
                sink.put_bits(lit.1[257 + lc] as u64, lit.0[257 + lc] as u32);
                sink.put_bits(lextra, lbits);
                let (dc, dextra, dbits) = dist_code(d);
                sink.put_bits(dist.1[dc] as u64, dist.0[dc] as u32);
                sink.put_bits(dextra, dbits);
            }
        }
    }
    sink.put_bits(lit.1[256] as u64, lit.0[256] as u32);
}

fn write_stored(sink: &mut BitSink, data: &[u8], final_block: bool) {
    let mut chunks: Vec<&[u8]> = data.chunks(MAX_STORED_BLOCK).collect();
    if chunks.is_empty() {
        chunks.push(&[]);
    }
    let last = chunks.len() - 1;
    for (i, chunk) in chunks.iter().enumerate() {
        sink.put_bits(u64::from(final_block && i == last), 1);
        sink.put_bits(0, 2);
        sink.align_byte();
        sink.put_bytes_aligned(&(chunk.len() as u16).to_le_bytes());
        sink.put_bytes_aligned(&(!(chunk.len() as u16)).to_le_bytes());
        sink.put_bytes_aligned(chunk);
    }
}

/// Compress to a raw RFC 1951 stream.
pub fn lz_compress(input: &[u8]) -> Vec<u8> {
    let tokens = tokenize(input);
    let mut sink = BitSink::new();

    let fixed_lit_len = fixed_litlen_lengths();
    let fixed_dist_len = fixed_dist_lengths();
    let fixed_lit_codes = canonical_codes(&fixed_lit_len);
    let fixed_dist_codes = canonical_codes(&fixed_dist_len);

    let mut block_start_byte = 0usize;
    let mut emitted_any = false;
    let mut rest = tokens.as_slice();
    while !rest.is_empty() || !emitted_any {
        let take = rest.len().min(MAX_TOKENS_PER_BLOCK);
        let (block, tail) = rest.split_at(take);
        rest = tail;
        let final_block = rest.is_empty();
        let span: usize = block.iter().map(Token::byte_len).sum();
        let raw = &input[block_start_byte..block_start_byte + span];
        block_start_byte += span;
        emitted_any = true;

        let (lit_freq, dist_freq) = token_frequencies(block);
        let dyn_lit_len = limited_code_lengths(&lit_freq, 15);
        let dyn_dist_len = limited_code_lengths(&dist_freq, 15);
        let header = build_dynamic_header(&dyn_lit_len, &dyn_dist_len);

        let cost_fixed = 3 + token_cost_bits(block, &fixed_lit_len, &fixed_dist_len);
        let cost_dynamic =
            3 + dynamic_header_bits(&header) + token_cost_bits(block, &dyn_lit_len, &dyn_dist_len);
        let stored_blocks = raw.len().div_ceil(MAX_STORED_BLOCK).max(1) as u64;
        let cost_stored = stored_blocks * (3 + 7 + 32) + raw.len() as u64 * 8;

        if cost_stored < cost_fixed && cost_stored < cost_dynamic {
            write_stored(&mut sink, raw, final_block);
        } else if cost_fixed <= cost_dynamic {
            sink.put_bits(u64::from(final_block), 1);
            sink.put_bits(1, 2);
            write_tokens(
                &mut sink,
                block,
                (&fixed_lit_len, &fixed_lit_codes),
                (&fixed_dist_len, &fixed_dist_codes),
            );
        } else {
            sink.put_bits(u64::from(final_block), 1);
            sink.put_bits(2, 2);
            sink.put_bits(header.hlit as u64 - 257, 5);
            sink.put_bits(header.hdist as u64 - 1, 5);
            sink.put_bits(header.hclen as u64 - 4, 4);
            let cl_codes = canonical_codes(&header.cl_lengths);
            for &sym in CLEN_ORDER.iter().take(header.hclen) {
                sink.put_bits(header.cl_lengths[sym] as u64, 3);
            }
            for &(sym, extra, extra_bits) in &header.cl_tokens {
                sink.put_bits(
                    cl_codes[sym as usize] as u64,
                    header.cl_lengths[sym as usize] as u32,
                );
                sink.put_bits(extra, extra_bits);
            }
            let dyn_lit_codes = canonical_codes(&dyn_lit_len);
            let dyn_dist_codes = canonical_codes(&dyn_dist_len);
            write_tokens(
                &mut sink,
                block,
                (&dyn_lit_len, &dyn_lit_codes),
                (&dyn_dist_len, &dyn_dist_codes),
            );
        }
    }
    sink.into_bytes()
}

/// Canonical Huffman decoder over code lengths (the `puff` algorithm).
struct HuffDecoder {
    counts: [u16; 16],
    symbols: Vec<u16>,
}

impl HuffDecoder {
    fn new(lengths: &[u8], offset_hint: usize) -> Result<Self> {
        let mut counts = [0u16; 16];
        for &l in lengths {
            counts[l as usize] += 1;
        }
        // reject over-subscribed codes
        let mut left: i64 = 1;
        for len in 1..16 {
            left = (left << 1) - counts[len] as i64;
            if left < 0 {
                return Err(Error::decode(offset_hint, "over-subscribed Huffman code"));
            }
        }
        let mut offsets = [0u16; 16];
        for len in 1..15 {
            offsets[len + 1] = offsets[len] + counts[len];
        }
        let mut symbols = vec![0u16; lengths.iter().filter(|&&l| l > 0).count()];
        for (sym, &l) in lengths.iter().enumerate() {
            if l > 0 {
                symbols[offsets[l as usize] as usize] = sym as u16;
                offsets[l as usize] += 1;
            }
        }
        Ok(Self { counts, symbols })
    }

    fn decode(&self, src: &mut BitSource) -> Result<u16> {
        let mut code = 0i32;
        let mut first = 0i32;
        let mut index = 0i32;
        for len in 1..16 {
            code |= src.get_bit()? as i32;
            let count = self.counts[len] as i32;
            if code - first < count {
                return Ok(self.symbols[(index + (code - first)) as usize]);
            }
            index += count;
            first = (first + count) << 1;
            code <<= 1;
        }
        Err(Error::decode(src.byte_offset(), "invalid Huffman code"))
    }
}

/// Decompress a raw RFC 1951 stream.
pub fn lz_decompress(input: &[u8]) -> Result<Vec<u8>> {
    let mut src = BitSource::new(input);
    let mut out: Vec<u8> = Vec::new();
    loop {
        let bfinal = src.get_bits(1)?;
        let btype = src.get_bits(2)?;
        match btype {
            0 => {
                src.align_byte();
                let len_bytes = src.get_bytes_aligned(4)?;
                let len = u16::from_le_bytes([len_bytes[0], len_bytes[1]]);
                let nlen = u16::from_le_bytes([len_bytes[2], len_bytes[3]]);
                if len != !nlen {
                    return Err(Error::decode(
                        src.byte_offset().saturating_sub(2),
                        "stored block LEN/NLEN mismatch",
                    ));
                }
                out.extend_from_slice(src.get_bytes_aligned(len as usize)?);
            }
            1 | 2 => {
                let (lit_dec, dist_dec) = if btype == 1 {
                    (
                        HuffDecoder::new(&fixed_litlen_lengths(), src.byte_offset())?,
                        HuffDecoder::new(&fixed_dist_lengths(), src.byte_offset())?,
                    )
                } else {
                    read_dynamic_tables(&mut src)?
                };
                inflate_block(&mut src, &lit_dec, &dist_dec, &mut out)?;
            }
            _ => return Err(Error::decode(src.byte_offset(), "reserved block type 3")),
        }
        if bfinal == 1 {
            return Ok(out);
        }
    }
}

fn read_dynamic_tables(src: &mut BitSource) -> Result<(HuffDecoder, HuffDecoder)> {
    let hlit = src.get_bits(5)? as usize + 257;
    let hdist = src.get_bits(5)? as usize + 1;
    let hclen = src.get_bits(4)? as usize + 4;
    if hlit > 286 {
        return Err(Error::decode(src.byte_offset(), "HLIT exceeds 286"));
    }

    let mut cl_lengths = [0u8; 19];
    for &sym in CLEN_ORDER.iter().take(hclen) {
        cl_lengths[sym] = src.get_bits(3)? as u8;
    }
    let cl_dec = HuffDecoder::new(&cl_lengths, src.byte_offset())?;

    let total = hlit + hdist;
    let mut combined = Vec::with_capacity(total);
    while combined.len() < total {
        let sym = cl_dec.decode(src)?;
        match sym {
            0..=15 => combined.push(sym as u8),
            16 => {
                let &prev = combined.last().ok_or_else(|| {
                    Error::decode(src.byte_offset(), "length repeat with no previous length")
                })?;
                let run = src.get_bits(2)? as usize + 3;
                combined.extend(std::iter::repeat_n(prev, run));
            }
            17 => {
                let run = src.get_bits(3)? as usize + 3;
                combined.extend(std::iter::repeat_n(0u8, run));
            }
            _ => {
                let run = src.get_bits(7)? as usize + 11;
                combined.extend(std::iter::repeat_n(0u8, run));
            }
        }
    }
    if combined.len() != total {
        return Err(Error::decode(
            src.byte_offset(),
            "code length run overflows HLIT+HDIST",
        ));
    }
    let lit_dec = HuffDecoder::new(&combined[..hlit], src.byte_offset())?;
    let dist_dec = HuffDecoder::new(&combined[hlit..], src.byte_offset())?;
    Ok((lit_dec, dist_dec))
}

fn inflate_block(
    src: &mut BitSource,
    lit_dec: &HuffDecoder,
    dist_dec: &HuffDecoder,
    out: &mut Vec<u8>,
) -> Result<()> {
    loop {
        let sym = lit_dec.decode(src)?;
        match sym {
            0..=255 => out.push(sym as u8),
            256 => return Ok(()),
            257..=285 => {
                let idx = sym as usize - 257;
                let len = LENGTH_BASE[idx] as usize + src.get_bits(LENGTH_EXTRA[idx])? as usize;
                let dsym = dist_dec.decode(src)? as usize;
                if dsym >= 30 {
                    return Err(Error::decode(src.byte_offset(), "invalid distance symbol"));
                }
                let dist = DIST_BASE[dsym] as usize + src.get_bits(DIST_EXTRA[dsym])? as usize;
                if dist > out.len() {
                    return Err(Error::decode(
                        src.byte_offset(),
                        "back-reference before start of output",
                    ));
                }
                for _ in 0..len {
                    out.push(out[out.len() - dist]);
                }
            }
            _ => return Err(Error::decode(src.byte_offset(), "invalid literal symbol")),
        }
    }
}
