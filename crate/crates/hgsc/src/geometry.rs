//! Lossy position coding: voxelize to a `2^d` grid, walk the occupancy
//! octree breadth-first and range-code each occupancy byte as eight binary
//! decisions. The context of a decision combines the parent's occupancy
//! byte, the child octant index and the sibling bits already coded in the
//! current byte, which realizes the mutual information between subvoxels
//! with one dense model table.
//!
//! Decoded voxels come out in Morton order; that order is the canonical
//! primitive order for all downstream attribute coding.

use nalgebra::Vector3;

use crate::entropy::{ModelTable, RangeDecoder, RangeEncoder};
use crate::error::{Error, Result};
use crate::morton::{morton_decode, morton_encode};
use crate::wire::{ByteReader, ByteWriter};

/// parent byte (256) x octant (8) x intra-byte prefix (128)
const CONTEXT_COUNT: usize = 256 * 8 * 128;

fn context_id(parent: u8, octant: u32, prefix: u32) -> usize {
    debug_assert!(octant < 8 && prefix < 128);
    parent as usize * (8 * 128) + octant as usize * 128 + prefix as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub depth: u8,
    pub origin: Vector3<f64>,
    pub cube_size: f64,
    /// Unique voxel coordinates in `[0, 2^depth)`, Morton-sorted.
    pub coords: Vec<[u32; 3]>,
}

impl VoxelGrid {
    /// Morton codes of the voxel coordinates, ascending.
    pub fn morton_codes(&self) -> Vec<u64> {
        self.coords
            .iter()
            .map(|c| morton_encode(c[0], c[1], c[2]))
            .collect()
    }

    /// Dequantized voxel-center position of coordinate `c`.
    pub fn center(&self, c: &[u32; 3]) -> Vector3<f64> {
        let step = self.cube_size / (1u64 << self.depth) as f64;
        Vector3::new(
            self.origin.x + (c[0] as f64 + 0.5) * step,
            self.origin.y + (c[1] as f64 + 0.5) * step,
            self.origin.z + (c[2] as f64 + 0.5) * step,
        )
    }

    pub fn centers(&self) -> Vec<Vector3<f64>> {
        self.coords.iter().map(|c| self.center(c)).collect()
    }

    /// Half the voxel diagonal: the reconstruction error bound.
    pub fn position_error_bound(&self) -> f64 {
        self.cube_size / (1u64 << self.depth) as f64 * 3f64.sqrt() / 2.0
    }
}

/// Quantize positions onto the `2^depth` grid. Returns the grid and the
/// surjection from original point index to voxel index (points falling in
/// the same voxel merge).
pub fn voxelize(positions: &[Vector3<f64>], depth: u8) -> Result<(VoxelGrid, Vec<usize>)> {
    if positions.is_empty() {
        return Err(Error::Argument("voxelize needs at least one point".into()));
    }
    if depth == 0 || depth > 16 {
        return Err(Error::Argument(format!(
            "octree depth {depth} outside supported range 1..=16"
        )));
    }
    let mut min = positions[0];
    let mut max = positions[0];
    for p in positions {
        min = min.inf(p);
        max = max.sup(p);
    }
    let extent = (max - min).max();
    // degenerate bbox still yields a single-voxel grid
    let cube_size = if extent > 0.0 { extent * (1.0 + 1e-6) } else { 1.0 };

    let cells = 1u64 << depth;
    let scale = cells as f64 / cube_size;
    let quantize = |p: &Vector3<f64>| -> [u32; 3] {
        let mut c = [0u32; 3];
        for i in 0..3 {
            let v = ((p[i] - min[i]) * scale).floor();
            c[i] = (v.max(0.0) as u64).min(cells - 1) as u32;
        }
        c
    };

    let mut codes: Vec<u64> = positions
        .iter()
        .map(|p| {
            let c = quantize(p);
            morton_encode(c[0], c[1], c[2])
        })
        .collect();
    let per_point = codes.clone();
    codes.sort_unstable();
    codes.dedup();

    let surjection = per_point
        .iter()
        .map(|code| codes.binary_search(code).unwrap())
        .collect();
    let coords = codes
        .iter()
        .map(|&code| morton_decode(code))
        .collect();

    Ok((
        VoxelGrid {
            depth,
            origin: min,
            cube_size,
            coords,
        },
        surjection,
    ))
}

/// Breadth-first occupancy symbols of the octree over `codes`
/// (Morton-sorted voxel codes at `depth`). Symbols are 1..=255.
pub fn occupancy_stream(codes: &[u64], depth: u8) -> Vec<u8> {
    decisions(codes, depth).symbols
}

struct OccupancyDecisions {
    symbols: Vec<u8>,
    /// (bit, context id) in coding order.
    bits: Vec<(bool, usize)>,
}

fn decisions(codes: &[u64], depth: u8) -> OccupancyDecisions {
    let mut symbols = Vec::new();
    let mut bits = Vec::new();
    // queue entries: (range into codes, level, parent symbol)
    let mut queue: std::collections::VecDeque<(usize, usize, u8, u8)> =
        std::collections::VecDeque::new();
    queue.push_back((0, codes.len(), 0, 0));
    while let Some((start, end, level, parent)) = queue.pop_front() {
        let shift = 3 * (depth as u32 - 1 - level as u32);
        let mut symbol = 0u8;
        let mut child_ranges: [(usize, usize); 8] = [(0, 0); 8];
        let mut i = start;
        while i < end {
            let octant = ((codes[i] >> shift) & 7) as usize;
            let mut j = i + 1;
            while j < end && ((codes[j] >> shift) & 7) as usize == octant {
                j += 1;
            }
            symbol |= 1 << octant;
            child_ranges[octant] = (i, j);
            i = j;
        }
        debug_assert_ne!(symbol, 0);
        symbols.push(symbol);
        for octant in 0..8u32 {
            let bit = symbol >> octant & 1 == 1;
            let prefix = (symbol & ((1u16 << octant) as u8 - 1)) as u32;
            bits.push((bit, context_id(parent, octant, prefix)));
        }
        if level + 1 < depth {
            for (octant, &(s, e)) in child_ranges.iter().enumerate() {
                if symbol >> octant & 1 == 1 {
                    queue.push_back((s, e, level + 1, symbol));
                }
            }
        }
    }
    OccupancyDecisions { symbols, bits }
}

/// Range-code the occupancy stream of a grid.
pub fn encode_occupancy(grid: &VoxelGrid) -> Vec<u8> {
    let codes = grid.morton_codes();
    let d = decisions(&codes, grid.depth);
    let mut models = ModelTable::new(CONTEXT_COUNT);
    let mut enc = RangeEncoder::new();
    for (bit, id) in d.bits {
        enc.encode_bit(bit, models.get_mut(id));
    }
    enc.finish()
}

/// Decode occupancy back to Morton-sorted voxel codes. `symbol_count` is
/// validated against the number of symbols the tree walk consumes.
pub fn decode_occupancy(buf: &[u8], depth: u8, symbol_count: u64) -> Result<Vec<u64>> {
    let mut models = ModelTable::new(CONTEXT_COUNT);
    let mut dec = RangeDecoder::new(buf)?;
    let mut codes = Vec::new();
    let mut decoded_symbols = 0u64;
    // queue entries: (node prefix code, level, parent symbol)
    let mut queue: std::collections::VecDeque<(u64, u8, u8)> = std::collections::VecDeque::new();
    queue.push_back((0, 0, 0));
    while let Some((prefix_code, level, parent)) = queue.pop_front() {
        let mut symbol = 0u8;
        for octant in 0..8u32 {
            // bits below `octant` are exactly the decisions already made
            let prefix = symbol as u32;
            let bit = dec.decode_bit(models.get_mut(context_id(parent, octant, prefix & 0x7f)))?;
            if bit {
                symbol |= 1 << octant;
            }
        }
        if symbol == 0 {
            return Err(Error::corrupt(
                "geometry",
                "decoded occupancy symbol 0 (empty node)",
            ));
        }
        decoded_symbols += 1;
        if decoded_symbols > symbol_count {
            return Err(Error::corrupt(
                "geometry",
                "occupancy tree exceeds declared symbol count",
            ));
        }
        for octant in 0..8u64 {
            if symbol >> octant & 1 == 1 {
                let child = prefix_code << 3 | octant;
                if level + 1 < depth {
                    queue.push_back((child, level + 1, symbol));
                } else {
                    codes.push(child);
                }
            }
        }
    }
    if decoded_symbols != symbol_count {
        return Err(Error::corrupt(
            "geometry",
            format!("decoded {decoded_symbols} occupancy symbols, header says {symbol_count}"),
        ));
    }
    Ok(codes)
}

/// Serialize the geometry payload: depth, root cube, symbol count and the
/// range-coded occupancy bytes.
pub fn encode_geometry(grid: &VoxelGrid) -> Vec<u8> {
    let symbols = occupancy_stream(&grid.morton_codes(), grid.depth);
    let coded = encode_occupancy(grid);
    let mut w = ByteWriter::new();
    w.put_u8(grid.depth);
    for i in 0..3 {
        w.put_f64(grid.origin[i]);
    }
    w.put_f64(grid.cube_size);
    w.put_varint(symbols.len() as u64);
    w.put_bytes(&coded);
    w.into_bytes()
}

pub fn decode_geometry(section: &[u8]) -> Result<VoxelGrid> {
    let mut r = ByteReader::new(section);
    let depth = r.get_u8()?;
    if depth == 0 || depth > 16 {
        return Err(Error::corrupt("geometry", format!("bad octree depth {depth}")));
    }
    let origin = Vector3::new(r.get_f64()?, r.get_f64()?, r.get_f64()?);
    let cube_size = r.get_f64()?;
    if !(cube_size > 0.0) || !cube_size.is_finite() || !origin.iter().all(|v| v.is_finite()) {
        return Err(Error::corrupt("geometry", "non-finite root cube"));
    }
    let symbol_count = r.get_varint()?;
    let coded = r.take(r.remaining())?;
    let codes = decode_occupancy(coded, depth, symbol_count)?;
    let coords = codes.iter().map(|&c| morton_decode(c)).collect();
    Ok(VoxelGrid {
        depth,
        origin,
        cube_size,
        coords,
    })
}
