//! Morton (z-order) codes for 3D integer coordinates up to 16 bits per axis.
//!
//! The interleave puts `z` in the lowest bit of each 3-bit group and `x` in
//! the highest. This is the canonical primitive order everywhere in the
//! codec: voxel streams, partition indices and coefficient traversal all
//! sort by this code.

/// Spread the low 21 bits of `w` so that bit `i` lands at position `3i`.
fn spread(mut w: u64) -> u64 {
    w &= 0x001f_ffff;
    w = (w | w << 32) & 0x001f_0000_0000_ffff;
    w = (w | w << 16) & 0x001f_0000_ff00_00ff;
    w = (w | w << 8) & 0x010f_00f0_0f00_f00f;
    w = (w | w << 4) & 0x10c3_0c30_c30c_30c3;
    w = (w | w << 2) & 0x1249_2492_4924_9249;
    w
}

fn compact(mut w: u64) -> u32 {
    w &= 0x1249_2492_4924_9249;
    w = (w ^ (w >> 2)) & 0x30c3_0c30_c30c_30c3;
    w = (w ^ (w >> 4)) & 0xf00f_00f0_0f00_f00f;
    w = (w ^ (w >> 8)) & 0x00ff_0000_ff00_00ff;
    w = (w ^ (w >> 16)) & 0x001f_0000_0000_ffff;
    w = (w ^ (w >> 32)) & 0x0000_0000_001f_ffff;
    w as u32
}

pub fn morton_encode(x: u32, y: u32, z: u32) -> u64 {
    spread(z as u64) | spread(y as u64) << 1 | spread(x as u64) << 2
}

pub fn morton_decode(code: u64) -> [u32; 3] {
    [compact(code >> 2), compact(code >> 1), compact(code)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_values() {
        assert_eq!(morton_encode(0, 0, 0), 0);
        assert_eq!(morton_encode(0, 0, 1), 0b001);
        assert_eq!(morton_encode(0, 1, 0), 0b010);
        assert_eq!(morton_encode(1, 0, 0), 0b100);
        assert_eq!(morton_encode(1, 1, 1), 0b111);
        assert_eq!(morton_encode(2, 0, 0), 0b100_000);
    }

    proptest! {
        #[test]
        fn round_trip(x in 0u32..(1 << 16), y in 0u32..(1 << 16), z in 0u32..(1 << 16)) {
            prop_assert_eq!(morton_decode(morton_encode(x, y, z)), [x, y, z]);
        }
    }
}
