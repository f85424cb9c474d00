//! Deterministic anchor / LoD partition of decoded primitives.
//!
//! Encoder and decoder both derive the partition from decoded positions
//! alone, so no membership bits travel in the bitstream. Everything here
//! is tie-broken explicitly: KD blocks split on the widest axis (ties
//! x < y < z) sending equal coordinates left in index order, FPS seeds on
//! the point farthest from the centroid and always prefers the lowest
//! index among equals.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::spatial::dist2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    /// Ascending primitive indices of the anchor set.
    pub anchor_indices: Vec<usize>,
    /// Ascending primitive indices per LoD, coarse to fine.
    pub lod_indices: Vec<Vec<usize>>,
    /// Block id per primitive, depth-first left-first order.
    pub block_assignment: Vec<u32>,
}

/// Recursive median split along the widest axis until every block holds at
/// most `max_leaf` points.
pub fn kdtree_blocks(positions: &[Vector3<f64>], max_leaf: usize) -> Result<Vec<u32>> {
    if max_leaf == 0 {
        return Err(Error::Argument("max_leaf must be at least 1".into()));
    }
    let mut assignment = vec![0u32; positions.len()];
    let mut indices: Vec<usize> = (0..positions.len()).collect();
    let mut next_block = 0u32;
    split_rec(positions, &mut indices, max_leaf, &mut next_block, &mut assignment);
    Ok(assignment)
}

fn split_rec(
    positions: &[Vector3<f64>],
    subset: &mut [usize],
    max_leaf: usize,
    next_block: &mut u32,
    assignment: &mut [u32],
) {
    if subset.len() <= max_leaf {
        for &i in subset.iter() {
            assignment[i] = *next_block;
        }
        *next_block += 1;
        return;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in subset.iter() {
        for a in 0..3 {
            lo[a] = lo[a].min(positions[i][a]);
            hi[a] = hi[a].max(positions[i][a]);
        }
    }
    let mut axis = 0usize;
    for a in 1..3 {
        if hi[a] - lo[a] > hi[axis] - lo[axis] {
            axis = a;
        }
    }
    // equal coordinates go left in index order until the left half is full
    subset.sort_by(|&a, &b| {
        positions[a][axis]
            .total_cmp(&positions[b][axis])
            .then(a.cmp(&b))
    });
    let left_size = subset.len().div_ceil(2);
    let (left, right) = subset.split_at_mut(left_size);
    split_rec(positions, left, max_leaf, next_block, assignment);
    split_rec(positions, right, max_leaf, next_block, assignment);
}

/// Greedy farthest point sampling over `members` (global indices into
/// `positions`). Returns `m` global indices in selection order.
pub fn fps(positions: &[Vector3<f64>], members: &[usize], m: usize) -> Vec<usize> {
    debug_assert!(m <= members.len());
    if m == 0 {
        return Vec::new();
    }
    let centroid = {
        let mut c = Vector3::zeros();
        for &i in members {
            c += positions[i];
        }
        c / members.len() as f64
    };
    // seed: farthest from the centroid, ties to the lowest index
    let mut seed = members[0];
    let mut seed_d = -1.0f64;
    for &i in members {
        let d = dist2(&positions[i], &centroid);
        if d > seed_d || (d == seed_d && i < seed) {
            seed_d = d;
            seed = i;
        }
    }

    let mut picked = Vec::with_capacity(m);
    picked.push(seed);
    // min squared distance to the picked set, per member; picked slots
    // drop to -inf so they are never selected again
    let mut min_d: Vec<f64> = members
        .iter()
        .map(|&i| dist2(&positions[i], &positions[seed]))
        .collect();
    let seed_slot = members.iter().position(|&i| i == seed).unwrap();
    min_d[seed_slot] = f64::NEG_INFINITY;
    while picked.len() < m {
        let mut best_slot = 0usize;
        let mut best_d = -1.0f64;
        for (slot, &i) in members.iter().enumerate() {
            let d = min_d[slot];
            if d > best_d || (d == best_d && i < members[best_slot]) {
                best_d = d;
                best_slot = slot;
            }
        }
        let chosen = members[best_slot];
        picked.push(chosen);
        min_d[best_slot] = -f64::INFINITY; // never re-picked
        for (slot, &i) in members.iter().enumerate() {
            let d = dist2(&positions[i], &positions[chosen]);
            if d < min_d[slot] {
                min_d[slot] = d;
            }
        }
    }
    picked
}

/// Largest-remainder quotas: `round(frac * size_b)` per block corrected so
/// the total is exactly `target`, capped at each block's size.
fn block_quotas(sizes: &[usize], frac: f64, target: usize) -> Vec<usize> {
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| (frac * s as f64).floor() as usize).collect();
    let mut remainders: Vec<(f64, usize)> = sizes
        .iter()
        .enumerate()
        .map(|(b, &s)| (frac * s as f64 - quotas[b] as f64, b))
        .collect();
    // largest remainder first, ties toward the lower block id
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let assigned: usize = quotas.iter().sum();
    let mut deficit = target.saturating_sub(assigned);
    let mut cursor = 0usize;
    while deficit > 0 {
        let b = remainders[cursor % remainders.len()].1;
        if quotas[b] < sizes[b] {
            quotas[b] += 1;
            deficit -= 1;
        }
        cursor += 1;
    }
    // floor sums can also overshoot a capped target
    let mut excess = quotas.iter().sum::<usize>().saturating_sub(target);
    let mut cursor = remainders.len();
    while excess > 0 {
        cursor -= 1;
        let b = remainders[cursor % remainders.len()].1;
        if quotas[b] > 0 {
            quotas[b] -= 1;
            excess -= 1;
        }
        if cursor == 0 {
            cursor = remainders.len();
        }
    }
    quotas
}

/// Split primitives into anchors (per-block FPS) and LoDs (pooled FPS over
/// the remainder; the last LoD takes every leftover).
pub fn build_partition(
    positions: &[Vector3<f64>],
    anchor_frac: f64,
    lod_fracs: &[f64],
    max_leaf: usize,
) -> Result<Partition> {
    let total: f64 = anchor_frac + lod_fracs.iter().sum::<f64>();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!(
            "anchor and LoD fractions sum to {total}, expected 1"
        )));
    }
    if anchor_frac < 0.0 || lod_fracs.iter().any(|f| *f < 0.0) {
        return Err(Error::Argument("fractions must be non-negative".into()));
    }
    let n = positions.len();
    let block_assignment = kdtree_blocks(positions, max_leaf)?;
    let block_count = block_assignment.iter().copied().max().map_or(0, |b| b as usize + 1);
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); block_count];
    for (i, &b) in block_assignment.iter().enumerate() {
        blocks[b as usize].push(i);
    }

    // at least one anchor: the hierarchy needs a reference even when the
    // quota rounds to zero on tiny inputs
    let anchor_target = ((anchor_frac * n as f64).round() as usize).clamp(usize::from(n > 0), n);
    let sizes: Vec<usize> = blocks.iter().map(Vec::len).collect();
    let quotas = block_quotas(&sizes, anchor_frac, anchor_target);

    let mut anchor_indices: Vec<usize> = Vec::with_capacity(anchor_target);
    for (block, &quota) in blocks.iter().zip(&quotas) {
        anchor_indices.extend(fps(positions, block, quota));
    }
    anchor_indices.sort_unstable();

    let mut in_anchor = vec![false; n];
    for &i in &anchor_indices {
        in_anchor[i] = true;
    }
    let mut pool: Vec<usize> = (0..n).filter(|&i| !in_anchor[i]).collect();

    let mut lod_indices = Vec::with_capacity(lod_fracs.len());
    for (k, &frac) in lod_fracs.iter().enumerate() {
        if k + 1 == lod_fracs.len() {
            lod_indices.push(std::mem::take(&mut pool));
        } else {
            let quota = ((frac * n as f64).round() as usize).min(pool.len());
            let mut chosen = fps(positions, &pool, quota);
            chosen.sort_unstable();
            let chosen_set: std::collections::BTreeSet<usize> = chosen.iter().copied().collect();
            pool.retain(|i| !chosen_set.contains(i));
            lod_indices.push(chosen);
        }
    }

    Ok(Partition {
        anchor_indices,
        lod_indices,
        block_assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng as _, SeedableRng as _};
    use rand_chacha::ChaCha8Rng;

    fn random_positions(seed: u64, n: usize) -> Vec<Vector3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Vector3::new(
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(-4.0..4.0),
                )
            })
            .collect()
    }

    /// O(n^2 m) reference implementation of greedy FPS.
    fn brute_fps(positions: &[Vector3<f64>], members: &[usize], m: usize) -> Vec<usize> {
        if m == 0 {
            return Vec::new();
        }
        let mut c = Vector3::zeros();
        for &i in members {
            c += positions[i];
        }
        let centroid = c / members.len() as f64;
        let mut picked: Vec<usize> = Vec::new();
        let mut remaining: Vec<usize> = members.to_vec();
        let seed = *remaining
            .iter()
            .max_by(|&&a, &&b| {
                dist2(&positions[a], &centroid)
                    .total_cmp(&dist2(&positions[b], &centroid))
                    .then(b.cmp(&a))
            })
            .unwrap();
        picked.push(seed);
        remaining.retain(|&i| i != seed);
        while picked.len() < m {
            let next = *remaining
                .iter()
                .max_by(|&&a, &&b| {
                    let da = picked
                        .iter()
                        .map(|&p| dist2(&positions[a], &positions[p]))
                        .fold(f64::INFINITY, f64::min);
                    let db = picked
                        .iter()
                        .map(|&p| dist2(&positions[b], &positions[p]))
                        .fold(f64::INFINITY, f64::min);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .unwrap();
            picked.push(next);
            remaining.retain(|&i| i != next);
        }
        picked
    }

    #[test]
    fn small_input_is_one_block() {
        let positions = random_positions(1, 10);
        let blocks = kdtree_blocks(&positions, 16).unwrap();
        assert!(blocks.iter().all(|&b| b == 0));
    }

    #[test]
    fn collinear_points_split_by_coordinate() {
        let positions: Vec<Vector3<f64>> = [3.0, 0.0, 1.0, 2.0]
            .iter()
            .map(|&x| Vector3::new(x, 0.0, 0.0))
            .collect();
        let blocks = kdtree_blocks(&positions, 2).unwrap();
        // {x=0, x=1} form block 0; {x=2, x=3} form block 1
        assert_eq!(blocks, vec![1, 0, 0, 1]);
    }

    #[test]
    fn block_sizes_stay_within_the_halving_bracket() {
        for seed in 0..5 {
            let n = 500 + seed as usize * 137;
            let positions = random_positions(seed, n);
            let max_leaf = 48;
            let blocks = kdtree_blocks(&positions, max_leaf).unwrap();
            let block_count = *blocks.iter().max().unwrap() as usize + 1;
            let mut sizes = vec![0usize; block_count];
            for &b in &blocks {
                sizes[b as usize] += 1;
            }
            for &s in &sizes {
                assert!(
                    s <= max_leaf && s >= max_leaf.div_ceil(2),
                    "block size {s} outside [{}, {max_leaf}]",
                    max_leaf.div_ceil(2)
                );
            }
        }
    }

    #[test]
    fn fps_takes_everything_when_m_is_the_block_size() {
        let positions = random_positions(2, 20);
        let members: Vec<usize> = (0..20).collect();
        let mut picked = fps(&positions, &members, 20);
        picked.sort_unstable();
        assert_eq!(picked, members);
    }

    #[test]
    fn fps_hand_case_on_a_line() {
        // points 0, 1, 10: centroid 11/3; farthest is 10, then 0
        let positions: Vec<Vector3<f64>> = [0.0, 1.0, 10.0]
            .iter()
            .map(|&x| Vector3::new(x, 0.0, 0.0))
            .collect();
        let picked = fps(&positions, &[0, 1, 2], 2);
        assert_eq!(picked, vec![2, 0]);
    }

    #[test]
    fn fps_matches_brute_force_even_on_lattices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let n = rng.gen_range(1..120);
            let positions: Vec<Vector3<f64>> = (0..n)
                .map(|_| {
                    if trial % 2 == 0 {
                        Vector3::new(
                            rng.gen_range(0..4) as f64,
                            rng.gen_range(0..4) as f64,
                            rng.gen_range(0..4) as f64,
                        )
                    } else {
                        Vector3::new(rng.gen(), rng.gen(), rng.gen())
                    }
                })
                .collect();
            let members: Vec<usize> = (0..n).collect();
            let m = rng.gen_range(0..=n);
            assert_eq!(
                fps(&positions, &members, m),
                brute_fps(&positions, &members, m),
                "trial {trial} n {n} m {m}"
            );
        }
    }

    #[test]
    fn default_split_sizes_are_exact() {
        let positions = random_positions(4, 1000);
        let part = build_partition(&positions, 0.10, &[0.30, 0.60], 128).unwrap();
        assert_eq!(part.anchor_indices.len(), 100);
        assert_eq!(part.lod_indices[0].len(), 300);
        assert_eq!(part.lod_indices[1].len(), 600);
    }

    #[test]
    fn all_anchor_partition_has_empty_lods() {
        let positions = random_positions(5, 64);
        let part = build_partition(&positions, 1.0, &[0.0, 0.0], 16).unwrap();
        assert_eq!(part.anchor_indices.len(), 64);
        assert!(part.lod_indices.iter().all(Vec::is_empty));
    }

    #[test]
    fn partition_is_disjoint_exhaustive_and_deterministic() {
        for seed in 0..8 {
            let n = 257 + seed as usize * 71;
            let positions = random_positions(seed + 10, n);
            let part = build_partition(&positions, 0.1, &[0.3, 0.6], 64).unwrap();
            let again = build_partition(&positions, 0.1, &[0.3, 0.6], 64).unwrap();
            assert_eq!(part, again);

            let mut seen = vec![0usize; n];
            for &i in &part.anchor_indices {
                seen[i] += 1;
            }
            for lod in &part.lod_indices {
                for &i in lod {
                    seen[i] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1), "partition not a partition");
        }
    }

    #[test]
    fn bad_fractions_are_rejected() {
        let positions = random_positions(6, 16);
        assert!(build_partition(&positions, 0.5, &[0.3], 8).is_err());
    }
}
