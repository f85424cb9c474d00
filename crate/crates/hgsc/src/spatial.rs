//! Exact nearest-neighbor queries over a static kd-tree.
//!
//! Results are defined by lexicographic order on `(squared distance,
//! index)`, so ties always resolve to the lowest index and every query
//! matches a brute-force scan exactly. Subtrees are only skipped when the
//! splitting plane is strictly farther than the current worst candidate,
//! which keeps equal-distance points reachable.

use nalgebra::Vector3;

pub fn dist2(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

struct Node {
    point: u32,
    axis: u8,
    left: i32,
    right: i32,
}

pub struct KdTree<'a> {
    points: &'a [Vector3<f64>],
    nodes: Vec<Node>,
    root: i32,
}

impl<'a> KdTree<'a> {
    pub fn build(points: &'a [Vector3<f64>]) -> Self {
        let mut indices: Vec<u32> = (0..points.len() as u32).collect();
        let mut tree = Self {
            points,
            nodes: Vec::with_capacity(points.len()),
            root: -1,
        };
        tree.root = tree.build_rec(&mut indices);
        tree
    }

    fn build_rec(&mut self, subset: &mut [u32]) -> i32 {
        if subset.is_empty() {
            return -1;
        }
        // split along the widest extent, ties x < y < z
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in subset.iter() {
            let p = &self.points[i as usize];
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let mut axis = 0usize;
        for a in 1..3 {
            if hi[a] - lo[a] > hi[axis] - lo[axis] {
                axis = a;
            }
        }
        let mid = subset.len() / 2;
        subset.select_nth_unstable_by(mid, |&a, &b| {
            self.points[a as usize][axis]
                .total_cmp(&self.points[b as usize][axis])
                .then(a.cmp(&b))
        });
        let point = subset[mid];
        let (left_set, rest) = subset.split_at_mut(mid);
        let right_set = &mut rest[1..];
        let left = self.build_rec(left_set);
        let right = self.build_rec(right_set);
        self.nodes.push(Node {
            point,
            axis: axis as u8,
            left,
            right,
        });
        (self.nodes.len() - 1) as i32
    }

    /// Index of the nearest point; ties break toward the lowest index.
    pub fn nearest(&self, query: &Vector3<f64>) -> usize {
        let mut best = (f64::INFINITY, u32::MAX);
        self.nearest_rec(self.root, query, &mut best);
        best.1 as usize
    }

    fn nearest_rec(&self, node: i32, query: &Vector3<f64>, best: &mut (f64, u32)) {
        if node < 0 {
            return;
        }
        let n = &self.nodes[node as usize];
        let p = &self.points[n.point as usize];
        let d2 = dist2(query, p);
        if d2 < best.0 || (d2 == best.0 && n.point < best.1) {
            *best = (d2, n.point);
        }
        let delta = query[n.axis as usize] - p[n.axis as usize];
        let (near, far) = if delta < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.nearest_rec(near, query, best);
        if delta * delta <= best.0 {
            self.nearest_rec(far, query, best);
        }
    }

    /// The `k` nearest points as `(squared distance, index)`, ascending in
    /// that lexicographic order. Returns fewer when the tree is smaller.
    pub fn k_nearest(&self, query: &Vector3<f64>, k: usize) -> Vec<(f64, usize)> {
        if k == 0 {
            return Vec::new();
        }
        let mut best: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
        self.k_nearest_rec(self.root, query, k, &mut best);
        best.into_iter().map(|(d, i)| (d, i as usize)).collect()
    }

    fn k_nearest_rec(&self, node: i32, query: &Vector3<f64>, k: usize, best: &mut Vec<(f64, u32)>) {
        if node < 0 {
            return;
        }
        let n = &self.nodes[node as usize];
        let p = &self.points[n.point as usize];
        let cand = (dist2(query, p), n.point);
        if best.len() < k || cand < *best.last().unwrap() {
            let pos = best.partition_point(|b| *b < cand);
            best.insert(pos, cand);
            best.truncate(k);
        }
        let delta = query[n.axis as usize] - p[n.axis as usize];
        let (near, far) = if delta < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.k_nearest_rec(near, query, k, best);
        if best.len() < k || delta * delta <= best.last().unwrap().0 {
            self.k_nearest_rec(far, query, k, best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng as _, SeedableRng as _};
    use rand_chacha::ChaCha8Rng;

    fn brute_k_nearest(points: &[Vector3<f64>], q: &Vector3<f64>, k: usize) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (dist2(q, p), i)).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(k);
        all
    }

    #[test]
    fn matches_brute_force_including_lattice_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..30 {
            // lattices force exact distance ties in f64
            let on_lattice = trial % 2 == 0;
            let n = rng.gen_range(1..300);
            let points: Vec<Vector3<f64>> = (0..n)
                .map(|_| {
                    if on_lattice {
                        Vector3::new(
                            rng.gen_range(0..5) as f64,
                            rng.gen_range(0..5) as f64,
                            rng.gen_range(0..5) as f64,
                        )
                    } else {
                        Vector3::new(rng.gen(), rng.gen(), rng.gen())
                    }
                })
                .collect();
            let tree = KdTree::build(&points);
            for _ in 0..50 {
                let q = if on_lattice {
                    Vector3::new(
                        rng.gen_range(0..5) as f64,
                        rng.gen_range(0..5) as f64,
                        rng.gen_range(0..5) as f64,
                    )
                } else {
                    Vector3::new(rng.gen(), rng.gen(), rng.gen())
                };
                let k = rng.gen_range(1..8);
                assert_eq!(tree.k_nearest(&q, k), brute_k_nearest(&points, &q, k));
                assert_eq!(tree.nearest(&q), brute_k_nearest(&points, &q, 1)[0].1);
            }
        }
    }

    #[test]
    fn k_larger_than_tree_returns_everything() {
        let points = vec![Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0)];
        let tree = KdTree::build(&points);
        let got = tree.k_nearest(&Vector3::new(0.4, 0.0, 0.0), 10);
        assert_eq!(got.len(), 2);
    }
}
