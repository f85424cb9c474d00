//! Region-adaptive hierarchical transform over voxel coordinates.
//!
//! Nodes merge pairwise up the octree, one axis per half-level in the
//! fixed order z, y, x. A pair with weights `(w1, w2)` maps through the
//! orthonormal matrix
//!
//! ```text
//! 1/sqrt(w1+w2) * [  sqrt(w1)  sqrt(w2) ]
//!                 [ -sqrt(w2)  sqrt(w1) ]
//! ```
//!
//! producing one DC that continues upward and one AC that is emitted.
//! Unpaired nodes pass through with their weight carried. The merge
//! schedule depends only on the coordinates, so the decoder rebuilds it
//! from the recomputed partition and runs the transform in reverse.

use crate::error::{Error, Result};
use crate::morton::morton_encode;

#[derive(Debug, Clone, Copy)]
struct MergeOp {
    /// Slot that keeps the DC.
    left: u32,
    /// Slot whose value becomes the emitted AC.
    right: u32,
    w_left: u64,
    w_right: u64,
}

/// Precomputed merge schedule for one anchor coordinate set.
pub struct RahtPlan {
    /// Ops per half-step, forward order; AC indices are assigned in
    /// emission order (step-major, Morton scan order within a step).
    steps: Vec<Vec<MergeOp>>,
    n: usize,
}

impl RahtPlan {
    /// Build the schedule for Morton-sorted voxel coordinates at `depth`.
    pub fn build(coords: &[[u32; 3]], depth: u8) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::Argument("transform needs at least one voxel".into()));
        }
        let mut codes: Vec<u64> = coords
            .iter()
            .map(|c| morton_encode(c[0], c[1], c[2]))
            .collect();
        for w in codes.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Argument(
                    "voxel coordinates must be unique and Morton-sorted".into(),
                ));
            }
        }
        if let Some(&last) = codes.last() {
            if last >= 1u64 << (3 * depth as u32) {
                return Err(Error::Argument(format!(
                    "coordinate exceeds the depth-{depth} grid"
                )));
            }
        }

        let mut weights: Vec<u64> = vec![1; n];
        let mut active: Vec<u32> = (0..n as u32).collect();
        let mut steps = Vec::with_capacity(3 * depth as usize);
        for k in 0..3 * depth as u32 {
            let bit = 1u64 << k;
            let mut ops = Vec::new();
            let mut next_active = Vec::with_capacity(active.len());
            let mut i = 0;
            while i < active.len() {
                let a = active[i] as usize;
                if i + 1 < active.len() {
                    let b = active[i + 1] as usize;
                    if codes[a] ^ codes[b] == bit {
                        ops.push(MergeOp {
                            left: active[i],
                            right: active[i + 1],
                            w_left: weights[a],
                            w_right: weights[b],
                        });
                        weights[a] += weights[b];
                        next_active.push(active[i]);
                        i += 2;
                        continue;
                    }
                }
                codes[a] &= !bit;
                next_active.push(active[i]);
                i += 1;
            }
            steps.push(ops);
            active = next_active;
        }
        debug_assert_eq!(active, vec![0]);
        steps.shrink_to_fit();
        Ok(Self { steps, n })
    }

    pub fn anchor_count(&self) -> usize {
        self.n
    }

    /// Total weight reaching the root; equals the anchor count.
    pub fn root_weight(&self) -> u64 {
        self.n as u64
    }
}

/// DC value vector plus AC value vectors in emission order. Each entry has
/// one value per attribute channel; coefficient count per channel equals
/// the anchor count.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffStream {
    pub dc: Vec<f64>,
    pub acs: Vec<Vec<f64>>,
}

/// Forward transform. `values[i]` is the attribute vector of the i-th
/// Morton-sorted anchor; all vectors share one channel count.
pub fn raht_forward(plan: &RahtPlan, values: &[Vec<f64>]) -> CoeffStream {
    assert_eq!(values.len(), plan.n);
    let mut slots: Vec<Vec<f64>> = values.to_vec();
    let mut acs = Vec::with_capacity(plan.n.saturating_sub(1));
    for step in &plan.steps {
        for op in step {
            let s = ((op.w_left + op.w_right) as f64).sqrt();
            let wl = (op.w_left as f64).sqrt() / s;
            let wr = (op.w_right as f64).sqrt() / s;
            let (li, ri) = (op.left as usize, op.right as usize);
            let mut ac = std::mem::take(&mut slots[ri]);
            for c in 0..ac.len() {
                let va = slots[li][c];
                let vb = ac[c];
                slots[li][c] = wl * va + wr * vb;
                ac[c] = -wr * va + wl * vb;
            }
            acs.push(ac);
        }
    }
    CoeffStream {
        dc: std::mem::take(&mut slots[0]),
        acs,
    }
}

/// Inverse transform: exact inverse of [`raht_forward`] given the same
/// plan (orthonormal pairs invert by transposition).
pub fn raht_inverse(plan: &RahtPlan, stream: &CoeffStream) -> Result<Vec<Vec<f64>>> {
    if stream.acs.len() + 1 != plan.n {
        return Err(Error::corrupt(
            "anchor",
            format!(
                "coefficient count {} does not match anchor count {}",
                stream.acs.len() + 1,
                plan.n
            ),
        ));
    }
    let channels = stream.dc.len();
    if stream.acs.iter().any(|a| a.len() != channels) {
        return Err(Error::corrupt("anchor", "ragged coefficient vectors"));
    }
    let mut slots: Vec<Vec<f64>> = vec![Vec::new(); plan.n];
    slots[0] = stream.dc.clone();
    let mut ac_cursor = stream.acs.len();
    for step in plan.steps.iter().rev() {
        for op in step.iter().rev() {
            ac_cursor -= 1;
            let ac = &stream.acs[ac_cursor];
            let s = ((op.w_left + op.w_right) as f64).sqrt();
            let wl = (op.w_left as f64).sqrt() / s;
            let wr = (op.w_right as f64).sqrt() / s;
            let (li, ri) = (op.left as usize, op.right as usize);
            let mut b = vec![0.0; channels];
            for c in 0..channels {
                let dc = slots[li][c];
                slots[li][c] = wl * dc - wr * ac[c];
                b[c] = wr * dc + wl * ac[c];
            }
            slots[ri] = b;
        }
    }
    Ok(slots)
}
