//! Shared helpers for the unit tests.

use nalgebra::{Matrix4, Vector3};
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;

use crate::scene::{sh_coeff_count, CameraView, GaussianCloud, GaussianPrimitive};

/// Random cloud whose every stored value is exactly representable as f32,
/// with canonical unit quaternions.
pub(crate) fn random_cloud(seed: u64, n: usize, sh_degree: u8) -> GaussianCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = sh_coeff_count(sh_degree);
    let prims: Vec<_> = (0..n)
        .map(|_| {
            let f = |rng: &mut ChaCha8Rng, lo: f32, hi: f32| rng.gen_range(lo..hi) as f64;
            let q = loop {
                let q: [f32; 4] = std::array::from_fn(|_| rng.gen_range(-1.0f32..1.0));
                let n2: f32 = q.iter().map(|c| c * c).sum();
                if n2 > 1e-3 {
                    let n = n2.sqrt();
                    break [q[0] / n, q[1] / n, q[2] / n, q[3] / n].map(|c| c as f64);
                }
            };
            GaussianPrimitive::new(
                Vector3::new(
                    f(&mut rng, -5.0, 5.0),
                    f(&mut rng, -5.0, 5.0),
                    f(&mut rng, -5.0, 5.0),
                ),
                Vector3::new(
                    f(&mut rng, -6.0, 1.0),
                    f(&mut rng, -6.0, 1.0),
                    f(&mut rng, -6.0, 1.0),
                ),
                q,
                f(&mut rng, -4.0, 4.0),
                (0..b)
                    .map(|_| {
                        [
                            f(&mut rng, -2.0, 2.0),
                            f(&mut rng, -2.0, 2.0),
                            f(&mut rng, -2.0, 2.0),
                        ]
                    })
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    GaussianCloud::new(prims, sh_degree).unwrap()
}

/// Identity-pose pinhole camera centered on the image.
pub(crate) fn test_camera(width: u32, height: u32, f: f64) -> CameraView {
    CameraView {
        width,
        height,
        fx: f,
        fy: f,
        cx: width as f64 / 2.0,
        cy: height as f64 / 2.0,
        world_to_camera: Matrix4::identity(),
    }
}
