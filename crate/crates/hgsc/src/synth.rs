//! Synthetic test scenes: Gaussians sampled on analytic surfaces (torus,
//! sphere cap, ground disk) with smooth spatial SH fields, plus ring
//! camera rigs. Everything is seeded, so the whole evaluation pipeline
//! runs without external datasets.

use nalgebra::{Matrix4, Vector3};
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;

use crate::scene::{logit, CameraView, GaussianCloud, GaussianPrimitive};
use crate::sh::dc_from_color;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub count: usize,
    pub sh_degree: u8,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            count: 50_000,
            sh_degree: 2,
            seed: 7,
        }
    }
}

/// Smooth scalar field over space, one phase per channel.
fn field(p: &Vector3<f64>, phase: f64) -> f64 {
    (2.1 * p.x + phase).sin() * 0.5 + (1.7 * p.y - 0.6 * phase).cos() * 0.3 + (2.9 * p.z).sin() * 0.2
}

pub fn synth_cloud(cfg: &SynthConfig) -> GaussianCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let b = crate::scene::sh_coeff_count(cfg.sh_degree);
    let as_f32 = |v: f64| v as f32 as f64;

    let mut prims = Vec::with_capacity(cfg.count);
    for i in 0..cfg.count {
        let surface = i % 10;
        let mut p = if surface < 5 {
            // torus, major radius 1.0, minor 0.35
            let u = rng.gen_range(0.0..std::f64::consts::TAU);
            let v = rng.gen_range(0.0..std::f64::consts::TAU);
            Vector3::new(
                (1.0 + 0.35 * v.cos()) * u.cos(),
                0.35 * v.sin(),
                (1.0 + 0.35 * v.cos()) * u.sin(),
            )
        } else if surface < 8 {
            // upper sphere cap
            let u = rng.gen_range(0.0..std::f64::consts::TAU);
            let z = rng.gen_range(0.15f64..1.0);
            let r = (1.0 - z * z).sqrt() * 0.8;
            Vector3::new(r * u.cos(), 0.35 + 0.8 * z, r * u.sin())
        } else {
            // ground disk
            let u = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = rng.gen_range(0.0f64..1.0).sqrt() * 1.6;
            Vector3::new(r * u.cos(), -0.4, r * u.sin())
        };
        // surface thickness
        for a in 0..3 {
            p[a] += rng.gen_range(-0.01..0.01);
        }
        p = p.map(as_f32);

        let base_scale: f64 = rng.gen_range(0.004f64..0.02).ln();
        let log_scale = Vector3::new(
            as_f32(base_scale + rng.gen_range(-0.4..0.4)),
            as_f32(base_scale + rng.gen_range(-0.4..0.4)),
            as_f32(base_scale + rng.gen_range(-0.4..0.4)),
        );
        let q = loop {
            let q: [f64; 4] = std::array::from_fn(|_| as_f32(rng.gen_range(-1.0..1.0)));
            let n2: f64 = q.iter().map(|c| c * c).sum();
            if n2 > 1e-3 {
                break q;
            }
        };
        let opacity = 0.55 + 0.4 * field(&p, 9.1).clamp(-1.0, 1.0) * 0.5;
        let opacity_logit = as_f32(logit(opacity.clamp(0.05, 0.99)));

        // luma-dominant color: a shared brightness field with small
        // chroma deviations, matching how real captures correlate
        let mut sh = Vec::with_capacity(b);
        let lum = 0.5 + 0.32 * field(&p, 0.0);
        let dc = [
            dc_from_color((lum + 0.08 * field(&p, 2.1)).clamp(0.02, 0.98)),
            dc_from_color((lum + 0.08 * field(&p, 4.2)).clamp(0.02, 0.98)),
            dc_from_color((lum + 0.08 * field(&p, 6.3)).clamp(0.02, 0.98)),
        ];
        sh.push(dc.map(as_f32));
        for band in 1..b {
            let falloff = 0.08 / band as f64;
            let base = falloff * field(&p, band as f64);
            sh.push([
                as_f32(base + 0.2 * falloff * field(&p, band as f64 + 0.7)),
                as_f32(base + 0.2 * falloff * field(&p, band as f64 + 1.4)),
                as_f32(base + 0.2 * falloff * field(&p, band as f64 + 2.1)),
            ]);
        }

        prims.push(
            GaussianPrimitive::new(p, log_scale, q, opacity_logit, sh)
                .expect("synthetic quaternion is non-degenerate"),
        );
    }
    GaussianCloud::new(prims, cfg.sh_degree).expect("synthetic cloud is well-formed")
}

/// Look-at view: camera at `eye`, optical axis through `target`.
pub fn look_at(eye: Vector3<f64>, target: Vector3<f64>, width: u32, height: u32, f: f64) -> CameraView {
    let forward = (target - eye).normalize();
    let up = Vector3::new(0.0, 1.0, 0.0);
    let right = up.cross(&forward).normalize();
    let down = forward.cross(&right);
    let mut m = Matrix4::identity();
    for c in 0..3 {
        m[(0, c)] = right[c];
        m[(1, c)] = down[c];
        m[(2, c)] = forward[c];
    }
    let t = -Matrix4::from(m).fixed_view::<3, 3>(0, 0) * eye;
    for r in 0..3 {
        m[(r, 3)] = t[r];
    }
    CameraView {
        width,
        height,
        fx: f,
        fy: f,
        cx: width as f64 / 2.0,
        cy: height as f64 / 2.0,
        world_to_camera: m,
    }
}

/// Ring of `count` inward-looking cameras around the synthetic scene.
/// `phase` rotates the ring, which makes disjoint evaluation rigs.
pub fn synth_rig(count: usize, width: u32, height: u32, phase: f64) -> Vec<CameraView> {
    (0..count)
        .map(|i| {
            let angle = phase + std::f64::consts::TAU * i as f64 / count as f64;
            let eye = Vector3::new(3.0 * angle.cos(), 1.1 + 0.4 * (angle * 2.0).sin(), 3.0 * angle.sin());
            look_at(eye, Vector3::new(0.0, 0.1, 0.0), width, height, 0.9 * width as f64)
        })
        .collect()
}
