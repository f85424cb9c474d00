//! Deterministic CPU reference renderer: EWA projection of each Gaussian
//! to screen space followed by front-to-back alpha blending, with optional
//! capture of per-Gaussian accumulated blending weights (the summand of the
//! global-significance score).

use nalgebra::{Matrix2, Matrix2x3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::scene::{CameraView, GaussianCloud, GaussianPrimitive};
use crate::sh::evaluate_sh;

/// Near plane: splats with camera-space z at or below this are culled.
const NEAR_PLANE: f64 = 0.1;
/// Diagonal dilation of the projected covariance, in pixels squared.
const COV2D_DILATION: f64 = 0.3;
/// Per-splat alpha ceiling.
const ALPHA_CLAMP: f64 = 0.99;
/// Blending stops once transmittance falls below this.
const TRANSMITTANCE_FLOOR: f64 = 1e-4;
/// Footprint truncation at Mahalanobis radius 3.
const MAX_POWER: f64 = 4.5;

#[derive(Debug, Clone)]
pub struct ProjectedGaussian {
    pub mean2d: Vector2<f64>,
    pub cov2d: Matrix2<f64>,
    pub depth: f64,
    pub color: [f64; 3],
    pub base_opacity: f64,
    pub source_index: usize,
}

/// Row-major RGB image with f64 channels in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f64>,
}

impl ImageF {
    pub fn black(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width as usize * height as usize * 3],
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f64; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn save_png(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let img = image::RgbImage::from_raw(self.width, self.height, bytes)
            .expect("buffer length matches dimensions");
        img.save(path.as_ref())
            .map_err(|e| Error::Argument(format!("png export failed: {e}")))?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub image: ImageF,
    /// Per-Gaussian accumulated blending weight, present when requested.
    pub weights: Option<Vec<f64>>,
    /// Splats dropped because their projected covariance was not invertible.
    pub degenerate_splats: usize,
}

/// Project one Gaussian into a view. Returns `None` when the splat is
/// behind the near plane or its 3-sigma footprint misses the screen.
pub fn project(
    p: &GaussianPrimitive,
    sh_degree: u8,
    cam: &CameraView,
    source_index: usize,
) -> Option<ProjectedGaussian> {
    let t = cam.to_camera(&p.position);
    if t.z <= NEAR_PLANE {
        return None;
    }
    let inv_z = 1.0 / t.z;
    let mean2d = Vector2::new(cam.fx * t.x * inv_z + cam.cx, cam.fy * t.y * inv_z + cam.cy);

    let jac = Matrix2x3::new(
        cam.fx * inv_z,
        0.0,
        -cam.fx * t.x * inv_z * inv_z,
        0.0,
        cam.fy * inv_z,
        -cam.fy * t.y * inv_z * inv_z,
    );
    let w = cam.rotation();
    let jw = jac * w;
    let mut cov2d = jw * p.covariance() * jw.transpose();
    cov2d[(0, 0)] += COV2D_DILATION;
    cov2d[(1, 1)] += COV2D_DILATION;

    let rx = 3.0 * cov2d[(0, 0)].sqrt();
    let ry = 3.0 * cov2d[(1, 1)].sqrt();
    if mean2d.x + rx < 0.0
        || mean2d.x - rx > (cam.width - 1) as f64
        || mean2d.y + ry < 0.0
        || mean2d.y - ry > (cam.height - 1) as f64
    {
        return None;
    }

    let dir_raw = p.position - cam.center();
    let dir = if dir_raw.norm() > 0.0 {
        dir_raw.normalize()
    } else {
        Vector3::z()
    };
    Some(ProjectedGaussian {
        mean2d,
        cov2d,
        depth: t.z,
        color: evaluate_sh(&p.sh, sh_degree, &dir),
        base_opacity: p.opacity(),
        source_index,
    })
}

/// Render a cloud into a view with front-to-back alpha blending over a
/// black background. Splats are processed in increasing depth with a
/// stable index tie-break, so identical inputs produce identical images.
pub fn render(cloud: &GaussianCloud, cam: &CameraView, capture_weights: bool) -> RenderOutput {
    let mut projected: Vec<ProjectedGaussian> = cloud
        .primitives
        .iter()
        .enumerate()
        .filter_map(|(i, p)| project(p, cloud.sh_degree, cam, i))
        .collect();
    projected.sort_by(|a, b| {
        a.depth
            .total_cmp(&b.depth)
            .then(a.source_index.cmp(&b.source_index))
    });

    let (w, h) = (cam.width as usize, cam.height as usize);
    let mut image = ImageF::black(cam.width, cam.height);
    let mut transmittance = vec![1.0f64; w * h];
    let mut weights = capture_weights.then(|| vec![0.0f64; cloud.len()]);
    let mut degenerate_splats = 0usize;

    for g in &projected {
        let det = g.cov2d[(0, 0)] * g.cov2d[(1, 1)] - g.cov2d[(0, 1)] * g.cov2d[(1, 0)];
        if det <= 1e-12 {
            degenerate_splats += 1;
            continue;
        }
        let inv = Matrix2::new(
            g.cov2d[(1, 1)] / det,
            -g.cov2d[(0, 1)] / det,
            -g.cov2d[(1, 0)] / det,
            g.cov2d[(0, 0)] / det,
        );
        let rx = 3.0 * g.cov2d[(0, 0)].sqrt();
        let ry = 3.0 * g.cov2d[(1, 1)].sqrt();
        let x0 = (g.mean2d.x - rx).ceil().max(0.0) as usize;
        let x1 = (g.mean2d.x + rx).floor().min((w - 1) as f64) as usize;
        let y0 = (g.mean2d.y - ry).ceil().max(0.0) as usize;
        let y1 = (g.mean2d.y + ry).floor().min((h - 1) as f64) as usize;

        let mut accumulated = 0.0f64;
        for y in y0..=y1 {
            let row = y * w;
            for x in x0..=x1 {
                let t = transmittance[row + x];
                if t < TRANSMITTANCE_FLOOR {
                    continue;
                }
                let d = Vector2::new(x as f64 - g.mean2d.x, y as f64 - g.mean2d.y);
                let power = 0.5 * (d.transpose() * inv * d)[(0, 0)];
                if !(0.0..=MAX_POWER).contains(&power) {
                    continue;
                }
                let alpha = (g.base_opacity * (-power).exp()).min(ALPHA_CLAMP);
                let contribution = alpha * t;
                let px = (row + x) * 3;
                for c in 0..3 {
                    image.data[px + c] += g.color[c] * contribution;
                }
                transmittance[row + x] = t * (1.0 - alpha);
                accumulated += contribution;
            }
        }
        if let Some(ws) = weights.as_mut() {
            ws[g.source_index] += accumulated;
        }
    }

    RenderOutput {
        image,
        weights,
        degenerate_splats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::logit;
    use crate::sh::dc_from_color;
    use crate::testutil::test_camera;
    use approx::assert_relative_eq;
    

    fn splat(pos: [f64; 3], log_scale: f64, opacity: f64, color: f64) -> GaussianPrimitive {
        GaussianPrimitive::new(
            Vector3::new(pos[0], pos[1], pos[2]),
            Vector3::new(log_scale, log_scale, log_scale),
            [1.0, 0.0, 0.0, 0.0],
            logit(opacity),
            vec![[dc_from_color(color); 3]],
        )
        .unwrap()
    }

    #[test]
    fn on_axis_point_projects_to_principal_point() {
        let cam = test_camera(64, 64, 50.0);
        let p = splat([0.0, 0.0, 1.0], -3.0, 0.5, 0.8);
        let proj = project(&p, 0, &cam, 0).unwrap();
        assert_relative_eq!(proj.mean2d.x, cam.cx, epsilon = 1e-12);
        assert_relative_eq!(proj.mean2d.y, cam.cy, epsilon = 1e-12);
        assert_relative_eq!(proj.depth, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn on_axis_isotropic_cov2d_matches_jacobian_oracle() {
        let f = 80.0;
        let cam = test_camera(64, 64, f);
        for (s, z) in [(0.05f64, 1.0f64), (0.2, 4.0), (0.01, 0.5)] {
            let p = splat([0.0, 0.0, z], s.ln(), 0.5, 0.5);
            let proj = project(&p, 0, &cam, 0).unwrap();
            let expect = (f * s / z).powi(2) + COV2D_DILATION;
            assert_relative_eq!(proj.cov2d[(0, 0)], expect, max_relative = 1e-9);
            assert_relative_eq!(proj.cov2d[(1, 1)], expect, max_relative = 1e-9);
            assert_relative_eq!(proj.cov2d[(0, 1)], 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn behind_camera_is_culled() {
        let cam = test_camera(64, 64, 50.0);
        let p = splat([0.0, 0.0, -1.0], -3.0, 0.5, 0.8);
        assert!(project(&p, 0, &cam, 0).is_none());
        // exactly at the near plane is culled too
        let p = splat([0.0, 0.0, 0.1], -3.0, 0.5, 0.8);
        assert!(project(&p, 0, &cam, 0).is_none());
    }

    #[test]
    fn empty_cloud_renders_black() {
        let cam = test_camera(32, 32, 30.0);
        let cloud = GaussianCloud::new(vec![], 0).unwrap();
        let out = render(&cloud, &cam, true);
        assert!(out.image.data.iter().all(|&v| v == 0.0));
        assert_eq!(out.weights.unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn two_splat_blending_matches_closed_form() {
        let cam = test_camera(64, 64, 50.0);
        let (a1, a2) = (0.7, 0.4);
        let (c1, c2) = (0.9, 0.3);
        let front = splat([0.0, 0.0, 1.0], -1.0, a1, c1);
        let back = splat([0.0, 0.0, 2.0], -1.0, a2, c2);
        let cloud = GaussianCloud::new(vec![back, front], 0).unwrap();
        let out = render(&cloud, &cam, false);
        // the pixel at the exact projected center sees alpha with no falloff
        let px = out.image.pixel(cam.cx as u32, cam.cy as u32);
        let expect = c1 * a1 + c2 * a2 * (1.0 - a1);
        assert_relative_eq!(px[0], expect, epsilon = 1e-12);
    }

    #[test]
    fn flat_profile_weight_equals_pixel_count_times_alpha() {
        // sigma far larger than the screen makes alpha constant over it
        let cam = test_camera(48, 48, 100.0);
        let alpha = 0.6;
        let p = splat([0.0, 0.0, 1.0], 10.0f64.ln() * 4.0, alpha, 0.5);
        let cloud = GaussianCloud::new(vec![p], 0).unwrap();
        let out = render(&cloud, &cam, true);
        let weight = out.weights.unwrap()[0];
        let expect = (48.0 * 48.0) * alpha;
        assert!(
            (weight - expect).abs() / expect < 0.01,
            "weight {weight} vs P*alpha {expect}"
        );
    }

    #[test]
    fn transmittance_is_conserved() {
        // all-white splats: each pixel value equals its own weight sum
        let mut prims = Vec::new();
        for i in 0..40 {
            let t = i as f64 / 40.0;
            prims.push(splat(
                [t * 0.4 - 0.2, (1.0 - t) * 0.4 - 0.2, 1.0 + t],
                -2.0,
                0.95,
                1.0,
            ));
        }
        let cloud = GaussianCloud::new(prims, 0).unwrap();
        let cam = test_camera(48, 48, 60.0);
        let out = render(&cloud, &cam, false);
        for &v in &out.image.data {
            assert!(v <= 1.0 + 1e-12, "pixel value {v} exceeds 1");
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let cloud = crate::testutil::random_cloud(31, 200, 1);
        let cam = test_camera(64, 64, 40.0);
        let a = render(&cloud, &cam, true);
        let b = render(&cloud, &cam, true);
        assert_eq!(a.image, b.image);
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn disjoint_splats_superpose() {
        let cam = test_camera(64, 64, 50.0);
        let left = splat([-0.4, 0.0, 1.0], -3.5, 0.8, 0.9);
        let right = splat([0.4, 0.0, 1.0], -3.5, 0.8, 0.2);
        let joint = render(
            &GaussianCloud::new(vec![left.clone(), right.clone()], 0).unwrap(),
            &cam,
            false,
        );
        let a = render(&GaussianCloud::new(vec![left], 0).unwrap(), &cam, false);
        let b = render(&GaussianCloud::new(vec![right], 0).unwrap(), &cam, false);
        for i in 0..joint.image.data.len() {
            assert!(
                (joint.image.data[i] - (a.image.data[i] + b.image.data[i])).abs() < 1e-9,
                "superposition violated at {i}"
            );
        }
    }
}
