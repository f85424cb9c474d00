//! Domain types for Gaussian scenes.
//!
//! A scene is an ordered list of [`GaussianPrimitive`]s. Scales are kept in
//! log domain and opacity in logit domain, exactly as the standard 3DGS PLY
//! stores them; every coding stage downstream quantizes in the stored domain.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Number of SH coefficient triples for a given degree (0..=3).
pub fn sh_coeff_count(degree: u8) -> usize {
    let d = degree as usize + 1;
    d * d
}

/// Inverse of [`sh_coeff_count`]; `None` when the count is not a supported
/// basis size.
pub fn sh_degree_from_count(count: usize) -> Option<u8> {
    match count {
        1 => Some(0),
        4 => Some(1),
        9 => Some(2),
        16 => Some(3),
        _ => None,
    }
}

/// Canonicalize a quaternion given as `(w, x, y, z)`.
///
/// Normalizes when the squared norm is off unit by more than 1e-6, then
/// flips the sign so the first nonzero component is positive (`q` and `-q`
/// encode the same rotation). Idempotent: re-canonicalizing an already
/// canonical quaternion keeps every bit.
pub fn canonicalize_quaternion(q: [f64; 4]) -> Result<[f64; 4]> {
    let n2: f64 = q.iter().map(|c| c * c).sum();
    if !n2.is_finite() || n2 == 0.0 {
        return Err(Error::Argument(format!(
            "degenerate quaternion {q:?} cannot be canonicalized"
        )));
    }
    let mut out = q;
    if (n2 - 1.0).abs() > 1e-6 {
        let inv = 1.0 / n2.sqrt();
        for c in &mut out {
            *c *= inv;
        }
    }
    let first_nonzero = out.iter().copied().find(|c| *c != 0.0).unwrap_or(0.0);
    if first_nonzero < 0.0 {
        for c in &mut out {
            *c = -*c;
        }
    }
    Ok(out)
}

/// One splat: position, log-scales, unit rotation quaternion, opacity logit
/// and `B` spherical-harmonic RGB triples.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrimitive {
    pub position: Vector3<f64>,
    pub log_scale: Vector3<f64>,
    /// Unit quaternion `(w, x, y, z)`, canonical sign.
    pub rotation: [f64; 4],
    pub opacity_logit: f64,
    /// `B` RGB triples, DC first, then higher bands in 3DGS export order.
    pub sh: Vec<[f64; 3]>,
}

impl GaussianPrimitive {
    pub fn new(
        position: Vector3<f64>,
        log_scale: Vector3<f64>,
        rotation: [f64; 4],
        opacity_logit: f64,
        sh: Vec<[f64; 3]>,
    ) -> Result<Self> {
        Ok(Self {
            position,
            log_scale,
            rotation: canonicalize_quaternion(rotation)?,
            opacity_logit,
            sh,
        })
    }

    /// Per-axis scales `exp(log_scale)`.
    pub fn scales(&self) -> Vector3<f64> {
        self.log_scale.map(f64::exp)
    }

    /// Opacity `sigmoid(opacity_logit)` in (0, 1).
    pub fn opacity(&self) -> f64 {
        sigmoid(self.opacity_logit)
    }

    /// Rotation matrix of the canonical quaternion.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        quaternion_to_matrix(&self.rotation)
    }

    /// World-space covariance `R S S^T R^T` with `S = diag(exp(log_scale))`.
    pub fn covariance(&self) -> Matrix3<f64> {
        let r = self.rotation_matrix();
        let s = self.scales();
        let rs = Matrix3::from_columns(&[r.column(0) * s.x, r.column(1) * s.y, r.column(2) * s.z]);
        rs * rs.transpose()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn quaternion_to_matrix(q: &[f64; 4]) -> Matrix3<f64> {
    let [w, x, y, z] = *q;
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vector3<f64>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut bb = Aabb {
            min: first,
            max: first,
        };
        for p in it {
            bb.min = bb.min.inf(p);
            bb.max = bb.max.sup(p);
        }
        Some(bb)
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }

    pub fn extents(&self) -> Vector3<f64> {
        self.max - self.min
    }
}

/// Ordered collection of primitives sharing one SH degree.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCloud {
    pub primitives: Vec<GaussianPrimitive>,
    pub sh_degree: u8,
    pub bbox: Aabb,
}

impl GaussianCloud {
    pub fn new(primitives: Vec<GaussianPrimitive>, sh_degree: u8) -> Result<Self> {
        let expected = sh_coeff_count(sh_degree);
        for (i, p) in primitives.iter().enumerate() {
            if p.sh.len() != expected {
                return Err(Error::Argument(format!(
                    "primitive {i} has {} SH triples, expected {expected} for degree {sh_degree}",
                    p.sh.len()
                )));
            }
        }
        let bbox = Aabb::from_points(primitives.iter().map(|p| &p.position)).unwrap_or(Aabb {
            min: Vector3::zeros(),
            max: Vector3::zeros(),
        });
        Ok(Self {
            primitives,
            sh_degree,
            bbox,
        })
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.primitives.iter().map(|p| p.position).collect()
    }
}

/// Pinhole camera with a rigid world-to-camera transform.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraView {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Row-major 4x4 rigid transform taking world points to camera space.
    pub world_to_camera: nalgebra::Matrix4<f64>,
}

impl CameraView {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::CameraRig("image dimensions must be positive".into()));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::CameraRig("focal lengths must be positive".into()));
        }
        let r = self.rotation();
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if !(err <= 1e-6) {
            return Err(Error::CameraRig(format!(
                "world_to_camera rotation block is not orthonormal (max deviation {err:.2e})"
            )));
        }
        Ok(())
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.world_to_camera.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.world_to_camera.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Camera center in world coordinates, `-R^T t`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation().transpose() * self.translation())
    }

    /// World point to camera space.
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * p + self.translation()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_unit_quat(rng: &mut impl Rng) -> [f64; 4] {
        loop {
            let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let n2: f64 = q.iter().map(|c| c * c).sum();
            if n2 > 1e-3 {
                let n = n2.sqrt();
                return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
            }
        }
    }

    #[test]
    fn canonicalization_flips_sign_and_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let q = random_unit_quat(&mut rng);
            let c = canonicalize_quaternion(q).unwrap();
            let first = c.iter().copied().find(|v| *v != 0.0).unwrap();
            assert!(first > 0.0);
            // idempotent, bit for bit
            let c2 = canonicalize_quaternion(c).unwrap();
            assert_eq!(c, c2);
            // rotation-preserving
            let ra = quaternion_to_matrix(&q);
            let rb = quaternion_to_matrix(&c);
            assert_relative_eq!(ra, rb, epsilon = 1e-9);
        }
    }

    #[test]
    fn canonicalization_normalizes_off_unit_input() {
        let q = canonicalize_quaternion([2.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(q, [1.0, 0.0, 0.0, 0.0]);
        let n2: f64 = canonicalize_quaternion([0.3, -0.4, 0.5, 0.6])
            .unwrap()
            .iter()
            .map(|c| c * c)
            .sum();
        assert_relative_eq!(n2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn covariance_identity_rotation_unit_scale() {
        let p = GaussianPrimitive::new(
            Vector3::zeros(),
            Vector3::zeros(),
            [1.0, 0.0, 0.0, 0.0],
            0.0,
            vec![[0.0; 3]],
        )
        .unwrap();
        assert_relative_eq!(p.covariance(), Matrix3::identity(), epsilon = 1e-12);
    }

    #[test]
    fn covariance_diagonal_scales() {
        // scales (2,1,1) with identity rotation -> diag(4,1,1)
        let p = GaussianPrimitive::new(
            Vector3::zeros(),
            Vector3::new(2.0f64.ln(), 0.0, 0.0),
            [1.0, 0.0, 0.0, 0.0],
            0.0,
            vec![[0.0; 3]],
        )
        .unwrap();
        assert_relative_eq!(
            p.covariance(),
            Matrix3::from_diagonal(&Vector3::new(4.0, 1.0, 1.0)),
            epsilon = 1e-12
        );
    }

    #[test]
    fn covariance_eigenvalues_are_squared_scales() {
        // eigen-decomposition oracle over random rotations and scales
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let q = random_unit_quat(&mut rng);
            let ls = Vector3::new(
                rng.gen_range(-2.0..1.5),
                rng.gen_range(-2.0..1.5),
                rng.gen_range(-2.0..1.5),
            );
            let p = GaussianPrimitive::new(Vector3::zeros(), ls, q, 0.0, vec![[0.0; 3]]).unwrap();
            let cov = p.covariance();
            // symmetric within 1e-9
            assert!((cov - cov.transpose()).abs().max() < 1e-9);
            let mut eig: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().copied().collect();
            let mut expect: Vec<f64> = p.scales().iter().map(|s| s * s).collect();
            eig.sort_by(f64::total_cmp);
            expect.sort_by(f64::total_cmp);
            for (a, b) in eig.iter().zip(&expect) {
                assert_relative_eq!(a, b, epsilon = 1e-6, max_relative = 1e-6);
            }
            assert!(eig.iter().all(|v| *v > -1e-12), "covariance must be PSD");
        }
    }

    #[test]
    fn bbox_contains_all_positions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let prims: Vec<_> = (0..64)
            .map(|_| {
                GaussianPrimitive::new(
                    Vector3::new(rng.gen(), rng.gen(), rng.gen()),
                    Vector3::zeros(),
                    [1.0, 0.0, 0.0, 0.0],
                    0.0,
                    vec![[0.0; 3]],
                )
                .unwrap()
            })
            .collect();
        let cloud = GaussianCloud::new(prims, 0).unwrap();
        for p in &cloud.primitives {
            assert!(cloud.bbox.contains(&p.position));
        }
    }
}
