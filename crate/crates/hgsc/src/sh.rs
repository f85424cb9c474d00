//! Real spherical harmonics evaluation for view-dependent color, degrees
//! 0..=3, with the basis ordering and constants of the standard 3DGS
//! implementation.

use nalgebra::Vector3;

const C0: f64 = 0.28209479177387814;
const C1: f64 = 0.4886025119029199;
const C2: [f64; 5] = [
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
];
const C3: [f64; 7] = [
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
];

/// Basis values for `dir` (must be unit length). Only the first
/// `(degree+1)^2` entries are filled.
pub fn sh_basis(dir: &Vector3<f64>, degree: u8) -> [f64; 16] {
    let mut b = [0.0f64; 16];
    b[0] = C0;
    if degree == 0 {
        return b;
    }
    let (x, y, z) = (dir.x, dir.y, dir.z);
    b[1] = -C1 * y;
    b[2] = C1 * z;
    b[3] = -C1 * x;
    if degree == 1 {
        return b;
    }
    let (xx, yy, zz) = (x * x, y * y, z * z);
    let (xy, yz, xz) = (x * y, y * z, x * z);
    b[4] = C2[0] * xy;
    b[5] = C2[1] * yz;
    b[6] = C2[2] * (2.0 * zz - xx - yy);
    b[7] = C2[3] * xz;
    b[8] = C2[4] * (xx - yy);
    if degree == 2 {
        return b;
    }
    b[9] = C3[0] * y * (3.0 * xx - yy);
    b[10] = C3[1] * xy * z;
    b[11] = C3[2] * y * (4.0 * zz - xx - yy);
    b[12] = C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    b[13] = C3[4] * x * (4.0 * zz - xx - yy);
    b[14] = C3[5] * z * (xx - yy);
    b[15] = C3[6] * x * (xx - yy);
    b
}

/// View-dependent RGB from SH triples: the band-weighted sum plus the 0.5
/// offset of the 3DGS convention, clamped to [0, 1].
pub fn evaluate_sh(sh: &[[f64; 3]], degree: u8, dir: &Vector3<f64>) -> [f64; 3] {
    let basis = sh_basis(dir, degree);
    let mut rgb = [0.5f64; 3];
    for (coeff, b) in sh.iter().zip(basis.iter()) {
        for c in 0..3 {
            rgb[c] += b * coeff[c];
        }
    }
    rgb.map(|v| v.clamp(0.0, 1.0))
}

/// DC coefficient that evaluates to `value` when all higher bands are zero.
pub fn dc_from_color(value: f64) -> f64 {
    (value - 0.5) / C0
}
