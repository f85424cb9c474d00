//! Quality metrics: PSNR and SSIM between rendered images, and the
//! Bjontegaard delta rate between two rate-distortion curves.

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::render::ImageF;

/// One operating point of a rate-distortion sweep.
#[derive(Debug, Clone)]
pub struct RdPoint {
    pub size_bytes: u64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub encode_seconds: f64,
    pub decode_seconds: f64,
    pub label: String,
}

fn check_dims(a: &ImageF, b: &ImageF) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::Argument(format!(
            "image dimensions differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// PSNR over RGB in [0, 1]; reports 99 dB when the MSE is below 1e-10.
pub fn psnr(a: &ImageF, b: &ImageF) -> Result<f64> {
    check_dims(a, b)?;
    let mse: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data.len() as f64;
    Ok(if mse < 1e-10 {
        99.0
    } else {
        10.0 * (1.0 / mse).log10()
    })
}

fn luma(img: &ImageF) -> Vec<f64> {
    img.data
        .chunks_exact(3)
        .map(|px| 0.2126 * px[0] + 0.7152 * px[1] + 0.0722 * px[2])
        .collect()
}

fn gaussian_window() -> [f64; 11 * 11] {
    let sigma = 1.5f64;
    let mut w = [0.0; 121];
    let mut total = 0.0;
    for y in 0..11 {
        for x in 0..11 {
            let dx = x as f64 - 5.0;
            let dy = y as f64 - 5.0;
            let v = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            w[y * 11 + x] = v;
            total += v;
        }
    }
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Mean local SSIM on luma with an 11x11 Gaussian window (sigma 1.5),
/// C1 = 0.01^2, C2 = 0.03^2, averaged over fully interior windows.
pub fn ssim(a: &ImageF, b: &ImageF) -> Result<f64> {
    check_dims(a, b)?;
    if a.width < 11 || a.height < 11 {
        return Err(Error::Argument(
            "images must be at least 11x11 for windowed SSIM".into(),
        ));
    }
    const C1: f64 = 0.01 * 0.01;
    const C2: f64 = 0.03 * 0.03;
    let la = luma(a);
    let lb = luma(b);
    let win = gaussian_window();
    let (w, h) = (a.width as usize, a.height as usize);

    let mut total = 0.0f64;
    let mut windows = 0usize;
    for wy in 0..=(h - 11) {
        for wx in 0..=(w - 11) {
            let (mut mx, mut my, mut mxx, mut myy, mut mxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for ky in 0..11 {
                let row = (wy + ky) * w + wx;
                for kx in 0..11 {
                    let g = win[ky * 11 + kx];
                    let x = la[row + kx];
                    let y = lb[row + kx];
                    mx += g * x;
                    my += g * y;
                    mxx += g * x * x;
                    myy += g * y * y;
                    mxy += g * x * y;
                }
            }
            let vx = mxx - mx * mx;
            let vy = myy - my * my;
            let cov = mxy - mx * my;
            let s = ((2.0 * mx * my + C1) * (2.0 * cov + C2))
                / ((mx * mx + my * my + C1) * (vx + vy + C2));
            total += s;
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

/// Cubic fit of log10(rate) against quality, in a centered/scaled quality
/// variable for conditioning.
struct RateFit {
    coeffs: Vector4<f64>,
    mid: f64,
    span: f64,
    q_min: f64,
    q_max: f64,
}

impl RateFit {
    fn fit(points: &[RdPoint]) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::Argument(format!(
                "BD-rate needs at least 4 points per curve, got {}",
                points.len()
            )));
        }
        let mut sorted: Vec<(f64, f64)> = points
            .iter()
            .map(|p| {
                if p.size_bytes == 0 {
                    return Err(Error::Argument("rd point with zero size".into()));
                }
                Ok((p.psnr_db, (p.size_bytes as f64).log10()))
            })
            .collect::<Result<_>>()?;
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Argument("duplicate quality values in rd curve".into()));
        }
        if sorted.windows(2).any(|w| w[0].1 > w[1].1) {
            return Err(Error::Argument(
                "rd curve is not monotone: rate must not fall as quality rises".into(),
            ));
        }
        let q_min = sorted.first().unwrap().0;
        let q_max = sorted.last().unwrap().0;
        let mid = (q_min + q_max) / 2.0;
        let span = (q_max - q_min) / 2.0;

        // least-squares cubic via normal equations in t = (q - mid)/span
        let mut ata = Matrix4::zeros();
        let mut atb = Vector4::zeros();
        for &(q, r) in &sorted {
            let t = (q - mid) / span;
            let row = Vector4::new(1.0, t, t * t, t * t * t);
            ata += row * row.transpose();
            atb += row * r;
        }
        let coeffs = ata
            .lu()
            .solve(&atb)
            .ok_or_else(|| Error::Argument("degenerate rd curve fit".into()))?;
        Ok(Self {
            coeffs,
            mid,
            span,
            q_min,
            q_max,
        })
    }

    /// Antiderivative of the fitted polynomial, evaluated over `[lo, hi]`
    /// in quality units.
    fn integral(&self, lo: f64, hi: f64) -> f64 {
        let prim = |q: f64| {
            let t = (q - self.mid) / self.span;
            let c = &self.coeffs;
            self.span * (c[0] * t + c[1] * t * t / 2.0 + c[2] * t * t * t / 3.0 + c[3] * t * t * t * t / 4.0)
        };
        prim(hi) - prim(lo)
    }
}

/// Average rate difference of `curve_b` against `curve_a` over their
/// overlapping quality range, in percent. Negative means `curve_b` spends
/// fewer bits for the same quality.
pub fn bd_rate(curve_a: &[RdPoint], curve_b: &[RdPoint]) -> Result<f64> {
    let fa = RateFit::fit(curve_a)?;
    let fb = RateFit::fit(curve_b)?;
    let lo = fa.q_min.max(fb.q_min);
    let hi = fa.q_max.min(fb.q_max);
    if !(hi > lo) {
        return Err(Error::NoOverlap);
    }
    let avg_diff = (fb.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
    Ok((10f64.powf(avg_diff) - 1.0) * 100.0)
}

/// CSV of rd points (one row per point plus a header).
pub fn write_rd_csv(points: &[RdPoint], path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut text =
        String::from("label,size_bytes,psnr_db,ssim,encode_seconds,decode_seconds\n");
    for p in points {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.label, p.size_bytes, p.psnr_db, p.ssim, p.encode_seconds, p.decode_seconds
        ));
    }
    std::fs::write(path.as_ref(), text)?;
    Ok(())
}
