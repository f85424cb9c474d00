//! Importance-based pruning: per-Gaussian global significance (accumulated
//! blending weight over a camera rig), local significance (normalized,
//! clipped, exponentiated volume) and removal of the lowest-scoring tail.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::render::render;
use crate::scene::{CameraView, GaussianCloud};

#[derive(Debug, Clone)]
pub struct ImportanceReport {
    pub global_scores: Vec<f64>,
    /// In [0, 1].
    pub local_scores: Vec<f64>,
    /// Elementwise product of global and local scores.
    pub combined: Vec<f64>,
    pub beta: f64,
    /// 90th-percentile Gaussian volume used for normalization.
    pub v_max90: f64,
}

/// Accumulated blending weight of every Gaussian over all pixels of all
/// views: `sum over p of alpha_i * prod_j (1 - alpha_j)`.
pub fn global_significance(cloud: &GaussianCloud, cams: &[CameraView]) -> Result<Vec<f64>> {
    if cams.is_empty() {
        return Err(Error::Argument(
            "global significance needs at least one camera".into(),
        ));
    }
    // one weight vector per view, summed in view order
    let per_view: Vec<Vec<f64>> = cams
        .par_iter()
        .map(|cam| render(cloud, cam, true).weights.unwrap())
        .collect();
    let mut total = vec![0.0f64; cloud.len()];
    for weights in &per_view {
        for (t, w) in total.iter_mut().zip(weights) {
            *t += w;
        }
    }
    Ok(total)
}

/// Linear-interpolated quantile of the sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// `(V_norm)^beta` with `V_norm = clamp(V / V_max90, 0, 1)` and `V` the
/// product of the per-axis scales. Returns the scores and the percentile.
pub fn local_significance(cloud: &GaussianCloud, beta: f64) -> Result<(Vec<f64>, f64)> {
    if cloud.is_empty() {
        return Err(Error::Argument("cloud is empty".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::Argument(format!("beta must be positive, got {beta}")));
    }
    let volumes: Vec<f64> = cloud
        .primitives
        .iter()
        .map(|p| (p.log_scale.x + p.log_scale.y + p.log_scale.z).exp())
        .collect();
    let mut sorted = volumes.clone();
    sorted.sort_by(f64::total_cmp);
    let v_max90 = quantile(&sorted, 0.9);
    if !(v_max90 > 0.0) {
        return Err(Error::Scoring(
            "90th-percentile volume is zero; cannot normalize".into(),
        ));
    }
    let scores = volumes
        .iter()
        .map(|v| (v / v_max90).clamp(0.0, 1.0).powf(beta))
        .collect();
    Ok((scores, v_max90))
}

pub fn importance_report(
    cloud: &GaussianCloud,
    cams: &[CameraView],
    beta: f64,
) -> Result<ImportanceReport> {
    let global_scores = global_significance(cloud, cams)?;
    let (local_scores, v_max90) = local_significance(cloud, beta)?;
    let combined = global_scores
        .iter()
        .zip(&local_scores)
        .map(|(g, l)| g * l)
        .collect();
    Ok(ImportanceReport {
        global_scores,
        local_scores,
        combined,
        beta,
        v_max90,
    })
}

/// Opacity-only scoring (the LightGaussian-style baseline, exposed as an
/// ablation toggle): global score is the base opacity, local score is 1.
pub fn opacity_only_report(cloud: &GaussianCloud) -> ImportanceReport {
    let global_scores: Vec<f64> = cloud.primitives.iter().map(|p| p.opacity()).collect();
    let n = cloud.len();
    ImportanceReport {
        combined: global_scores.clone(),
        global_scores,
        local_scores: vec![1.0; n],
        beta: 0.0,
        v_max90: f64::NAN,
    }
}

/// Remove exactly `floor(tau/100 * n)` primitives with the smallest
/// combined score; equal scores break toward pruning the lower index.
/// Survivor order is preserved.
pub fn prune(cloud: &GaussianCloud, report: &ImportanceReport, tau_percent: f64) -> Result<GaussianCloud> {
    if !(0.0..100.0).contains(&tau_percent) {
        return Err(Error::Argument(format!(
            "tau must be in [0, 100), got {tau_percent}"
        )));
    }
    let n = cloud.len();
    if report.combined.len() != n {
        return Err(Error::Argument(format!(
            "importance report covers {} primitives, cloud has {n}",
            report.combined.len()
        )));
    }
    let remove = ((tau_percent * n as f64) / 100.0).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| report.combined[a].total_cmp(&report.combined[b]).then(a.cmp(&b)));
    let mut keep = vec![true; n];
    for &idx in order.iter().take(remove) {
        keep[idx] = false;
    }
    let survivors = cloud
        .primitives
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(p, _)| p.clone())
        .collect();
    GaussianCloud::new(survivors, cloud.sh_degree)
}

/// Cumulative importance curve sampled at 1% steps: point `k` is the
/// fraction of total importance carried by the `round(k/100 * n)` smallest
/// scores. 101 points ending at (1, 1).
pub fn importance_cdf(scores: &[f64]) -> Result<Vec<(f64, f64)>> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Scoring("non-finite importance score".into()));
    }
    let total: f64 = scores.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Scoring(
            "total importance is zero; curve is degenerate".into(),
        ));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let prefix: Vec<f64> = sorted
        .iter()
        .scan(0.0, |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    let n = scores.len();
    Ok((0..=100)
        .map(|k| {
            let x = k as f64 / 100.0;
            let count = (x * n as f64).round() as usize;
            let y = if count == 0 { 0.0 } else { prefix[count - 1] / total };
            (x, y)
        })
        .collect())
}

/// CSV export of an importance CDF (columns: gaussian_fraction,
/// importance_fraction).
pub fn write_cdf_csv(curve: &[(f64, f64)], path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut text = String::from("gaussian_fraction,importance_fraction\n");
    for (x, y) in curve {
        text.push_str(&format!("{x},{y}\n"));
    }
    std::fs::write(path.as_ref(), text)?;
    Ok(())
}
