//! Per-image quality metrics and the Normalized Quality Degradation score.
//!
//! Six metrics: MSE, PSNR (capped at 100 dB), SSIM (11x11 Gaussian window,
//! sigma 1.5, K1=0.01, K2=0.03, on luminance), mean CIE76 delta-E,
//! high-frequency artifact energy (added above 0.35 normalized frequency,
//! relative to the reference's total spectral energy), and a banding score
//! (growth in empty luminance histogram bins). NQD maps each metric's 10th
//! and 90th percentile (over all attacked images in a run) to 0.1 and 0.9,
//! linearly in between, clamps outside, and averages across metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::RgbImage;
use crate::stats::quantile_linear;
use crate::transforms::{fft, luminance};

#[derive(Debug, Error)]
pub enum QualityError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("NQD fit needs at least 20 vectors, got {0}")]
    TooFewVectors(usize),
}

pub const PSNR_CAP_DB: f64 = 100.0;
pub const METRIC_NAMES: [&str; 6] =
    ["mse", "psnr_db", "ssim", "mean_delta_e", "highfreq_artifact", "banding"];

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QualityVector {
    pub mse: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub mean_delta_e: f64,
    pub highfreq_artifact: f64,
    pub banding: f64,
}

impl QualityVector {
    pub fn as_array(&self) -> [f64; 6] {
        [self.mse, self.psnr_db, self.ssim, self.mean_delta_e, self.highfreq_artifact, self.banding]
    }
}

pub fn quality_vector(
    reference: &RgbImage,
    candidate: &RgbImage,
) -> Result<QualityVector, QualityError> {
    if (reference.width, reference.height) != (candidate.width, candidate.height) {
        return Err(QualityError::DimensionMismatch(
            reference.width,
            reference.height,
            candidate.width,
            candidate.height,
        ));
    }
    let mse = reference
        .data
        .iter()
        .zip(&candidate.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.data.len() as f64;
    let psnr_db = if mse <= 0.0 { PSNR_CAP_DB } else { (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB) };

    let ref_y = luminance(reference);
    let cand_y = luminance(candidate);
    let ssim = ssim_luminance(&ref_y.data, &cand_y.data, reference.width, reference.height);
    let mean_delta_e = mean_cie76(reference, candidate);
    let highfreq_artifact = highfreq_added(&ref_y, &cand_y);
    let banding = banding_score(&ref_y.data, &cand_y.data);
    Ok(QualityVector { mse, psnr_db, ssim, mean_delta_e, highfreq_artifact, banding })
}

fn ssim_luminance(ref_y: &[f64], cand_y: &[f64], width: usize, height: usize) -> f64 {
    const WIN: usize = 11;
    const SIGMA: f64 = 1.5;
    const K1: f64 = 0.01;
    const K2: f64 = 0.03;
    let c1 = (K1 * 1.0f64).powi(2);
    let c2 = (K2 * 1.0f64).powi(2);

    let mut kernel = [0.0f64; WIN];
    for (i, k) in kernel.iter_mut().enumerate() {
        let d = i as f64 - 5.0;
        *k = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let norm: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= norm;
    }

    // separable convolution over the valid region
    let conv = |data: &[f64]| -> Vec<f64> {
        let vw = width - WIN + 1;
        let mut rows = vec![0.0; vw * height];
        for y in 0..height {
            for x in 0..vw {
                let mut acc = 0.0;
                for (i, k) in kernel.iter().enumerate() {
                    acc += k * data[y * width + x + i];
                }
                rows[y * vw + x] = acc;
            }
        }
        let vh = height - WIN + 1;
        let mut out = vec![0.0; vw * vh];
        for y in 0..vh {
            for x in 0..vw {
                let mut acc = 0.0;
                for (i, k) in kernel.iter().enumerate() {
                    acc += k * rows[(y + i) * vw + x];
                }
                out[y * vw + x] = acc;
            }
        }
        out
    };

    let sq = |d: &[f64]| d.iter().map(|v| v * v).collect::<Vec<_>>();
    let prod: Vec<f64> = ref_y.iter().zip(cand_y).map(|(a, b)| a * b).collect();

    let mu_x = conv(ref_y);
    let mu_y = conv(cand_y);
    let xx = conv(&sq(ref_y));
    let yy = conv(&sq(cand_y));
    let xy = conv(&prod);

    let mut acc = 0.0;
    for i in 0..mu_x.len() {
        let var_x = (xx[i] - mu_x[i] * mu_x[i]).max(0.0);
        let var_y = (yy[i] - mu_y[i] * mu_y[i]).max(0.0);
        let cov = xy[i] - mu_x[i] * mu_y[i];
        let s = ((2.0 * mu_x[i] * mu_y[i] + c1) * (2.0 * cov + c2))
            / ((mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) * (var_x + var_y + c2));
        acc += s;
    }
    acc / mu_x.len() as f64
}

fn srgb_to_lab(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    fn linearize(c: f64) -> f64 {
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    }
    let (rl, gl, bl) = (linearize(r), linearize(g), linearize(b));
    // sRGB D65
    let x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
    let y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    let z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
    let (xn, yn, zn) = (0.95047, 1.0, 1.08883);
    fn f(t: f64) -> f64 {
        const D: f64 = 6.0 / 29.0;
        if t > D * D * D {
            t.cbrt()
        } else {
            t / (3.0 * D * D) + 4.0 / 29.0
        }
    }
    let (fx, fy, fz) = (f(x / xn), f(y / yn), f(z / zn));
    (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

fn mean_cie76(a: &RgbImage, b: &RgbImage) -> f64 {
    let n = a.width * a.height;
    let mut acc = 0.0;
    for i in 0..n {
        let la = srgb_to_lab(a.data[i * 3], a.data[i * 3 + 1], a.data[i * 3 + 2]);
        let lb = srgb_to_lab(b.data[i * 3], b.data[i * 3 + 1], b.data[i * 3 + 2]);
        acc +=
            ((la.0 - lb.0).powi(2) + (la.1 - lb.1).powi(2) + (la.2 - lb.2).powi(2)).sqrt();
    }
    acc / n as f64
}

/// Energy added above 0.35 normalized frequency, as a fraction of the
/// reference's total spectral energy. Clamped at zero: removals don't count.
fn highfreq_added(ref_y: &crate::image::ImagePlane, cand_y: &crate::image::ImagePlane) -> f64 {
    let spec_r = fft::fft2(ref_y);
    let spec_c = fft::fft2(cand_y);
    let (w, h) = (spec_r.width, spec_r.height);
    let mut hf_r = 0.0;
    let mut hf_c = 0.0;
    let mut total_r = 0.0;
    for i in 0..h {
        for j in 0..w {
            let pr = spec_r.data[i * w + j].norm_sqr();
            total_r += pr;
            if fft::normalized_radius(i, j, h, w) > 0.35 {
                hf_r += pr;
                hf_c += spec_c.data[i * w + j].norm_sqr();
            }
        }
    }
    ((hf_c - hf_r) / (total_r + 1e-12)).max(0.0)
}

/// Growth in the fraction of empty 256-level luminance histogram bins.
fn banding_score(ref_y: &[f64], cand_y: &[f64]) -> f64 {
    fn empty_fraction(data: &[f64]) -> f64 {
        let mut bins = [0u32; 256];
        for &v in data {
            let idx = ((v.clamp(0.0, 1.0)) * 255.0).round() as usize;
            bins[idx] += 1;
        }
        bins.iter().filter(|&&c| c == 0).count() as f64 / 256.0
    }
    (empty_fraction(cand_y) - empty_fraction(ref_y)).max(0.0)
}

/// Per-metric percentile anchors; `negate` marks metrics where higher raw
/// values mean *less* degradation (PSNR, SSIM).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricAnchor {
    pub name: String,
    pub negate: bool,
    pub p10: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NqdModel {
    pub anchors: Vec<MetricAnchor>,
    pub fitted_on: usize,
}

fn orient(value: f64, negate: bool) -> f64 {
    if negate {
        -value
    } else {
        value
    }
}

pub fn fit_nqd(vectors: &[QualityVector]) -> Result<NqdModel, QualityError> {
    if vectors.len() < 20 {
        return Err(QualityError::TooFewVectors(vectors.len()));
    }
    let negate = [false, true, true, false, false, false];
    let mut anchors = Vec::with_capacity(6);
    for (m, name) in METRIC_NAMES.iter().enumerate() {
        let mut values: Vec<f64> =
            vectors.iter().map(|v| orient(v.as_array()[m], negate[m])).collect();
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite metrics"));
        anchors.push(MetricAnchor {
            name: name.to_string(),
            negate: negate[m],
            p10: quantile_linear(&values, 0.1),
            p90: quantile_linear(&values, 0.9),
        });
    }
    Ok(NqdModel { anchors, fitted_on: vectors.len() })
}

/// Mean of per-metric normalized degradations; p10 -> 0.1, p90 -> 0.9,
/// linear in between, clamped to [0, 1]. Degenerate anchors (p10 == p90)
/// contribute a constant 0.5.
pub fn nqd_score(vector: &QualityVector, model: &NqdModel) -> f64 {
    let raw = vector.as_array();
    let mut acc = 0.0;
    for (m, anchor) in model.anchors.iter().enumerate() {
        let v = orient(raw[m], anchor.negate);
        let span = anchor.p90 - anchor.p10;
        let score = if span <= 0.0 {
            0.5
        } else {
            (0.1 + 0.8 * (v - anchor.p10) / span).clamp(0.0, 1.0)
        };
        acc += score;
    }
    acc / model.anchors.len() as f64
}
