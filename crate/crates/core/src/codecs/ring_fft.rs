//! Zero-bit ring codec in the latent Fourier domain (in-processing analog).
//!
//! Embedding overwrites the magnitudes of the 8x-downsampled luminance
//! spectrum across 8 concentric rings with key-derived per-ring levels,
//! keeping phases. Detection recomputes the expected pattern and scores the
//! scale-normalized whitened L1 distance; lower means watermarked. The
//! per-ring levels ride on a power-law scale profile fitted outside the
//! rings, so embed and detect agree without the original image and the
//! pattern adapts to image contrast.

use crate::codecs::profile::{fit_scale_profile, ScaleProfile};
use crate::codecs::{DetectionOutcome, StatKind, RING_FFT};
use crate::image::RgbImage;
use crate::key::{lanes, WatermarkKey};
use crate::transforms::fft::{self, Spectrum2D};
use crate::transforms::latent::{apply_latent_delta, downsample8};
use crate::transforms::rings::ring_mask;
use crate::transforms::{luminance, replace_luminance};
use num_complex::Complex64;

/// Ring band in normalized latent radii, tiled by N_RINGS contiguous rings.
pub const RING_LO: f64 = 0.05;
pub const RING_HI: f64 = 0.30;
pub const N_RINGS: usize = 8;
/// Scale-profile fit annuli, outside the band, above the chi2-ring codec's
/// frame-domain footprint (ends at latent radius 0.32) and below the pix-add
/// band (starts at latent radius 0.48): embedding by any codec leaves them
/// untouched, so the fitted pattern matches between embed and detect.
const FIT_LO: f64 = 0.34;
const FIT_HI: f64 = 0.47;
const FIT_ANNULI: usize = 4;
/// Key-derived per-ring level factors, relative to the natural Rayleigh mean.
const KAPPA_MIN: f64 = 0.8;
const KAPPA_MAX: f64 = 1.4;
/// E|z| for complex z with unit per-part sigma.
const RAYLEIGH_MEAN: f64 = 1.253_314_137_315_500_3;

struct RingPattern {
    /// (rep index, radius, expected magnitude, whitening sigma)
    entries: Vec<((usize, usize), f64, f64, f64)>,
}

fn ring_index(r: f64) -> usize {
    (((r - RING_LO) / (RING_HI - RING_LO) * N_RINGS as f64) as usize).min(N_RINGS - 1)
}

fn pattern(
    spec: &Spectrum2D,
    key: &WatermarkKey,
    strength: f64,
) -> (RingPattern, ScaleProfile) {
    let profile = fit_scale_profile(spec, FIT_LO, FIT_HI, FIT_ANNULI);
    let kappas: Vec<f64> = key
        .stream(lanes::PATTERN)
        .uniforms(N_RINGS)
        .into_iter()
        .map(|u| KAPPA_MIN + u * (KAPPA_MAX - KAPPA_MIN))
        .collect();
    let mask = ring_mask(spec.width, spec.height, RING_LO, RING_HI)
        .expect("latent ring band is non-empty for supported image sizes");
    let entries = mask
        .reps
        .iter()
        .map(|&(i, j)| {
            let r = fft::normalized_radius(i, j, spec.height, spec.width);
            let sigma = profile.sigma(r);
            let level = strength * kappas[ring_index(r)] * RAYLEIGH_MEAN * sigma;
            ((i, j), r, level, sigma)
        })
        .collect();
    (RingPattern { entries }, profile)
}

pub fn embed(img: &RgbImage, key: &WatermarkKey, strength: f64) -> RgbImage {
    let lum = luminance(img);
    let lat = downsample8(&lum);
    let mut spec = fft::fft2(&lat);
    let (pat, _) = pattern(&spec, key, strength);
    let alpha = strength.min(1.0);
    for &((i, j), _, level, _) in &pat.entries {
        let y = spec.at(i, j);
        let mag = y.norm();
        let new_mag = (1.0 - alpha) * mag + alpha * level;
        let new = if mag > 0.0 {
            y * (new_mag / mag)
        } else {
            Complex64::new(new_mag, 0.0)
        };
        fft::set_mirrored(&mut spec, i, j, new);
    }
    let new_lat = fft::ifft2(&spec);
    let mut delta = new_lat;
    for (d, o) in delta.data.iter_mut().zip(&lat.data) {
        *d -= o;
    }
    let new_lum = apply_latent_delta(&lum, &delta);
    replace_luminance(img, &new_lum)
}

pub fn detect(img: &RgbImage, key: &WatermarkKey) -> DetectionOutcome {
    let desc = crate::codecs::descriptor(RING_FFT).expect("registered");
    let lum = luminance(img);
    let lat = downsample8(&lum);
    let spec = fft::fft2(&lat);
    let (pat, _) = pattern(&spec, key, desc.default_strength);

    // robust scale ratio between observed magnitudes and the expected pattern
    let mut ratios: Vec<f64> = pat
        .entries
        .iter()
        .map(|&((i, j), _, level, _)| spec.at(i, j).norm() / level)
        .collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let scale = ratios[ratios.len() / 2].max(1e-9);

    let mut acc = 0.0;
    for &((i, j), _, level, sigma) in &pat.entries {
        let mag = spec.at(i, j).norm();
        acc += (mag - scale * level).abs() / (scale * sigma);
    }
    let score = acc / pat.entries.len() as f64;
    DetectionOutcome {
        codec_id: RING_FFT.to_string(),
        score,
        statistic: StatKind::L1Distance,
        bit_accuracy: None,
        decoded_payload: None,
        decode_ok: false,
    }
}

/// Frame-domain normalized radii covered by the latent ring band; the
/// chi2-ring codec's mask is required to contain this (its attack on the
/// in-processing analogs works by overwriting exactly these frequencies).
pub fn frame_band() -> (f64, f64) {
    (RING_LO / 8.0, RING_HI / 8.0)
}
