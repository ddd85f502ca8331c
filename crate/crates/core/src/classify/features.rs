//! Hand-crafted spectral features for method identification.
//!
//! All features are computable from the image alone: no key material, only
//! the public slot geometry of each codec. Groups (61 dims total):
//!
//! | group                                   | dims |
//! |-----------------------------------------|------|
//! | radial log-power spectrum               | 32   |
//! | latent ring log energies                | 8    |
//! | latent ring magnitude dispersion        | 8    |
//! | block-DCT band mean abs + kurtosis      | 6    |
//! | high-pass residual moments              | 3    |
//! | QIM lattice concentration per codec     | 4    |
//!
//! The dispersion group is the ring codec's tell (overwritten rings have
//! constant magnitudes, dispersion 1.0 vs ~0.886 for natural Rayleigh
//! magnitudes); the concentration group is each QIM codec's tell.

use crate::codecs;
use crate::image::RgbImage;
use crate::transforms::dct::block_dct;
use crate::transforms::fft;
use crate::transforms::latent::downsample8;
use crate::transforms::luminance;

pub const FEATURE_DIM: usize = 61;
const LOG_FLOOR: f64 = 1e-30;

pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_DIM);
    for k in 0..32 {
        names.push(format!("radial_log_power_{k:02}"));
    }
    for k in 0..8 {
        names.push(format!("latent_ring_log_energy_{k}"));
    }
    for k in 0..8 {
        names.push(format!("latent_ring_dispersion_{k}"));
    }
    for band in ["zz01_05", "zz06_14", "zz15_30"] {
        names.push(format!("blockdct_{band}_mean_abs"));
        names.push(format!("blockdct_{band}_kurtosis"));
    }
    names.push("residual_variance".into());
    names.push("residual_skewness".into());
    names.push("residual_kurtosis".into());
    for codec in [codecs::LATENT_SIG, codecs::SS_DCT, codecs::PIX_ADD, codecs::PIX_WIDE] {
        names.push(format!("lattice_concentration_{codec}"));
    }
    names
}

pub fn extract_features(img: &RgbImage) -> Vec<f64> {
    let mut out = Vec::with_capacity(FEATURE_DIM);
    let lum = luminance(img);
    let spec = fft::fft2(&lum);
    let (w, h) = (spec.width, spec.height);

    // 32 radial log-power bins over r in (0, 0.5]
    let mut power = [0.0f64; 32];
    let mut count = [0usize; 32];
    for i in 0..h {
        for j in 0..w {
            let r = fft::normalized_radius(i, j, h, w);
            if r <= 0.0 || r > 0.5 {
                continue;
            }
            let bin = ((r / 0.5 * 32.0) as usize).min(31);
            power[bin] += spec.data[i * w + j].norm_sqr();
            count[bin] += 1;
        }
    }
    for k in 0..32 {
        let mean = if count[k] > 0 { power[k] / count[k] as f64 } else { 0.0 };
        out.push((mean + LOG_FLOOR).ln());
    }

    // latent ring energies and magnitude dispersion over [0.05, 0.30)
    let lat = downsample8(&lum);
    let lat_spec = fft::fft2(&lat);
    let (lw, lh) = (lat_spec.width, lat_spec.height);
    let mut ring_sq = [0.0f64; 8];
    let mut ring_abs = [0.0f64; 8];
    let mut ring_n = [0usize; 8];
    for i in 0..lh {
        for j in 0..lw {
            if !fft::is_representative(i, j, lh, lw) {
                continue;
            }
            let r = fft::normalized_radius(i, j, lh, lw);
            if !(0.05..0.30).contains(&r) {
                continue;
            }
            let ring = (((r - 0.05) / 0.25 * 8.0) as usize).min(7);
            let mag = lat_spec.data[i * lw + j].norm();
            ring_sq[ring] += mag * mag;
            ring_abs[ring] += mag;
            ring_n[ring] += 1;
        }
    }
    for k in 0..8 {
        let mean_sq = if ring_n[k] > 0 { ring_sq[k] / ring_n[k] as f64 } else { 0.0 };
        out.push((mean_sq + LOG_FLOOR).ln());
    }
    for k in 0..8 {
        if ring_n[k] == 0 {
            out.push(0.0);
            continue;
        }
        let mean_abs = ring_abs[k] / ring_n[k] as f64;
        let rms = (ring_sq[k] / ring_n[k] as f64).sqrt();
        out.push(if rms > 0.0 { mean_abs / rms } else { 0.0 });
    }

    // block-DCT band statistics
    let bdct = block_dct(&lum).expect("corpus images are 8-aligned");
    for (zz_lo, zz_hi) in [(1usize, 5usize), (6, 14), (15, 30)] {
        let mut values = Vec::with_capacity(bdct.n_blocks() * (zz_hi - zz_lo + 1));
        for block in 0..bdct.n_blocks() {
            for zz in zz_lo..=zz_hi {
                values.push(bdct.at(block, zz));
            }
        }
        let mean_abs = values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64;
        out.push(mean_abs);
        out.push(excess_kurtosis(&values));
    }

    // high-pass residual moments (4-neighbor Laplacian, valid region)
    let mut residual = Vec::with_capacity((lum.width - 2) * (lum.height - 2));
    for y in 1..lum.height - 1 {
        for x in 1..lum.width - 1 {
            let v = lum.at(x, y - 1) + lum.at(x, y + 1) + lum.at(x - 1, y) + lum.at(x + 1, y)
                - 4.0 * lum.at(x, y);
            residual.push(v);
        }
    }
    let mean = residual.iter().sum::<f64>() / residual.len() as f64;
    let var =
        residual.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / residual.len() as f64;
    let std = var.sqrt().max(1e-12);
    let skew = residual.iter().map(|v| ((v - mean) / std).powi(3)).sum::<f64>()
        / residual.len() as f64;
    out.push(var);
    out.push(skew);
    out.push(excess_kurtosis(&residual));

    // QIM lattice concentration per multi-bit codec
    out.push(codecs::latent_sig::lattice_feature(img));
    out.push(codecs::ss_dct::lattice_feature(img));
    out.push(codecs::pix::lattice_feature(codecs::pix::Variant::Add, img));
    out.push(codecs::pix::lattice_feature(codecs::pix::Variant::Wide, img));

    debug_assert_eq!(out.len(), FEATURE_DIM);
    out
}

fn excess_kurtosis(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 1e-24 {
        return 0.0;
    }
    values.iter().map(|v| ((v - mean).powi(2) / var).powi(2)).sum::<f64>() / n - 3.0
}
