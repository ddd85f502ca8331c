//! The 8x box-average "latent" domain and its exact edit coupling.
//!
//! In-processing codec analogs edit the latent (the 8x-downsampled luminance)
//! and push the edit back to pixels. Downsample-of-upsample is not the
//! identity, so a naive push-back would distort latent-domain patterns. Both
//! operators are shift-invariant on the latent grid (periodic boundary), so
//! their composite is diagonal in the latent Fourier basis; edits are
//! pre-compensated by those eigenvalues, making
//! `downsample8(apply_latent_delta(x, d)) == downsample8(x) + d` exact.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::Mutex;

use crate::image::ImagePlane;
use crate::transforms::fft::{self, Spectrum2D};

/// 8x8 box average.
pub fn downsample8(plane: &ImagePlane) -> ImagePlane {
    assert!(plane.width % 8 == 0 && plane.height % 8 == 0);
    let (lw, lh) = (plane.width / 8, plane.height / 8);
    let mut out = ImagePlane::new(lw, lh);
    for ly in 0..lh {
        for lx in 0..lw {
            let mut acc = 0.0;
            for dy in 0..8 {
                for dx in 0..8 {
                    acc += plane.at(lx * 8 + dx, ly * 8 + dy);
                }
            }
            out.set(lx, ly, acc / 64.0);
        }
    }
    out
}

/// Bilinear 8x upsampling with periodic boundary; latent samples sit at pixel
/// centers 8p + 3.5.
pub fn upsample8(latent: &ImagePlane) -> ImagePlane {
    let (lw, lh) = (latent.width, latent.height);
    let (w, h) = (lw * 8, lh * 8);
    let mut out = ImagePlane::new(w, h);
    for y in 0..h {
        let fy = (y as f64 - 3.5) / 8.0;
        let y0 = fy.floor();
        let ty = fy - y0;
        let iy0 = y0.rem_euclid(lh as f64) as usize;
        let iy1 = (iy0 + 1) % lh;
        for x in 0..w {
            let fx = (x as f64 - 3.5) / 8.0;
            let x0 = fx.floor();
            let tx = fx - x0;
            let ix0 = x0.rem_euclid(lw as f64) as usize;
            let ix1 = (ix0 + 1) % lw;
            let v = latent.at(ix0, iy0) * (1.0 - tx) * (1.0 - ty)
                + latent.at(ix1, iy0) * tx * (1.0 - ty)
                + latent.at(ix0, iy1) * (1.0 - tx) * ty
                + latent.at(ix1, iy1) * tx * ty;
            out.set(x, y, v);
        }
    }
    out
}

type EigenCache = Mutex<HashMap<(usize, usize), std::sync::Arc<Vec<f64>>>>;
static EIGEN: Lazy<EigenCache> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Eigenvalues of downsample8(upsample8(.)) in centered latent Fourier layout.
fn coupling_eigenvalues(lw: usize, lh: usize) -> std::sync::Arc<Vec<f64>> {
    if let Some(e) = EIGEN.lock().unwrap().get(&(lw, lh)) {
        return e.clone();
    }
    let mut impulse = ImagePlane::new(lw, lh);
    impulse.set(0, 0, 1.0);
    let response = downsample8(&upsample8(&impulse));
    // Circulant operator: eigenvalues are the (unnormalized) DFT of the
    // impulse response, i.e. sqrt(M) times the unitary transform.
    let spec = fft::fft2(&response);
    let scale = ((lw * lh) as f64).sqrt();
    let eig: Vec<f64> = spec.data.iter().map(|c| c.re * scale).collect();
    let arc = std::sync::Arc::new(eig);
    EIGEN.lock().unwrap().insert((lw, lh), arc.clone());
    arc
}

/// Add a latent-domain delta to a full-resolution plane such that the
/// re-computed latent picks up exactly `delta`. Edits must stay away from
/// latent frequencies where the coupling response vanishes (|eig| stays well
/// above zero below normalized radius ~0.35, where all codecs operate).
pub fn apply_latent_delta(plane: &ImagePlane, delta: &ImagePlane) -> ImagePlane {
    assert_eq!(plane.width, delta.width * 8);
    assert_eq!(plane.height, delta.height * 8);
    let eig = coupling_eigenvalues(delta.width, delta.height);
    let spec = fft::fft2(delta);
    let mut pre = Spectrum2D::zeros(delta.width, delta.height);
    for (k, v) in spec.data.iter().enumerate() {
        pre.data[k] = if eig[k].abs() > 1e-9 { v / eig[k] } else { Complex64::default() };
    }
    let pre_plane = fft::ifft2(&pre);
    let up = upsample8(&pre_plane);
    let mut out = plane.clone();
    for (o, u) in out.data.iter_mut().zip(&up.data) {
        *o += u;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::WatermarkKey;
    use crate::transforms::rings::ring_mask;

    #[test]
    fn constant_plane_downsamples_to_constant() {
        let plane = ImagePlane::from_data(64, 64, vec![0.61; 64 * 64]);
        let lat = downsample8(&plane);
        assert_eq!((lat.width, lat.height), (8, 8));
        assert!(lat.data.iter().all(|&v| (v - 0.61).abs() < 1e-12));
    }

    #[test]
    fn checkerboard_downsamples_to_half() {
        let mut plane = ImagePlane::new(64, 64);
        for y in 0..64 {
            for x in 0..64 {
                plane.set(x, y, ((x + y) % 2) as f64);
            }
        }
        let lat = downsample8(&plane);
        assert!(lat.data.iter().all(|&v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn zero_delta_is_identity() {
        let mut s = WatermarkKey::from_u64(1, "latent-test").stream(0);
        let plane = ImagePlane::from_data(64, 64, s.uniforms(64 * 64));
        let delta = ImagePlane::new(8, 8);
        let out = apply_latent_delta(&plane, &delta);
        let lat_a = downsample8(&plane);
        let lat_b = downsample8(&out);
        let max =
            lat_a.data.iter().zip(&lat_b.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max < 1e-12);
    }

    /// The coupling is engineered to be exact: any in-band latent edit is
    /// recovered bit-for-bit (to fp accuracy) by re-downsampling.
    #[test]
    fn latent_delta_roundtrips_exactly() {
        let mut s = WatermarkKey::from_u64(2, "latent-test").stream(0);
        let plane = ImagePlane::from_data(128, 128, s.uniforms(128 * 128));
        // Delta confined to the codec band (normalized radius <= 0.31).
        let mask = ring_mask(16, 16, 0.05, 0.31).unwrap();
        let mut dspec = Spectrum2D::zeros(16, 16);
        for &(i, j) in &mask.reps {
            let v = Complex64::new(s.next_normal() * 0.01, s.next_normal() * 0.01);
            fft::set_mirrored(&mut dspec, i, j, v);
        }
        let delta = fft::ifft2(&dspec);
        let out = apply_latent_delta(&plane, &delta);
        let lat_orig = downsample8(&plane);
        let lat_new = downsample8(&out);
        let max = lat_new
            .data
            .iter()
            .enumerate()
            .map(|(k, v)| (v - (lat_orig.data[k] + delta.data[k])).abs())
            .fold(0.0, f64::max);
        assert!(max < 1e-9, "latent recovery error {max}");
    }

    #[test]
    fn coupling_eigenvalues_are_well_conditioned_in_band() {
        let eig = coupling_eigenvalues(24, 24);
        for i in 0..24 {
            for j in 0..24 {
                let r = fft::normalized_radius(i, j, 24, 24);
                if r < 0.32 {
                    assert!(eig[i * 24 + j].abs() > 0.3, "eig at r={r} is {}", eig[i * 24 + j]);
                }
            }
        }
    }
}
