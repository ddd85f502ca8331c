//! Deterministic 2D spectral transforms and masks shared by codecs and the
//! classifier. All transforms are linear, pure, and unitary/orthonormal so
//! embedding strengths are comparable across domains.

pub mod dct;
pub mod fft;
pub mod latent;
pub mod rings;

use thiserror::Error;

use crate::image::{ImagePlane, RgbImage};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("ring mask requires 0 <= inner < outer, got [{0}, {1})")]
    BadRadii(f64, f64),
    #[error("ring mask [{0}, {1}) selects no coefficients")]
    EmptyMask(f64, f64),
    #[error("dimensions must be multiples of 8, got {0}x{1}")]
    NotBlockAligned(usize, usize),
}

/// Rec.601 luminance.
pub fn luminance(img: &RgbImage) -> ImagePlane {
    let mut out = ImagePlane::new(img.width, img.height);
    for idx in 0..img.width * img.height {
        let r = img.data[idx * 3];
        let g = img.data[idx * 3 + 1];
        let b = img.data[idx * 3 + 2];
        out.data[idx] = 0.299 * r + 0.587 * g + 0.114 * b;
    }
    out
}

/// Reinsert a modified luminance, preserving chroma differences exactly:
/// each channel moves by (new_y - old_y). Does not clamp; callers clamp at
/// the end of an embed chain.
pub fn replace_luminance(img: &RgbImage, new_y: &ImagePlane) -> RgbImage {
    assert_eq!((img.width, img.height), (new_y.width, new_y.height));
    let old_y = luminance(img);
    let mut out = img.clone();
    for idx in 0..img.width * img.height {
        let d = new_y.data[idx] - old_y.data[idx];
        out.data[idx * 3] += d;
        out.data[idx * 3 + 1] += d;
        out.data[idx * 3 + 2] += d;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::synth_image;

    #[test]
    fn gray_luminance_is_identity() {
        let mut img = RgbImage::new(64, 64);
        for idx in 0..64 * 64 {
            for c in 0..3 {
                img.data[idx * 3 + c] = 0.37;
            }
        }
        let y = luminance(&img);
        assert!(y.data.iter().all(|&v| (v - 0.37).abs() < 1e-12));
    }

    #[test]
    fn pure_red_luminance() {
        let mut img = RgbImage::new(64, 64);
        for idx in 0..64 * 64 {
            img.data[idx * 3] = 1.0;
        }
        let y = luminance(&img);
        assert!(y.data.iter().all(|&v| (v - 0.299).abs() < 1e-12));
    }

    #[test]
    fn replace_then_extract_roundtrips() {
        let img = synth_image(4, 64, 64).unwrap();
        let mut target = ImagePlane::new(64, 64);
        for (i, v) in target.data.iter_mut().enumerate() {
            *v = 0.3 + 0.4 * ((i % 64) as f64 / 64.0);
        }
        let replaced = replace_luminance(&img, &target);
        let back = luminance(&replaced);
        let max =
            back.data.iter().zip(&target.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max < 1e-9, "max {max}");
    }
}
