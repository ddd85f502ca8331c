//! Image carriers and the synthetic corpus generator.
//!
//! Samples are reals in [0, 1], quantized only at file IO so that transform
//! coefficients are never corrupted by 8-bit intermediates. Codec embed paths
//! may transiently leave [0, 1]; every embed clamps its final output.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::key::{lanes, WatermarkKey};
use crate::transforms::fft::{self, Spectrum2D};

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("dimensions must be positive multiples of 8, got {0}x{1}")]
    BadDimensions(usize, usize),
    #[error("synthetic images must be at least 64x64, got {0}x{1}")]
    TooSmall(usize, usize),
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("io error for {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("decode error for {path}: {reason}")]
    Decode { path: String, reason: String },
}

/// Single-channel plane of real samples (luminance or transform scratch).
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height);
        Self { width, height, data }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// RGB image, row-major, channel-interleaved, samples in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height * 3] }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * 3 + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.data[(y * self.width + x) * 3 + c] = v;
    }

    pub fn clamp_in_place(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// 8-bit quantization, the disk representation.
    pub fn quantize(&self) -> Rgb8Image {
        let data = self
            .data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        Rgb8Image { width: self.width, height: self.height, data }
    }
}

/// Quantized 8-bit image as stored in PNG files and corpus memory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rgb8Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Rgb8Image {
    pub fn to_real(&self) -> RgbImage {
        let data = self.data.iter().map(|&b| b as f64 / 255.0).collect();
        RgbImage { width: self.width, height: self.height, data }
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImageError> {
        let buf: image::RgbImage = image::ImageBuffer::from_raw(
            self.width as u32,
            self.height as u32,
            self.data.clone(),
        )
        .expect("raw buffer matches dimensions");
        buf.save_with_format(path, image::ImageFormat::Png).map_err(|e| ImageError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e.to_string()),
        })
    }

    pub fn load_png(path: &Path) -> Result<Self, ImageError> {
        let img = image::open(path)
            .map_err(|e| ImageError::Decode {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?
            .to_rgb8();
        Ok(Self {
            width: img.width() as usize,
            height: img.height() as usize,
            data: img.into_raw(),
        })
    }

    /// Pad by edge replication so both dimensions are multiples of 8.
    pub fn pad_to_multiple_of_8(&self) -> Rgb8Image {
        let w = self.width.div_ceil(8) * 8;
        let h = self.height.div_ceil(8) * 8;
        if w == self.width && h == self.height {
            return self.clone();
        }
        let mut out = vec![0u8; w * h * 3];
        for y in 0..h {
            let sy = y.min(self.height - 1);
            for x in 0..w {
                let sx = x.min(self.width - 1);
                for c in 0..3 {
                    out[(y * w + x) * 3 + c] = self.data[(sy * self.width + sx) * 3 + c];
                }
            }
        }
        Rgb8Image { width: w, height: h, data: out }
    }
}

/// Spectrum shape of the synthetic corpus.
///
/// Luminance = a handful of very-low-frequency components (image structure)
/// plus a power-law grain floor sigma(r) = C * r^-GAMMA across all other
/// frequencies, complex-Gaussian per coefficient. The floor is an exact power
/// law so detector-side scale profiles fit it without bias; the structure
/// component lives strictly below normalized radius `STRUCTURE_MAX_R` and
/// never contaminates codec bands.
pub mod synth_params {
    /// Power-law exponent of the grain floor amplitude.
    pub const GAMMA: f64 = 0.25;
    /// Pixel-domain std of the grain floor.
    pub const FLOOR_STD: f64 = 0.0075;
    /// Pixel-domain std of the structure component (before per-seed scaling).
    pub const STRUCTURE_STD: f64 = 0.09;
    /// Structure occupies centered frequencies with u^2 + v^2 <= 2 (cycles).
    pub const STRUCTURE_MAX_CYCLES2: i64 = 2;
    /// Structure amplitude cap; keeps pixels off the [0, 1] clamp so clipping
    /// harmonics never contaminate the grain floor.
    pub const STRUCTURE_MAX_ABS: f64 = 0.40;
}

/// Deterministic natural-statistics test image.
pub fn synth_image(seed: u64, width: usize, height: usize) -> Result<RgbImage, ImageError> {
    if width % 8 != 0 || height % 8 != 0 {
        return Err(ImageError::BadDimensions(width, height));
    }
    if width < 64 || height < 64 {
        return Err(ImageError::TooSmall(width, height));
    }
    let key = WatermarkKey::from_u64(seed, "synth");
    let mut luma_rng = key.stream(lanes::SYNTH_LUMA);
    let mut chroma_rng = key.stream(lanes::SYNTH_CHROMA);

    // Per-seed scalars: structure contrast and channel means.
    let contrast = 0.7 + 0.4 * chroma_rng.next_uniform();
    let mean_shift: Vec<f64> = (0..3).map(|_| 0.08 * (chroma_rng.next_uniform() - 0.5)).collect();

    let n_struct = structure_reps(width, height).len();
    // Normalize so the structure component has STRUCTURE_STD pixels std
    // regardless of how many representative cells exist.
    let sigma_struct = synth_params::STRUCTURE_STD * ((width * height) as f64).sqrt()
        / (2.0 * n_struct as f64).sqrt();
    let floor_c = floor_coefficient(width, height);

    // Structure and grain are built separately: the structure field is
    // amplitude-capped per image so the final clamp (a nonlinearity whose
    // harmonics would land in codec bands) never engages in practice.
    let mut struct_spec = Spectrum2D::zeros(width, height);
    for &(i, j) in &structure_reps(width, height) {
        let self_conj = fft::is_self_conjugate(i, j, height, width);
        let s = contrast * sigma_struct;
        let re = s * luma_rng.next_normal();
        let im = if self_conj { 0.0 } else { s * luma_rng.next_normal() };
        fft::set_mirrored(&mut struct_spec, i, j, Complex64::new(re, im));
    }
    let mut structure = fft::ifft2(&struct_spec);
    let peak = structure.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > synth_params::STRUCTURE_MAX_ABS {
        let scale = synth_params::STRUCTURE_MAX_ABS / peak;
        for v in structure.data.iter_mut() {
            *v *= scale;
        }
    }

    let mut spec = Spectrum2D::zeros(width, height);
    let (cu, cv) = (height / 2, width / 2);
    for i in 0..height {
        for j in 0..width {
            if !fft::is_representative(i, j, height, width) {
                continue;
            }
            if i == cu && j == cv {
                continue; // DC handled by the mean
            }
            let r = fft::normalized_radius(i, j, height, width);
            let u = i as i64 - cu as i64;
            let v = j as i64 - cv as i64;
            if u * u + v * v <= synth_params::STRUCTURE_MAX_CYCLES2 {
                continue; // structure cells handled above
            }
            let sigma = floor_c * r.powf(-synth_params::GAMMA);
            let self_conj = fft::is_self_conjugate(i, j, height, width);
            let re = sigma * luma_rng.next_normal();
            let im = if self_conj { 0.0 } else { sigma * luma_rng.next_normal() };
            fft::set_mirrored(&mut spec, i, j, Complex64::new(re, im));
        }
    }
    let mut luma = fft::ifft2(&spec);
    for (l, s) in luma.data.iter_mut().zip(&structure.data) {
        *l += s;
    }

    // Chroma: two independent very-low-frequency fields mixed into channels.
    let mut chroma = [ImagePlane::new(width, height), ImagePlane::new(width, height)];
    for field in chroma.iter_mut() {
        let mut cspec = Spectrum2D::zeros(width, height);
        let amp = 0.035 * ((width * height) as f64).sqrt() / (2.0 * n_struct as f64).sqrt();
        for &(i, j) in &structure_reps(width, height) {
            let self_conj = fft::is_self_conjugate(i, j, height, width);
            let re = amp * chroma_rng.next_normal();
            let im = if self_conj { 0.0 } else { amp * chroma_rng.next_normal() };
            fft::set_mirrored(&mut cspec, i, j, Complex64::new(re, im));
        }
        *field = fft::ifft2(&cspec);
    }

    let mut out = RgbImage::new(width, height);
    for idx in 0..width * height {
        let y = 0.5 + luma.data[idx];
        let c1 = chroma[0].data[idx];
        let c2 = chroma[1].data[idx];
        let r = y + 1.1 * c1 - 0.2 * c2 + mean_shift[0];
        let g = y - 0.4 * c1 + 0.5 * c2 + mean_shift[1];
        let b = y - 0.3 * c1 - 0.9 * c2 + mean_shift[2];
        out.data[idx * 3] = r;
        out.data[idx * 3 + 1] = g;
        out.data[idx * 3 + 2] = b;
    }
    out.clamp_in_place();
    Ok(out)
}

fn structure_reps(width: usize, height: usize) -> Vec<(usize, usize)> {
    let (cu, cv) = (height / 2, width / 2);
    let mut reps = Vec::new();
    for i in 0..height {
        for j in 0..width {
            if !fft::is_representative(i, j, height, width) {
                continue;
            }
            if i == cu && j == cv {
                continue;
            }
            let u = i as i64 - cu as i64;
            let v = j as i64 - cv as i64;
            if u * u + v * v <= synth_params::STRUCTURE_MAX_CYCLES2 {
                reps.push((i, j));
            }
        }
    }
    reps
}

/// Floor amplitude constant C such that the grain floor alone has
/// `FLOOR_STD` pixel std: pixel variance = mean over AC cells of 2 sigma(r)^2.
fn floor_coefficient(width: usize, height: usize) -> f64 {
    let (cu, cv) = (height / 2, width / 2);
    let mut acc = 0.0;
    let mut n = 0usize;
    for i in 0..height {
        for j in 0..width {
            if i == cu && j == cv {
                continue;
            }
            let r = fft::normalized_radius(i, j, height, width);
            acc += r.powf(-2.0 * synth_params::GAMMA);
            n += 1;
        }
    }
    // var = C^2 * mean(r^-2g) over all cells (conjugate halves both counted).
    synth_params::FLOOR_STD / (acc / n as f64).sqrt()
}

/// Mean absolute per-sample difference, used by tests and reports.
pub fn mean_abs_diff(a: &RgbImage, b: &RgbImage) -> f64 {
    assert_eq!(a.data.len(), b.data.len());
    a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.data.len() as f64
}
