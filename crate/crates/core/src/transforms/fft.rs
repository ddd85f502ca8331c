//! Unitary 2D FFT in centered (DC-at-middle) layout.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

use crate::image::ImagePlane;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Complex spectrum, centered layout: index (i, j) holds frequency
/// (u, v) = (i - height/2, j - width/2) cycles per image.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Complex64>,
}

impl Spectrum2D {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![Complex64::default(); width * height] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.width + j] = v;
    }
}

/// Conjugate-mirror index in centered layout.
#[inline]
pub fn mirror_index(i: usize, j: usize, height: usize, width: usize) -> (usize, usize) {
    ((height - i) % height, (width - j) % width)
}

/// True for the designated representative of a conjugate pair: the
/// lexicographically smaller index (self-conjugate cells represent themselves).
#[inline]
pub fn is_representative(i: usize, j: usize, height: usize, width: usize) -> bool {
    (i, j) <= mirror_index(i, j, height, width)
}

#[inline]
pub fn is_self_conjugate(i: usize, j: usize, height: usize, width: usize) -> bool {
    (i, j) == mirror_index(i, j, height, width)
}

/// Normalized frequency radius sqrt((u/H)^2 + (v/W)^2) in centered coords.
#[inline]
pub fn normalized_radius(i: usize, j: usize, height: usize, width: usize) -> f64 {
    let u = (i as f64 - (height / 2) as f64) / height as f64;
    let v = (j as f64 - (width / 2) as f64) / width as f64;
    (u * u + v * v).sqrt()
}

/// Write `value` at (i, j) and its conjugate at the mirror cell. At
/// self-conjugate cells the imaginary part is forced to zero so inverse
/// transforms stay real.
pub fn set_mirrored(spec: &mut Spectrum2D, i: usize, j: usize, value: Complex64) {
    let (mi, mj) = mirror_index(i, j, spec.height, spec.width);
    if (mi, mj) == (i, j) {
        spec.set(i, j, Complex64::new(value.re, 0.0));
    } else {
        spec.set(i, j, value);
        spec.set(mi, mj, value.conj());
    }
}

fn fft2_complex(data: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let row_fft = if inverse {
            planner.plan_fft_inverse(width)
        } else {
            planner.plan_fft_forward(width)
        };
        let col_fft = if inverse {
            planner.plan_fft_inverse(height)
        } else {
            planner.plan_fft_forward(height)
        };
        for row in data.chunks_exact_mut(width) {
            row_fft.process(row);
        }
        let mut col = vec![Complex64::default(); height];
        for j in 0..width {
            for i in 0..height {
                col[i] = data[i * width + j];
            }
            col_fft.process(&mut col);
            for i in 0..height {
                data[i * width + j] = col[i];
            }
        }
    });
}

fn shift(data: &[Complex64], width: usize, height: usize, di: usize, dj: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); data.len()];
    for i in 0..height {
        let si = (i + di) % height;
        for j in 0..width {
            let sj = (j + dj) % width;
            out[si * width + sj] = data[i * width + j];
        }
    }
    out
}

/// Forward unitary FFT (1/sqrt(WH) scaling), centered output.
pub fn fft2(plane: &ImagePlane) -> Spectrum2D {
    let (w, h) = (plane.width, plane.height);
    let scale = 1.0 / ((w * h) as f64).sqrt();
    let mut buf: Vec<Complex64> =
        plane.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_complex(&mut buf, w, h, false);
    for v in &mut buf {
        *v *= scale;
    }
    Spectrum2D { width: w, height: h, data: shift(&buf, w, h, h / 2, w / 2) }
}

/// Inverse unitary FFT from centered layout; returns the real part.
pub fn ifft2(spec: &Spectrum2D) -> ImagePlane {
    let (w, h) = (spec.width, spec.height);
    let scale = 1.0 / ((w * h) as f64).sqrt();
    let mut buf = shift(&spec.data, w, h, h - h / 2, w - w / 2);
    fft2_complex(&mut buf, w, h, true);
    let data = buf.iter().map(|v| v.re * scale).collect();
    ImagePlane { width: w, height: h, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::WatermarkKey;

    fn random_plane(w: usize, h: usize, tag: u64) -> ImagePlane {
        let mut s = WatermarkKey::from_u64(tag, "fft-test").stream(0);
        ImagePlane::from_data(w, h, s.uniforms(w * h))
    }

    #[test]
    fn constant_plane_has_single_dc_coefficient() {
        let c = 0.73;
        let plane = ImagePlane::from_data(64, 64, vec![c; 64 * 64]);
        let spec = fft2(&plane);
        let dc = spec.at(32, 32);
        assert!((dc.re - c * 64.0).abs() < 1e-9, "dc {}", dc.re);
        let off_dc: f64 = spec
            .data
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != 32 * 64 + 32)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        assert!(off_dc < 1e-9);
    }

    #[test]
    fn roundtrip_and_parseval() {
        let plane = random_plane(64, 64, 1);
        let spec = fft2(&plane);
        let back = ifft2(&spec);
        let max = plane
            .data
            .iter()
            .zip(&back.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max < 1e-9, "roundtrip {max}");
        let ex: f64 = plane.data.iter().map(|v| v * v).sum();
        let ef: f64 = spec.data.iter().map(|v| v.norm_sqr()).sum();
        assert!((ex - ef).abs() / ex < 1e-9, "parseval {ex} vs {ef}");
    }

    #[test]
    fn transform_is_linear() {
        let x = random_plane(48, 40, 2);
        let y = random_plane(48, 40, 3);
        let (a, b) = (1.7, -0.4);
        let mut combo = ImagePlane::new(48, 40);
        for k in 0..combo.data.len() {
            combo.data[k] = a * x.data[k] + b * y.data[k];
        }
        let fs = fft2(&combo);
        let fx = fft2(&x);
        let fy = fft2(&y);
        let max = fs
            .data
            .iter()
            .enumerate()
            .map(|(k, v)| (v - (a * fx.data[k] + b * fy.data[k])).norm())
            .fold(0.0, f64::max);
        assert!(max < 1e-9, "linearity {max}");
    }

    #[test]
    fn mirrored_writes_stay_real() {
        let mut spec = Spectrum2D::zeros(32, 32);
        set_mirrored(&mut spec, 13, 21, Complex64::new(0.4, -0.9));
        set_mirrored(&mut spec, 16, 16, Complex64::new(1.0, 0.7)); // DC: imag dropped
        set_mirrored(&mut spec, 0, 0, Complex64::new(-0.3, 0.2)); // Nyquist corner
        let plane = ifft2(&spec);
        assert!(plane.is_finite());
        let spec2 = fft2(&plane);
        let max = spec
            .data
            .iter()
            .zip(&spec2.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(max < 1e-9, "hermitian reconstruction {max}");
    }
}
