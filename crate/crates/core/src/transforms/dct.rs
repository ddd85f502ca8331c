//! Orthonormal DCT-II / DCT-III, both as a full-frame separable transform and
//! as an 8x8 block transform with zig-zag indexing.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::FftPlanner;
use std::cell::RefCell;

use crate::image::ImagePlane;
use crate::transforms::TransformError;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// JPEG zig-zag scan order for 8x8 blocks: ZIGZAG[k] = (row, col).
pub static ZIGZAG: Lazy<[(usize, usize); 64]> = Lazy::new(|| {
    let mut order = [(0usize, 0usize); 64];
    let mut k = 0;
    for s in 0..15 {
        if s % 2 == 0 {
            // up-right
            let mut r = s.min(7);
            let mut c = s - r;
            loop {
                order[k] = (r, c);
                k += 1;
                if r == 0 || c == 7 {
                    break;
                }
                r -= 1;
                c += 1;
            }
        } else {
            let mut c = s.min(7);
            let mut r = s - c;
            loop {
                order[k] = (r, c);
                k += 1;
                if c == 0 || r == 7 {
                    break;
                }
                c -= 1;
                r += 1;
            }
        }
    }
    order
});

/// Orthonormal 8-point DCT-II matrix, row k = basis k.
static DCT8: Lazy<[[f64; 8]; 8]> = Lazy::new(|| {
    let mut m = [[0.0; 8]; 8];
    for (k, row) in m.iter_mut().enumerate() {
        let s = if k == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
        for (n, v) in row.iter_mut().enumerate() {
            *v = s * (std::f64::consts::PI * (2.0 * n as f64 + 1.0) * k as f64 / 16.0).cos();
        }
    }
    m
});

/// Orthonormal 1D DCT-II of arbitrary length via a same-length complex FFT
/// (even/odd reordering plus a quarter-sample phase twist).
pub fn dct2_1d(input: &[f64]) -> Vec<f64> {
    let n = input.len();
    let mut v = vec![Complex64::default(); n];
    for i in 0..n.div_ceil(2) {
        v[i] = Complex64::new(input[2 * i], 0.0);
    }
    for i in 0..n / 2 {
        v[n - 1 - i] = Complex64::new(input[2 * i + 1], 0.0);
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut v));
    let mut out = vec![0.0; n];
    for k in 0..n {
        let phase = Complex64::from_polar(1.0, -std::f64::consts::PI * k as f64 / (2.0 * n as f64));
        let c = (v[k] * phase).re;
        let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        out[k] = s * c;
    }
    out
}

/// Inverse of `dct2_1d` (orthonormal DCT-III).
pub fn dct3_1d(input: &[f64]) -> Vec<f64> {
    let n = input.len();
    // undo orthonormal scaling back to the raw DCT-II coefficients
    let c: Vec<f64> = input
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            x / s
        })
        .collect();
    let mut v = vec![Complex64::default(); n];
    for k in 0..n {
        let c_mirror = if k == 0 { 0.0 } else { c[n - k] };
        let phase = Complex64::from_polar(1.0, std::f64::consts::PI * k as f64 / (2.0 * n as f64));
        v[k] = phase * Complex64::new(c[k], -c_mirror);
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut v));
    let mut out = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        out[2 * i] = v[i].re / n as f64;
    }
    for i in 0..n / 2 {
        out[2 * i + 1] = v[n - 1 - i].re / n as f64;
    }
    out
}

/// Full-frame orthonormal 2D DCT-II. Coefficient (p, q) sits at data[p*W+q];
/// its center frequency is (p/(2H), q/(2W)) cycles per pixel.
pub fn dct2_2d(plane: &ImagePlane) -> ImagePlane {
    let (w, h) = (plane.width, plane.height);
    let mut rows = ImagePlane::new(w, h);
    for y in 0..h {
        let row = dct2_1d(&plane.data[y * w..(y + 1) * w]);
        rows.data[y * w..(y + 1) * w].copy_from_slice(&row);
    }
    let mut out = ImagePlane::new(w, h);
    let mut col = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = rows.data[y * w + x];
        }
        let t = dct2_1d(&col);
        for y in 0..h {
            out.data[y * w + x] = t[y];
        }
    }
    out
}

pub fn idct2_2d(coeffs: &ImagePlane) -> ImagePlane {
    let (w, h) = (coeffs.width, coeffs.height);
    let mut cols = ImagePlane::new(w, h);
    let mut col = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = coeffs.data[y * w + x];
        }
        let t = dct3_1d(&col);
        for y in 0..h {
            cols.data[y * w + x] = t[y];
        }
    }
    let mut out = ImagePlane::new(w, h);
    for y in 0..h {
        let row = dct3_1d(&cols.data[y * w..(y + 1) * w]);
        out.data[y * w..(y + 1) * w].copy_from_slice(&row);
    }
    out
}

/// Normalized frequency radius of full-frame DCT coefficient (p, q).
#[inline]
pub fn dct_radius(p: usize, q: usize, height: usize, width: usize) -> f64 {
    let u = p as f64 / (2.0 * height as f64);
    let v = q as f64 / (2.0 * width as f64);
    (u * u + v * v).sqrt()
}

/// 8x8 block DCT of a plane, coefficients zig-zag indexed per block.
#[derive(Debug, Clone)]
pub struct BlockDct {
    pub blocks_x: usize,
    pub blocks_y: usize,
    /// 64 coefficients per block, zig-zag order, block-major (row of blocks).
    pub coeffs: Vec<f64>,
}

impl BlockDct {
    #[inline]
    pub fn block(&self, bx: usize, by: usize) -> &[f64] {
        let b = by * self.blocks_x + bx;
        &self.coeffs[b * 64..(b + 1) * 64]
    }

    #[inline]
    pub fn at(&self, block: usize, zz: usize) -> f64 {
        self.coeffs[block * 64 + zz]
    }

    #[inline]
    pub fn set(&mut self, block: usize, zz: usize, v: f64) {
        self.coeffs[block * 64 + zz] = v;
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks_x * self.blocks_y
    }
}

pub fn block_dct(plane: &ImagePlane) -> Result<BlockDct, TransformError> {
    let (w, h) = (plane.width, plane.height);
    if w % 8 != 0 || h % 8 != 0 {
        return Err(TransformError::NotBlockAligned(w, h));
    }
    let (bx, by) = (w / 8, h / 8);
    let mut coeffs = vec![0.0; bx * by * 64];
    let m = &*DCT8;
    for byy in 0..by {
        for bxx in 0..bx {
            // C = M * B * M^T
            let mut tmp = [[0.0f64; 8]; 8];
            for r in 0..8 {
                for c in 0..8 {
                    let mut acc = 0.0;
                    for k in 0..8 {
                        acc += m[r][k] * plane.at(bxx * 8 + c, byy * 8 + k);
                    }
                    tmp[r][c] = acc;
                }
            }
            let base = (byy * bx + bxx) * 64;
            for (zz, &(r, c)) in ZIGZAG.iter().enumerate() {
                let mut acc = 0.0;
                for k in 0..8 {
                    acc += tmp[r][k] * m[c][k];
                }
                coeffs[base + zz] = acc;
            }
        }
    }
    Ok(BlockDct { blocks_x: bx, blocks_y: by, coeffs })
}

pub fn block_idct(bdct: &BlockDct) -> ImagePlane {
    let (w, h) = (bdct.blocks_x * 8, bdct.blocks_y * 8);
    let mut plane = ImagePlane::new(w, h);
    let m = &*DCT8;
    for byy in 0..bdct.blocks_y {
        for bxx in 0..bdct.blocks_x {
            let base = (byy * bdct.blocks_x + bxx) * 64;
            let mut grid = [[0.0f64; 8]; 8];
            for (zz, &(r, c)) in ZIGZAG.iter().enumerate() {
                grid[r][c] = bdct.coeffs[base + zz];
            }
            // B = M^T * C * M
            let mut tmp = [[0.0f64; 8]; 8];
            for r in 0..8 {
                for c in 0..8 {
                    let mut acc = 0.0;
                    for k in 0..8 {
                        acc += m[k][r] * grid[k][c];
                    }
                    tmp[r][c] = acc;
                }
            }
            for r in 0..8 {
                for c in 0..8 {
                    let mut acc = 0.0;
                    for k in 0..8 {
                        acc += tmp[r][k] * m[k][c];
                    }
                    plane.set(bxx * 8 + c, byy * 8 + r, acc);
                }
            }
        }
    }
    plane
}
