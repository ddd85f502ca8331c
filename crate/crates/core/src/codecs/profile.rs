//! Robust spectral scale profile.
//!
//! Codecs that write into a frequency band need the natural per-coefficient
//! scale there, on both the embed and the detect side, without access to the
//! original image. The estimator fits a power law sigma(r) = C * r^slope to
//! median-absolute-deviation scales measured over annuli *outside* the band
//! (which embedding never touches), then evaluates it inside.

use crate::transforms::fft::{self, Spectrum2D};

/// Gaussian consistency factor: MAD / PHI_INV_75 estimates sigma.
const PHI_INV_75: f64 = 0.674_489_750_196_081_7;

#[derive(Debug, Clone, Copy)]
pub struct ScaleProfile {
    pub ln_c: f64,
    pub slope: f64,
}

impl ScaleProfile {
    #[inline]
    pub fn sigma(&self, r: f64) -> f64 {
        (self.ln_c + self.slope * r.ln()).exp()
    }
}

/// Fit the profile over `n_annuli` equal-width annuli spanning [lo, hi).
pub fn fit_scale_profile(spec: &Spectrum2D, lo: f64, hi: f64, n_annuli: usize) -> ScaleProfile {
    let (w, h) = (spec.width, spec.height);
    let step = (hi - lo) / n_annuli as f64;
    let mut parts: Vec<Vec<f64>> = vec![Vec::new(); n_annuli];
    let mut ln_r: Vec<Vec<f64>> = vec![Vec::new(); n_annuli];
    for i in 0..h {
        for j in 0..w {
            if !fft::is_representative(i, j, h, w) {
                continue;
            }
            let r = fft::normalized_radius(i, j, h, w);
            if r < lo || r >= hi || r == 0.0 {
                continue;
            }
            let k = (((r - lo) / step) as usize).min(n_annuli - 1);
            let c = spec.at(i, j);
            parts[k].push(c.re.abs());
            if !fft::is_self_conjugate(i, j, h, w) {
                parts[k].push(c.im.abs());
            }
            ln_r[k].push(r.ln());
        }
    }

    // robust per-annulus scale, then weighted least squares in log-log
    let mut pts: Vec<(f64, f64, f64)> = Vec::new(); // (ln r, ln sigma, weight)
    for k in 0..n_annuli {
        if parts[k].len() < 8 {
            continue;
        }
        let mut v = parts[k].clone();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite spectrum"));
        let med = v[v.len() / 2];
        if med <= 0.0 {
            continue;
        }
        let sigma = med / PHI_INV_75;
        let mean_ln_r = ln_r[k].iter().sum::<f64>() / ln_r[k].len() as f64;
        pts.push((mean_ln_r, sigma.ln(), parts[k].len() as f64));
    }
    if pts.is_empty() {
        return ScaleProfile { ln_c: (1e-6f64).ln(), slope: 0.0 };
    }
    if pts.len() == 1 {
        return ScaleProfile { ln_c: pts[0].1, slope: 0.0 };
    }
    let wsum: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.0 * p.2).sum::<f64>() / wsum;
    let my = pts.iter().map(|p| p.1 * p.2).sum::<f64>() / wsum;
    let sxx = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum::<f64>();
    let sxy = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let slope = if sxx > 1e-12 { sxy / sxx } else { 0.0 };
    ScaleProfile { ln_c: my - slope * mx, slope }
}
