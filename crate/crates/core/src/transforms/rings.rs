//! Frequency-ring masks over centered spectra.

use serde::{Deserialize, Serialize};

use crate::transforms::fft;
use crate::transforms::TransformError;

/// Which real component of a complex coefficient a statistic addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

/// One real degree of freedom inside a mask.
#[derive(Debug, Clone, Copy)]
pub struct MaskComponent {
    pub index: (usize, usize),
    pub part: Part,
    pub radius: f64,
}

/// Annular frequency mask. Conjugate-symmetric pairs are listed once through
/// their representative (the lexicographically smaller index); mirrors are
/// implied and written automatically by codecs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RingMask {
    pub width: usize,
    pub height: usize,
    pub inner: f64,
    pub outer: f64,
    /// Sorted (i, j) representatives in centered layout.
    pub reps: Vec<(usize, usize)>,
}

impl RingMask {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Real scalar lanes in deterministic order: Re then Im per representative
    /// (self-conjugate cells contribute only Re).
    pub fn components(&self) -> Vec<MaskComponent> {
        let mut out = Vec::with_capacity(self.reps.len() * 2);
        for &(i, j) in &self.reps {
            let radius = fft::normalized_radius(i, j, self.height, self.width);
            out.push(MaskComponent { index: (i, j), part: Part::Re, radius });
            if !fft::is_self_conjugate(i, j, self.height, self.width) {
                out.push(MaskComponent { index: (i, j), part: Part::Im, radius });
            }
        }
        out
    }
}

/// Build the deterministic ring mask with inner <= r < outer. The DC cell is
/// never a member. `outer` may exceed 0.5 (up to the corner radius) to cover
/// the full plane.
pub fn ring_mask(
    width: usize,
    height: usize,
    inner: f64,
    outer: f64,
) -> Result<RingMask, TransformError> {
    if !(0.0..=0.75).contains(&inner) || !(inner < outer) || outer > 0.75 {
        return Err(TransformError::BadRadii(inner, outer));
    }
    let mut reps = Vec::new();
    for i in 0..height {
        for j in 0..width {
            if i == height / 2 && j == width / 2 {
                continue;
            }
            if !fft::is_representative(i, j, height, width) {
                continue;
            }
            let r = fft::normalized_radius(i, j, height, width);
            if r >= inner && r < outer {
                reps.push((i, j));
            }
        }
    }
    reps.sort_unstable();
    if reps.is_empty() {
        return Err(TransformError::EmptyMask(inner, outer));
    }
    Ok(RingMask { width, height, inner, outer, reps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_disk_covers_all_representatives() {
        let mask = ring_mask(64, 64, 0.0, 0.75).unwrap();
        let mut count = 0;
        for i in 0..64 {
            for j in 0..64 {
                if (i, j) != (32, 32) && fft::is_representative(i, j, 64, 64) {
                    count += 1;
                }
            }
        }
        assert_eq!(mask.len(), count);
    }

    /// Brute-force radius check, independent of the mask construction path.
    #[test]
    fn member_count_matches_exhaustive_enumeration() {
        for (inner, outer) in [(0.4, 0.45), (0.0, 0.51), (0.05, 0.30)] {
            let mask = ring_mask(64, 64, inner, outer).unwrap();
            let mut count = 0usize;
            for i in 0..64usize {
                for j in 0..64usize {
                    if (i, j) == (32, 32) {
                        continue;
                    }
                    let u = (i as f64 - 32.0) / 64.0;
                    let v = (j as f64 - 32.0) / 64.0;
                    let r = (u * u + v * v).sqrt();
                    let (mi, mj) = ((64 - i) % 64, (64 - j) % 64);
                    if (i, j) <= (mi, mj) && r >= inner && r < outer {
                        count += 1;
                    }
                }
            }
            assert_eq!(mask.len(), count, "[{inner},{outer})");
        }
    }

    #[test]
    fn degenerate_radii_error() {
        assert!(ring_mask(64, 64, 0.3, 0.3).is_err());
        assert!(ring_mask(64, 64, 0.4, 0.2).is_err());
        // band beyond the corner radius is empty
        assert!(ring_mask(64, 64, 0.72, 0.75).is_err());
    }

    #[test]
    fn components_count_self_conjugates_once() {
        let mask = ring_mask(16, 16, 0.2, 0.45).unwrap();
        let comps = mask.components();
        let self_conj =
            mask.reps.iter().filter(|&&(i, j)| fft::is_self_conjugate(i, j, 16, 16)).count();
        assert_eq!(comps.len(), 2 * mask.len() - self_conj);
    }
}
