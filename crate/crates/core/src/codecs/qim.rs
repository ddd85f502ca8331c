//! Quantization index modulation primitives and coefficient slot plans.
//!
//! Bit-to-slot geometry is method-fixed (key-independent); only dithers are
//! key-derived. Re-quantizing the same slots with a fresh key therefore
//! overwrites any prior embedding — the erasure mechanism the arena studies.

use crate::key::{lanes, WatermarkKey};
use crate::transforms::dct;

/// Quantize `x` onto the coset for `bit`: lattice step*Z + dither + bit*step/2.
#[inline]
pub fn qim_embed(x: f64, step: f64, dither: f64, bit: u8) -> f64 {
    let target = dither + f64::from(bit) * step / 2.0;
    step * ((x - target) / step).round() + target
}

/// Nearest-coset decoding; ties resolve to 0.
#[inline]
pub fn qim_decode(x: f64, step: f64, dither: f64) -> u8 {
    let d0 = coset_distance(x, step, dither);
    let d1 = coset_distance(x, step, dither + step / 2.0);
    u8::from(d1 < d0)
}

#[inline]
fn coset_distance(x: f64, step: f64, offset: f64) -> f64 {
    let t = (x - offset) / step;
    (t - t.round()).abs() * step
}

/// Round-robin bit assignment over a fixed slot order: slot i carries bit
/// i % n_bits, using the largest odd slots-per-bit count that fits (odd so
/// majority votes cannot tie). Returns (slots_used, slots_per_bit).
pub fn round_robin_plan(total_slots: usize, n_bits: usize, max_per_bit: usize) -> (usize, usize) {
    let mut per_bit = (total_slots / n_bits).min(max_per_bit);
    if per_bit == 0 {
        return (0, 0);
    }
    if per_bit % 2 == 0 {
        per_bit -= 1;
    }
    (per_bit * n_bits, per_bit)
}

/// Majority vote per bit over round-robin slot decisions.
pub fn majority_vote(slot_bits: &[u8], n_bits: usize, per_bit: usize) -> Vec<u8> {
    let mut ones = vec![0usize; n_bits];
    for (i, &b) in slot_bits.iter().enumerate().take(n_bits * per_bit) {
        ones[i % n_bits] += b as usize;
    }
    ones.iter().map(|&o| u8::from(2 * o > per_bit)).collect()
}

/// Fraction of slots agreeing with their bit's majority decision; a
/// reference-free confidence statistic in [0.5, 1].
pub fn slot_agreement(slot_bits: &[u8], n_bits: usize, per_bit: usize) -> f64 {
    let majority = majority_vote(slot_bits, n_bits, per_bit);
    let used = n_bits * per_bit;
    let agree = slot_bits
        .iter()
        .enumerate()
        .take(used)
        .filter(|(i, &b)| b == majority[i % n_bits])
        .count();
    agree as f64 / used as f64
}

/// Public per-slot dither field: method-fixed and key-independent (an
/// all-zero-seed stream bound to the codec id). Fractions of the step.
pub fn public_dither_fractions(codec_id: &str, count: usize) -> Vec<f64> {
    WatermarkKey::new([0u8; 32], codec_id).stream(lanes::DITHER).uniforms(count)
}

/// The key's contribution to the dither: a single global offset fraction.
/// Keeping the per-slot part public is what leaves a key-independent lattice
/// signature in embedded images (the classifier's handle, and the reason a
/// fresh key still re-quantizes the exact same cosets).
pub fn key_dither_fraction(key: &WatermarkKey) -> f64 {
    key.stream(lanes::DITHER).next_uniform()
}

/// Per-slot dithers in [0, step): public field rotated by the key offset.
pub fn dithers(key: &WatermarkKey, count: usize, step: f64) -> Vec<f64> {
    let offset = key_dither_fraction(key);
    public_dither_fractions(&key.codec_id, count)
        .into_iter()
        .map(|u| (u + offset).fract() * step)
        .collect()
}

/// Dither-compensated lattice phase concentration:
/// |mean exp(2 pi i (x - pub)/(step/2))| over slots. Any embedding at this
/// step drives it to ~1 (payload bits contribute whole turns and the key
/// offset is a global rotation); natural coefficients give ~1/sqrt(n).
pub fn lattice_concentration(values: &[f64], public_fracs: &[f64], step: f64) -> f64 {
    debug_assert_eq!(values.len(), public_fracs.len());
    if values.is_empty() {
        return 0.0;
    }
    let half = step / 2.0;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (&x, &frac) in values.iter().zip(public_fracs) {
        let phase = std::f64::consts::TAU * (x - frac * step) / half;
        sx += phase.cos();
        sy += phase.sin();
    }
    (sx * sx + sy * sy).sqrt() / values.len() as f64
}

/// Mid-band 8x8 block-DCT slots: zig-zag indices 6..=14 in every block,
/// block-major, zig-zag cycling fastest so round-robin spreads bits spatially.
pub fn block_midband_slots(n_blocks: usize) -> Vec<(usize, usize)> {
    let mut slots = Vec::with_capacity(n_blocks * 9);
    for block in 0..n_blocks {
        for zz in 6..=14 {
            slots.push((block, zz));
        }
    }
    slots
}

/// Full-frame DCT slots with normalized radius in [lo, hi), ordered by radius
/// (ties by index) so round-robin interleaves bits across the whole annulus.
pub fn global_band_slots(width: usize, height: usize, lo: f64, hi: f64) -> Vec<(usize, usize)> {
    let mut slots: Vec<(usize, usize)> = Vec::new();
    for p in 0..height {
        for q in 0..width {
            if p == 0 && q == 0 {
                continue;
            }
            let r = dct::dct_radius(p, q, height, width);
            if r >= lo && r < hi {
                slots.push((p, q));
            }
        }
    }
    slots.sort_by(|&(pa, qa), &(pb, qb)| {
        let ra = dct::dct_radius(pa, qa, height, width);
        let rb = dct::dct_radius(pb, qb, height, width);
        ra.partial_cmp(&rb).expect("finite radius").then((pa, qa).cmp(&(pb, qb)))
    });
    slots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qim_roundtrip_is_exact() {
        let step = 0.04;
        for i in 0..200 {
            let x = -1.0 + i as f64 * 0.013;
            let d = (i as f64 * 0.37) % step;
            for bit in [0u8, 1] {
                let y = qim_embed(x, step, d, bit);
                assert_eq!(qim_decode(y, step, d), bit);
                assert!((y - x).abs() <= step / 2.0 + 1e-12);
            }
        }
    }

    #[test]
    fn qim_tolerates_noise_below_quarter_step() {
        let step = 0.04;
        let d = 0.013;
        for bit in [0u8, 1] {
            let y = qim_embed(0.31, step, d, bit);
            assert_eq!(qim_decode(y + 0.009, step, d), bit);
            assert_eq!(qim_decode(y - 0.009, step, d), bit);
        }
    }

    #[test]
    fn round_robin_per_bit_is_odd() {
        let (used, per_bit) = round_robin_plan(9216, 100, usize::MAX);
        assert_eq!(per_bit, 91);
        assert_eq!(used, 9100);
        let (used, per_bit) = round_robin_plan(5001, 96, usize::MAX);
        assert_eq!(per_bit % 2, 1);
        assert!(used <= 5001);
        let (_, capped) = round_robin_plan(51861, 256, 9);
        assert_eq!(capped, 9);
    }

    #[test]
    fn majority_vote_counts() {
        // 2 bits, 3 slots each, interleaved: bit0 sees [1,1,0], bit1 [0,0,1]
        let slot_bits = [1, 0, 1, 0, 0, 1];
        assert_eq!(majority_vote(&slot_bits, 2, 3), vec![1, 0]);
        let agree = slot_agreement(&slot_bits, 2, 3);
        assert!((agree - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn global_band_slots_are_radius_sorted_and_in_band() {
        let slots = global_band_slots(64, 64, 0.1, 0.2);
        assert!(!slots.is_empty());
        let mut prev = 0.0;
        for &(p, q) in &slots {
            let r = dct::dct_radius(p, q, 64, 64);
            assert!((0.1..0.2).contains(&r));
            assert!(r >= prev);
            prev = r;
        }
    }
}
