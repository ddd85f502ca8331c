//! Frame-DCT QIM codecs with perceptual step attenuation (post-processing,
//! attack-capable): `pix-add` on a low-mid band with 96 bits, `pix-wide` on a
//! wider high band with 256 bits and fewer slots per bit.
//!
//! The quantization step scales with image activity (root mean 8x8 block
//! variance of luminance), snapped to a coarse log grid so the embedder and
//! detector agree; the detector additionally tries the two neighboring grid
//! points and keeps the decode with the best slot agreement, which absorbs
//! activity drift near a grid edge.

use crate::codecs::{qim, CodecError, DetectionOutcome, StatKind, PIX_ADD, PIX_WIDE};
use crate::image::{ImagePlane, RgbImage};
use crate::key::{Payload, WatermarkKey};
use crate::stats::bit_accuracy;
use crate::transforms::dct::{dct2_2d, idct2_2d};
use crate::transforms::latent::downsample8;
use crate::transforms::{luminance, replace_luminance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Add,
    Wide,
}

#[derive(Clone, Copy)]
struct Params {
    codec_id: &'static str,
    band: (f64, f64),
    n_bits: usize,
    base_step: f64,
    max_slots_per_bit: usize,
}

fn params(variant: Variant) -> Params {
    match variant {
        // The low-mid band is centered on the 8x box filter's spectral null
        // (normalized 0.125): quantization jitter there is invisible to the
        // latent domain, so this codec cannot disturb the latent-ring codecs
        // through downsampling aliases.
        Variant::Add => Params {
            codec_id: PIX_ADD,
            band: (0.115, 0.135),
            n_bits: 96,
            base_step: 0.055,
            max_slots_per_bit: 51,
        },
        Variant::Wide => Params {
            codec_id: PIX_WIDE,
            band: (0.33, 0.47),
            n_bits: 256,
            base_step: 0.05,
            max_slots_per_bit: 9,
        },
    }
}

/// Log-grid spacing and clamp range of the activity attenuation factor.
const LN_GRID: f64 = 0.4;
const ACTIVITY_REF: f64 = 0.04;
const ATTEN_MIN: f64 = 0.5;
const ATTEN_MAX: f64 = 2.0;

/// Root mean 8x8 block variance of the downsampled luminance. Measuring on
/// the latent keeps the value stable under pixel-scale distortions (noise,
/// quantization, the QIM bands themselves), so embed and detect land in the
/// same attenuation bucket.
fn activity(lum: &ImagePlane) -> f64 {
    let lat = downsample8(lum);
    let (bw, bh) = (lat.width / 8, lat.height / 8);
    if bw == 0 || bh == 0 {
        return ACTIVITY_REF;
    }
    let mut acc = 0.0;
    for by in 0..bh {
        for bx in 0..bw {
            let mut sum = 0.0;
            let mut sq = 0.0;
            for dy in 0..8 {
                for dx in 0..8 {
                    let v = lat.at(bx * 8 + dx, by * 8 + dy);
                    sum += v;
                    sq += v * v;
                }
            }
            let mean = sum / 64.0;
            acc += (sq / 64.0 - mean * mean).max(0.0);
        }
    }
    (acc / (bw * bh) as f64).sqrt()
}

/// Grid index of the attenuation bucket for a given activity.
fn bucket_of(act: f64) -> i32 {
    (act.max(1e-4).ln() / LN_GRID).round() as i32
}

fn atten_of_bucket(bucket: i32) -> f64 {
    ((bucket as f64 * LN_GRID).exp() / ACTIVITY_REF).clamp(ATTEN_MIN, ATTEN_MAX)
}

pub fn embed(
    variant: Variant,
    img: &RgbImage,
    key: &WatermarkKey,
    payload: &Payload,
    strength: f64,
) -> Result<RgbImage, CodecError> {
    let p = params(variant);
    let lum = luminance(img);
    let slots = qim::global_band_slots(lum.width, lum.height, p.band.0, p.band.1);
    let (used, per_bit) = qim::round_robin_plan(slots.len(), p.n_bits, p.max_slots_per_bit);
    if per_bit == 0 {
        return Err(CodecError::ImageTooSmall(img.width, img.height, p.codec_id.to_string()));
    }
    let step = p.base_step * strength * atten_of_bucket(bucket_of(activity(&lum)));
    let dithers = qim::dithers(key, used, step);
    let mut coeffs = dct2_2d(&lum);
    for (i, &(row, col)) in slots[..used].iter().enumerate() {
        let bit = payload.bits()[i % p.n_bits];
        let x = coeffs.data[row * coeffs.width + col];
        coeffs.data[row * coeffs.width + col] = qim::qim_embed(x, step, dithers[i], bit);
    }
    let new_lum = idct2_2d(&coeffs);
    Ok(replace_luminance(img, &new_lum))
}

fn bucket_concentration(
    coeffs: &ImagePlane,
    slots: &[(usize, usize)],
    public_fracs: &[f64],
    p: Params,
    strength: f64,
    bucket: i32,
) -> f64 {
    let step = p.base_step * strength * atten_of_bucket(bucket);
    let values: Vec<f64> =
        slots.iter().map(|&(row, col)| coeffs.data[row * coeffs.width + col]).collect();
    qim::lattice_concentration(&values, public_fracs, step)
}

/// Key-independent lattice concentration at the image's own activity
/// bucket; the classifier's handle on the method.
pub fn lattice_feature(variant: Variant, img: &RgbImage) -> f64 {
    let p = params(variant);
    let desc = crate::codecs::descriptor(p.codec_id).expect("registered");
    let lum = luminance(img);
    let slots = qim::global_band_slots(lum.width, lum.height, p.band.0, p.band.1);
    let (used, per_bit) = qim::round_robin_plan(slots.len(), p.n_bits, p.max_slots_per_bit);
    if per_bit == 0 {
        return 0.0;
    }
    let coeffs = dct2_2d(&lum);
    let public_fracs = qim::public_dither_fractions(p.codec_id, used);
    let bucket = bucket_of(activity(&lum));
    bucket_concentration(&coeffs, &slots[..used], &public_fracs, p, desc.default_strength, bucket)
}

#[doc(hidden)]
pub fn debug_state(variant: Variant, img: &RgbImage) -> (f64, i32, Vec<f64>) {
    let p = params(variant);
    let lum = luminance(img);
    let slots = qim::global_band_slots(lum.width, lum.height, p.band.0, p.band.1);
    let (used, _) = qim::round_robin_plan(slots.len(), p.n_bits, p.max_slots_per_bit);
    let coeffs = dct2_2d(&lum);
    let act = activity(&lum);
    let center = bucket_of(act);
    let public_fracs = qim::public_dither_fractions(p.codec_id, used);
    let cs = [center - 1, center, center + 1]
        .into_iter()
        .map(|b| bucket_concentration(&coeffs, &slots[..used], &public_fracs, p, 1.0, b))
        .collect();
    (act, center, cs)
}

pub fn detect(
    variant: Variant,
    img: &RgbImage,
    key: &WatermarkKey,
    reference: Option<&Payload>,
) -> Result<DetectionOutcome, CodecError> {
    let p = params(variant);
    let desc = crate::codecs::descriptor(p.codec_id).expect("registered");
    let lum = luminance(img);
    let slots = qim::global_band_slots(lum.width, lum.height, p.band.0, p.band.1);
    let (used, per_bit) = qim::round_robin_plan(slots.len(), p.n_bits, p.max_slots_per_bit);
    if per_bit == 0 {
        return Err(CodecError::ImageTooSmall(img.width, img.height, p.codec_id.to_string()));
    }
    let coeffs = dct2_2d(&lum);
    let center = bucket_of(activity(&lum));

    // Pick the step by dither-free lattice phase concentration: any QIM
    // embedding at the true step leaves |mean exp(2 pi i x / (step/2))| near
    // 1, while aliased neighbor steps scatter the phases. Selecting on the
    // dithered slot agreement instead would leak the victim's bits through
    // lattice aliasing after a same-method overwrite.
    let public_fracs = qim::public_dither_fractions(p.codec_id, used);
    let bucket = [center, center - 1, center + 1]
        .into_iter()
        .max_by(|&a, &b| {
            let ca =
                bucket_concentration(&coeffs, &slots[..used], &public_fracs, p, desc.default_strength, a);
            let cb =
                bucket_concentration(&coeffs, &slots[..used], &public_fracs, p, desc.default_strength, b);
            ca.partial_cmp(&cb).expect("finite concentration").then(b.cmp(&a))
        })
        .expect("non-empty candidate set");
    let step = p.base_step * desc.default_strength * atten_of_bucket(bucket);
    let dithers = qim::dithers(key, used, step);
    let slot_bits: Vec<u8> = slots[..used]
        .iter()
        .enumerate()
        .map(|(i, &(row, col))| {
            qim::qim_decode(coeffs.data[row * coeffs.width + col], step, dithers[i])
        })
        .collect();
    let agreement = qim::slot_agreement(&slot_bits, p.n_bits, per_bit);
    let bits = qim::majority_vote(&slot_bits, p.n_bits, per_bit);
    let decoded = Payload::new(bits.clone()).expect("binary bits");
    let ba = reference.map(|r| bit_accuracy(&bits, r.bits()).expect("matched lengths"));
    let score = ba.unwrap_or(agreement);
    Ok(DetectionOutcome {
        codec_id: p.codec_id.to_string(),
        score,
        statistic: StatKind::BitAccuracy,
        bit_accuracy: ba,
        decoded_payload: Some(decoded),
        decode_ok: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codecs;
    use crate::image::synth_image;
    use crate::key::random_payload;

    #[test]
    fn both_variants_roundtrip() {
        for (codec, len) in [(PIX_ADD, 96usize), (PIX_WIDE, 256usize)] {
            let key = WatermarkKey::from_u64(1, codec);
            let payload = random_payload(&key, len).unwrap();
            let img = synth_image(0, 192, 192).unwrap();
            let marked = codecs::embed(codec, &img, &key, Some(&payload), 1.0).unwrap();
            let out = codecs::detect(codec, &marked, &key, Some(&payload)).unwrap();
            assert_eq!(out.bit_accuracy, Some(1.0), "{codec}");
            // also across PNG quantization
            let q = marked.quantize().to_real();
            let out_q = codecs::detect(codec, &q, &key, Some(&payload)).unwrap();
            assert_eq!(out_q.bit_accuracy, Some(1.0), "{codec} quantized");
        }
    }

    #[test]
    fn same_method_overwrite_erases_victim() {
        let mut acc = 0.0;
        let n = 12;
        for seed in 0..n {
            let k1 = WatermarkKey::from_u64(100 + seed, PIX_ADD);
            let k2 = WatermarkKey::from_u64(200 + seed, PIX_ADD);
            let p1 = random_payload(&k1.derive("p", "payload", "1"), 96).unwrap();
            let p2 = random_payload(&k2.derive("p", "payload", "2"), 96).unwrap();
            let img = synth_image(seed, 192, 192).unwrap();
            let once = codecs::embed(PIX_ADD, &img, &k1, Some(&p1), 1.0).unwrap();
            let twice = codecs::embed(PIX_ADD, &once, &k2, Some(&p2), 1.0).unwrap();
            acc += codecs::detect(PIX_ADD, &twice, &k1, Some(&p1))
                .unwrap()
                .bit_accuracy
                .unwrap();
            let attacker = codecs::detect(PIX_ADD, &twice, &k2, Some(&p2)).unwrap();
            assert_eq!(attacker.bit_accuracy, Some(1.0));
        }
        let mean = acc / n as f64;
        assert!((mean - 0.5).abs() < 0.08, "victim BA {mean}");
    }

    /// Disjoint-band isolation: the two frame-DCT codecs must not disturb
    /// the block-DCT codec and vice versa.
    #[test]
    fn pix_wide_and_ss_dct_do_not_interfere() {
        let wide_key = WatermarkKey::from_u64(7, PIX_WIDE);
        let ss_key = WatermarkKey::from_u64(8, codecs::SS_DCT);
        let wide_payload = random_payload(&wide_key, 256).unwrap();
        let ss_payload = random_payload(&ss_key, 56).unwrap();
        for seed in 0..6 {
            let img = synth_image(seed, 192, 192).unwrap();
            let a = codecs::embed(codecs::SS_DCT, &img, &ss_key, Some(&ss_payload), 1.0).unwrap();
            let b = codecs::embed(PIX_WIDE, &a, &wide_key, Some(&wide_payload), 1.0).unwrap();
            let ss_out = codecs::detect(codecs::SS_DCT, &b, &ss_key, Some(&ss_payload)).unwrap();
            let wide_out = codecs::detect(PIX_WIDE, &b, &wide_key, Some(&wide_payload)).unwrap();
            assert!(ss_out.bit_accuracy.unwrap() >= 0.95, "ss {:?}", ss_out.bit_accuracy);
            assert!(wide_out.bit_accuracy.unwrap() >= 0.95, "wide {:?}", wide_out.bit_accuracy);
        }
    }
}
