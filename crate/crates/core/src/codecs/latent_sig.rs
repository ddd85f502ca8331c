//! 48-bit QIM codec in the latent block-DCT domain (in-processing analog).
//!
//! One slot per bit on 48 method-fixed mid-band coefficients of the
//! 8x-downsampled luminance's 8x8 block DCT; per-bit dither from the key.

use crate::codecs::{qim, CodecError, DetectionOutcome, StatKind, LATENT_SIG};
use crate::image::RgbImage;
use crate::key::{Payload, WatermarkKey};
use crate::stats::bit_accuracy;
use crate::transforms::dct::{block_dct, block_idct};
use crate::transforms::latent::{apply_latent_delta, downsample8};
use crate::transforms::{luminance, replace_luminance};

pub const N_BITS: usize = 48;
const BASE_STEP: f64 = 0.008;

/// Method-fixed slot order: zig-zag index cycling slowest so the 48 chosen
/// slots spread across blocks first.
fn slots(n_blocks: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n_blocks * 9);
    for zz in 6..=14 {
        for block in 0..n_blocks {
            out.push((block, zz));
        }
    }
    out
}

fn plan(img: &RgbImage) -> Result<Vec<(usize, usize)>, CodecError> {
    let n_blocks = (img.width / 8 / 8) * (img.height / 8 / 8);
    let all = slots(n_blocks);
    if all.len() < N_BITS {
        return Err(CodecError::ImageTooSmall(img.width, img.height, LATENT_SIG.to_string()));
    }
    Ok(all[..N_BITS].to_vec())
}

pub fn embed(
    img: &RgbImage,
    key: &WatermarkKey,
    payload: &Payload,
    strength: f64,
) -> Result<RgbImage, CodecError> {
    let plan = plan(img)?;
    let step = BASE_STEP * strength;
    let dithers = qim::dithers(key, N_BITS, step);
    let lum = luminance(img);
    let lat = downsample8(&lum);
    let mut bdct = block_dct(&lat)?;
    for (bit_idx, &(block, zz)) in plan.iter().enumerate() {
        let x = bdct.at(block, zz);
        bdct.set(block, zz, qim::qim_embed(x, step, dithers[bit_idx], payload.bits()[bit_idx]));
    }
    let new_lat = block_idct(&bdct);
    let mut delta = new_lat;
    for (d, o) in delta.data.iter_mut().zip(&lat.data) {
        *d -= o;
    }
    let new_lum = apply_latent_delta(&lum, &delta);
    Ok(replace_luminance(img, &new_lum))
}

pub fn detect(
    img: &RgbImage,
    key: &WatermarkKey,
    reference: Option<&Payload>,
) -> Result<DetectionOutcome, CodecError> {
    let desc = crate::codecs::descriptor(LATENT_SIG).expect("registered");
    let plan = plan(img)?;
    let step = BASE_STEP * desc.default_strength;
    let dithers = qim::dithers(key, N_BITS, step);
    let lum = luminance(img);
    let lat = downsample8(&lum);
    let bdct = block_dct(&lat)?;
    let bits: Vec<u8> = plan
        .iter()
        .enumerate()
        .map(|(k, &(block, zz))| qim::qim_decode(bdct.at(block, zz), step, dithers[k]))
        .collect();
    let decoded = Payload::new(bits.clone()).expect("48 binary bits");
    let ba = reference.map(|r| bit_accuracy(&bits, r.bits()).expect("matched lengths"));
    // With one slot per bit there is no agreement statistic; without a
    // reference the score falls back to 0.5 (uninformative).
    let score = ba.unwrap_or(0.5);
    Ok(DetectionOutcome {
        codec_id: LATENT_SIG.to_string(),
        score,
        statistic: StatKind::BitAccuracy,
        bit_accuracy: ba,
        decoded_payload: Some(decoded),
        decode_ok: true,
    })
}

/// Key-independent lattice concentration over this codec's slots; the
/// classifier's handle on the method.
pub fn lattice_feature(img: &RgbImage) -> f64 {
    let Ok(plan) = plan(img) else { return 0.0 };
    let step = BASE_STEP * crate::codecs::descriptor(LATENT_SIG).expect("registered").default_strength;
    let lum = luminance(img);
    let lat = downsample8(&lum);
    let Ok(bdct) = block_dct(&lat) else { return 0.0 };
    let values: Vec<f64> = plan.iter().map(|&(block, zz)| bdct.at(block, zz)).collect();
    let fracs = qim::public_dither_fractions(LATENT_SIG, values.len());
    qim::lattice_concentration(&values, &fracs, step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codecs;
    use crate::key::random_payload;
    use crate::image::synth_image;

    #[test]
    fn roundtrip_is_exact() {
        let key = WatermarkKey::from_u64(1, LATENT_SIG);
        let payload = random_payload(&key, 48).unwrap();
        let img = synth_image(0, 192, 192).unwrap();
        let marked = codecs::embed(LATENT_SIG, &img, &key, Some(&payload), 1.0).unwrap();
        let out = codecs::detect(LATENT_SIG, &marked, &key, Some(&payload)).unwrap();
        assert_eq!(out.bit_accuracy, Some(1.0));
        assert_eq!(out.decoded_payload.unwrap(), payload);
    }

    #[test]
    fn survives_png_quantization() {
        let key = WatermarkKey::from_u64(2, LATENT_SIG);
        let payload = random_payload(&key, 48).unwrap();
        let img = synth_image(1, 192, 192).unwrap();
        let marked = codecs::embed(LATENT_SIG, &img, &key, Some(&payload), 1.0).unwrap();
        let q = marked.quantize().to_real();
        let out = codecs::detect(LATENT_SIG, &q, &key, Some(&payload)).unwrap();
        assert_eq!(out.bit_accuracy, Some(1.0));
    }

    /// Fresh key pairs per image: any fixed pair differs only by a global
    /// dither rotation, so its wrong-key read is a single deterministic coin;
    /// chance level is a property of the randomized-key ensemble.
    #[test]
    fn wrong_key_reads_chance_bits() {
        let mut acc = 0.0;
        let n = 30;
        for seed in 0..n {
            let k1 = WatermarkKey::from_u64(300 + seed, LATENT_SIG);
            let k2 = WatermarkKey::from_u64(600 + seed, LATENT_SIG);
            let payload = random_payload(&k1.derive("p", "payload", "x"), 48).unwrap();
            let img = synth_image(seed, 192, 192).unwrap();
            let marked = codecs::embed(LATENT_SIG, &img, &k1, Some(&payload), 1.0).unwrap();
            let out = codecs::detect(LATENT_SIG, &marked, &k2, Some(&payload)).unwrap();
            acc += out.bit_accuracy.unwrap();
        }
        let mean = acc / n as f64;
        assert!((mean - 0.5).abs() < 0.25, "wrong-key BA over fresh pairs {mean}");
    }

    #[test]
    fn too_small_image_is_rejected() {
        let key = WatermarkKey::from_u64(5, LATENT_SIG);
        let payload = random_payload(&key, 48).unwrap();
        let img = synth_image(0, 64, 64).unwrap();
        assert!(matches!(
            codecs::embed(LATENT_SIG, &img, &key, Some(&payload), 1.0),
            Err(CodecError::ImageTooSmall(..))
        ));
    }
}
