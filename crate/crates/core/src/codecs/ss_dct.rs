//! ECC-coded multi-bit codec in the 8x8 block-DCT domain (post-processing,
//! attack-capable).
//!
//! 56 data bits are BCH-encoded to a 100-bit payload; each coded bit owns a
//! method-fixed set of mid-band (zig-zag 6..=14) block-DCT slots assigned
//! round-robin, embedded by QIM with key-derived dither and decoded by
//! per-slot demodulation, per-bit majority vote, and BCH decoding. Raw bit
//! accuracy is measured over the 91 transmitted coded bits (pad ignored).

use once_cell::sync::Lazy;

use crate::codecs::{qim, CodecError, DetectionOutcome, StatKind, SS_DCT};
use crate::ecc::{BchCode, Codeword};
use crate::image::RgbImage;
use crate::key::{Payload, WatermarkKey};
use crate::stats::bit_accuracy;
use crate::transforms::dct::{block_dct, block_idct};
use crate::transforms::{luminance, replace_luminance};

const BASE_STEP: f64 = 0.05;
/// Cap keeps embeddings size-stable: larger frames gain robustness, not MSE.
const MAX_SLOTS_PER_BIT: usize = 207;

static CODE: Lazy<BchCode> = Lazy::new(BchCode::default);

pub fn code() -> &'static BchCode {
    &CODE
}

/// Encode a 56-bit data payload to the 100-bit coded payload this codec
/// embeds; exposed for reference-BA computation elsewhere.
pub fn encode_reference(data: &Payload) -> Codeword {
    CODE.encode(data.bits()).expect("payload length validated by caller")
}

struct Plan {
    slots: Vec<(usize, usize)>,
    per_bit: usize,
    n_coded: usize,
}

fn plan(img: &RgbImage) -> Result<Plan, CodecError> {
    let n_blocks = (img.width / 8) * (img.height / 8);
    let slots = qim::block_midband_slots(n_blocks);
    let n_coded = CODE.padded_len();
    let (used, per_bit) = qim::round_robin_plan(slots.len(), n_coded, MAX_SLOTS_PER_BIT);
    if per_bit == 0 {
        return Err(CodecError::ImageTooSmall(img.width, img.height, SS_DCT.to_string()));
    }
    Ok(Plan { slots: slots[..used].to_vec(), per_bit, n_coded })
}

pub fn embed(
    img: &RgbImage,
    key: &WatermarkKey,
    payload: &Payload,
    strength: f64,
) -> Result<RgbImage, CodecError> {
    let plan = plan(img)?;
    let coded = CODE.encode(payload.bits()).expect("length checked in dispatch");
    let step = BASE_STEP * strength;
    let dithers = qim::dithers(key, plan.slots.len(), step);
    let lum = luminance(img);
    let mut bdct = block_dct(&lum)?;
    for (i, &(block, zz)) in plan.slots.iter().enumerate() {
        let bit = coded.bits[i % plan.n_coded];
        let x = bdct.at(block, zz);
        bdct.set(block, zz, qim::qim_embed(x, step, dithers[i], bit));
    }
    let new_lum = block_idct(&bdct);
    Ok(replace_luminance(img, &new_lum))
}

pub fn detect(
    img: &RgbImage,
    key: &WatermarkKey,
    reference: Option<&Payload>,
) -> Result<DetectionOutcome, CodecError> {
    let desc = crate::codecs::descriptor(SS_DCT).expect("registered");
    let plan = plan(img)?;
    let step = BASE_STEP * desc.default_strength;
    let dithers = qim::dithers(key, plan.slots.len(), step);
    let lum = luminance(img);
    let bdct = block_dct(&lum)?;
    let slot_bits: Vec<u8> = plan
        .slots
        .iter()
        .enumerate()
        .map(|(i, &(block, zz))| qim::qim_decode(bdct.at(block, zz), step, dithers[i]))
        .collect();
    let coded = qim::majority_vote(&slot_bits, plan.n_coded, plan.per_bit);

    let (decoded_payload, decode_ok, corrections) =
        match CODE.decode(&Codeword { bits: coded.clone() }) {
            Ok((data, fixed)) => (Some(Payload::new(data).expect("binary data")), true, fixed),
            Err(_) => (None, false, 0),
        };
    let _ = corrections;

    let transmitted = CODE.coded_len();
    let ba = reference.map(|r| {
        let ref_coded = CODE.encode(r.bits()).expect("length checked in dispatch");
        bit_accuracy(&coded[..transmitted], &ref_coded.bits[..transmitted])
            .expect("equal lengths")
    });
    let score = ba.unwrap_or_else(|| qim::slot_agreement(&slot_bits, plan.n_coded, plan.per_bit));
    Ok(DetectionOutcome {
        codec_id: SS_DCT.to_string(),
        score,
        statistic: StatKind::BitAccuracy,
        bit_accuracy: ba,
        decoded_payload,
        decode_ok,
    })
}

/// Key-independent lattice concentration over this codec's slots.
pub fn lattice_feature(img: &RgbImage) -> f64 {
    let Ok(plan) = plan(img) else { return 0.0 };
    let step =
        BASE_STEP * crate::codecs::descriptor(SS_DCT).expect("registered").default_strength;
    let lum = luminance(img);
    let Ok(bdct) = block_dct(&lum) else { return 0.0 };
    let values: Vec<f64> =
        plan.slots.iter().map(|&(block, zz)| bdct.at(block, zz)).collect();
    let fracs = qim::public_dither_fractions(SS_DCT, values.len());
    qim::lattice_concentration(&values, &fracs, step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codecs;
    use crate::image::synth_image;
    use crate::key::random_payload;

    #[test]
    fn roundtrip_decodes_exactly() {
        let key = WatermarkKey::from_u64(1, SS_DCT);
        let payload = random_payload(&key, 56).unwrap();
        let img = synth_image(0, 192, 192).unwrap();
        let marked = codecs::embed(SS_DCT, &img, &key, Some(&payload), 1.0).unwrap();
        let out = codecs::detect(SS_DCT, &marked, &key, Some(&payload)).unwrap();
        assert!(out.decode_ok);
        assert_eq!(out.decoded_payload.unwrap(), payload);
        assert_eq!(out.bit_accuracy, Some(1.0));
    }

    /// Fresh keys per image, as the arena draws them: with a fixed key pair
    /// the whole run shares one dither-difference coin sequence.
    #[test]
    fn fresh_key_reembedding_erases_victim_payload() {
        let mut victim_ba = 0.0;
        let n = 12;
        for seed in 0..n {
            let k1 = WatermarkKey::from_u64(1000 + seed, SS_DCT);
            let k2 = WatermarkKey::from_u64(2000 + seed, SS_DCT);
            let p1 = random_payload(&k1.derive("p", "payload", "1"), 56).unwrap();
            let p2 = random_payload(&k2.derive("p", "payload", "2"), 56).unwrap();
            let img = synth_image(seed, 192, 192).unwrap();
            let once = codecs::embed(SS_DCT, &img, &k1, Some(&p1), 1.0).unwrap();
            let twice = codecs::embed(SS_DCT, &once, &k2, Some(&p2), 1.0).unwrap();
            let victim = codecs::detect(SS_DCT, &twice, &k1, Some(&p1)).unwrap();
            let attacker = codecs::detect(SS_DCT, &twice, &k2, Some(&p2)).unwrap();
            victim_ba += victim.bit_accuracy.unwrap();
            assert_eq!(attacker.bit_accuracy, Some(1.0), "seed {seed}");
            assert!(attacker.decode_ok);
        }
        let mean = victim_ba / n as f64;
        assert!((mean - 0.5).abs() < 0.08, "victim BA after overwrite {mean}");
    }

    #[test]
    fn unwatermarked_reads_chance_level() {
        let key = WatermarkKey::from_u64(4, SS_DCT);
        let payload = random_payload(&key, 56).unwrap();
        let mut acc = 0.0;
        let n = 20;
        for seed in 0..n {
            let img = synth_image(300 + seed, 192, 192).unwrap();
            let out = codecs::detect(SS_DCT, &img, &key, Some(&payload)).unwrap();
            acc += out.bit_accuracy.unwrap();
        }
        let mean = acc / n as f64;
        assert!((mean - 0.5).abs() < 0.05, "null BA {mean}");
    }
}
