//! Six watermark codecs over a common embed/detect contract, plus the
//! registry exposing the taxonomy the attack policy is built on.
//!
//! All codecs use overwrite/QIM semantics rather than additive embedding:
//! the designated coefficient subspace is *re-written* as a function of the
//! key, so a second embedding with a fresh key replaces the first instead of
//! superimposing on it. Bit-to-coefficient geometry is method-fixed; only
//! dither and pattern values depend on the key.
//!
//! | id         | analog of        | kind      | capacity | attack tool |
//! |------------|------------------|-----------|----------|-------------|
//! | ring-fft   | latent ring      | zero-bit  | 0        | no          |
//! | latent-sig | latent QIM       | multi-bit | 48       | no          |
//! | chi2-ring  | frame-ring chi^2 | zero-bit  | 0        | yes         |
//! | ss-dct     | ECC block QIM    | multi-bit | 100      | yes         |
//! | pix-add    | frame QIM low    | multi-bit | 96       | yes         |
//! | pix-wide   | frame QIM high   | multi-bit | 256      | yes         |

#[doc(hidden)]
pub mod chi2_ring;
#[doc(hidden)]
pub mod latent_sig;
#[doc(hidden)]
pub mod pix;
pub mod profile;
pub mod qim;
#[doc(hidden)]
pub mod ring_fft;
#[doc(hidden)]
pub mod ss_dct;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::RgbImage;
use crate::key::{Payload, WatermarkKey};
use crate::stats::Direction;

pub const RING_FFT: &str = "ring-fft";
pub const LATENT_SIG: &str = "latent-sig";
pub const CHI2_RING: &str = "chi2-ring";
pub const SS_DCT: &str = "ss-dct";
pub const PIX_ADD: &str = "pix-add";
pub const PIX_WIDE: &str = "pix-wide";

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("unknown codec `{0}`")]
    UnknownCodec(String),
    #[error("key belongs to codec `{key}` but `{requested}` was requested")]
    KeyMismatch { key: String, requested: String },
    #[error("codec `{0}` is multi-bit and requires a payload")]
    PayloadRequired(String),
    #[error("codec `{0}` is zero-bit and takes no payload")]
    PayloadUnexpected(String),
    #[error("payload length {got} does not match codec payload length {want}")]
    PayloadLength { got: usize, want: usize },
    #[error("strength must be positive, got {0}")]
    BadStrength(f64),
    #[error("image {0}x{1} is too small for codec `{2}`")]
    ImageTooSmall(usize, usize, String),
    #[error(transparent)]
    Transform(#[from] crate::transforms::TransformError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodecKind {
    ZeroBit,
    MultiBit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    BitAccuracy,
    L1Distance,
    PValue,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodecDescriptor {
    pub codec_id: &'static str,
    pub kind: CodecKind,
    /// Registry-visible capacity: embedded coded bits (0 for zero-bit).
    pub capacity: usize,
    /// Bits expected at embed time. Equals `capacity` except for ss-dct,
    /// whose 56 data bits are ECC-expanded to the 100-bit capacity.
    pub payload_len: usize,
    /// False for the in-processing analogs: they cannot be applied post-hoc
    /// and therefore never serve as attack tools.
    pub attack_capable: bool,
    pub statistic: StatKind,
    pub statistic_direction: Direction,
    pub default_strength: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionOutcome {
    pub codec_id: String,
    /// The raw statistic: BA against the caller's reference payload
    /// (slot-agreement when no reference is given), L1 ring distance, or the
    /// non-central chi-squared p-value.
    pub score: f64,
    pub statistic: StatKind,
    /// Raw bit accuracy vs the reference payload; multi-bit with reference only.
    pub bit_accuracy: Option<f64>,
    pub decoded_payload: Option<Payload>,
    /// ECC decode success for ss-dct; trivially true for plain multi-bit
    /// codecs, false for zero-bit.
    pub decode_ok: bool,
}

static REGISTRY: [CodecDescriptor; 6] = [
    CodecDescriptor {
        codec_id: RING_FFT,
        kind: CodecKind::ZeroBit,
        capacity: 0,
        payload_len: 0,
        attack_capable: false,
        statistic: StatKind::L1Distance,
        statistic_direction: Direction::LessIsPositive,
        default_strength: 1.0,
    },
    CodecDescriptor {
        codec_id: LATENT_SIG,
        kind: CodecKind::MultiBit,
        capacity: 48,
        payload_len: 48,
        attack_capable: false,
        statistic: StatKind::BitAccuracy,
        statistic_direction: Direction::GreaterIsPositive,
        default_strength: 1.0,
    },
    CodecDescriptor {
        codec_id: CHI2_RING,
        kind: CodecKind::ZeroBit,
        capacity: 0,
        payload_len: 0,
        attack_capable: true,
        statistic: StatKind::PValue,
        statistic_direction: Direction::LessIsPositive,
        default_strength: 1.3,
    },
    CodecDescriptor {
        codec_id: SS_DCT,
        kind: CodecKind::MultiBit,
        capacity: 100,
        payload_len: 56,
        attack_capable: true,
        statistic: StatKind::BitAccuracy,
        statistic_direction: Direction::GreaterIsPositive,
        default_strength: 1.0,
    },
    CodecDescriptor {
        codec_id: PIX_ADD,
        kind: CodecKind::MultiBit,
        capacity: 96,
        payload_len: 96,
        attack_capable: true,
        statistic: StatKind::BitAccuracy,
        statistic_direction: Direction::GreaterIsPositive,
        default_strength: 1.0,
    },
    CodecDescriptor {
        codec_id: PIX_WIDE,
        kind: CodecKind::MultiBit,
        capacity: 256,
        payload_len: 256,
        attack_capable: true,
        statistic: StatKind::BitAccuracy,
        statistic_direction: Direction::GreaterIsPositive,
        default_strength: 1.0,
    },
];

pub fn registry() -> &'static [CodecDescriptor; 6] {
    &REGISTRY
}

pub fn descriptor(codec_id: &str) -> Result<&'static CodecDescriptor, CodecError> {
    REGISTRY
        .iter()
        .find(|d| d.codec_id == codec_id)
        .ok_or_else(|| CodecError::UnknownCodec(codec_id.to_string()))
}

fn validate_key(codec_id: &str, key: &WatermarkKey) -> Result<(), CodecError> {
    if key.codec_id != codec_id {
        return Err(CodecError::KeyMismatch {
            key: key.codec_id.clone(),
            requested: codec_id.to_string(),
        });
    }
    Ok(())
}

/// Embed a watermark. Returns a new image; the input is untouched. The
/// modification is confined to the codec's coefficient subspace and the
/// output is clamped to [0, 1].
pub fn embed(
    codec_id: &str,
    img: &RgbImage,
    key: &WatermarkKey,
    payload: Option<&Payload>,
    strength: f64,
) -> Result<RgbImage, CodecError> {
    let desc = descriptor(codec_id)?;
    validate_key(codec_id, key)?;
    if !(strength > 0.0) || !strength.is_finite() {
        return Err(CodecError::BadStrength(strength));
    }
    match desc.kind {
        CodecKind::ZeroBit => {
            if payload.is_some() {
                return Err(CodecError::PayloadUnexpected(codec_id.to_string()));
            }
        }
        CodecKind::MultiBit => {
            let p = payload.ok_or_else(|| CodecError::PayloadRequired(codec_id.to_string()))?;
            if p.len() != desc.payload_len {
                return Err(CodecError::PayloadLength { got: p.len(), want: desc.payload_len });
            }
        }
    }
    let mut out = match codec_id {
        RING_FFT => ring_fft::embed(img, key, strength),
        LATENT_SIG => latent_sig::embed(img, key, payload.unwrap(), strength)?,
        CHI2_RING => chi2_ring::embed(img, key, strength),
        SS_DCT => ss_dct::embed(img, key, payload.unwrap(), strength)?,
        PIX_ADD => pix::embed(pix::Variant::Add, img, key, payload.unwrap(), strength)?,
        PIX_WIDE => pix::embed(pix::Variant::Wide, img, key, payload.unwrap(), strength)?,
        _ => unreachable!("descriptor lookup precedes dispatch"),
    };
    out.clamp_in_place();
    Ok(out)
}

/// Run a codec's detector. For multi-bit codecs the caller may supply the
/// key-holder's reference payload; the score is then the raw bit accuracy
/// against it. Detection always uses the codec's default strength.
pub fn detect(
    codec_id: &str,
    img: &RgbImage,
    key: &WatermarkKey,
    reference: Option<&Payload>,
) -> Result<DetectionOutcome, CodecError> {
    let desc = descriptor(codec_id)?;
    validate_key(codec_id, key)?;
    if let Some(r) = reference {
        if desc.kind == CodecKind::ZeroBit {
            return Err(CodecError::PayloadUnexpected(codec_id.to_string()));
        }
        if r.len() != desc.payload_len {
            return Err(CodecError::PayloadLength { got: r.len(), want: desc.payload_len });
        }
    }
    match codec_id {
        RING_FFT => Ok(ring_fft::detect(img, key)),
        LATENT_SIG => latent_sig::detect(img, key, reference),
        CHI2_RING => Ok(chi2_ring::detect(img, key)),
        SS_DCT => ss_dct::detect(img, key, reference),
        PIX_ADD => pix::detect(pix::Variant::Add, img, key, reference),
        PIX_WIDE => pix::detect(pix::Variant::Wide, img, key, reference),
        _ => unreachable!(),
    }
}

/// Ids of codecs usable as re-watermarking attacks.
pub fn attack_capable_ids() -> Vec<&'static str> {
    REGISTRY.iter().filter(|d| d.attack_capable).map(|d| d.codec_id).collect()
}

pub fn all_ids() -> Vec<&'static str> {
    REGISTRY.iter().map(|d| d.codec_id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::synth_image;
    use crate::key::random_payload;

    #[test]
    fn registry_taxonomy() {
        assert_eq!(attack_capable_ids(), vec![CHI2_RING, SS_DCT, PIX_ADD, PIX_WIDE]);
        let zero: Vec<&str> = registry()
            .iter()
            .filter(|d| d.kind == CodecKind::ZeroBit)
            .map(|d| d.codec_id)
            .collect();
        assert_eq!(zero, vec![RING_FFT, CHI2_RING]);
        let caps: Vec<usize> = registry().iter().map(|d| d.capacity).collect();
        assert_eq!(caps, vec![0, 48, 0, 100, 96, 256]);
    }

    #[test]
    fn embed_validates_inputs() {
        let img = synth_image(0, 192, 192).unwrap();
        let key = WatermarkKey::from_u64(1, SS_DCT);
        let payload = random_payload(&key, 56).unwrap();
        // wrong key codec
        assert!(matches!(
            embed(PIX_ADD, &img, &key, Some(&payload), 1.0),
            Err(CodecError::KeyMismatch { .. })
        ));
        // unknown codec
        assert!(matches!(
            embed("nope", &img, &key, Some(&payload), 1.0),
            Err(CodecError::UnknownCodec(_))
        ));
        // missing payload
        assert!(matches!(
            embed(SS_DCT, &img, &key, None, 1.0),
            Err(CodecError::PayloadRequired(_))
        ));
        // payload on zero-bit
        let rkey = WatermarkKey::from_u64(1, RING_FFT);
        assert!(matches!(
            embed(RING_FFT, &img, &rkey, Some(&payload), 1.0),
            Err(CodecError::PayloadUnexpected(_))
        ));
        // wrong payload length
        let short = random_payload(&key, 10).unwrap();
        assert!(matches!(
            embed(SS_DCT, &img, &key, Some(&short), 1.0),
            Err(CodecError::PayloadLength { got: 10, want: 56 })
        ));
        // bad strength
        assert!(matches!(
            embed(SS_DCT, &img, &key, Some(&payload), 0.0),
            Err(CodecError::BadStrength(_))
        ));
    }
}
