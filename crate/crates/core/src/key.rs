//! Keyed deterministic randomness and payload handling.
//!
//! All codec-internal randomness (dither sequences, pattern values, attacker
//! keys, synthetic corpora) is a pure function of a 256-bit seed, the owning
//! codec id, and a lane index. The stream construction is frozen:
//!
//! ```text
//! lane_seed = SHA-256(seed || len(codec_id) as u8 || codec_id || lane as LE u64)
//! words    = ChaCha12 keyed by lane_seed, counter mode
//! uniform  = (next_u64 >> 11) as f64 * 2^-53          (in [0, 1))
//! normal   = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)        (Box-Muller, pairwise)
//! ```
//!
//! Golden vectors for three fixed (key, lane) pairs are committed in the
//! tests; they must never change across releases.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Lane assignments used across the crate. Lanes only need to be unique per
/// (seed, codec_id); collisions across different codec ids are harmless.
pub mod lanes {
    /// Payload bit generation.
    pub const PAYLOAD: u64 = 1;
    /// Per-slot QIM dither.
    pub const DITHER: u64 = 2;
    /// Gaussian / ring pattern values.
    pub const PATTERN: u64 = 3;
    /// Baseline noise attacks.
    pub const NOISE: u64 = 4;
    /// Synthetic image: luminance spectrum.
    pub const SYNTH_LUMA: u64 = 5;
    /// Synthetic image: chroma fields and per-image scalars.
    pub const SYNTH_CHROMA: u64 = 6;
}

#[derive(Debug, Error)]
pub enum KeyError {
    #[error("seed must be 64 hex characters, got {0}")]
    BadSeedHex(String),
    #[error("payload length must be positive")]
    EmptyPayload,
    #[error("payload bits must be 0 or 1")]
    NonBinaryPayload,
}

/// Secret material of one watermark instance: a 256-bit seed bound to the
/// codec that owns it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WatermarkKey {
    #[serde(with = "seed_hex")]
    pub seed: [u8; 32],
    pub codec_id: String,
}

mod seed_hex {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(seed))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let text = String::deserialize(d)?;
        let bytes = hex::decode(&text).map_err(serde::de::Error::custom)?;
        bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("seed must be 32 bytes"))
    }
}

impl WatermarkKey {
    pub fn new(seed: [u8; 32], codec_id: &str) -> Self {
        Self { seed, codec_id: codec_id.to_string() }
    }

    /// Expand a small integer into a full seed. Convenience for tests and the
    /// synthetic corpus generator.
    pub fn from_u64(seed: u64, codec_id: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"wmarena-seed64");
        hasher.update(seed.to_le_bytes());
        Self::new(hasher.finalize().into(), codec_id)
    }

    pub fn from_hex(text: &str, codec_id: &str) -> Result<Self, KeyError> {
        let bytes = hex::decode(text).map_err(|_| KeyError::BadSeedHex(text.to_string()))?;
        let seed: [u8; 32] =
            bytes.try_into().map_err(|_| KeyError::BadSeedHex(text.to_string()))?;
        Ok(Self::new(seed, codec_id))
    }

    pub fn seed_hex(&self) -> String {
        hex::encode(self.seed)
    }

    /// Derive an independent key for another purpose (attacker keys, per-image
    /// victim keys, payload draws). Pure function of the inputs.
    pub fn derive(&self, codec_id: &str, label: &str, context: &str) -> WatermarkKey {
        let mut hasher = Sha256::new();
        hasher.update(b"wmarena-derive");
        hasher.update(self.seed);
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        hasher.update((context.len() as u64).to_le_bytes());
        hasher.update(context.as_bytes());
        WatermarkKey::new(hasher.finalize().into(), codec_id)
    }

    /// Open the keyed PRF stream for one lane.
    pub fn stream(&self, lane: u64) -> KeyedStream {
        let mut hasher = Sha256::new();
        hasher.update(self.seed);
        hasher.update([self.codec_id.len() as u8]);
        hasher.update(self.codec_id.as_bytes());
        hasher.update(lane.to_le_bytes());
        let lane_seed: [u8; 32] = hasher.finalize().into();
        KeyedStream { rng: ChaCha12Rng::from_seed(lane_seed) }
    }
}

/// Counter-mode keyed PRF stream producing uniforms and normals.
pub struct KeyedStream {
    rng: ChaCha12Rng,
}

impl KeyedStream {
    /// Raw 64-bit PRF word.
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller; consumes two uniforms per call.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn uniforms(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.next_uniform()).collect()
    }

    pub fn normals(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.next_normal()).collect()
    }
}

/// Deterministic uniform stream for (key, lane). Distinct lanes are
/// statistically independent.
pub fn keyed_stream(key: &WatermarkKey, lane: u64, count: usize) -> Vec<f64> {
    key.stream(lane).uniforms(count)
}

/// Message bits carried by a multi-bit codec. Serializes as a bit string
/// ("0110...") in JSON artifacts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payload {
    bits: Vec<u8>,
}

impl Serialize for Payload {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_bitstring())
    }
}

impl<'de> Deserialize<'de> for Payload {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Payload::from_bitstring(&text).map_err(serde::de::Error::custom)
    }
}

impl Payload {
    pub fn new(bits: Vec<u8>) -> Result<Self, KeyError> {
        if bits.is_empty() {
            return Err(KeyError::EmptyPayload);
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(KeyError::NonBinaryPayload);
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bit string like "0110..." for logs and manifests.
    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(text: &str) -> Result<Self, KeyError> {
        let bits = text
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                _ => Err(KeyError::NonBinaryPayload),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Payload::new(bits)
    }
}

/// Deterministic random payload: keyed_stream thresholded at 0.5.
pub fn random_payload(key: &WatermarkKey, length: usize) -> Result<Payload, KeyError> {
    if length == 0 {
        return Err(KeyError::EmptyPayload);
    }
    let bits = keyed_stream(key, lanes::PAYLOAD, length)
        .into_iter()
        .map(|u| u8::from(u >= 0.5))
        .collect();
    Payload::new(bits)
}
