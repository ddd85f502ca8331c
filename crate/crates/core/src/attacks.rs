//! Re-watermarking attacks and classical baseline distortions.
//!
//! Attacks are black-box: they never read victim keys or detector state. A
//! re-watermarking attack draws a fresh key (and payload, for multi-bit
//! codecs) from the per-image rng key and records both in a receipt so
//! forgery recovery can be evaluated later. Baselines are deterministic
//! given the same rng key.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codecs::{self, CodecError, CodecKind};
use crate::image::{ImagePlane, RgbImage};
use crate::key::{lanes, random_payload, Payload, WatermarkKey};
use crate::transforms::dct::{block_dct, block_idct};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("codec `{0}` cannot be applied post-hoc and is not usable as an attack")]
    NotAttackCapable(String),
    #[error("attack parameter out of range: {0}")]
    BadParameter(String),
    #[error("baseline sweep requires at least one level")]
    EmptyLevels,
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackKind {
    Identity,
    Rewatermark { codec_id: String, strength: f64 },
    Noise { sigma: f64 },
    Blur { sigma: f64 },
    /// Uniform quantization of the 8x8 block DCT; step in 8-bit units.
    JpegQuant { step: f64 },
    ResizeRestore { scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub attack_id: String,
    pub kind: AttackKind,
}

impl AttackSpec {
    pub fn identity() -> Self {
        Self { attack_id: "identity".into(), kind: AttackKind::Identity }
    }

    pub fn rewatermark(codec_id: &str, strength: f64) -> Result<Self, AttackError> {
        let desc = codecs::descriptor(codec_id)?;
        if !desc.attack_capable {
            return Err(AttackError::NotAttackCapable(codec_id.to_string()));
        }
        if !(strength > 0.0) {
            return Err(AttackError::BadParameter(format!("strength {strength}")));
        }
        let attack_id = if (strength - desc.default_strength).abs() < 1e-12 {
            format!("rewatermark:{codec_id}")
        } else {
            format!("rewatermark:{codec_id}@{strength}")
        };
        Ok(Self {
            attack_id,
            kind: AttackKind::Rewatermark { codec_id: codec_id.into(), strength },
        })
    }

    /// Re-watermark at the codec's default strength.
    pub fn rewatermark_default(codec_id: &str) -> Result<Self, AttackError> {
        let desc = codecs::descriptor(codec_id)?;
        Self::rewatermark(codec_id, desc.default_strength)
    }

    pub fn noise(sigma: f64) -> Self {
        Self { attack_id: format!("noise:{sigma}"), kind: AttackKind::Noise { sigma } }
    }

    pub fn blur(sigma: f64) -> Self {
        Self { attack_id: format!("blur:{sigma}"), kind: AttackKind::Blur { sigma } }
    }

    pub fn jpeg_quant(step: f64) -> Self {
        Self { attack_id: format!("jpeg:{step}"), kind: AttackKind::JpegQuant { step } }
    }

    pub fn resize_restore(scale: f64) -> Self {
        Self { attack_id: format!("resize:{scale}"), kind: AttackKind::ResizeRestore { scale } }
    }

    pub fn is_rewatermark(&self) -> bool {
        matches!(self.kind, AttackKind::Rewatermark { .. })
    }

    pub fn is_noise(&self) -> bool {
        matches!(self.kind, AttackKind::Noise { .. })
    }
}

/// What the attacker keeps: enough to later claim the new provenance trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackReceipt {
    pub attack_id: String,
    pub key: Option<WatermarkKey>,
    pub payload: Option<Payload>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Noise,
    Blur,
    JpegQuant,
    Resize,
}

/// One spec per level. Default levels: noise sigma {0.01, 0.02, 0.05},
/// blur sigma {0.5, 1.0, 2.0}, jpeg step {4, 8, 16}, resize {0.5, 0.75}.
pub fn baseline_sweep(kind: BaselineKind, levels: &[f64]) -> Result<Vec<AttackSpec>, AttackError> {
    if levels.is_empty() {
        return Err(AttackError::EmptyLevels);
    }
    Ok(levels
        .iter()
        .map(|&v| match kind {
            BaselineKind::Noise => AttackSpec::noise(v),
            BaselineKind::Blur => AttackSpec::blur(v),
            BaselineKind::JpegQuant => AttackSpec::jpeg_quant(v),
            BaselineKind::Resize => AttackSpec::resize_restore(v),
        })
        .collect())
}

pub fn default_baselines() -> Vec<AttackSpec> {
    let mut out = Vec::new();
    out.extend(baseline_sweep(BaselineKind::Noise, &[0.01, 0.02, 0.05]).unwrap());
    out.extend(baseline_sweep(BaselineKind::Blur, &[0.5, 1.0, 2.0]).unwrap());
    out.extend(baseline_sweep(BaselineKind::JpegQuant, &[4.0, 8.0, 16.0]).unwrap());
    out.extend(baseline_sweep(BaselineKind::Resize, &[0.5, 0.75]).unwrap());
    out
}

/// Apply an attack. Deterministic: the same (spec, image, rng_key) always
/// produces the same output.
pub fn apply_attack(
    spec: &AttackSpec,
    img: &RgbImage,
    rng_key: &WatermarkKey,
) -> Result<(RgbImage, AttackReceipt), AttackError> {
    let mut receipt =
        AttackReceipt { attack_id: spec.attack_id.clone(), key: None, payload: None };
    let out = match &spec.kind {
        AttackKind::Identity => img.clone(),
        AttackKind::Rewatermark { codec_id, strength } => {
            let desc = codecs::descriptor(codec_id)?;
            if !desc.attack_capable {
                return Err(AttackError::NotAttackCapable(codec_id.clone()));
            }
            let key = rng_key.derive(codec_id, "attacker-key", &spec.attack_id);
            let payload = match desc.kind {
                CodecKind::MultiBit => Some(
                    random_payload(
                        &rng_key.derive(codec_id, "attacker-payload", &spec.attack_id),
                        desc.payload_len,
                    )
                    .expect("positive payload length"),
                ),
                CodecKind::ZeroBit => None,
            };
            let out = codecs::embed(codec_id, img, &key, payload.as_ref(), *strength)?;
            receipt.key = Some(key);
            receipt.payload = payload;
            out
        }
        AttackKind::Noise { sigma } => {
            if !(*sigma > 0.0) {
                return Err(AttackError::BadParameter(format!("noise sigma {sigma}")));
            }
            let mut out = img.clone();
            let mut s = rng_key.stream(lanes::NOISE);
            for v in out.data.iter_mut() {
                *v = (*v + sigma * s.next_normal()).clamp(0.0, 1.0);
            }
            out
        }
        AttackKind::Blur { sigma } => {
            if !(*sigma > 0.0) {
                return Err(AttackError::BadParameter(format!("blur sigma {sigma}")));
            }
            gaussian_blur(img, *sigma)
        }
        AttackKind::JpegQuant { step } => {
            if !(*step > 0.0) {
                return Err(AttackError::BadParameter(format!("jpeg step {step}")));
            }
            jpeg_like_quantize(img, *step)?
        }
        AttackKind::ResizeRestore { scale } => {
            if !(*scale > 0.0 && *scale < 1.0) {
                return Err(AttackError::BadParameter(format!("resize scale {scale}")));
            }
            resize_restore(img, *scale)
        }
    };
    Ok((out, receipt))
}

fn channel_plane(img: &RgbImage, c: usize) -> ImagePlane {
    let mut out = ImagePlane::new(img.width, img.height);
    for idx in 0..img.width * img.height {
        out.data[idx] = img.data[idx * 3 + c];
    }
    out
}

fn set_channel(img: &mut RgbImage, c: usize, plane: &ImagePlane) {
    for idx in 0..img.width * img.height {
        img.data[idx * 3 + c] = plane.data[idx];
    }
}

fn gaussian_blur(img: &RgbImage, sigma: f64) -> RgbImage {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    for d in -radius..=radius {
        kernel.push((-((d * d) as f64) / (2.0 * sigma * sigma)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= norm;
    }
    let (w, h) = (img.width as isize, img.height as isize);
    let mut out = img.clone();
    for c in 0..3 {
        let plane = channel_plane(img, c);
        let mut rows = vec![0.0; plane.data.len()];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (ki, k) in kernel.iter().enumerate() {
                    let sx = (x + ki as isize - radius).clamp(0, w - 1);
                    acc += k * plane.data[(y * w + sx) as usize];
                }
                rows[(y * w + x) as usize] = acc;
            }
        }
        let mut blurred = ImagePlane::new(img.width, img.height);
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (ki, k) in kernel.iter().enumerate() {
                    let sy = (y + ki as isize - radius).clamp(0, h - 1);
                    acc += k * rows[(sy * w + x) as usize];
                }
                blurred.data[(y * w + x) as usize] = acc;
            }
        }
        set_channel(&mut out, c, &blurred);
    }
    out.clamp_in_place();
    out
}

fn jpeg_like_quantize(img: &RgbImage, step: f64) -> Result<RgbImage, AttackError> {
    let q = step / 255.0;
    let mut out = img.clone();
    for c in 0..3 {
        let plane = channel_plane(img, c);
        let mut bdct = block_dct(&plane).map_err(CodecError::from)?;
        for v in bdct.coeffs.iter_mut() {
            *v = (*v / q).round() * q;
        }
        set_channel(&mut out, c, &block_idct(&bdct));
    }
    out.clamp_in_place();
    Ok(out)
}

fn bilinear_resample(plane: &ImagePlane, new_w: usize, new_h: usize) -> ImagePlane {
    let mut out = ImagePlane::new(new_w, new_h);
    let sx = plane.width as f64 / new_w as f64;
    let sy = plane.height as f64 / new_h as f64;
    for y in 0..new_h {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, plane.height as f64 - 1.0);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(plane.height - 1);
        let ty = fy - y0 as f64;
        for x in 0..new_w {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, plane.width as f64 - 1.0);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(plane.width - 1);
            let tx = fx - x0 as f64;
            let v = plane.at(x0, y0) * (1.0 - tx) * (1.0 - ty)
                + plane.at(x1, y0) * tx * (1.0 - ty)
                + plane.at(x0, y1) * (1.0 - tx) * ty
                + plane.at(x1, y1) * tx * ty;
            out.set(x, y, v);
        }
    }
    out
}

fn resize_restore(img: &RgbImage, scale: f64) -> RgbImage {
    let dw = ((img.width as f64 * scale).round() as usize).max(8);
    let dh = ((img.height as f64 * scale).round() as usize).max(8);
    let mut out = img.clone();
    for c in 0..3 {
        let plane = channel_plane(img, c);
        let small = bilinear_resample(&plane, dw, dh);
        let restored = bilinear_resample(&small, img.width, img.height);
        set_channel(&mut out, c, &restored);
    }
    out.clamp_in_place();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::synth_image;
    use crate::quality::quality_vector;

    fn rng(tag: u64) -> WatermarkKey {
        WatermarkKey::from_u64(tag, "attack-rng")
    }

    #[test]
    fn identity_is_bit_exact() {
        let img = synth_image(0, 64, 64).unwrap();
        let (out, receipt) = apply_attack(&AttackSpec::identity(), &img, &rng(0)).unwrap();
        assert_eq!(out, img);
        assert!(receipt.key.is_none());
    }

    #[test]
    fn in_processing_codecs_are_rejected_as_attacks() {
        assert!(matches!(
            AttackSpec::rewatermark("ring-fft", 1.0),
            Err(AttackError::NotAttackCapable(_))
        ));
        assert!(matches!(
            AttackSpec::rewatermark("latent-sig", 1.0),
            Err(AttackError::NotAttackCapable(_))
        ));
        assert!(AttackSpec::rewatermark("chi2-ring", 1.3).is_ok());
    }

    #[test]
    fn noise_psnr_matches_sigma() {
        let mut acc = 0.0;
        let n = 20;
        for seed in 0..n {
            let img = synth_image(seed, 128, 128).unwrap();
            let (out, _) = apply_attack(&AttackSpec::noise(0.02), &img, &rng(seed)).unwrap();
            acc += quality_vector(&img, &out).unwrap().psnr_db;
        }
        let mean = acc / n as f64;
        assert!((mean - 33.98).abs() < 0.3, "noise PSNR {mean}");
    }

    #[test]
    fn attacks_are_deterministic() {
        let img = synth_image(3, 64, 64).unwrap();
        for spec in [
            AttackSpec::noise(0.05),
            AttackSpec::blur(1.0),
            AttackSpec::jpeg_quant(8.0),
            AttackSpec::resize_restore(0.5),
            AttackSpec::rewatermark_default("ss-dct").unwrap(),
        ] {
            let (a, _) = apply_attack(&spec, &img, &rng(7)).unwrap();
            let (b, _) = apply_attack(&spec, &img, &rng(7)).unwrap();
            assert_eq!(a, b, "{}", spec.attack_id);
        }
    }

    #[test]
    fn rewatermark_receipt_allows_recovery() {
        let img = synth_image(5, 192, 192).unwrap();
        let spec = AttackSpec::rewatermark_default("pix-add").unwrap();
        let (out, receipt) = apply_attack(&spec, &img, &rng(11)).unwrap();
        let outcome = codecs::detect(
            "pix-add",
            &out,
            receipt.key.as_ref().unwrap(),
            receipt.payload.as_ref(),
        )
        .unwrap();
        assert_eq!(outcome.bit_accuracy, Some(1.0));
    }

    #[test]
    fn sweep_constructs_declared_levels() {
        let specs = baseline_sweep(BaselineKind::Noise, &[0.01, 0.02, 0.05]).unwrap();
        assert_eq!(specs.len(), 3);
        assert_eq!(specs[0].attack_id, "noise:0.01");
        assert!(baseline_sweep(BaselineKind::Blur, &[]).is_err());
        assert_eq!(default_baselines().len(), 11);
    }

    #[test]
    fn jpeg_quant_flips_qim_slots_at_coarse_steps() {
        // step 16 (8-bit units) is coarser than the ss-dct lattice
        let key = WatermarkKey::from_u64(1, "ss-dct");
        let payload = crate::key::random_payload(&key, 56).unwrap();
        let img = synth_image(8, 192, 192).unwrap();
        let marked = codecs::embed("ss-dct", &img, &key, Some(&payload), 1.0).unwrap();
        let (attacked, _) =
            apply_attack(&AttackSpec::jpeg_quant(16.0), &marked, &rng(2)).unwrap();
        let ba = codecs::detect("ss-dct", &attacked, &key, Some(&payload))
            .unwrap()
            .bit_accuracy
            .unwrap();
        assert!(ba < 1.0, "coarse quantization must flip some slots, ba {ba}");
    }
}
