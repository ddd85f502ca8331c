//! The end-to-end black-box attack pipeline: classify each watermarked image,
//! route it through the attack policy, attack, and re-evaluate, with
//! misclassification accounting.
//!
//! Beige-box mode bypasses the classifier and routes by ground truth; with
//! the same seed its per-image computations are bit-identical to the arena's
//! policy-selected matrix cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::arena::{attack_rng, victim_key, victim_payload, PolicyTable};
use crate::attacks::{apply_attack, AttackSpec};
use crate::classify::ClassifierModel;
use crate::codecs;
use crate::corpus::{LoadedImage, UNWATERMARKED_LABEL};
use crate::quality::{fit_nqd, nqd_score, QualityVector};
use crate::stats::Threshold;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("policy has no entry for class `{0}`")]
    PolicyGap(String),
    #[error("black-box mode requires a classifier model")]
    MissingModel,
    #[error("runs compare only over the same corpus and seed")]
    RunMismatch,
    #[error("unknown attack id `{0}` in policy")]
    UnknownAttack(String),
    #[error(transparent)]
    Arena(#[from] crate::arena::ArenaError),
    #[error(transparent)]
    Codec(#[from] codecs::CodecError),
    #[error(transparent)]
    Attack(#[from] crate::attacks::AttackError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error(transparent)]
    Quality(#[from] crate::quality::QualityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    BlackBox,
    BeigeBox,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub seed: u64,
    pub target_fpr: f64,
    /// When set, a prediction of "unwatermarked" still re-watermarks with the
    /// chi2-ring codec instead of bypassing (off by default: the bypass is
    /// the misclassification failure mode under study).
    pub paranoid: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineRecord {
    pub image_id: String,
    pub victim_id: String,
    pub predicted: String,
    pub attack_id: String,
    pub bypassed: bool,
    pub score_clean: f64,
    pub ba_clean: Option<f64>,
    pub score_unwm: f64,
    pub ba_unwm: Option<f64>,
    pub score_atk: f64,
    pub ba_atk: Option<f64>,
    pub detected_clean: bool,
    pub detected_atk: bool,
    pub quality: QualityVector,
    pub nqd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VictimAggregate {
    pub victim_id: String,
    pub n: usize,
    pub ba_clean: Option<f64>,
    pub ba_unwm: Option<f64>,
    pub ba_atk: Option<f64>,
    pub mean_score_clean: f64,
    pub mean_score_unwm: f64,
    pub mean_score_atk: f64,
    pub tpr_clean: f64,
    pub tpr_atk: f64,
    pub mean_nqd: f64,
    /// Images misclassified as unwatermarked (and therefore left unattacked).
    pub n_mis: usize,
    pub predicted_histogram: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineRun {
    pub mode: Mode,
    pub seed: u64,
    pub corpus_fingerprint: String,
    pub victims: Vec<VictimAggregate>,
    pub thresholds: Vec<Threshold>,
    pub records: Vec<PipelineRecord>,
}

impl PipelineRun {
    pub fn victim(&self, victim_id: &str) -> Option<&VictimAggregate> {
        self.victims.iter().find(|v| v.victim_id == victim_id)
    }
}

fn corpus_fingerprint(images: &[LoadedImage]) -> String {
    use sha2::{Digest, Sha256};
    let mut ids: Vec<&str> = images.iter().map(|i| i.id.as_str()).collect();
    ids.sort();
    let mut hasher = Sha256::new();
    for id in ids {
        hasher.update(id.as_bytes());
        hasher.update([0]);
    }
    hex::encode(&hasher.finalize()[..8])
}

/// Run the pipeline over every (victim, image) pair.
pub fn run_pipeline(
    images: &[LoadedImage],
    negatives: &[LoadedImage],
    victims: &[String],
    model: Option<&ClassifierModel>,
    policy: &PolicyTable,
    cfg: &PipelineConfig,
) -> Result<PipelineRun, PipelineError> {
    if cfg.mode == Mode::BlackBox && model.is_none() {
        return Err(PipelineError::MissingModel);
    }
    // The policy must cover every victim and every class the model can emit
    // before any image is processed ("unwatermarked" maps to identity).
    for victim in victims {
        if policy.attack_for(victim).is_none() {
            return Err(PipelineError::PolicyGap(victim.clone()));
        }
    }
    if let Some(m) = model {
        for class in &m.classes {
            if class != UNWATERMARKED_LABEL && policy.attack_for(class).is_none() {
                return Err(PipelineError::PolicyGap(class.clone()));
            }
        }
    }
    let attack_lookup: BTreeMap<&str, AttackSpec> = {
        let mut map = BTreeMap::new();
        for entry in &policy.entries {
            map.insert(entry.victim_id.as_str(), spec_for_attack_id(&entry.attack_id)?);
        }
        map
    };
    let paranoid_attack = AttackSpec::rewatermark_default(codecs::CHI2_RING)?;

    let thresholds =
        crate::arena::calibrate_victim_thresholds(negatives, victims, cfg.seed, cfg.target_fpr)?;

    let mut sorted: Vec<&LoadedImage> = images.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    let mut records: Vec<PipelineRecord> = Vec::new();
    for victim in victims {
        let desc = codecs::descriptor(victim)?;
        let mut victim_records: Vec<PipelineRecord> = sorted
            .par_iter()
            .map(|img| -> Result<PipelineRecord, PipelineError> {
                let key = victim_key(cfg.seed, victim, &img.id);
                let payload = victim_payload(cfg.seed, victim, &img.id);
                let real = img.image.to_real();
                let marked =
                    codecs::embed(victim, &real, &key, payload.as_ref(), desc.default_strength)?;

                let clean = codecs::detect(victim, &marked, &key, payload.as_ref())?;
                let unwm = codecs::detect(victim, &real, &key, payload.as_ref())?;

                let predicted = match cfg.mode {
                    Mode::BeigeBox => victim.clone(),
                    Mode::BlackBox => {
                        model.expect("validated").predict_image(&marked).map_err(|e| {
                            PipelineError::Arena(crate::arena::ArenaError::Codec(
                                codecs::CodecError::UnknownCodec(e.to_string()),
                            ))
                        })?
                        .0
                    }
                };
                let (attack, bypassed) = if predicted == UNWATERMARKED_LABEL {
                    if cfg.paranoid {
                        (paranoid_attack.clone(), false)
                    } else {
                        (AttackSpec::identity(), true)
                    }
                } else {
                    (attack_lookup[predicted.as_str()].clone(), false)
                };
                let rng = attack_rng(cfg.seed, &attack.attack_id, &img.id);
                let (attacked, _receipt) = apply_attack(&attack, &marked, &rng)?;
                let post = codecs::detect(victim, &attacked, &key, payload.as_ref())?;
                let quality = crate::quality::quality_vector(&marked, &attacked)?;
                Ok(PipelineRecord {
                    image_id: img.id.clone(),
                    victim_id: victim.clone(),
                    predicted,
                    attack_id: attack.attack_id.clone(),
                    bypassed,
                    score_clean: clean.score,
                    ba_clean: clean.bit_accuracy,
                    score_unwm: unwm.score,
                    ba_unwm: unwm.bit_accuracy,
                    score_atk: post.score,
                    ba_atk: post.bit_accuracy,
                    detected_clean: false,
                    detected_atk: false,
                    quality,
                    nqd: 0.0,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let threshold =
            thresholds.iter().find(|t| &t.codec_id == victim).expect("calibrated above");
        for r in victim_records.iter_mut() {
            r.detected_clean = threshold.is_positive(r.score_clean);
            r.detected_atk = threshold.is_positive(r.score_atk);
        }
        records.extend(victim_records);
    }

    // NQD over all attacked images in the run
    let quality: Vec<QualityVector> = records.iter().map(|r| r.quality).collect();
    let nqd_model = fit_nqd(&quality)?;
    for r in records.iter_mut() {
        r.nqd = nqd_score(&r.quality, &nqd_model);
    }

    let mut victims_out = Vec::new();
    for victim in victims {
        let rows: Vec<&PipelineRecord> =
            records.iter().filter(|r| &r.victim_id == victim).collect();
        let n = rows.len();
        let mean = |f: &dyn Fn(&PipelineRecord) -> f64| -> f64 {
            rows.iter().map(|r| f(r)).sum::<f64>() / n.max(1) as f64
        };
        let mean_opt = |f: &dyn Fn(&PipelineRecord) -> Option<f64>| -> Option<f64> {
            let vals: Vec<f64> = rows.iter().filter_map(|r| f(r)).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
        for r in &rows {
            *histogram.entry(r.predicted.clone()).or_default() += 1;
        }
        victims_out.push(VictimAggregate {
            victim_id: victim.clone(),
            n,
            ba_clean: mean_opt(&|r| r.ba_clean),
            ba_unwm: mean_opt(&|r| r.ba_unwm),
            ba_atk: mean_opt(&|r| r.ba_atk),
            mean_score_clean: mean(&|r| r.score_clean),
            mean_score_unwm: mean(&|r| r.score_unwm),
            mean_score_atk: mean(&|r| r.score_atk),
            tpr_clean: rows.iter().filter(|r| r.detected_clean).count() as f64 / n.max(1) as f64,
            tpr_atk: rows.iter().filter(|r| r.detected_atk).count() as f64 / n.max(1) as f64,
            mean_nqd: mean(&|r| r.nqd),
            n_mis: rows.iter().filter(|r| r.predicted == UNWATERMARKED_LABEL).count(),
            predicted_histogram: histogram,
        });
    }

    Ok(PipelineRun {
        mode: cfg.mode,
        seed: cfg.seed,
        corpus_fingerprint: corpus_fingerprint(images),
        victims: victims_out,
        thresholds,
        records,
    })
}

fn spec_for_attack_id(attack_id: &str) -> Result<AttackSpec, PipelineError> {
    if attack_id == "identity" {
        return Ok(AttackSpec::identity());
    }
    if let Some(rest) = attack_id.strip_prefix("rewatermark:") {
        let (codec, strength) = match rest.split_once('@') {
            Some((codec, s)) => (
                codec,
                s.parse::<f64>().map_err(|_| PipelineError::UnknownAttack(attack_id.into()))?,
            ),
            None => {
                let desc = codecs::descriptor(rest)
                    .map_err(|_| PipelineError::UnknownAttack(attack_id.into()))?;
                (rest, desc.default_strength)
            }
        };
        return Ok(AttackSpec::rewatermark(codec, strength)?);
    }
    Err(PipelineError::UnknownAttack(attack_id.into()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VictimComparison {
    pub victim_id: String,
    pub tpr_blackbox: f64,
    pub tpr_beigebox: f64,
    pub delta_tpr: f64,
    pub ba_blackbox: Option<f64>,
    pub ba_beigebox: Option<f64>,
    pub delta_ba: Option<f64>,
    pub n_mis: usize,
    /// Predictions differing from the truth, excluding "unwatermarked".
    pub n_cross_confusions: usize,
    pub predicted_histogram: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub victims: Vec<VictimComparison>,
}

/// Per-victim deltas between a black-box run and the beige-box oracle run,
/// with the gap attributed to bypasses (#mis) and cross-class confusions.
pub fn compare_runs(
    blackbox: &PipelineRun,
    beigebox: &PipelineRun,
) -> Result<ComparisonReport, PipelineError> {
    if blackbox.corpus_fingerprint != beigebox.corpus_fingerprint
        || blackbox.seed != beigebox.seed
    {
        return Err(PipelineError::RunMismatch);
    }
    let mut victims = Vec::new();
    for bb in &blackbox.victims {
        let Some(gb) = beigebox.victim(&bb.victim_id) else {
            continue;
        };
        let cross = bb
            .predicted_histogram
            .iter()
            .filter(|(class, _)| *class != &bb.victim_id && *class != UNWATERMARKED_LABEL)
            .map(|(_, n)| n)
            .sum();
        victims.push(VictimComparison {
            victim_id: bb.victim_id.clone(),
            tpr_blackbox: bb.tpr_atk,
            tpr_beigebox: gb.tpr_atk,
            delta_tpr: bb.tpr_atk - gb.tpr_atk,
            ba_blackbox: bb.ba_atk,
            ba_beigebox: gb.ba_atk,
            delta_ba: match (bb.ba_atk, gb.ba_atk) {
                (Some(a), Some(b)) => Some(a - b),
                _ => None,
            },
            n_mis: bb.n_mis,
            n_cross_confusions: cross,
            predicted_histogram: bb.predicted_histogram.clone(),
        });
    }
    Ok(ComparisonReport { victims })
}
