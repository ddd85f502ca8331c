//! The policy-training arena: victim x attack interference matrix, the
//! derived attack policy, and ownership-forgery evaluation.
//!
//! Keys and payloads are derived per (run seed, codec, image id), so results
//! are independent of corpus ordering, and aggregation always runs in
//! image-id-sorted order — matrix cells replay bit-identically.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::attacks::{apply_attack, AttackError, AttackSpec};
use crate::codecs::{self, CodecError, CodecKind};
use crate::corpus::LoadedImage;
use crate::key::{random_payload, Payload, WatermarkKey};
use crate::quality::{fit_nqd, nqd_score, QualityError, QualityVector};
use crate::stats::{calibrate_threshold, tpr_at_threshold, StatsError, Threshold};

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error("victim set is empty")]
    NoVictims,
    #[error("attack set is empty")]
    NoAttacks,
    #[error("matrix needs at least 2 corpus images, got {0}")]
    TooFewImages(usize),
    #[error("{0} of {1} images failed (> 5% skip budget)")]
    TooManySkips(usize, usize),
    #[error("matrix has no cells for victim `{0}`")]
    MissingVictim(String),
    #[error("empty matrix")]
    EmptyMatrix,
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Quality(#[from] QualityError),
}

/// Key/payload derivation shared by the arena and the pipeline so that runs
/// with the same seed see bit-identical embeddings.
pub fn victim_key(seed: u64, victim_id: &str, image_id: &str) -> WatermarkKey {
    WatermarkKey::from_u64(seed, victim_id).derive(victim_id, "victim-key", image_id)
}

pub fn victim_payload(seed: u64, victim_id: &str, image_id: &str) -> Option<Payload> {
    let desc = codecs::descriptor(victim_id).ok()?;
    if desc.kind == CodecKind::ZeroBit {
        return None;
    }
    let key = WatermarkKey::from_u64(seed, victim_id).derive(victim_id, "victim-payload", image_id);
    Some(random_payload(&key, desc.payload_len).expect("positive payload length"))
}

pub fn attack_rng(seed: u64, attack_id: &str, image_id: &str) -> WatermarkKey {
    WatermarkKey::from_u64(seed, "attack-rng").derive("attack-rng", attack_id, image_id)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRecord {
    pub image_id: String,
    pub victim_score: f64,
    pub victim_ba: Option<f64>,
    pub victim_detected: bool,
    pub attacker_score: Option<f64>,
    pub attacker_ba: Option<f64>,
    pub attacker_detected: Option<bool>,
    pub quality: QualityVector,
    pub nqd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterferenceCell {
    pub victim_id: String,
    pub attack_id: String,
    pub tpr_at_fpr: f64,
    pub mean_ba: Option<f64>,
    pub mean_score: f64,
    pub mean_nqd: f64,
    pub mean_attacker_ba: Option<f64>,
    pub attacker_tpr: Option<f64>,
    pub records: Vec<CellRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterferenceMatrix {
    pub seed: u64,
    pub target_fpr: f64,
    pub n_images: usize,
    pub victims: Vec<String>,
    pub attacks: Vec<AttackSpec>,
    pub thresholds: Vec<Threshold>,
    pub nqd_model: crate::quality::NqdModel,
    pub cells: Vec<InterferenceCell>,
    pub skipped: Vec<(String, String)>,
}

impl InterferenceMatrix {
    pub fn cell(&self, victim_id: &str, attack_id: &str) -> Option<&InterferenceCell> {
        self.cells.iter().find(|c| c.victim_id == victim_id && c.attack_id == attack_id)
    }

    pub fn threshold(&self, victim_id: &str) -> Option<&Threshold> {
        self.thresholds.iter().find(|t| t.codec_id == victim_id)
    }
}

/// Per-victim detection thresholds calibrated on unwatermarked negatives at
/// `target_fpr`, using the same per-image key derivation as the matrix.
pub fn calibrate_victim_thresholds(
    negatives: &[LoadedImage],
    victims: &[String],
    seed: u64,
    target_fpr: f64,
) -> Result<Vec<Threshold>, ArenaError> {
    let mut thresholds = Vec::with_capacity(victims.len());
    for victim in victims {
        let desc = codecs::descriptor(victim)?;
        let scores: Vec<f64> = negatives
            .par_iter()
            .map(|img| {
                let key = victim_key(seed, victim, &img.id);
                let payload = victim_payload(seed, victim, &img.id);
                let real = img.image.to_real();
                codecs::detect(victim, &real, &key, payload.as_ref()).map(|o| o.score)
            })
            .collect::<Result<Vec<_>, _>>()?;
        thresholds.push(calibrate_threshold(victim, &scores, desc.statistic_direction, target_fpr)?);
    }
    Ok(thresholds)
}

struct WorkItem {
    image_id: String,
    attack_id: String,
    record: Result<CellRecord, String>,
}

/// Build the victim x attack interference matrix.
///
/// For every image and victim: derive a fresh key and payload, embed; for
/// every attack: apply it on top, run the victim detector (and the attacker's
/// own detector for re-watermarking attacks), and measure quality against the
/// once-watermarked reference. The NQD model is fitted over all attacked
/// images in the run, then cells aggregate in image-id order.
pub fn build_matrix(
    images: &[LoadedImage],
    negatives: &[LoadedImage],
    victims: &[String],
    attacks: &[AttackSpec],
    seed: u64,
    target_fpr: f64,
) -> Result<InterferenceMatrix, ArenaError> {
    if victims.is_empty() {
        return Err(ArenaError::NoVictims);
    }
    if attacks.is_empty() {
        return Err(ArenaError::NoAttacks);
    }
    if images.len() < 2 {
        return Err(ArenaError::TooFewImages(images.len()));
    }
    for v in victims {
        codecs::descriptor(v)?;
    }

    let thresholds = calibrate_victim_thresholds(negatives, victims, seed, target_fpr)?;
    let attacker_thresholds = attacker_threshold_map(negatives, attacks, seed, target_fpr)?;

    let mut sorted: Vec<&LoadedImage> = images.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    // one parallel pass per victim over (image x attack)
    let mut cells: Vec<InterferenceCell> = Vec::new();
    let mut skipped: Vec<(String, String)> = Vec::new();
    for victim in victims {
        let items: Vec<WorkItem> = sorted
            .par_iter()
            .flat_map_iter(|img| {
                let results = process_victim_image(img, victim, attacks, seed);
                results.into_iter().map(move |(attack_id, record)| WorkItem {
                    image_id: img.id.clone(),
                    attack_id,
                    record,
                })
            })
            .collect();

        let mut per_attack: BTreeMap<String, Vec<CellRecord>> = BTreeMap::new();
        for item in items {
            match item.record {
                Ok(rec) => per_attack.entry(item.attack_id).or_default().push(rec),
                Err(reason) => {
                    skipped.push((format!("{victim}/{}", item.image_id), reason));
                }
            }
        }
        let budget = images.len() * attacks.len() / 20;
        let victim_skips = skipped.iter().filter(|(k, _)| k.starts_with(&format!("{victim}/"))).count();
        if victim_skips > budget {
            return Err(ArenaError::TooManySkips(victim_skips, images.len() * attacks.len()));
        }
        let threshold =
            thresholds.iter().find(|t| &t.codec_id == victim).expect("calibrated above");
        for attack in attacks {
            let mut records = per_attack.remove(&attack.attack_id).unwrap_or_default();
            records.sort_by(|a, b| a.image_id.cmp(&b.image_id));
            // decisions against the calibrated threshold
            for r in records.iter_mut() {
                r.victim_detected = threshold.is_positive(r.victim_score);
                if let (Some(score), Some(at)) =
                    (r.attacker_score, attacker_thresholds.get(&attack.attack_id))
                {
                    r.attacker_detected = Some(at.is_positive(score));
                }
            }
            cells.push(InterferenceCell {
                victim_id: victim.clone(),
                attack_id: attack.attack_id.clone(),
                tpr_at_fpr: 0.0,
                mean_ba: None,
                mean_score: 0.0,
                mean_nqd: 0.0,
                mean_attacker_ba: None,
                attacker_tpr: None,
                records,
            });
        }
    }

    // NQD is fitted over all attacked images in the run
    let all_quality: Vec<QualityVector> =
        cells.iter().flat_map(|c| c.records.iter().map(|r| r.quality)).collect();
    let nqd_model = fit_nqd(&all_quality)?;
    for cell in cells.iter_mut() {
        for r in cell.records.iter_mut() {
            r.nqd = nqd_score(&r.quality, &nqd_model);
        }
        let n = cell.records.len().max(1) as f64;
        cell.tpr_at_fpr = cell.records.iter().filter(|r| r.victim_detected).count() as f64 / n;
        cell.mean_score = cell.records.iter().map(|r| r.victim_score).sum::<f64>() / n;
        cell.mean_nqd = cell.records.iter().map(|r| r.nqd).sum::<f64>() / n;
        let bas: Vec<f64> = cell.records.iter().filter_map(|r| r.victim_ba).collect();
        cell.mean_ba =
            (!bas.is_empty()).then(|| bas.iter().sum::<f64>() / bas.len() as f64);
        let abas: Vec<f64> = cell.records.iter().filter_map(|r| r.attacker_ba).collect();
        cell.mean_attacker_ba =
            (!abas.is_empty()).then(|| abas.iter().sum::<f64>() / abas.len() as f64);
        let adet: Vec<bool> = cell.records.iter().filter_map(|r| r.attacker_detected).collect();
        cell.attacker_tpr = (!adet.is_empty())
            .then(|| adet.iter().filter(|&&d| d).count() as f64 / adet.len() as f64);
    }

    Ok(InterferenceMatrix {
        seed,
        target_fpr,
        n_images: images.len(),
        victims: victims.to_vec(),
        attacks: attacks.to_vec(),
        thresholds,
        nqd_model,
        cells,
        skipped,
    })
}

fn process_victim_image(
    img: &LoadedImage,
    victim: &str,
    attacks: &[AttackSpec],
    seed: u64,
) -> Vec<(String, Result<CellRecord, String>)> {
    let key = victim_key(seed, victim, &img.id);
    let payload = victim_payload(seed, victim, &img.id);
    let real = img.image.to_real();
    let desc = codecs::descriptor(victim).expect("validated");
    let marked = match codecs::embed(victim, &real, &key, payload.as_ref(), desc.default_strength)
    {
        Ok(m) => m,
        Err(e) => {
            return attacks
                .iter()
                .map(|a| (a.attack_id.clone(), Err(format!("embed failed: {e}"))))
                .collect()
        }
    };
    attacks
        .iter()
        .map(|attack| {
            let record = (|| -> Result<CellRecord, String> {
                let rng = attack_rng(seed, &attack.attack_id, &img.id);
                let (attacked, receipt) =
                    apply_attack(attack, &marked, &rng).map_err(|e| e.to_string())?;
                let outcome = codecs::detect(victim, &attacked, &key, payload.as_ref())
                    .map_err(|e| e.to_string())?;
                let quality = crate::quality::quality_vector(&marked, &attacked)
                    .map_err(|e| e.to_string())?;
                let (mut attacker_score, mut attacker_ba) = (None, None);
                if let Some(att_key) = &receipt.key {
                    let att = codecs::detect(
                        &att_key.codec_id.clone(),
                        &attacked,
                        att_key,
                        receipt.payload.as_ref(),
                    )
                    .map_err(|e| e.to_string())?;
                    attacker_score = Some(att.score);
                    attacker_ba = att.bit_accuracy;
                }
                Ok(CellRecord {
                    image_id: img.id.clone(),
                    victim_score: outcome.score,
                    victim_ba: outcome.bit_accuracy,
                    victim_detected: false,
                    attacker_score,
                    attacker_ba,
                    attacker_detected: None,
                    quality,
                    nqd: 0.0,
                })
            })();
            (attack.attack_id.clone(), record)
        })
        .collect()
}

/// Thresholds for the attacking codecs (used for attacker-side TPR), keyed by
/// attack id; calibrated with the receipt-style key derivation on negatives.
fn attacker_threshold_map(
    negatives: &[LoadedImage],
    attacks: &[AttackSpec],
    seed: u64,
    target_fpr: f64,
) -> Result<BTreeMap<String, Threshold>, ArenaError> {
    let mut out = BTreeMap::new();
    for attack in attacks {
        let crate::attacks::AttackKind::Rewatermark { codec_id, .. } = &attack.kind else {
            continue;
        };
        let desc = codecs::descriptor(codec_id)?;
        let scores: Vec<f64> = negatives
            .par_iter()
            .map(|img| {
                let rng = attack_rng(seed, &attack.attack_id, &img.id);
                let key = rng.derive(codec_id, "attacker-key", &attack.attack_id);
                let payload = (desc.kind == CodecKind::MultiBit)
                    .then(|| {
                        random_payload(
                            &rng.derive(codec_id, "attacker-payload", &attack.attack_id),
                            desc.payload_len,
                        )
                        .expect("positive length")
                    });
                let real = img.image.to_real();
                codecs::detect(codec_id, &real, &key, payload.as_ref()).map(|o| o.score)
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.insert(
            attack.attack_id.clone(),
            calibrate_threshold(codec_id, &scores, desc.statistic_direction, target_fpr)?,
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Policy derivation
// ---------------------------------------------------------------------------

/// Ties in TPR within this band are broken by lower NQD, then attack id.
pub const POLICY_TIE_BAND: f64 = 0.01;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub victim_id: String,
    pub attack_id: String,
    pub tpr_at_fpr: f64,
    pub mean_nqd: f64,
    pub budget_relaxed: bool,
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyTable {
    pub nqd_budget: f64,
    pub seed: u64,
    pub entries: Vec<PolicyEntry>,
}

impl PolicyTable {
    pub fn attack_for(&self, victim_id: &str) -> Option<&PolicyEntry> {
        self.entries.iter().find(|e| e.victim_id == victim_id)
    }
}

/// Select, per victim, the re-watermarking attack minimizing TPR within the
/// NQD budget (relaxing the budget per victim when nothing fits, recorded).
pub fn derive_policy(matrix: &InterferenceMatrix, nqd_budget: f64) -> Result<PolicyTable, ArenaError> {
    if matrix.cells.is_empty() {
        return Err(ArenaError::EmptyMatrix);
    }
    let rewatermark_ids: Vec<&str> = matrix
        .attacks
        .iter()
        .filter(|a| a.is_rewatermark())
        .map(|a| a.attack_id.as_str())
        .collect();
    let mut entries = Vec::new();
    for victim in &matrix.victims {
        let mut trace = Vec::new();
        let candidates: Vec<&InterferenceCell> = matrix
            .cells
            .iter()
            .filter(|c| &c.victim_id == victim && rewatermark_ids.contains(&c.attack_id.as_str()))
            .collect();
        if candidates.is_empty() {
            return Err(ArenaError::MissingVictim(victim.clone()));
        }
        let mut in_budget: Vec<&InterferenceCell> =
            candidates.iter().copied().filter(|c| c.mean_nqd <= nqd_budget).collect();
        let budget_relaxed = in_budget.is_empty();
        if budget_relaxed {
            trace.push(format!(
                "no rewatermark attack within NQD budget {nqd_budget}; budget relaxed"
            ));
            in_budget = candidates.clone();
        }
        let best_tpr =
            in_budget.iter().map(|c| c.tpr_at_fpr).fold(f64::INFINITY, f64::min);
        trace.push(format!("minimal TPR {best_tpr:.4}"));
        let mut tied: Vec<&InterferenceCell> = in_budget
            .into_iter()
            .filter(|c| c.tpr_at_fpr <= best_tpr + POLICY_TIE_BAND)
            .collect();
        if tied.len() > 1 {
            trace.push(format!(
                "tie band {POLICY_TIE_BAND}: {:?}",
                tied.iter().map(|c| c.attack_id.as_str()).collect::<Vec<_>>()
            ));
        }
        tied.sort_by(|a, b| {
            a.mean_nqd
                .partial_cmp(&b.mean_nqd)
                .expect("finite NQD")
                .then_with(|| a.attack_id.cmp(&b.attack_id))
        });
        let chosen = tied[0];
        trace.push(format!(
            "chose {} (tpr {:.4}, nqd {:.4})",
            chosen.attack_id, chosen.tpr_at_fpr, chosen.mean_nqd
        ));
        entries.push(PolicyEntry {
            victim_id: victim.clone(),
            attack_id: chosen.attack_id.clone(),
            tpr_at_fpr: chosen.tpr_at_fpr,
            mean_nqd: chosen.mean_nqd,
            budget_relaxed,
            trace,
        });
    }
    Ok(PolicyTable { nqd_budget, seed: matrix.seed, entries })
}

// ---------------------------------------------------------------------------
// Ownership forgery
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Cross,
    Same,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForgeryCell {
    pub attack_codec: String,
    pub scenario: Scenario,
    pub mean_attacker_ba: Option<f64>,
    pub mean_attacker_score: f64,
    pub attacker_tpr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForgeryReport {
    pub seed: u64,
    pub cells: Vec<ForgeryCell>,
}

impl ForgeryReport {
    pub fn cell(&self, attack_codec: &str, scenario: Scenario) -> Option<&ForgeryCell> {
        self.cells.iter().find(|c| c.attack_codec == attack_codec && c.scenario == scenario)
    }
}

/// Attack-watermark recovery after embedding on top of an existing watermark:
/// `cross` averages over victims different from the attack codec, `same`
/// re-applies the codec on top of itself. Detection uses the receipt key and
/// payload only.
pub fn evaluate_forgery(
    images: &[LoadedImage],
    negatives: &[LoadedImage],
    victims: &[String],
    attack_codecs: &[String],
    seed: u64,
    target_fpr: f64,
) -> Result<ForgeryReport, ArenaError> {
    if victims.is_empty() || attack_codecs.is_empty() {
        return Err(ArenaError::NoVictims);
    }
    let attacks: Vec<AttackSpec> = attack_codecs
        .iter()
        .map(|c| AttackSpec::rewatermark_default(c))
        .collect::<Result<Vec<_>, _>>()?;
    let attacker_thresholds = attacker_threshold_map(negatives, &attacks, seed, target_fpr)?;

    let mut sorted: Vec<&LoadedImage> = images.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    let mut cells = Vec::new();
    for (attack_codec, attack) in attack_codecs.iter().zip(&attacks) {
        let threshold = &attacker_thresholds[&attack.attack_id];
        for scenario in [Scenario::Cross, Scenario::Same] {
            let scenario_victims: Vec<&String> = match scenario {
                Scenario::Cross => victims.iter().filter(|v| *v != attack_codec).collect(),
                Scenario::Same => victims.iter().filter(|v| *v == attack_codec).collect(),
            };
            if scenario_victims.is_empty() {
                continue;
            }
            let results: Vec<(f64, Option<f64>)> = sorted
                .par_iter()
                .flat_map_iter(|img| {
                    let real = img.image.to_real();
                    scenario_victims.iter().map(move |victim| {
                        let vkey = victim_key(seed, victim, &img.id);
                        let vpayload = victim_payload(seed, victim, &img.id);
                        let desc = codecs::descriptor(victim).expect("validated");
                        let marked = codecs::embed(
                            victim,
                            &real,
                            &vkey,
                            vpayload.as_ref(),
                            desc.default_strength,
                        )
                        .expect("victim embed");
                        let rng = attack_rng(seed, &attack.attack_id, &img.id);
                        let (attacked, receipt) =
                            apply_attack(attack, &marked, &rng).expect("attack");
                        let att_key = receipt.key.expect("rewatermark records a key");
                        let out = codecs::detect(
                            attack_codec,
                            &attacked,
                            &att_key,
                            receipt.payload.as_ref(),
                        )
                        .expect("attacker detect");
                        (out.score, out.bit_accuracy)
                    })
                })
                .collect();
            let scores: Vec<f64> = results.iter().map(|r| r.0).collect();
            let bas: Vec<f64> = results.iter().filter_map(|r| r.1).collect();
            cells.push(ForgeryCell {
                attack_codec: attack_codec.clone(),
                scenario,
                mean_attacker_ba: (!bas.is_empty())
                    .then(|| bas.iter().sum::<f64>() / bas.len() as f64),
                mean_attacker_score: scores.iter().sum::<f64>() / scores.len().max(1) as f64,
                attacker_tpr: tpr_at_threshold(&scores, threshold)?,
                n: scores.len(),
            });
        }
    }
    Ok(ForgeryReport { seed, cells })
}
