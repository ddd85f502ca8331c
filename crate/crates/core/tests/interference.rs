//! Small-scale end-to-end wiring of the arena: the interference structure,
//! policy derivation, forgery recovery, and beige-box pipeline equivalence.
//! The full-scale gates live in the workspace acceptance suite.

use once_cell::sync::Lazy;

use wmarena_core::arena::{self, InterferenceMatrix, PolicyTable};
use wmarena_core::attacks::AttackSpec;
use wmarena_core::codecs;
use wmarena_core::corpus::{synth_corpus, LoadedImage};
use wmarena_core::pipeline::{self, Mode, PipelineConfig};

const SEED: u64 = 0xA51;
const N_IMAGES: usize = 24;
const SIZE: usize = 256;

static IMAGES: Lazy<Vec<LoadedImage>> = Lazy::new(|| synth_corpus(100, N_IMAGES, SIZE));
static NEGATIVES: Lazy<Vec<LoadedImage>> = Lazy::new(|| synth_corpus(999, 120, SIZE));

fn attack_set() -> Vec<AttackSpec> {
    let mut attacks = vec![AttackSpec::identity()];
    for codec in codecs::attack_capable_ids() {
        attacks.push(AttackSpec::rewatermark_default(codec).unwrap());
    }
    attacks.push(AttackSpec::noise(0.05));
    attacks
}

static MATRIX: Lazy<InterferenceMatrix> = Lazy::new(|| {
    let victims: Vec<String> = codecs::all_ids().iter().map(|s| s.to_string()).collect();
    arena::build_matrix(&IMAGES, &NEGATIVES, &victims, &attack_set(), SEED, 0.01)
        .expect("matrix build")
});

static POLICY: Lazy<PolicyTable> =
    Lazy::new(|| arena::derive_policy(&MATRIX, 0.6).expect("policy"));

#[test]
fn identity_column_shows_clean_detection() {
    for victim in &MATRIX.victims {
        let cell = MATRIX.cell(victim, "identity").unwrap();
        assert_eq!(cell.tpr_at_fpr, 1.0, "{victim} identity TPR");
        if let Some(ba) = cell.mean_ba {
            assert_eq!(ba, 1.0, "{victim} clean BA");
        }
    }
}

#[test]
fn same_method_diagonal_erases_the_victim() {
    for codec in codecs::attack_capable_ids() {
        let cell = MATRIX.cell(codec, &format!("rewatermark:{codec}")).unwrap();
        assert!(cell.tpr_at_fpr <= 0.2, "{codec} diagonal TPR {}", cell.tpr_at_fpr);
        if let Some(ba) = cell.mean_ba {
            assert!((ba - 0.5).abs() < 0.15, "{codec} victim BA {ba}");
        }
        if let Some(aba) = cell.mean_attacker_ba {
            assert!(aba >= 0.95, "{codec} attacker BA {aba}");
        }
        assert_eq!(cell.attacker_tpr, Some(1.0), "{codec} attacker TPR");
    }
}

#[test]
fn chi2_ring_attack_erases_in_processing_victims() {
    for victim in ["ring-fft", "latent-sig"] {
        let cell = MATRIX.cell(victim, "rewatermark:chi2-ring").unwrap();
        assert!(cell.tpr_at_fpr <= 0.2, "{victim} under chi2 attack: {}", cell.tpr_at_fpr);
    }
    // and no other re-watermark attack touches them
    for victim in ["ring-fft", "latent-sig"] {
        for attack in ["rewatermark:ss-dct", "rewatermark:pix-add", "rewatermark:pix-wide"] {
            let cell = MATRIX.cell(victim, attack).unwrap();
            assert!(cell.tpr_at_fpr >= 0.9, "{victim} under {attack}: {}", cell.tpr_at_fpr);
        }
    }
}

#[test]
fn disjoint_band_codecs_do_not_interfere() {
    for (victim, attack) in
        [("ss-dct", "rewatermark:pix-wide"), ("pix-wide", "rewatermark:ss-dct")]
    {
        let cell = MATRIX.cell(victim, attack).unwrap();
        assert_eq!(cell.tpr_at_fpr, 1.0, "{victim} under {attack}");
        assert!(cell.mean_ba.unwrap() >= 0.95, "{victim} BA under {attack}");
    }
}

#[test]
fn strong_noise_kills_the_fragile_victims_only() {
    for victim in ["ring-fft", "latent-sig"] {
        let cell = MATRIX.cell(victim, "noise:0.05").unwrap();
        assert!(cell.tpr_at_fpr <= 0.3, "{victim} under noise 0.05: {}", cell.tpr_at_fpr);
    }
    let cell = MATRIX.cell("chi2-ring", "noise:0.05").unwrap();
    assert_eq!(cell.tpr_at_fpr, 1.0, "chi2-ring survives noise");
}

#[test]
fn policy_matches_the_taxonomy() {
    for victim in ["ring-fft", "latent-sig", "chi2-ring"] {
        assert_eq!(
            POLICY.attack_for(victim).unwrap().attack_id,
            "rewatermark:chi2-ring",
            "{victim}"
        );
    }
    for victim in ["ss-dct", "pix-add", "pix-wide"] {
        assert_eq!(
            POLICY.attack_for(victim).unwrap().attack_id,
            format!("rewatermark:{victim}"),
            "{victim}"
        );
    }
}

#[test]
fn matrix_replays_bit_identically() {
    let victims: Vec<String> = codecs::all_ids().iter().map(|s| s.to_string()).collect();
    let again = arena::build_matrix(&IMAGES, &NEGATIVES, &victims, &attack_set(), SEED, 0.01)
        .expect("rebuild");
    let a = serde_json::to_string(&*MATRIX).unwrap();
    let b = serde_json::to_string(&again).unwrap();
    assert_eq!(a, b);
}

#[test]
fn matrix_is_corpus_order_independent() {
    let victims = vec!["ss-dct".to_string()];
    let mut shuffled: Vec<LoadedImage> = IMAGES.clone();
    shuffled.reverse();
    shuffled.swap(3, 17);
    let attacks = vec![AttackSpec::rewatermark_default("ss-dct").unwrap()];
    let a = arena::build_matrix(&IMAGES, &NEGATIVES, &victims, &attacks, SEED, 0.01).unwrap();
    let b = arena::build_matrix(&shuffled, &NEGATIVES, &victims, &attacks, SEED, 0.01).unwrap();
    assert_eq!(
        serde_json::to_string(&a.cells).unwrap(),
        serde_json::to_string(&b.cells).unwrap()
    );
}

#[test]
fn beige_box_pipeline_matches_matrix_cells() {
    let victims: Vec<String> = codecs::all_ids().iter().map(|s| s.to_string()).collect();
    let cfg = PipelineConfig { mode: Mode::BeigeBox, seed: SEED, target_fpr: 0.01, paranoid: false };
    let run = pipeline::run_pipeline(&IMAGES, &NEGATIVES, &victims, None, &POLICY, &cfg)
        .expect("beige run");
    for victim in &victims {
        let entry = POLICY.attack_for(victim).unwrap();
        let cell = MATRIX.cell(victim, &entry.attack_id).unwrap();
        let agg = run.victim(victim).unwrap();
        assert_eq!(agg.tpr_atk, cell.tpr_at_fpr, "{victim} TPR");
        assert_eq!(agg.ba_atk, cell.mean_ba, "{victim} BA");
        assert_eq!(agg.mean_score_atk, cell.mean_score, "{victim} score");
        assert_eq!(agg.n_mis, 0);
    }
}

#[test]
fn forgery_recovery_is_clean() {
    let victims: Vec<String> = codecs::all_ids().iter().map(|s| s.to_string()).collect();
    let attack_codecs: Vec<String> =
        codecs::attack_capable_ids().iter().map(|s| s.to_string()).collect();
    let report = arena::evaluate_forgery(&IMAGES, &NEGATIVES, &victims, &attack_codecs, SEED, 0.01)
        .expect("forgery");
    for codec in &attack_codecs {
        for scenario in [arena::Scenario::Cross, arena::Scenario::Same] {
            let cell = report.cell(codec, scenario).unwrap();
            assert_eq!(cell.attacker_tpr, 1.0, "{codec} {scenario:?} TPR");
            if codec == "chi2-ring" {
                assert!(
                    cell.mean_attacker_score <= 1e-6,
                    "{codec} {scenario:?} p {}",
                    cell.mean_attacker_score
                );
            } else {
                let ba = cell.mean_attacker_ba.unwrap();
                let bound = if scenario == arena::Scenario::Cross { 0.99 } else { 0.95 };
                assert!(ba >= bound, "{codec} {scenario:?} BA {ba}");
            }
        }
    }
}

#[test]
fn pipeline_rejects_policy_gaps() {
    let gap_policy = PolicyTable { nqd_budget: 0.6, seed: SEED, entries: Vec::new() };
    let victims = vec!["ss-dct".to_string()];
    let cfg = PipelineConfig { mode: Mode::BeigeBox, seed: SEED, target_fpr: 0.01, paranoid: false };
    let err = pipeline::run_pipeline(&IMAGES, &NEGATIVES, &victims, None, &gap_policy, &cfg);
    assert!(matches!(err, Err(pipeline::PipelineError::PolicyGap(_))));
}
