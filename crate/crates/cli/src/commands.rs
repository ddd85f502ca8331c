//! Command implementations. Commands compose through files only; every run
//! directory carries a manifest.

use serde_json::json;
use std::path::Path;

use crate::args::{effective_seed, Cli, Command};
use crate::formats;
use crate::manifest::RunManifest;
use crate::{CliError, CliResult};

use wmarena_core::arena::{self, InterferenceMatrix, PolicyTable};
use wmarena_core::attacks::{default_baselines, AttackSpec};
use wmarena_core::classify::{self, ClassifierModel, TrainConfig};
use wmarena_core::codecs;
use wmarena_core::corpus::{self, LoadedImage, Split, UNWATERMARKED_LABEL};
use wmarena_core::image::Rgb8Image;
use wmarena_core::key::{Payload, WatermarkKey};
use wmarena_core::pipeline::{self, Mode, PipelineConfig};
use wmarena_core::stats::calibrate_threshold;

pub const NEGATIVE_SEED_OFFSET: u64 = 0x5eed_0001;

pub fn run(cli: Cli) -> CliResult {
    if let Some(jobs) = cli.jobs {
        // results are independent of the worker count; ignore failure if a
        // global pool already exists (tests share one process)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match cli.command {
        Command::Embed { codec, key, message, strength, input, output } => {
            cmd_embed(&codec, &key, message.as_deref(), strength, &input, &output)
        }
        Command::Detect { codec, key, message, input } => {
            cmd_detect(&codec, &key, message.as_deref(), &input)
        }
        Command::Calibrate { codec, negatives, fpr, seed, out } => {
            cmd_calibrate(&codec, &negatives, fpr, effective_seed(seed), out.as_deref())
        }
        Command::GenCorpus { out, per_class, size, seed } => {
            cmd_gen_corpus(&out, per_class, size, effective_seed(seed))
        }
        Command::Matrix { corpus, images, size, victims, attacks, negatives, seed, fpr, out } => {
            cmd_matrix(
                corpus.as_deref(),
                images,
                size,
                &victims,
                &attacks,
                negatives,
                effective_seed(seed),
                fpr,
                &out,
            )
        }
        Command::Policy { matrix, budget, out } => cmd_policy(&matrix, budget, &out),
        Command::Forgery { corpus, images, size, negatives, seed, fpr, out } => {
            cmd_forgery(corpus.as_deref(), images, size, negatives, effective_seed(seed), fpr, &out)
        }
        Command::TrainClassifier { corpus, manifest, lr, epochs, l2, seed, out } => {
            cmd_train_classifier(&corpus, &manifest, lr, epochs, l2, effective_seed(seed), &out)
        }
        Command::EvalClassifier { model, corpus, manifest, seed, out } => {
            cmd_eval_classifier(&model, &corpus, &manifest, effective_seed(seed), &out)
        }
        Command::Pipeline {
            corpus,
            images,
            size,
            model,
            policy,
            mode,
            paranoid,
            negatives,
            seed,
            fpr,
            out,
        } => cmd_pipeline(
            corpus.as_deref(),
            images,
            size,
            model.as_deref(),
            &policy,
            &mode,
            paranoid,
            negatives,
            effective_seed(seed),
            fpr,
            &out,
        ),
        Command::Report { run, out } => cmd_report(&run, &out),
    }
}

fn parse_key(hex_seed: &str, codec: &str) -> CliResult<WatermarkKey> {
    WatermarkKey::from_hex(hex_seed, codec).map_err(|e| CliError::validation(e.to_string()))
}

fn parse_payload(message: Option<&str>, codec: &str) -> CliResult<Option<Payload>> {
    let desc = codecs::descriptor(codec)?;
    match message {
        None => Ok(None),
        Some(text) => {
            let payload =
                Payload::from_bitstring(text).map_err(|e| CliError::validation(e.to_string()))?;
            if payload.len() != desc.payload_len {
                return Err(CliError::validation(format!(
                    "codec `{codec}` expects {} payload bits, got {}",
                    desc.payload_len,
                    payload.len()
                )));
            }
            Ok(Some(payload))
        }
    }
}

fn load_png_image(path: &Path) -> CliResult<Rgb8Image> {
    Rgb8Image::load_png(path)
        .map(|img| img.pad_to_multiple_of_8())
        .map_err(|e| CliError::validation(e.to_string()))
}

fn cmd_embed(
    codec: &str,
    key_hex: &str,
    message: Option<&str>,
    strength: Option<f64>,
    input: &Path,
    output: &Path,
) -> CliResult {
    let desc = codecs::descriptor(codec)?;
    let key = parse_key(key_hex, codec)?;
    let payload = parse_payload(message, codec)?;
    let strength = strength.unwrap_or(desc.default_strength);
    let img = load_png_image(input)?.to_real();
    let marked = codecs::embed(codec, &img, &key, payload.as_ref(), strength)?;
    marked.quantize().save_png(output).map_err(|e| CliError::runtime(e.to_string()))?;
    Ok(())
}

fn cmd_detect(codec: &str, key_hex: &str, message: Option<&str>, input: &Path) -> CliResult {
    let key = parse_key(key_hex, codec)?;
    let reference = parse_payload(message, codec)?;
    let img = load_png_image(input)?.to_real();
    let outcome = codecs::detect(codec, &img, &key, reference.as_ref())?;
    println!("{}", serde_json::to_string_pretty(&outcome)?);
    Ok(())
}

fn cmd_calibrate(
    codec: &str,
    negatives_dir: &Path,
    fpr: f64,
    seed: u64,
    out: Option<&Path>,
) -> CliResult {
    let desc = codecs::descriptor(codec)?;
    let mut corpus = corpus::load_corpus(negatives_dir, None, seed)
        .map_err(|e| CliError::validation(e.to_string()))?;
    let images = corpus.load_images(None);
    if images.is_empty() {
        return Err(CliError::validation(format!(
            "no readable PNG negatives in {}",
            negatives_dir.display()
        )));
    }
    let scores: Vec<f64> = images
        .iter()
        .map(|img| {
            let key = arena::victim_key(seed, codec, &img.id);
            let payload = arena::victim_payload(seed, codec, &img.id);
            codecs::detect(codec, &img.image.to_real(), &key, payload.as_ref())
                .map(|o| o.score)
                .map_err(CliError::from)
        })
        .collect::<CliResult<Vec<f64>>>()?;
    let threshold = calibrate_threshold(codec, &scores, desc.statistic_direction, fpr)?;
    let json = serde_json::to_string_pretty(&threshold)?;
    println!("{json}");
    if let Some(path) = out {
        std::fs::write(path, json + "\n")?;
    }
    Ok(())
}

fn cmd_gen_corpus(out: &Path, per_class: usize, size: usize, seed: u64) -> CliResult {
    if per_class == 0 {
        return Err(CliError::validation("--per-class must be positive"));
    }
    if size < 192 || size % 8 != 0 {
        return Err(CliError::validation(
            "--size must be a multiple of 8 and at least 192 (the latent codec needs 48 slots)",
        ));
    }
    let images_dir = out.join("images");
    std::fs::create_dir_all(&images_dir)?;
    let mut classes: Vec<String> = classify::class_list();
    classes.sort();
    let mut manifest_lines = Vec::new();
    for class in &classes {
        for i in 0..per_class {
            let image_seed = seed
                .wrapping_mul(7_919)
                .wrapping_add(crate::stable_hash(class) ^ i as u64);
            let base = wmarena_core::image::synth_image(image_seed, size, size)
                .map_err(|e| CliError::validation(e.to_string()))?;
            let final_img = if class == UNWATERMARKED_LABEL {
                base
            } else {
                let desc = codecs::descriptor(class)?;
                let id = format!("{class}-{i:05}");
                let key = arena::victim_key(seed, class, &id);
                let payload = arena::victim_payload(seed, class, &id);
                codecs::embed(class, &base, &key, payload.as_ref(), desc.default_strength)?
            };
            let file = format!("{class}_{i:05}.png");
            final_img
                .quantize()
                .save_png(&images_dir.join(&file))
                .map_err(|e| CliError::runtime(e.to_string()))?;
            manifest_lines.push(format!("{file}\t{class}"));
        }
    }
    std::fs::write(out.join("manifest.tsv"), manifest_lines.join("\n") + "\n")?;
    let mut manifest = RunManifest::new(
        "gen-corpus",
        seed,
        json!({"per_class": per_class, "size": size, "classes": classes}),
    );
    manifest.add_input(&out.join("manifest.tsv"))?;
    manifest.write(out)?;
    eprintln!("wrote {} images to {}", manifest_lines.len(), images_dir.display());
    Ok(())
}

fn parse_victims(arg: &str) -> CliResult<Vec<String>> {
    if arg == "all" {
        return Ok(codecs::all_ids().iter().map(|s| s.to_string()).collect());
    }
    let out: Vec<String> = arg.split(',').map(|s| s.trim().to_string()).collect();
    for v in &out {
        codecs::descriptor(v)?;
    }
    Ok(out)
}

fn parse_attacks(arg: &str) -> CliResult<Vec<AttackSpec>> {
    let rewatermarks = || -> CliResult<Vec<AttackSpec>> {
        codecs::attack_capable_ids()
            .iter()
            .map(|c| {
                AttackSpec::rewatermark_default(c).map_err(|e| CliError::validation(e.to_string()))
            })
            .collect()
    };
    match arg {
        "policy-set" => {
            let mut out = vec![AttackSpec::identity()];
            out.extend(rewatermarks()?);
            Ok(out)
        }
        "all" => {
            let mut out = vec![AttackSpec::identity()];
            out.extend(rewatermarks()?);
            out.extend(default_baselines());
            Ok(out)
        }
        list => list
            .split(',')
            .map(|id| {
                crate::commands::attack_from_id(id.trim())
                    .ok_or_else(|| CliError::validation(format!("unknown attack id `{id}`")))
            })
            .collect(),
    }
}

/// Parse a stable attack id back into a spec.
pub fn attack_from_id(id: &str) -> Option<AttackSpec> {
    if id == "identity" {
        return Some(AttackSpec::identity());
    }
    if let Some(rest) = id.strip_prefix("rewatermark:") {
        return match rest.split_once('@') {
            Some((codec, s)) => AttackSpec::rewatermark(codec, s.parse().ok()?).ok(),
            None => AttackSpec::rewatermark_default(rest).ok(),
        };
    }
    let (kind, level) = id.split_once(':')?;
    let level: f64 = level.parse().ok()?;
    Some(match kind {
        "noise" => AttackSpec::noise(level),
        "blur" => AttackSpec::blur(level),
        "jpeg" => AttackSpec::jpeg_quant(level),
        "resize" => AttackSpec::resize_restore(level),
        _ => return None,
    })
}

/// Corpus images plus calibration negatives. A real corpus serves as its own
/// negative set when large enough; otherwise (and for synthetic runs) a
/// dedicated synthetic negative set is generated.
fn load_run_images(
    corpus_dir: Option<&Path>,
    images: usize,
    size: usize,
    negatives: usize,
    seed: u64,
) -> CliResult<(Vec<LoadedImage>, Vec<LoadedImage>)> {
    let main = match corpus_dir {
        Some(dir) => {
            let mut corpus = corpus::load_corpus(dir, None, seed)
                .map_err(|e| CliError::validation(e.to_string()))?;
            let loaded = corpus.load_images(None);
            for (path, reason) in &corpus.skipped {
                eprintln!("skipped {}: {reason}", path.display());
            }
            if loaded.is_empty() {
                return Err(CliError::validation(format!(
                    "corpus {} holds no readable PNGs",
                    dir.display()
                )));
            }
            loaded
        }
        None => corpus::synth_corpus(seed, images, size),
    };
    let negatives = if corpus_dir.is_some() && main.len() >= 100 {
        main.clone()
    } else {
        let neg_size = main.first().map(|i| i.image.width.min(i.image.height)).unwrap_or(size);
        corpus::synth_corpus(seed ^ NEGATIVE_SEED_OFFSET, negatives.max(100), neg_size.max(64))
    };
    Ok((main, negatives))
}

#[allow(clippy::too_many_arguments)]
fn cmd_matrix(
    corpus_dir: Option<&Path>,
    images: usize,
    size: usize,
    victims_arg: &str,
    attacks_arg: &str,
    n_negatives: usize,
    seed: u64,
    fpr: f64,
    out: &Path,
) -> CliResult {
    let victims = parse_victims(victims_arg)?;
    let attacks = parse_attacks(attacks_arg)?;
    let (main, negatives) = load_run_images(corpus_dir, images, size, n_negatives, seed)?;
    let matrix = arena::build_matrix(&main, &negatives, &victims, &attacks, seed, fpr)
        .map_err(|e| CliError::validation(e.to_string()))?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("matrix.json"), serde_json::to_string(&matrix)? + "\n")?;
    std::fs::write(out.join("matrix.csv"), formats::matrix_csv(&matrix))?;
    std::fs::write(out.join("grid.md"), formats::matrix_grid_markdown(&matrix, None))?;
    let manifest = RunManifest::new(
        "matrix",
        seed,
        json!({
            "victims": victims,
            "attacks": attacks.iter().map(|a| a.attack_id.clone()).collect::<Vec<_>>(),
            "images": main.len(),
            "negatives": negatives.len(),
            "fpr": fpr,
            "corpus": corpus_dir.map(|p| p.display().to_string()),
            "size": size,
        }),
    );
    manifest.write(out)?;
    eprintln!("matrix: {} cells over {} images", matrix.cells.len(), matrix.n_images);
    Ok(())
}

pub fn read_matrix(path: &Path) -> CliResult<InterferenceMatrix> {
    let text = std::fs::read_to_string(path).map_err(|_| {
        CliError::validation(format!("missing upstream artifact: {}", path.display()))
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("bad matrix JSON: {e}")))
}

fn cmd_policy(matrix_path: &Path, budget: f64, out: &Path) -> CliResult {
    let matrix = read_matrix(matrix_path)?;
    let policy = arena::derive_policy(&matrix, budget)
        .map_err(|e| CliError::validation(e.to_string()))?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("policy.json"), serde_json::to_string_pretty(&policy)? + "\n")?;
    std::fs::write(out.join("policy.md"), formats::policy_markdown(&policy))?;
    std::fs::write(
        out.join("grid.md"),
        formats::matrix_grid_markdown(&matrix, Some(&policy)),
    )?;
    let mut manifest = RunManifest::new("policy", matrix.seed, json!({"budget": budget}));
    manifest.add_input(matrix_path)?;
    manifest.write(out)?;
    Ok(())
}

fn cmd_forgery(
    corpus_dir: Option<&Path>,
    images: usize,
    size: usize,
    n_negatives: usize,
    seed: u64,
    fpr: f64,
    out: &Path,
) -> CliResult {
    let (main, negatives) = load_run_images(corpus_dir, images, size, n_negatives, seed)?;
    let victims: Vec<String> = codecs::all_ids().iter().map(|s| s.to_string()).collect();
    let attack_codecs: Vec<String> =
        codecs::attack_capable_ids().iter().map(|s| s.to_string()).collect();
    let report =
        arena::evaluate_forgery(&main, &negatives, &victims, &attack_codecs, seed, fpr)
            .map_err(|e| CliError::validation(e.to_string()))?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("forgery.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    std::fs::write(out.join("forgery.csv"), formats::forgery_csv(&report))?;
    let manifest = RunManifest::new(
        "forgery",
        seed,
        json!({"images": main.len(), "fpr": fpr, "size": size}),
    );
    manifest.write(out)?;
    Ok(())
}

/// Labeled features for one split of a corpus.
fn split_features(
    corpus_dir: &Path,
    manifest_path: &Path,
    seed: u64,
    split: Split,
    classes: &[String],
) -> CliResult<(Vec<Vec<f64>>, Vec<usize>)> {
    use rayon::prelude::*;
    let mut corpus = corpus::load_corpus(corpus_dir, Some(manifest_path), seed)
        .map_err(|e| CliError::validation(e.to_string()))?;
    let images = corpus.load_images(Some(split));
    for (path, reason) in &corpus.skipped {
        eprintln!("skipped {}: {reason}", path.display());
    }
    let mut labeled: Vec<(&LoadedImage, usize)> = Vec::new();
    for img in &images {
        let label = img.label.as_deref().ok_or_else(|| {
            CliError::validation(format!("corpus entry {} has no label", img.id))
        })?;
        let class = classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| CliError::validation(format!("label `{label}` not in class list")))?;
        labeled.push((img, class));
    }
    let features: Vec<Vec<f64>> = labeled
        .par_iter()
        .map(|(img, _)| classify::extract_features(&img.image.to_real()))
        .collect();
    let labels = labeled.iter().map(|(_, c)| *c).collect();
    Ok((features, labels))
}

fn cmd_train_classifier(
    corpus_dir: &Path,
    manifest_path: &Path,
    lr: f64,
    epochs: usize,
    l2: f64,
    seed: u64,
    out: &Path,
) -> CliResult {
    let classes = classify::class_list();
    let (train_x, train_y) =
        split_features(corpus_dir, manifest_path, seed, Split::Train, &classes)?;
    let (val_x, val_y) = split_features(corpus_dir, manifest_path, seed, Split::Val, &classes)?;
    let cfg = TrainConfig { lr, epochs, l2, seed, ..Default::default() };
    let model = classify::train(&train_x, &train_y, &val_x, &val_y, classes, &cfg)
        .map_err(|e| CliError::validation(e.to_string()))?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("model.json"), serde_json::to_string(&model)? + "\n")?;
    let mut manifest = RunManifest::new(
        "train-classifier",
        seed,
        json!({"lr": lr, "epochs": epochs, "l2": l2, "train": train_x.len(), "val": val_x.len()}),
    );
    manifest.add_input(manifest_path)?;
    manifest.write(out)?;
    eprintln!(
        "trained on {} samples; best val accuracy {:.4} at epoch {}",
        train_x.len(),
        model.meta.best_val_accuracy,
        model.meta.best_epoch
    );
    Ok(())
}

pub fn read_model(path: &Path) -> CliResult<ClassifierModel> {
    let text = std::fs::read_to_string(path).map_err(|_| {
        CliError::validation(format!("missing upstream artifact: {}", path.display()))
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("bad model JSON: {e}")))
}

fn cmd_eval_classifier(
    model_path: &Path,
    corpus_dir: &Path,
    manifest_path: &Path,
    seed: u64,
    out: &Path,
) -> CliResult {
    let model = read_model(model_path)?;
    let (x, y) = split_features(corpus_dir, manifest_path, seed, Split::Test, &model.classes)?;
    if x.is_empty() {
        return Err(CliError::validation("test split is empty"));
    }
    let report =
        classify::evaluate(&model, &x, &y).map_err(|e| CliError::validation(e.to_string()))?;
    let gate = classify::multibit_confusion_gate(&report, 0.05);
    std::fs::create_dir_all(out)?;
    let summary = json!({
        "accuracy": report.accuracy,
        "macro_f1": report.macro_f1,
        "per_class_recall": report.classes.iter().zip(&report.per_class_recall)
            .map(|(c, r)| json!({"class": c, "recall": r})).collect::<Vec<_>>(),
        "multibit_confusion_gate": match &gate { Ok(()) => json!("pass"), Err(m) => json!(m) },
    });
    std::fs::write(out.join("eval.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    std::fs::write(out.join("confusion.csv"), formats::eval_confusion_csv(&report))?;
    let mut manifest = RunManifest::new("eval-classifier", seed, json!({"test": x.len()}));
    manifest.add_input(model_path)?;
    manifest.write(out)?;
    if let Err(gate_msg) = gate {
        return Err(CliError::validation(format!("evaluation gate failed: {gate_msg}")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_pipeline(
    corpus_dir: Option<&Path>,
    images: usize,
    size: usize,
    model_path: Option<&Path>,
    policy_path: &Path,
    mode_arg: &str,
    paranoid: bool,
    n_negatives: usize,
    seed: u64,
    fpr: f64,
    out: &Path,
) -> CliResult {
    let mode = match mode_arg {
        "blackbox" => Mode::BlackBox,
        "beigebox" => Mode::BeigeBox,
        other => return Err(CliError::validation(format!("unknown mode `{other}`"))),
    };
    let policy: PolicyTable = {
        let text = std::fs::read_to_string(policy_path).map_err(|_| {
            CliError::validation(format!("missing upstream artifact: {}", policy_path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("bad policy JSON: {e}")))?
    };
    let model = model_path.map(read_model).transpose()?;
    if mode == Mode::BlackBox && model.is_none() {
        return Err(CliError::validation("blackbox mode requires --model"));
    }
    let (main, negatives) = load_run_images(corpus_dir, images, size, n_negatives, seed)?;
    let victims: Vec<String> = policy.entries.iter().map(|e| e.victim_id.clone()).collect();
    let cfg = PipelineConfig { mode, seed, target_fpr: fpr, paranoid };
    let run = pipeline::run_pipeline(&main, &negatives, &victims, model.as_ref(), &policy, &cfg)
        .map_err(|e| CliError::validation(e.to_string()))?;
    std::fs::create_dir_all(out)?;
    let stem = match mode {
        Mode::BlackBox => "pipeline-blackbox",
        Mode::BeigeBox => "pipeline-beigebox",
    };
    std::fs::write(out.join(format!("{stem}.json")), serde_json::to_string(&run)? + "\n")?;
    std::fs::write(out.join(format!("{stem}.csv")), formats::pipeline_csv(&run))?;
    let mut manifest = RunManifest::new(
        "pipeline",
        seed,
        json!({"mode": mode_arg, "paranoid": paranoid, "images": main.len(), "fpr": fpr}),
    );
    manifest.add_input(policy_path)?;
    if let Some(mp) = model_path {
        manifest.add_input(mp)?;
    }
    manifest.write(out)?;
    Ok(())
}

fn cmd_report(run_dir: &Path, out: &Path) -> CliResult {
    let matrix_path = run_dir.join("matrix.json");
    let matrix = read_matrix(&matrix_path)?;
    let policy: Option<PolicyTable> = std::fs::read_to_string(run_dir.join("policy.json"))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok());
    let blackbox: Option<wmarena_core::pipeline::PipelineRun> =
        std::fs::read_to_string(run_dir.join("pipeline-blackbox.json"))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok());

    std::fs::create_dir_all(out)?;
    let mut md = String::from("# Watermark interference run report\n\n");
    md.push_str(&formats::nqd_model_note(&matrix.nqd_model));
    md.push('\n');
    md.push_str(&formats::matrix_grid_markdown(&matrix, policy.as_ref()));
    md.push('\n');
    if let Some(p) = &policy {
        md.push_str(&formats::policy_markdown(p));
        md.push('\n');
    }
    if let Some(run) = &blackbox {
        md.push_str(&formats::decoder_table_markdown(run, Some(&matrix)));
        md.push('\n');
    }
    let forgery: Option<wmarena_core::arena::ForgeryReport> =
        std::fs::read_to_string(run_dir.join("forgery.json"))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok());
    if let Some(f) = &forgery {
        md.push_str("# Forgery (attacker-side recovery)\n\n```\n");
        md.push_str(&formats::forgery_csv(f));
        md.push_str("```\n");
    }
    std::fs::write(out.join("report.md"), md)?;
    std::fs::write(out.join("scatter.svg"), crate::svg::tpr_vs_nqd_scatter(&matrix))?;
    std::fs::write(out.join("nqd-box.csv"), formats::nqd_boxplot_csv(&matrix))?;
    let mut manifest = RunManifest::new("report", matrix.seed, json!({}));
    manifest.add_input(&matrix_path)?;
    manifest.write(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attack_id_roundtrip() {
        for id in
            ["identity", "rewatermark:ss-dct", "noise:0.02", "blur:1", "jpeg:8", "resize:0.5"]
        {
            let spec = attack_from_id(id).expect(id);
            assert_eq!(spec.attack_id, id);
        }
        assert!(attack_from_id("rewatermark:ring-fft").is_none());
        assert!(attack_from_id("bogus").is_none());
    }
}
