//! Corpus management: directory loading, labeled manifests, and the
//! deterministic stratified train/val/test split.
//!
//! Split assignment is a pure function of (entry path hash, split seed):
//! entries are ranked by a keyed hash within each label group and the first
//! tenth goes to test, the next tenth to val, the rest to train. Re-running
//! on the same paths always reproduces the same split.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::codecs;
use crate::image::{synth_image, ImageError, Rgb8Image};

pub const UNWATERMARKED_LABEL: &str = "unwatermarked";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read directory {0}: {1}")]
    ReadDir(PathBuf, std::io::Error),
    #[error("manifest {0} is unreadable: {1}")]
    ManifestIo(PathBuf, std::io::Error),
    #[error("manifest line {0} is malformed (expected `path<TAB>label`)")]
    ManifestLine(usize),
    #[error("manifest references unknown codec label `{0}`")]
    UnknownLabel(String),
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub path: PathBuf,
    pub label: Option<String>,
    pub split: Split,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
    /// Unreadable files: (path, reason). Loading continues past them.
    pub skipped: Vec<(PathBuf, String)>,
    pub split_seed: u64,
}

/// A decoded, 8-aligned image with its corpus identity.
#[derive(Debug, Clone)]
pub struct LoadedImage {
    pub id: String,
    pub image: Rgb8Image,
    pub label: Option<String>,
}

/// Keyed path hash driving split assignment.
pub fn split_hash(path: &str, seed: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"wmarena-split");
    hasher.update(seed.to_le_bytes());
    hasher.update(path.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn assign_splits(paths_labels: Vec<(PathBuf, Option<String>)>, seed: u64) -> Vec<CorpusEntry> {
    let mut groups: BTreeMap<String, Vec<(PathBuf, Option<String>)>> = BTreeMap::new();
    for (path, label) in paths_labels {
        groups.entry(label.clone().unwrap_or_default()).or_default().push((path, label));
    }
    let mut entries = Vec::new();
    for (_, mut group) in groups {
        group.sort_by_key(|(path, _)| {
            (split_hash(&path.display().to_string(), seed), path.clone())
        });
        let n = group.len();
        let n_test = n / 10;
        let n_val = n / 10;
        for (rank, (path, label)) in group.into_iter().enumerate() {
            let split = if rank < n_test {
                Split::Test
            } else if rank < n_test + n_val {
                Split::Val
            } else {
                Split::Train
            };
            entries.push(CorpusEntry { path, label, split });
        }
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    entries
}

fn read_manifest(path: &Path) -> Result<BTreeMap<PathBuf, String>, CorpusError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CorpusError::ManifestIo(path.to_path_buf(), e))?;
    let valid_labels: Vec<&str> = codecs::all_ids();
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (p, label) = line.split_once('\t').ok_or(CorpusError::ManifestLine(lineno + 1))?;
        if label != UNWATERMARKED_LABEL && !valid_labels.contains(&label) {
            return Err(CorpusError::UnknownLabel(label.to_string()));
        }
        map.insert(PathBuf::from(p), label.to_string());
    }
    Ok(map)
}

/// Load a corpus from a directory of PNGs, attaching manifest labels when a
/// manifest is given. Manifest paths are interpreted relative to the
/// directory unless absolute.
pub fn load_corpus(
    directory: &Path,
    manifest: Option<&Path>,
    split_seed: u64,
) -> Result<Corpus, CorpusError> {
    let labels = manifest.map(read_manifest).transpose()?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(directory)
        .map_err(|e| CorpusError::ReadDir(directory.to_path_buf(), e))?
        .filter_map(|res| res.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    let paths_labels: Vec<(PathBuf, Option<String>)> = paths
        .into_iter()
        .map(|p| {
            let label = labels.as_ref().and_then(|m| {
                m.get(&p)
                    .or_else(|| p.strip_prefix(directory).ok().and_then(|rel| m.get(rel)))
                    .or_else(|| p.file_name().map(PathBuf::from).and_then(|f| m.get(&f)).take())
                    .cloned()
            });
            (p, label)
        })
        .collect();
    Ok(Corpus { entries: assign_splits(paths_labels, split_seed), skipped: Vec::new(), split_seed })
}

impl Corpus {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Decode all entries (or one split), padding to multiples of 8 by edge
    /// replication. Unreadable entries are recorded and skipped.
    pub fn load_images(&mut self, split: Option<Split>) -> Vec<LoadedImage> {
        let mut out = Vec::new();
        for entry in &self.entries {
            if split.is_some_and(|s| s != entry.split) {
                continue;
            }
            match Rgb8Image::load_png(&entry.path) {
                Ok(img) => out.push(LoadedImage {
                    id: entry.path.display().to_string(),
                    image: img.pad_to_multiple_of_8(),
                    label: entry.label.clone(),
                }),
                Err(e) => self.skipped.push((entry.path.clone(), e.to_string())),
            }
        }
        out
    }
}

/// Self-contained synthetic corpus: `count` deterministic images derived
/// from `seed`. Images are 8-bit quantized to match the on-disk semantics.
pub fn synth_corpus(seed: u64, count: usize, size: usize) -> Vec<LoadedImage> {
    (0..count)
        .map(|i| {
            let img_seed = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            let image = synth_image(img_seed, size, size)
                .expect("synthetic sizes are validated by callers")
                .quantize();
            LoadedImage { id: format!("synth-{seed}-{i:05}"), image, label: None }
        })
        .collect()
}
