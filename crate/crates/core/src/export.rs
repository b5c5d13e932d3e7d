//! On-disk export layout:
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/naps/<layer>.json      one NapSet per layer
//! <dir>/scales/<layer>.bin     normalization scales, raw little-endian f32
//! <dir>/metadata.jsonl         per-sample metadata, by sample id
//! <dir>/assets/...             images referenced by metadata `image_ref`
//! ```
//!
//! Files are written with stable key order; the only time-dependent field is
//! the manifest's `created_at`, which is an input of the export.

use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::ClusterParams;
use crate::disentangle::AggregationMethod;
use crate::error::{bail, NapError, Result};
use crate::metadata::MetadataTable;
use crate::nap::NapSet;
use crate::normalize::UnitScales;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const METADATA_FILE: &str = "metadata.jsonl";
pub const ASSETS_DIR: &str = "assets";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestLayer {
    pub layer_id: String,
    pub order: usize,
    pub aggregation: AggregationMethod,
    pub cluster: ClusterParams,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_naps: usize,
    pub n_noise: usize,
    pub naps_file: String,
    pub scales_file: String,
    /// Fingerprint of the feature matrix the scales were fitted on.
    pub scales_fitted_on: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub model_id: String,
    /// RFC 3339 timestamp.
    pub created_at: String,
    /// SHA-256 over the input files of the run.
    pub input_fingerprint: String,
    pub layers: Vec<ManifestLayer>,
}

/// Everything that goes into an export directory.
#[derive(Debug, Clone)]
pub struct ExportRun {
    pub model_id: String,
    pub created_at: String,
    pub input_fingerprint: String,
    pub layers: Vec<(NapSet, UnitScales)>,
    pub metadata: MetadataTable,
    /// Directory that `image_ref` paths are relative to.
    pub assets_source: Option<PathBuf>,
}

impl ExportRun {
    pub fn manifest(&self) -> RunManifest {
        let mut layers: Vec<ManifestLayer> = self
            .layers
            .iter()
            .map(|(set, scales)| ManifestLayer {
                layer_id: set.layer_id.clone(),
                order: set.layer_order,
                aggregation: set.params.aggregation,
                cluster: set.params.cluster,
                n_samples: set.n_samples,
                n_features: scales.scales().len(),
                n_naps: set.naps.len(),
                n_noise: set.noise_sample_ids.len(),
                naps_file: format!("naps/{}.json", set.layer_id),
                scales_file: format!("scales/{}.bin", set.layer_id),
                scales_fitted_on: scales.fitted_on().to_string(),
            })
            .collect();
        layers.sort_by_key(|l| l.order);
        RunManifest {
            format_version: FORMAT_VERSION,
            model_id: self.model_id.clone(),
            created_at: self.created_at.clone(),
            input_fingerprint: self.input_fingerprint.clone(),
            layers,
        }
    }
}

/// SHA-256 over a sequence of input blobs, each length-prefixed.
pub fn fingerprint_inputs<'a>(blobs: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for b in blobs {
        h.update((b.len() as u64).to_le_bytes());
        h.update(b);
    }
    hex::encode(h.finalize())
}

fn check_name(kind: &str, name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name != "."
        && name != ".."
        && !name.contains(['/', '\\'])
        && !name.chars().any(char::is_control);
    if !ok {
        bail!(Param, "{kind} '{name}' cannot be used as a file name");
    }
    Ok(())
}

/// Relative path with only normal components.
pub fn safe_relative_path(rel: &str) -> Option<PathBuf> {
    let path = Path::new(rel);
    let ok = !rel.is_empty() && path.components().all(|c| matches!(c, Component::Normal(_)));
    ok.then(|| path.to_path_buf())
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| NapError::io(path.display().to_string(), e))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("export documents serialize");
    out.push(b'\n');
    out
}

pub fn export(run: &ExportRun, dir: impl AsRef<Path>) -> Result<RunManifest> {
    let dir = dir.as_ref();
    check_name("model id", &run.model_id)?;
    for (set, scales) in &run.layers {
        check_name("layer id", &set.layer_id)?;
        if set.model_id != run.model_id {
            bail!(
                Param,
                "layer '{}' belongs to model '{}', not '{}'",
                set.layer_id,
                set.model_id,
                run.model_id
            );
        }
        if run
            .layers
            .iter()
            .filter(|(s, _)| s.layer_id == set.layer_id)
            .count()
            > 1
        {
            bail!(Param, "layer '{}' exported twice", set.layer_id);
        }
        if let Some(nap) = set.naps.first() {
            if nap.stats.len() != scales.scales().len() {
                bail!(
                    Shape,
                    "layer '{}': stats and scales disagree on feature count",
                    set.layer_id
                );
            }
        }
    }

    for sub in ["naps", "scales"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| NapError::io(p.display().to_string(), e))?;
    }
    let manifest = run.manifest();
    for (set, scales) in &run.layers {
        write(
            &dir.join("naps").join(format!("{}.json", set.layer_id)),
            &to_json(set),
        )?;
        write(
            &dir.join("scales").join(format!("{}.bin", set.layer_id)),
            &scales.to_bytes(),
        )?;
    }
    write(&dir.join(METADATA_FILE), run.metadata.to_jsonl().as_bytes())?;

    let refs: Vec<&str> = run
        .metadata
        .iter()
        .filter_map(|r| r.image_ref.as_deref())
        .collect();
    if !refs.is_empty() {
        let Some(src) = &run.assets_source else {
            tracing::warn!("metadata references images but no asset directory was given");
            return finish(dir, &manifest);
        };
        for r in refs {
            let rel = safe_relative_path(r)
                .ok_or_else(|| NapError::Data(format!("unsafe image_ref '{r}'")))?;
            let to = dir.join(ASSETS_DIR).join(&rel);
            if let Some(parent) = to.parent() {
                fs::create_dir_all(parent)
                    .map_err(|e| NapError::io(parent.display().to_string(), e))?;
            }
            let from = src.join(&rel);
            fs::copy(&from, &to).map_err(|e| NapError::io(from.display().to_string(), e))?;
        }
    }
    finish(dir, &manifest)
}

fn finish(dir: &Path, manifest: &RunManifest) -> Result<RunManifest> {
    write(&dir.join(MANIFEST_FILE), &to_json(manifest))?;
    Ok(manifest.clone())
}

/// A loaded export directory.
#[derive(Debug, Clone)]
pub struct ExportedRun {
    pub root: PathBuf,
    pub manifest: RunManifest,
    /// Sorted by layer order.
    pub napsets: Vec<NapSet>,
    pub scales: Vec<UnitScales>,
    pub metadata: MetadataTable,
}

impl ExportedRun {
    pub fn napset(&self, layer_id: &str) -> Option<&NapSet> {
        self.napsets.iter().find(|s| s.layer_id == layer_id)
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| NapError::io(path.display().to_string(), e))
}

pub fn load_export(dir: impl AsRef<Path>) -> Result<ExportedRun> {
    let root = dir.as_ref().to_path_buf();
    let manifest: RunManifest = serde_json::from_slice(&read(&root.join(MANIFEST_FILE))?)
        .map_err(|e| NapError::Format(format!("{}: {e}", MANIFEST_FILE)))?;
    if manifest.format_version != FORMAT_VERSION {
        bail!(
            Format,
            "unsupported export format version {}",
            manifest.format_version
        );
    }
    let mut napsets = Vec::new();
    let mut scales = Vec::new();
    for layer in &manifest.layers {
        let naps_path = safe_relative_path(&layer.naps_file)
            .ok_or_else(|| NapError::Format(format!("bad naps path '{}'", layer.naps_file)))?;
        let set: NapSet = serde_json::from_slice(&read(&root.join(naps_path))?)
            .map_err(|e| NapError::Format(format!("{}: {e}", layer.naps_file)))?;
        if set.layer_id != layer.layer_id || set.model_id != manifest.model_id {
            bail!(
                Data,
                "{} does not match its manifest entry",
                layer.naps_file
            );
        }
        let scales_path = safe_relative_path(&layer.scales_file)
            .ok_or_else(|| NapError::Format(format!("bad scales path '{}'", layer.scales_file)))?;
        scales.push(UnitScales::from_bytes(
            &read(&root.join(scales_path))?,
            layer.scales_fitted_on.clone(),
        )?);
        napsets.push(set);
    }
    let meta_path = root.join(METADATA_FILE);
    let metadata = if meta_path.exists() {
        MetadataTable::parse_jsonl(
            std::str::from_utf8(&read(&meta_path)?)
                .map_err(|_| NapError::Format("metadata is not UTF-8".into()))?,
        )?
    } else {
        MetadataTable::new()
    };
    Ok(ExportedRun {
        root,
        manifest,
        napsets,
        scales,
        metadata,
    })
}
