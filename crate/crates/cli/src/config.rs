//! Optional TOML config file. Every key mirrors a command-line flag; flags
//! win when both are given. Relative paths are resolved against the config
//! file's directory.

use std::path::{Path, PathBuf};

use napkit_core::{NapError, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<PathBuf>,
    pub inputs: Option<PathBuf>,
    pub tensors: Option<Vec<PathBuf>>,
    pub metadata: Option<PathBuf>,
    pub assets: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model_id: Option<String>,
    pub created_at: Option<String>,
    pub layers: Option<Vec<String>>,
    /// `extract` only.
    pub agg: Option<String>,
    /// `study` only.
    pub aggs: Option<Vec<String>>,
    pub sizes: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub min_cluster_size: Option<usize>,
    pub min_samples: Option<usize>,
    pub selection: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| NapError::io(path.display().to_string(), e))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| NapError::Format(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.model);
        fix(&mut cfg.inputs);
        fix(&mut cfg.metadata);
        fix(&mut cfg.assets);
        fix(&mut cfg.out);
        if let Some(ts) = &mut cfg.tensors {
            for t in ts {
                *t = base.join(&*t);
            }
        }
        Ok(cfg)
    }
}

/// Flag value if set, else config value.
pub fn pick<T>(flag: Option<T>, config: Option<T>) -> Option<T> {
    flag.or(config)
}

/// Same for list flags, where "not given" is an empty list.
pub fn pick_list<T>(flag: Vec<T>, config: Option<Vec<T>>) -> Vec<T> {
    if flag.is_empty() {
        config.unwrap_or_default()
    } else {
        flag
    }
}
