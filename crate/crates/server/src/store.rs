use std::collections::BTreeMap;
use std::path::Path;

use napkit_core::export::{load_export, ExportedRun, MANIFEST_FILE};
use napkit_core::{Nap, NapError, Result};

/// Every export the service answers for, keyed by model id. Loaded once and
/// never modified.
#[derive(Debug, Clone, Default)]
pub struct Store {
    runs: BTreeMap<String, ExportedRun>,
}

impl Store {
    /// `dir` is either one export directory or a directory whose
    /// subdirectories are exports.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if dir.join(MANIFEST_FILE).is_file() {
            return Self::from_runs(vec![load_export(dir)?]);
        }
        let entries =
            std::fs::read_dir(dir).map_err(|e| NapError::io(dir.display().to_string(), e))?;
        let mut subdirs = Vec::new();
        for entry in entries {
            let path = entry
                .map_err(|e| NapError::io(dir.display().to_string(), e))?
                .path();
            if path.join(MANIFEST_FILE).is_file() {
                subdirs.push(path);
            }
        }
        subdirs.sort();
        if subdirs.is_empty() {
            return Err(NapError::Lookup(format!(
                "no export found in {}",
                dir.display()
            )));
        }
        Self::from_runs(subdirs.iter().map(load_export).collect::<Result<_>>()?)
    }

    pub fn from_runs(runs: Vec<ExportedRun>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for run in runs {
            let id = run.manifest.model_id.clone();
            if map.insert(id.clone(), run).is_some() {
                return Err(NapError::Data(format!("model '{id}' is exported twice")));
            }
        }
        Ok(Store { runs: map })
    }

    pub fn runs(&self) -> impl Iterator<Item = &ExportedRun> {
        self.runs.values()
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn run(&self, model_id: &str) -> Result<&ExportedRun> {
        self.runs
            .get(model_id)
            .ok_or_else(|| NapError::Lookup(format!("unknown model '{model_id}'")))
    }

    pub fn nap(&self, nap_id: &str) -> Result<&Nap> {
        let model_id = nap_id.split('/').next().unwrap_or_default();
        self.runs
            .get(model_id)
            .and_then(|run| run.napsets.iter().find_map(|set| set.nap(nap_id)))
            .ok_or_else(|| NapError::Lookup(format!("unknown NAP '{nap_id}'")))
    }
}
