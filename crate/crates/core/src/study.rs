//! Parameter studies: how many NAPs come out for a grid of aggregation
//! methods and input-subset sizes.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{cluster, ClusterParams};
use crate::disentangle::{aggregate, AggregationMethod};
use crate::error::{bail, NapError, Result};
use crate::metadata::MetadataTable;
use crate::normalize::{apply, fit_scales};
use crate::pipeline::ActivationSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub aggregations: Vec<AggregationMethod>,
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub layers: Vec<String>,
    #[serde(default)]
    pub cluster: ClusterParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyRow {
    pub layer: String,
    pub agg: AggregationMethod,
    pub n_inputs: usize,
    pub n_naps: usize,
    pub n_noise: usize,
}

/// Choose `size` of `n` samples without replacement, ascending.
///
/// When labels are given, each label keeps its share of the population
/// (largest-remainder rounding); unlabeled samples form their own stratum.
pub fn sample_subset(
    n: usize,
    size: usize,
    seed: u64,
    labels: Option<&[Option<String>]>,
) -> Result<Vec<usize>> {
    if size > n {
        bail!(
            Param,
            "subset size {size} exceeds the {n} available samples"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = match labels {
        None => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            all.truncate(size);
            all
        }
        Some(labels) => {
            let mut strata: BTreeMap<Option<&str>, Vec<usize>> = BTreeMap::new();
            for (i, l) in labels.iter().enumerate().take(n) {
                strata.entry(l.as_deref()).or_default().push(i);
            }
            let exact: Vec<f64> = strata
                .values()
                .map(|s| s.len() as f64 * size as f64 / n as f64)
                .collect();
            let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
            let mut order: Vec<usize> = (0..quota.len()).collect();
            order.sort_by(|&a, &b| {
                (exact[b] - quota[b] as f64)
                    .total_cmp(&(exact[a] - quota[a] as f64))
                    .then(a.cmp(&b))
            });
            let missing = size - quota.iter().sum::<usize>();
            for &g in order.iter().take(missing) {
                quota[g] += 1;
            }
            let mut out = Vec::with_capacity(size);
            for (stratum, q) in strata.into_values().zip(quota) {
                let mut s = stratum;
                s.shuffle(&mut rng);
                out.extend_from_slice(&s[..q]);
            }
            out
        }
    };
    picked.sort_unstable();
    Ok(picked)
}

pub fn run_study(
    config: &StudyConfig,
    source: &ActivationSource,
    meta: &MetadataTable,
) -> Result<Vec<StudyRow>> {
    config.cluster.validate()?;
    let n = source.n_samples();
    if config.aggregations.is_empty() || config.sizes.is_empty() || config.layers.is_empty() {
        bail!(
            Param,
            "study needs at least one layer, aggregation and size"
        );
    }
    let labels: Option<Vec<Option<String>>> = meta.has_labels().then(|| {
        (0..n)
            .map(|i| meta.get(i).and_then(|r| r.label.clone()))
            .collect()
    });
    let subsets = config
        .sizes
        .iter()
        .map(|&size| sample_subset(n, size, config.seed, labels.as_deref()))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for layer in &config.layers {
        let tensor = source.activations(layer)?;
        let cells: Vec<(AggregationMethod, usize)> = config
            .aggregations
            .iter()
            .flat_map(|&agg| (0..config.sizes.len()).map(move |s| (agg, s)))
            .collect();
        let layer_rows = cells
            .par_iter()
            .map(|&(agg, s)| {
                let subset = tensor.select_samples(&subsets[s])?;
                let features = aggregate(&subset, agg)?;
                let norm = apply(&features, &fit_scales(&features))?;
                let labeling = cluster(&norm, &config.cluster)?.labeling;
                tracing::debug!(layer = %layer, %agg, size = config.sizes[s], naps = labeling.n_clusters(), "study cell");
                Ok(StudyRow {
                    layer: layer.clone(),
                    agg,
                    n_inputs: config.sizes[s],
                    n_naps: labeling.n_clusters(),
                    n_noise: labeling.noise().len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(layer_rows);
    }
    Ok(rows)
}

pub fn write_csv(rows: &[StudyRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| NapError::io("writing study csv", std::io::Error::other(e));
    w.write_record(["layer", "agg", "n_inputs", "n_naps", "n_noise"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            r.layer.clone(),
            r.agg.flag().to_string(),
            r.n_inputs.to_string(),
            r.n_naps.to_string(),
            r.n_noise.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| NapError::io("writing study csv", e))
}
