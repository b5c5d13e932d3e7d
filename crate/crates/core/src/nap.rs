//! NAP records: clustered samples joined with per-feature statistics and
//! metadata summaries.

use std::collections::BTreeMap;

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterParams, Labeling};
use crate::disentangle::AggregationMethod;
use crate::error::{bail, NapError, Result};
use crate::metadata::{MetadataTable, SampleMetadata};
use crate::normalize::NormalizedMatrix;

/// Five-number summary plus mean of one feature over a NAP's members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub feature: String,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nap {
    /// `{model}/{layer}/{cluster_label}`
    pub nap_id: String,
    pub layer_id: String,
    pub cluster_label: usize,
    /// Cluster stability.
    #[serde(with = "lenient_f64")]
    pub persistence: f64,
    /// Ordered by descending membership strength, then ascending id.
    pub member_sample_ids: Vec<usize>,
    /// Aligned with `member_sample_ids`.
    pub membership_strengths: Vec<f64>,
    pub stats: Vec<FeatureStats>,
    pub label_histogram: BTreeMap<String, usize>,
    pub prediction_histogram: BTreeMap<String, usize>,
    pub misprediction_count: usize,
}

impl Nap {
    pub fn size(&self) -> usize {
        self.member_sample_ids.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub aggregation: AggregationMethod,
    pub cluster: ClusterParams,
}

/// All NAPs of one layer, sorted by descending persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NapSet {
    pub model_id: String,
    pub layer_id: String,
    /// Position of the layer in the model, input side first.
    pub layer_order: usize,
    pub n_samples: usize,
    pub params: LayerParams,
    pub naps: Vec<Nap>,
    pub noise_sample_ids: Vec<usize>,
}

impl NapSet {
    pub fn nap(&self, nap_id: &str) -> Option<&Nap> {
        self.naps.iter().find(|n| n.nap_id == nap_id)
    }

    /// NAP containing `sample_id`, if it is not noise.
    pub fn nap_of(&self, sample_id: usize) -> Option<&Nap> {
        self.naps
            .iter()
            .find(|n| n.member_sample_ids.contains(&sample_id))
    }

    /// Copy of the set keeping only NAPs with at least one member matching
    /// every predicate in `filter`. Order is preserved.
    pub fn filter(&self, filter: &NapFilter, meta: &MetadataTable) -> NapSet {
        let naps = self
            .naps
            .iter()
            .filter(|nap| {
                nap.member_sample_ids
                    .iter()
                    .any(|&s| filter.matches(s, meta))
            })
            .cloned()
            .collect();
        NapSet {
            naps,
            ..self.clone()
        }
    }
}

/// Where a layer's NAPs came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerContext {
    pub model_id: String,
    pub layer_id: String,
    pub layer_order: usize,
    pub aggregation: AggregationMethod,
}

pub fn nap_id(model_id: &str, layer_id: &str, cluster_label: usize) -> String {
    format!("{model_id}/{layer_id}/{cluster_label}")
}

pub fn assemble(
    labeling: &Labeling,
    norm: &NormalizedMatrix,
    meta: &MetadataTable,
    params: &ClusterParams,
    ctx: &LayerContext,
) -> Result<NapSet> {
    let n = norm.n_samples();
    if labeling.n_points() != n {
        bail!(
            Shape,
            "labeling covers {} samples but matrix has {n}",
            labeling.n_points()
        );
    }
    if let Some(r) = meta.iter().find(|r| r.sample_id >= n) {
        bail!(
            Shape,
            "metadata references sample {} but only {n} samples exist",
            r.sample_id
        );
    }

    let values = norm.values();
    let mut naps = Vec::with_capacity(labeling.n_clusters());
    for label in 0..labeling.n_clusters() {
        let mut members = labeling.members(label);
        members.sort_by(|&a, &b| {
            labeling
                .strength(b)
                .total_cmp(&labeling.strength(a))
                .then(a.cmp(&b))
        });

        let rows = values.select(Axis(0), &members);
        let stats = norm
            .feature_names()
            .iter()
            .zip(rows.axis_iter(Axis(1)))
            .map(|(name, col)| feature_stats(name, col.iter().map(|&v| f64::from(v)).collect()))
            .collect();

        let mut label_histogram = BTreeMap::new();
        let mut prediction_histogram = BTreeMap::new();
        let mut misprediction_count = 0;
        for r in members.iter().filter_map(|&s| meta.get(s)) {
            if let Some(l) = &r.label {
                *label_histogram.entry(l.clone()).or_insert(0) += 1;
            }
            if let Some(p) = &r.prediction {
                *prediction_histogram.entry(p.clone()).or_insert(0) += 1;
            }
            misprediction_count += usize::from(r.is_mispredicted());
        }

        naps.push(Nap {
            nap_id: nap_id(&ctx.model_id, &ctx.layer_id, label),
            layer_id: ctx.layer_id.clone(),
            cluster_label: label,
            persistence: labeling.stability(label),
            membership_strengths: members.iter().map(|&s| labeling.strength(s)).collect(),
            member_sample_ids: members,
            stats,
            label_histogram,
            prediction_histogram,
            misprediction_count,
        });
    }
    naps.sort_by(|a, b| {
        b.persistence
            .total_cmp(&a.persistence)
            .then(a.cluster_label.cmp(&b.cluster_label))
    });

    Ok(NapSet {
        model_id: ctx.model_id.clone(),
        layer_id: ctx.layer_id.clone(),
        layer_order: ctx.layer_order,
        n_samples: n,
        params: LayerParams {
            aggregation: ctx.aggregation,
            cluster: *params,
        },
        naps,
        noise_sample_ids: labeling.noise(),
    })
}

fn feature_stats(name: &str, mut values: Vec<f64>) -> FeatureStats {
    values.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (q1, median, q3) = sorted_quartiles(&values);
    FeatureStats {
        feature: name.to_string(),
        mean,
        min: values[0],
        q1,
        median,
        q3,
        max: values[values.len() - 1],
    }
}

/// Linear-interpolation quartiles (numpy's default method).
pub fn quartiles(values: &[f64]) -> Result<(f64, f64, f64)> {
    if values.is_empty() {
        bail!(Param, "quartiles of an empty list");
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted_quartiles(&sorted))
}

fn sorted_quartiles(sorted: &[f64]) -> (f64, f64, f64) {
    let at = |p: f64| {
        let h = (sorted.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(sorted.len() - 1);
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    (at(0.25), at(0.5), at(0.75))
}

/// Metadata predicates; all present predicates must hold for a member to match.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NapFilter {
    pub label: Option<String>,
    pub prediction: Option<String>,
    pub mispredicted: bool,
}

impl NapFilter {
    pub fn is_empty(&self) -> bool {
        self.label.is_none() && self.prediction.is_none() && !self.mispredicted
    }

    /// Parse `field=value` pairs. Accepted fields: `label`, `prediction`,
    /// `mispredicted` (`true`/`false`).
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut f = NapFilter::default();
        for (key, value) in pairs {
            match key {
                "label" => f.label = Some(value.to_string()),
                "prediction" => f.prediction = Some(value.to_string()),
                "mispredicted" => {
                    f.mispredicted = value.parse().map_err(|_| {
                        NapError::Param(format!(
                            "mispredicted must be true or false, got '{value}'"
                        ))
                    })?
                }
                other => bail!(Param, "unknown filter field '{other}'"),
            }
        }
        Ok(f)
    }

    pub fn matches(&self, sample_id: usize, meta: &MetadataTable) -> bool {
        if self.is_empty() {
            return true;
        }
        let Some(r) = meta.get(sample_id) else {
            return false;
        };
        self.label
            .as_ref()
            .is_none_or(|l| r.label.as_ref() == Some(l))
            && self
                .prediction
                .as_ref()
                .is_none_or(|p| r.prediction.as_ref() == Some(p))
            && (!self.mispredicted || r.is_mispredicted())
    }
}

/// One step of a sample's path through a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub layer_id: String,
    pub layer_order: usize,
    pub nap_id: String,
}

/// A sample's metadata and the NAPs it belongs to in one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTrace {
    pub model_id: String,
    pub sample_id: usize,
    pub metadata: Option<SampleMetadata>,
    pub steps: Vec<TraceStep>,
}

/// NAPs containing `sample_id`, one per layer, ordered input side first.
/// Layers where the sample is noise are skipped.
pub fn trace_sample(sample_id: usize, sets: &[NapSet]) -> Result<Vec<TraceStep>> {
    if !sets.iter().any(|s| sample_id < s.n_samples) {
        bail!(Lookup, "unknown sample {sample_id}");
    }
    let mut steps: Vec<TraceStep> = sets
        .iter()
        .filter_map(|set| {
            set.nap_of(sample_id).map(|nap| TraceStep {
                layer_id: set.layer_id.clone(),
                layer_order: set.layer_order,
                nap_id: nap.nap_id.clone(),
            })
        })
        .collect();
    steps.sort_by_key(|s| s.layer_order);
    Ok(steps)
}

/// Serialize non-finite floats as strings so documents stay valid JSON.
pub mod lenient_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("invalid float '{other}'"))),
            },
        }
    }
}
