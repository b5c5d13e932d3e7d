//! Per-layer pipeline: aggregate, normalize, cluster, assemble.

use crate::cluster::{cluster, ClusterParams, Clustering};
use crate::disentangle::{aggregate, AggregationMethod};
use crate::error::{bail, NapError, Result};
use crate::metadata::MetadataTable;
use crate::model::{run_model, MicroModel};
use crate::nap::{assemble, LayerContext, NapSet};
use crate::normalize::{apply, fit_scales, NormalizedMatrix, UnitScales};
use crate::tensor::ActivationTensor;

/// Where layer activations come from.
#[derive(Debug, Clone)]
pub enum ActivationSource {
    /// Run the built-in engine over `inputs`.
    Model {
        model: MicroModel,
        inputs: ActivationTensor,
    },
    /// Pre-computed tensors, one per layer, given input side first.
    Tensors(Vec<ActivationTensor>),
}

impl ActivationSource {
    pub fn n_samples(&self) -> usize {
        match self {
            ActivationSource::Model { inputs, .. } => inputs.n_samples(),
            ActivationSource::Tensors(ts) => ts.first().map_or(0, ActivationTensor::n_samples),
        }
    }

    pub fn layer_names(&self) -> Vec<String> {
        match self {
            ActivationSource::Model { model, .. } => {
                model.layer_names().map(str::to_string).collect()
            }
            ActivationSource::Tensors(ts) => ts.iter().map(|t| t.layer_id().to_string()).collect(),
        }
    }

    /// Position of the layer, input side first.
    pub fn layer_order(&self, layer: &str) -> Result<usize> {
        match self {
            ActivationSource::Model { model, .. } => model.layer_index(layer),
            ActivationSource::Tensors(ts) => ts
                .iter()
                .position(|t| t.layer_id() == layer)
                .ok_or_else(|| NapError::Lookup(format!("no tensor for layer '{layer}'"))),
        }
    }

    pub fn activations(&self, layer: &str) -> Result<ActivationTensor> {
        match self {
            ActivationSource::Model { model, inputs } => run_model(model, inputs, layer),
            ActivationSource::Tensors(ts) => {
                let t = &ts[self.layer_order(layer)?];
                if t.n_samples() != self.n_samples() {
                    bail!(
                        Shape,
                        "tensor '{layer}' has {} samples, expected {}",
                        t.n_samples(),
                        self.n_samples()
                    );
                }
                Ok(t.clone())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LayerResult {
    pub napset: NapSet,
    pub scales: UnitScales,
    pub normalized: NormalizedMatrix,
    pub clustering: Clustering,
}

/// Full pipeline for one layer's activations.
pub fn extract_layer(
    tensor: &ActivationTensor,
    aggregation: AggregationMethod,
    params: &ClusterParams,
    meta: &MetadataTable,
    ctx: &LayerContext,
) -> Result<LayerResult> {
    let features = aggregate(tensor, aggregation)?;
    let scales = fit_scales(&features);
    let normalized = apply(&features, &scales)?;
    let clustering = cluster(&normalized, params)?;
    let napset = assemble(&clustering.labeling, &normalized, meta, params, ctx)?;
    Ok(LayerResult {
        napset,
        scales,
        normalized,
        clustering,
    })
}

/// Run [`extract_layer`] for each named layer, in the given order.
pub fn extract(
    source: &ActivationSource,
    model_id: &str,
    layers: &[String],
    aggregation: AggregationMethod,
    params: &ClusterParams,
    meta: &MetadataTable,
) -> Result<Vec<LayerResult>> {
    params.validate()?;
    if layers.is_empty() {
        bail!(Param, "no layers requested");
    }
    layers
        .iter()
        .map(|layer| {
            let tensor = source.activations(layer)?;
            let ctx = LayerContext {
                model_id: model_id.to_string(),
                layer_id: layer.clone(),
                layer_order: source.layer_order(layer)?,
                aggregation,
            };
            tracing::info!(layer = %layer, shape = ?tensor.shape(), "extracting NAPs");
            extract_layer(&tensor, aggregation, params, meta, &ctx)
        })
        .collect()
}
