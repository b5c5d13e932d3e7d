//! Neural activation pattern (NAP) extraction.
//!
//! The pipeline turns layer activations into groups of inputs that excite a
//! layer in a similar way:
//!
//! 1. [`tensor`] / [`model`]: load or compute activations for a layer.
//! 2. [`disentangle`]: collapse spatial cells into per-unit statistics.
//! 3. [`normalize`]: scale every feature by its maximum absolute value.
//! 4. [`cluster`]: density-based clustering with leaf selection.
//! 5. [`nap`]: ordered NAP records with per-feature statistics.
//! 6. [`export`]: on-disk layout read by the HTTP service.

pub mod cluster;
pub mod disentangle;
pub mod error;
pub mod export;
pub mod metadata;
pub mod model;
pub mod nap;
pub mod normalize;
pub mod pipeline;
pub mod study;
pub mod synthetic;
pub mod tensor;

pub use cluster::{ClusterParams, Labeling, SelectionMethod};
pub use disentangle::{aggregate, AggregationMethod, FeatureMatrix};
pub use error::{NapError, Result};
pub use metadata::{load_metadata, MetadataTable, SampleMetadata};
pub use model::{load_model, run_model, MicroModel};
pub use nap::{
    assemble, quartiles, trace_sample, FeatureStats, Nap, NapFilter, NapSet, SampleTrace, TraceStep,
};
pub use normalize::{apply, fit_scales, NormalizedMatrix, UnitScales};
pub use tensor::{load_tensor, save_tensor, ActivationTensor};
