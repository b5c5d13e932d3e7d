//! Small exported runs on disk for exercising the service.

use std::path::Path;

use napkit_core::cluster::ClusterParams;
use napkit_core::export::{export, fingerprint_inputs, ExportRun};
use napkit_core::pipeline::{extract, ActivationSource};
use napkit_core::synthetic::{bars_dataset, class_names, toy_bar_model};
use napkit_core::{AggregationMethod, MetadataTable, SampleMetadata};

/// Stand-in image bytes; the service never decodes them.
pub fn fake_png(i: usize) -> Vec<u8> {
    let mut bytes = b"\x89PNG\r\n\x1a\n".to_vec();
    bytes.extend_from_slice(format!("sample {i}").as_bytes());
    bytes
}

/// Every seventh sample is predicted as the next class, the rest correctly.
pub fn with_predictions(meta: &MetadataTable) -> MetadataTable {
    let names = class_names();
    let records = meta.iter().map(|r| {
        let label = r.label.clone().unwrap();
        let prediction = if r.sample_id % 7 == 0 {
            let k = names.iter().position(|n| *n == label).unwrap();
            names[(k + 1) % names.len()].clone()
        } else {
            label
        };
        SampleMetadata {
            prediction: Some(prediction),
            ..r.clone()
        }
    });
    MetadataTable::from_records(records).unwrap()
}

/// Extract `relu2` and `dense` of the toy model over `n` bars and export
/// them, with images, under `dir`.
pub fn export_toy(dir: &Path, model_id: &str, n: usize) -> ExportRun {
    let data = bars_dataset(n, 11);
    let meta = with_predictions(&data.metadata(true));
    let assets = tempfile::tempdir().unwrap();
    for i in 0..n {
        std::fs::write(assets.path().join(format!("{i}.png")), fake_png(i)).unwrap();
    }
    let source = ActivationSource::Model {
        model: toy_bar_model(),
        inputs: data.images.clone(),
    };
    let layers = vec!["relu2".to_string(), "dense".to_string()];
    let results = extract(
        &source,
        model_id,
        &layers,
        AggregationMethod::Amount,
        &ClusterParams::default(),
        &meta,
    )
    .unwrap();
    let run = ExportRun {
        model_id: model_id.into(),
        created_at: "2024-01-01T00:00:00Z".into(),
        input_fingerprint: fingerprint_inputs([data.images.to_bytes().as_slice()]),
        layers: results.into_iter().map(|r| (r.napset, r.scales)).collect(),
        metadata: meta,
        assets_source: Some(assets.path().to_path_buf()),
    };
    export(&run, dir).unwrap();
    run
}
