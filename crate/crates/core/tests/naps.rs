mod common;

use napkit_core::cluster::ClusterParams;
use napkit_core::nap::{trace_sample, NapFilter};
use napkit_core::pipeline::{extract, ActivationSource};
use napkit_core::{
    quartiles, ActivationTensor, AggregationMethod, MetadataTable, NapError, SampleMetadata,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Quartile by the "1 + (n − 1)p" rank formula, written independently.
fn oracle_quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = 1.0 + (v.len() as f64 - 1.0) * p;
    let below = rank.floor();
    let frac = rank - below;
    let i = below as usize - 1;
    if i + 1 >= v.len() {
        return v[i];
    }
    (1.0 - frac) * v[i] + frac * v[i + 1]
}

#[test]
fn quartiles_match_sort_and_interpolate() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for len in [1usize, 2, 3, 7, 1000] {
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-1e3..1e3)).collect();
        let (q1, q2, q3) = quartiles(&values).unwrap();
        for (got, p) in [(q1, 0.25), (q2, 0.5), (q3, 0.75)] {
            assert!(
                (got - oracle_quantile(&values, p)).abs() <= 1e-9,
                "len {len} p {p}"
            );
        }
    }
    assert!(matches!(quartiles(&[]), Err(NapError::Param(_))));
}

/// `per_blob` points around each center, dims = center length.
fn blob_rows(centers: &[Vec<f32>], per_blob: usize, spread: f32, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let mut out = Vec::new();
    for i in 0..per_blob * centers.len() {
        // interleave blobs so sample ids of one blob are not contiguous
        let c = &centers[i % centers.len()];
        out.extend(c.iter().map(|v| {
            if spread > 0.0 {
                v + rng.random_range(-spread..spread)
            } else {
                *v
            }
        }));
    }
    out
}

const CLASSES: [&str; 2] = ["left", "right"];

fn labelled(n: usize) -> MetadataTable {
    MetadataTable::from_records((0..n).map(|i| {
        let label = CLASSES[i % 2];
        // every fifth sample of class 0 is predicted wrong
        let prediction = if i % 2 == 0 && i % 5 == 0 {
            CLASSES[1]
        } else {
            label
        };
        SampleMetadata {
            label: Some(label.into()),
            prediction: Some(prediction.into()),
            ..SampleMetadata::new(i)
        }
    }))
    .unwrap()
}

/// Three layers in which the same two groups of samples stay apart.
fn planted_layers(n: usize) -> Vec<ActivationTensor> {
    planted_layers_with_spread(n, 0.5)
}

fn planted_layers_with_spread(n: usize, spread: f32) -> Vec<ActivationTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let dims = [3usize, 6, 2];
    dims.iter()
        .enumerate()
        .map(|(l, &d)| {
            let a: Vec<f32> = (0..d).map(|j| if j % 2 == 0 { 8.0 } else { 1.0 }).collect();
            let b: Vec<f32> = (0..d).map(|j| if j % 2 == 0 { 1.0 } else { 8.0 }).collect();
            let rows = blob_rows(&[a, b], n / 2, spread, &mut rng);
            ActivationTensor::new(format!("layer{l}"), vec![n, d], rows).unwrap()
        })
        .collect()
}

#[test]
fn nap_stats_equal_direct_recomputation() {
    let n = 80;
    let source = ActivationSource::Tensors(planted_layers(n));
    let meta = labelled(n);
    let results = extract(
        &source,
        "planted",
        &["layer1".to_string()],
        AggregationMethod::Amount,
        &ClusterParams::default(),
        &meta,
    )
    .unwrap();
    let r = &results[0];
    assert_eq!(r.napset.naps.len(), 2);
    let values = r.normalized.values();
    for nap in &r.napset.naps {
        assert_eq!(nap.stats.len(), values.ncols());
        for (j, s) in nap.stats.iter().enumerate() {
            let col: Vec<f64> = nap
                .member_sample_ids
                .iter()
                .map(|&i| f64::from(values[[i, j]]))
                .collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            assert!((s.mean - mean).abs() <= 1e-12);
            assert_eq!(s.min, col.iter().copied().fold(f64::INFINITY, f64::min));
            assert_eq!(s.max, col.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            assert!((s.q1 - oracle_quantile(&col, 0.25)).abs() <= 1e-12);
            assert!((s.median - oracle_quantile(&col, 0.5)).abs() <= 1e-12);
            assert!((s.q3 - oracle_quantile(&col, 0.75)).abs() <= 1e-12);
            assert_eq!(s.feature, r.normalized.feature_names()[j]);
        }
        let purity = nap.label_histogram.values().max().unwrap();
        assert_eq!(*purity, nap.size());
    }
}

#[test]
fn mispredicted_filter_counts_match_a_manual_join() {
    let n = 80;
    let meta = labelled(n);
    let results = extract(
        &ActivationSource::Tensors(planted_layers(n)),
        "planted",
        &["layer0".to_string()],
        AggregationMethod::Amount,
        &ClusterParams::default(),
        &meta,
    )
    .unwrap();
    let set = &results[0].napset;
    for nap in &set.naps {
        let manual = nap
            .member_sample_ids
            .iter()
            .filter(|&&s| {
                let r = meta.get(s).unwrap();
                r.label != r.prediction
            })
            .count();
        assert_eq!(nap.misprediction_count, manual);
    }
    let only_wrong = NapFilter {
        mispredicted: true,
        ..NapFilter::default()
    };
    let kept = set.filter(&only_wrong, &meta);
    let expected: Vec<&str> = set
        .naps
        .iter()
        .filter(|n| n.misprediction_count > 0)
        .map(|n| n.nap_id.as_str())
        .collect();
    assert_eq!(
        kept.naps
            .iter()
            .map(|n| n.nap_id.as_str())
            .collect::<Vec<_>>(),
        expected
    );
    // class "right" is never mispredicted, so exactly one NAP remains
    assert_eq!(kept.naps.len(), 1);

    let absent = NapFilter {
        label: Some("nowhere".into()),
        ..NapFilter::default()
    };
    assert!(set.filter(&absent, &meta).naps.is_empty());
}

#[test]
fn planted_concept_is_traced_through_every_layer() {
    let n = 60;
    // Leaf mode is scale free, so any jitter inside a blob can split it
    // into sub-leaves; the planted groups are exact.
    let layers = planted_layers_with_spread(n, 0.0);
    let names: Vec<String> = layers.iter().map(|t| t.layer_id().to_string()).collect();
    let results = extract(
        &ActivationSource::Tensors(layers),
        "planted",
        &names,
        AggregationMethod::Amount,
        &ClusterParams::default(),
        &MetadataTable::new(),
    )
    .unwrap();
    let sets: Vec<_> = results.into_iter().map(|r| r.napset).collect();
    for sample in [0, 1, 31] {
        let steps = trace_sample(sample, &sets).unwrap();
        assert_eq!(steps.len(), 3);
        let orders: Vec<usize> = steps.iter().map(|s| s.layer_order).collect();
        assert_eq!(orders, [0, 1, 2]);
        // samples of the same blob share a NAP at every layer
        let partner = trace_sample(sample + 2, &sets).unwrap();
        assert_eq!(steps, partner);
    }
    assert!(matches!(trace_sample(n, &sets), Err(NapError::Lookup(_))));
}
