#![allow(dead_code)]

pub mod aggregation;
pub mod inference;
pub mod normalization;

use std::collections::HashMap;
use std::path::PathBuf;

use ndarray::Array2;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
pub struct ClusterFixture {
    pub name: String,
    pub normalize: bool,
    pub min_cluster_size: usize,
    pub min_samples: usize,
    /// "reference" when the labels are the reference output and are stable
    /// under any ordering of tied tree edges, "index" when ties were ordered
    /// by endpoint index before condensing.
    pub tie_order: String,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<i64>,
}

impl ClusterFixture {
    pub fn matrix(&self) -> Array2<f32> {
        let cols = self.points[0].len();
        let flat = self.points.iter().flatten().map(|&v| v as f32).collect();
        Array2::from_shape_vec((self.points.len(), cols), flat).unwrap()
    }
}

/// Resolved through the crates directory so other crates' tests can reuse it.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/hdbscan")
}

pub fn load_cluster_fixtures() -> Vec<ClusterFixture> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixtures_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap())
        .collect()
}

/// Adjusted Rand index, with noise (-1) treated as one more group.
pub fn adjusted_rand_index(a: &[i64], b: &[i64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let mut table: HashMap<(i64, i64), f64> = HashMap::new();
    let mut rows: HashMap<i64, f64> = HashMap::new();
    let mut cols: HashMap<i64, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1.0;
        *rows.entry(x).or_default() += 1.0;
        *cols.entry(y).or_default() += 1.0;
    }
    let c2 = |v: f64| v * (v - 1.0) / 2.0;
    let index: f64 = table.values().copied().map(c2).sum();
    let sa: f64 = rows.values().copied().map(c2).sum();
    let sb: f64 = cols.values().copied().map(c2).sum();
    let expected = sa * sb / c2(n);
    let max = (sa + sb) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

pub fn as_signed(labels: &[Option<usize>]) -> Vec<i64> {
    labels.iter().map(|l| l.map_or(-1, |v| v as i64)).collect()
}

/// Brute-force Euclidean distance in f64.
pub fn dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (f64::from(x) - f64::from(y)).powi(2))
        .sum::<f64>()
        .sqrt()
}
