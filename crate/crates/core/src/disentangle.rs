//! Location disentanglement: collapse the spatial cells of each unit into
//! position-independent statistics.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{bail, NapError, Result};
use crate::tensor::ActivationTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMethod {
    /// Keep every spatial cell as its own feature.
    None,
    /// Maximum over spatial cells.
    PeakStrength,
    /// Minimum and maximum.
    Range,
    /// Mean.
    Amount,
    /// Mean and population standard deviation.
    AmountSpread,
}

impl AggregationMethod {
    pub const ALL: [AggregationMethod; 5] = [
        AggregationMethod::None,
        AggregationMethod::PeakStrength,
        AggregationMethod::Range,
        AggregationMethod::Amount,
        AggregationMethod::AmountSpread,
    ];

    /// Short name used on the command line.
    pub fn flag(self) -> &'static str {
        match self {
            AggregationMethod::None => "none",
            AggregationMethod::PeakStrength => "max",
            AggregationMethod::Range => "minmax",
            AggregationMethod::Amount => "mean",
            AggregationMethod::AmountSpread => "meanstd",
        }
    }

    fn stats(self) -> &'static [&'static str] {
        match self {
            AggregationMethod::None => &[],
            AggregationMethod::PeakStrength => &["max"],
            AggregationMethod::Range => &["min", "max"],
            AggregationMethod::Amount => &["mean"],
            AggregationMethod::AmountSpread => &["mean", "std"],
        }
    }

    /// Features produced per unit for a tensor with `n_positions` spatial cells.
    pub fn features_per_unit(self, n_positions: usize) -> usize {
        match self {
            AggregationMethod::None => n_positions,
            m => m.stats().len(),
        }
    }
}

impl fmt::Display for AggregationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.flag())
    }
}

impl FromStr for AggregationMethod {
    type Err = NapError;

    fn from_str(s: &str) -> Result<Self> {
        AggregationMethod::ALL
            .into_iter()
            .find(|m| m.flag() == s)
            .ok_or_else(|| {
                NapError::Param(format!(
                    "unknown aggregation '{s}' (expected none|max|minmax|mean|meanstd)"
                ))
            })
    }
}

/// Samples × features, rows in sample order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    feature_names: Vec<String>,
    values: Array2<f32>,
}

impl FeatureMatrix {
    pub fn new(feature_names: Vec<String>, values: Array2<f32>) -> Result<Self> {
        if feature_names.len() != values.ncols() {
            bail!(
                Shape,
                "{} feature names for {} columns",
                feature_names.len(),
                values.ncols()
            );
        }
        if values.iter().any(|v| !v.is_finite()) {
            bail!(Data, "feature matrix contains non-finite values");
        }
        Ok(Self {
            feature_names,
            values,
        })
    }

    /// Matrix with generic `f{j}` column names.
    pub fn from_rows(values: Array2<f32>) -> Result<Self> {
        let names = (0..values.ncols()).map(|j| format!("f{j}")).collect();
        Self::new(names, values)
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn values(&self) -> ArrayView2<'_, f32> {
        self.values.view()
    }

    pub fn into_parts(self) -> (Vec<String>, Array2<f32>) {
        (self.feature_names, self.values)
    }

    /// Content hash over column names and values.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for name in &self.feature_names {
            h.update(name.as_bytes());
            h.update([0]);
        }
        h.update((self.n_samples() as u64).to_le_bytes());
        for v in &self.values {
            h.update(v.to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }
}

/// Aggregate a `(samples, spatial..., units)` tensor into a feature matrix.
///
/// Rank-2 tensors have no spatial cells and pass through unchanged for every
/// method.
pub fn aggregate(tensor: &ActivationTensor, method: AggregationMethod) -> Result<FeatureMatrix> {
    if tensor.rank() < 2 {
        bail!(
            Shape,
            "aggregation needs rank >= 2, got shape {:?}",
            tensor.shape()
        );
    }
    let n = tensor.n_samples();
    let units = tensor.n_units();
    let positions = tensor.n_positions();

    if tensor.rank() == 2 || method == AggregationMethod::None {
        let names = if tensor.rank() == 2 {
            (0..units).map(|u| format!("unit{u}")).collect()
        } else {
            (0..positions)
                .flat_map(|p| (0..units).map(move |u| format!("unit{u}.pos{p}")))
                .collect()
        };
        let values = Array2::from_shape_vec((n, tensor.sample_len()), tensor.values().to_vec())
            .expect("sample_len matches tensor length");
        return FeatureMatrix::new(names, values);
    }

    let stats = method.stats();
    let names = (0..units)
        .flat_map(|u| stats.iter().map(move |s| format!("unit{u}.{s}")))
        .collect();
    let mut values = Array2::<f32>::zeros((n, units * stats.len()));
    values
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let sample = tensor.sample(i);
            for u in 0..units {
                let cells = sample.iter().skip(u).step_by(units).copied();
                let out = &mut row.as_slice_mut().unwrap()[u * stats.len()..(u + 1) * stats.len()];
                summarize(method, cells, positions, out);
            }
        });
    FeatureMatrix::new(names, values)
}

fn summarize(
    method: AggregationMethod,
    cells: impl Iterator<Item = f32> + Clone,
    count: usize,
    out: &mut [f32],
) {
    let mean = || cells.clone().map(f64::from).sum::<f64>() / count as f64;
    match method {
        AggregationMethod::PeakStrength => {
            out[0] = cells.fold(f32::NEG_INFINITY, f32::max);
        }
        AggregationMethod::Range => {
            let (lo, hi) = cells.fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
            out[0] = lo;
            out[1] = hi;
        }
        AggregationMethod::Amount => {
            out[0] = mean() as f32;
        }
        AggregationMethod::AmountSpread => {
            let m = mean();
            let var = cells.map(|v| (f64::from(v) - m).powi(2)).sum::<f64>() / count as f64;
            out[0] = m as f32;
            out[1] = var.sqrt() as f32;
        }
        AggregationMethod::None => unreachable!("handled by the pass-through path"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(values: &[f32], h: usize, w: usize) -> ActivationTensor {
        ActivationTensor::new("l", vec![1, h, w, 1], values.to_vec()).unwrap()
    }

    fn row(m: &FeatureMatrix) -> Vec<f32> {
        m.values().row(0).to_vec()
    }

    #[test]
    fn closed_form_statistics() {
        let t = plane(&[1., 2., 3., 4.], 2, 2);
        assert_eq!(
            row(&aggregate(&t, AggregationMethod::PeakStrength).unwrap()),
            [4.]
        );
        assert_eq!(
            row(&aggregate(&t, AggregationMethod::Range).unwrap()),
            [1., 4.]
        );
        assert_eq!(
            row(&aggregate(&t, AggregationMethod::Amount).unwrap()),
            [2.5]
        );
        let ms = row(&aggregate(&t, AggregationMethod::AmountSpread).unwrap());
        assert_eq!(ms[0], 2.5);
        assert!((ms[1] - 1.118_034).abs() < 1e-6);
    }

    #[test]
    fn constant_plane_has_zero_spread() {
        let t = plane(&[0.7; 9], 3, 3);
        assert_eq!(
            row(&aggregate(&t, AggregationMethod::AmountSpread).unwrap()),
            [0.7, 0.]
        );
    }

    #[test]
    fn feature_names_and_counts() {
        let t = ActivationTensor::new("l", vec![2, 2, 3, 4], vec![0.5; 48]).unwrap();
        let m = aggregate(&t, AggregationMethod::Range).unwrap();
        assert_eq!(m.n_features(), 8);
        assert_eq!(
            &m.feature_names()[..3],
            ["unit0.min", "unit0.max", "unit1.min"]
        );
        let m = aggregate(&t, AggregationMethod::None).unwrap();
        assert_eq!(m.n_features(), 24);
        assert_eq!(m.feature_names()[5], "unit1.pos1");
        for method in AggregationMethod::ALL {
            let m = aggregate(&t, method).unwrap();
            assert_eq!(m.n_features(), 4 * method.features_per_unit(6));
        }
    }

    #[test]
    fn rank_two_passes_through() {
        let t = ActivationTensor::new("d", vec![2, 3], vec![1., -2., 3., 4., 5., -6.]).unwrap();
        for method in AggregationMethod::ALL {
            let m = aggregate(&t, method).unwrap();
            assert_eq!(m.values().as_slice().unwrap(), t.values());
            assert_eq!(m.feature_names(), ["unit0", "unit1", "unit2"]);
        }
    }

    #[test]
    fn rank_one_is_rejected() {
        let t = ActivationTensor::new("d", vec![3], vec![1., 2., 3.]).unwrap();
        assert!(matches!(
            aggregate(&t, AggregationMethod::Amount),
            Err(NapError::Shape(_))
        ));
    }

    #[test]
    fn parses_flags() {
        for m in AggregationMethod::ALL {
            assert_eq!(m.flag().parse::<AggregationMethod>().unwrap(), m);
        }
        assert!(matches!(
            "avg".parse::<AggregationMethod>(),
            Err(NapError::Param(_))
        ));
    }
}
