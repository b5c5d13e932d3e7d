//! Per-feature max-absolute scaling. Zero stays zero and signs are kept, so
//! non-negative columns land in `[0, 1]` and mixed-sign columns in `[-1, 1]`.

use ndarray::{Array2, ArrayView2, Axis};

use crate::disentangle::FeatureMatrix;
use crate::error::{bail, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct UnitScales {
    scales: Vec<f32>,
    fitted_on: String,
}

impl UnitScales {
    pub fn scales(&self) -> &[f32] {
        &self.scales
    }

    /// Fingerprint of the feature matrix the scales were fitted on.
    pub fn fitted_on(&self) -> &str {
        &self.fitted_on
    }

    /// Raw little-endian `f32` array, one value per feature column.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.scales.iter().flat_map(|s| s.to_le_bytes()).collect()
    }

    pub fn from_bytes(bytes: &[u8], fitted_on: impl Into<String>) -> Result<Self> {
        if !bytes.len().is_multiple_of(4) {
            bail!(
                Format,
                "scale file length {} is not a multiple of 4",
                bytes.len()
            );
        }
        let scales: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            bail!(Data, "scales must be finite and positive");
        }
        Ok(Self {
            scales,
            fitted_on: fitted_on.into(),
        })
    }
}

/// Feature matrix after scaling; every value lies in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    feature_names: Vec<String>,
    values: Array2<f32>,
}

impl NormalizedMatrix {
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
}

/// Column-wise maximum absolute value; all-zero columns get scale 1.
pub fn fit_scales(m: &FeatureMatrix) -> UnitScales {
    let scales = m
        .values()
        .axis_iter(Axis(1))
        .map(|col| {
            let max = col.iter().fold(0f32, |acc, v| acc.max(v.abs()));
            if max > 0.0 {
                max
            } else {
                1.0
            }
        })
        .collect();
    UnitScales {
        scales,
        fitted_on: m.fingerprint(),
    }
}

pub fn apply(m: &FeatureMatrix, s: &UnitScales) -> Result<NormalizedMatrix> {
    if m.n_features() != s.scales.len() {
        bail!(
            Shape,
            "matrix has {} columns but {} scales were given",
            m.n_features(),
            s.scales.len()
        );
    }
    let mut values = m.values().to_owned();
    for (mut col, &scale) in values.axis_iter_mut(Axis(1)).zip(&s.scales) {
        col.mapv_inplace(|v| v / scale);
    }
    Ok(NormalizedMatrix {
        feature_names: m.feature_names().to_vec(),
        values,
    })
}

/// `fit_scales` followed by `apply` on the same matrix.
pub fn normalize(m: &FeatureMatrix) -> (UnitScales, NormalizedMatrix) {
    let scales = fit_scales(m);
    let norm = apply(m, &scales).expect("scales fitted on this matrix");
    (scales, norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::NapError;
    use ndarray::array;
    use proptest::prelude::*;

    fn matrix(values: Array2<f32>) -> FeatureMatrix {
        FeatureMatrix::from_rows(values).unwrap()
    }

    #[test]
    fn scales_follow_abs_max() {
        let m = matrix(array![[0., -4., 0.], [5., 2., 0.], [10., 0., 0.]]);
        assert_eq!(fit_scales(&m).scales(), &[10., 4., 1.]);
    }

    #[test]
    fn apply_divides_and_keeps_sign() {
        let m = matrix(array![[0., -4.], [5., 2.], [10., 0.]]);
        let (_, n) = normalize(&m);
        assert_eq!(n.values(), array![[0., -1.], [0.5, 0.5], [1., 0.]]);
    }

    #[test]
    fn column_mismatch_is_shape_error() {
        let m = matrix(array![[1., 2.]]);
        let s = UnitScales::from_bytes(&1f32.to_le_bytes(), "x").unwrap();
        assert!(matches!(apply(&m, &s), Err(NapError::Shape(_))));
    }

    #[test]
    fn scale_bytes_round_trip() {
        let m = matrix(array![[3., -0.25, 0.]]);
        let s = fit_scales(&m);
        assert_eq!(
            UnitScales::from_bytes(&s.to_bytes(), s.fitted_on()).unwrap(),
            s
        );
        assert!(UnitScales::from_bytes(&[0, 0, 0], "x").is_err());
        assert!(UnitScales::from_bytes(&0f32.to_le_bytes(), "x").is_err());
    }

    fn arb_matrix() -> impl Strategy<Value = Array2<f32>> {
        (1usize..12, 1usize..6).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop_oneof![Just(0f32), -1e4f32..1e4], r * c)
                .prop_map(move |v| Array2::from_shape_vec((r, c), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn refit_on_normalized_is_identity(values in arb_matrix()) {
            let (_, once) = normalize(&matrix(values));
            let (_, twice) = normalize(&matrix(once.values().to_owned()));
            for (a, b) in once.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
        }

        #[test]
        fn positive_rescaling_of_a_column_changes_nothing(values in arb_matrix(), alpha in 0.01f32..100.0) {
            let (_, base) = normalize(&matrix(values.clone()));
            let mut scaled = values;
            scaled.column_mut(0).mapv_inplace(|v| v * alpha);
            let (_, after) = normalize(&matrix(scaled));
            for (a, b) in base.values().iter().zip(after.values()) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
        }
    }
}
