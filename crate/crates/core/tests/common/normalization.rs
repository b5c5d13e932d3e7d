//! Random feature matrices with zero entries and all-zero columns, and an
//! independent check of the normalized output.

use napkit_core::normalize::normalize;
use napkit_core::FeatureMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.random_range(1..40);
    let cols = rng.random_range(1..20);
    let magnitude = 10f32.powi(rng.random_range(-3..6));
    let zero_col = rng.random_range(0..cols + 3);
    let nonneg = rng.random_bool(0.5);
    let values = Array2::from_shape_fn((rows, cols), |(_, c)| {
        if c == zero_col || rng.random_bool(0.15) {
            0.0
        } else if nonneg {
            rng.random_range(0.0..magnitude)
        } else {
            rng.random_range(-magnitude..magnitude)
        }
    });
    FeatureMatrix::from_rows(values).unwrap()
}

/// Returns a description of the first violated property, if any.
pub fn check_normalized(m: &FeatureMatrix) -> Result<(), String> {
    let (scales, out) = normalize(m);
    let (x, y) = (m.values(), out.values());
    if y.dim() != x.dim() {
        return Err(format!("shape {:?} vs {:?}", y.dim(), x.dim()));
    }
    for c in 0..x.ncols() {
        let col_max = x.column(c).iter().fold(0f32, |acc, v| acc.max(v.abs()));
        let out_max = y.column(c).iter().fold(0f32, |acc, v| acc.max(v.abs()));
        if col_max == 0.0 {
            if out_max != 0.0 || scales.scales()[c] != 1.0 {
                return Err(format!("all-zero column {c} changed"));
            }
        } else if (out_max - 1.0).abs() > 1e-6 {
            return Err(format!("column {c} max |value| is {out_max}"));
        }
        for (a, b) in x.column(c).iter().zip(y.column(c)) {
            if (*a == 0.0) != (*b == 0.0) {
                return Err(format!("zero not preserved in column {c}: {a} -> {b}"));
            }
            if a.signum() != b.signum() && *a != 0.0 {
                return Err(format!("sign flipped in column {c}: {a} -> {b}"));
            }
            if b.abs() > 1.0 + 1e-6 {
                return Err(format!("value {b} outside [-1, 1]"));
            }
        }
    }
    Ok(())
}
