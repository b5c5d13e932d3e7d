//! Per-element loop recomputation of every aggregation method on a
//! `(samples, h, w, units)` tensor.

use napkit_core::{ActivationTensor, AggregationMethod};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn naive_aggregate(t: &ActivationTensor, method: AggregationMethod) -> Vec<Vec<f64>> {
    let s = t.shape();
    let (n, h, w, u) = (s[0], s[1], s[2], s[3]);
    let v = t.values();
    let at = |i: usize, y: usize, x: usize, k: usize| f64::from(v[((i * h + y) * w + x) * u + k]);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::new();
        if method == AggregationMethod::None {
            for y in 0..h {
                for x in 0..w {
                    for k in 0..u {
                        row.push(at(i, y, x, k));
                    }
                }
            }
            rows.push(row);
            continue;
        }
        for k in 0..u {
            let mut cells = Vec::with_capacity(h * w);
            for y in 0..h {
                for x in 0..w {
                    cells.push(at(i, y, x, k));
                }
            }
            let count = cells.len() as f64;
            let max = cells.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = cells.iter().copied().fold(f64::INFINITY, f64::min);
            let mean = cells.iter().sum::<f64>() / count;
            let std = (cells.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / count).sqrt();
            match method {
                AggregationMethod::PeakStrength => row.push(max),
                AggregationMethod::Range => row.extend([min, max]),
                AggregationMethod::Amount => row.push(mean),
                AggregationMethod::AmountSpread => row.extend([mean, std]),
                AggregationMethod::None => unreachable!(),
            }
        }
        rows.push(row);
    }
    rows
}

pub fn random_tensor(shape: [usize; 4], seed: u64) -> ActivationTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = shape.iter().product();
    let values = (0..len).map(|_| rng.random_range(-5.0f32..5.0)).collect();
    ActivationTensor::new("conv", shape.to_vec(), values).unwrap()
}

/// Shuffles the spatial cells of every (sample, unit) plane independently.
pub fn shuffle_planes(t: &ActivationTensor, seed: u64) -> ActivationTensor {
    let s = t.shape();
    let (n, cells, u) = (s[0], s[1] * s[2], s[3]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = t.values().to_vec();
    for i in 0..n {
        for k in 0..u {
            let idx: Vec<usize> = (0..cells).map(|c| (i * cells + c) * u + k).collect();
            let mut plane: Vec<f32> = idx.iter().map(|&j| values[j]).collect();
            plane.shuffle(&mut rng);
            for (&j, v) in idx.iter().zip(plane) {
                values[j] = v;
            }
        }
    }
    ActivationTensor::new("conv", s.to_vec(), values).unwrap()
}
