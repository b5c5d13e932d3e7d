//! Synthetic "bars" images with planted factors and a fixed, hand-wired conv
//! model whose filters respond to bar orientation per colour channel.
//!
//! Each 16×16 RGB image holds one bar, horizontal or vertical, red or blue,
//! with random position, length and brightness plus pixel noise. The label
//! is the factor combination, e.g. `horizontal-red`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::metadata::{MetadataTable, SampleMetadata};
use crate::model::{Layer, MicroModel, Padding};
use crate::tensor::ActivationTensor;

pub const IMAGE_SIZE: usize = 16;
pub const CHANNELS: usize = 3;
pub const ORIENTATIONS: [&str; 2] = ["horizontal", "vertical"];
pub const COLOURS: [&str; 2] = ["red", "blue"];

/// Every factor combination, in class-index order.
pub fn class_names() -> Vec<String> {
    ORIENTATIONS
        .iter()
        .flat_map(|o| COLOURS.iter().map(move |c| format!("{o}-{c}")))
        .collect()
}

#[derive(Debug, Clone)]
pub struct BarsDataset {
    /// `(n, 16, 16, 3)` images with values in `[0, 1]`.
    pub images: ActivationTensor,
    /// Class index per sample, see [`class_names`].
    pub classes: Vec<usize>,
}

impl BarsDataset {
    pub fn labels(&self) -> Vec<String> {
        let names = class_names();
        self.classes.iter().map(|&c| names[c].clone()).collect()
    }

    /// Labels only; `image_ref` points at `{id}.png` when `with_images` is set.
    pub fn metadata(&self, with_images: bool) -> MetadataTable {
        let records = self
            .labels()
            .into_iter()
            .enumerate()
            .map(|(i, label)| SampleMetadata {
                sample_id: i,
                label: Some(label),
                prediction: None,
                image_ref: with_images.then(|| format!("{i}.png")),
            });
        MetadataTable::from_records(records).expect("sample ids are unique")
    }

    /// 8-bit RGB pixels of one image.
    pub fn rgb8(&self, i: usize) -> Vec<u8> {
        self.images
            .sample(i)
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }
}

/// Balanced dataset: sample `i` belongs to class `i % 4`.
pub fn bars_dataset(n: usize, seed: u64) -> BarsDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0f32, 0.04).expect("valid sigma");
    let plane = IMAGE_SIZE * IMAGE_SIZE * CHANNELS;
    let mut values = vec![0f32; n * plane];
    let mut classes = Vec::with_capacity(n);

    for (i, img) in values.chunks_mut(plane).enumerate() {
        let class = i % 4;
        classes.push(class);
        let vertical = class / 2 == 1;
        let channel = if class % 2 == 0 { 0 } else { 2 };

        for v in img.iter_mut() {
            *v = noise.sample(&mut rng).abs();
        }
        let len = rng.random_range(5..=9);
        let brightness = rng.random_range(0.7f32..=1.0);
        let along = rng.random_range(0..=IMAGE_SIZE - len);
        let across = rng.random_range(1..IMAGE_SIZE - 1);
        for k in along..along + len {
            let (y, x) = if vertical { (k, across) } else { (across, k) };
            img[(y * IMAGE_SIZE + x) * CHANNELS + channel] = brightness;
        }
        for v in img.iter_mut() {
            *v = v.min(1.0);
        }
    }

    let images = ActivationTensor::new("input", vec![n, IMAGE_SIZE, IMAGE_SIZE, CHANNELS], values)
        .expect("generated images are finite");
    BarsDataset { images, classes }
}

/// conv1 → relu1 → pool1 → conv2 → relu2 → flatten → dense.
///
/// conv1 holds four line detectors (horizontal/vertical × red/blue), conv2
/// smooths each map, and the dense layer reports the per-map means plus two
/// orientation totals.
pub fn toy_bar_model() -> MicroModel {
    const DETECTORS: usize = 4;
    let mut conv1 = vec![0f32; 3 * 3 * CHANNELS * DETECTORS];
    for (out, (vertical, channel)) in [(false, 0), (true, 0), (false, 2), (true, 2)]
        .into_iter()
        .enumerate()
    {
        for ky in 0..3 {
            for kx in 0..3 {
                let centre = if vertical { kx == 1 } else { ky == 1 };
                let w = if centre { 1.0 } else { -0.5 };
                conv1[((ky * 3 + kx) * CHANNELS + channel) * DETECTORS + out] = w;
            }
        }
    }

    let mut conv2 = vec![0f32; 3 * 3 * DETECTORS * DETECTORS];
    for k in 0..9 {
        for c in 0..DETECTORS {
            conv2[(k * DETECTORS + c) * DETECTORS + c] = 1.0 / 9.0;
        }
    }

    let side = (IMAGE_SIZE - 2) / 2;
    let pooled = side * side;
    let outputs = DETECTORS + 2;
    let mut dense = vec![0f32; pooled * DETECTORS * outputs];
    for p in 0..pooled {
        for c in 0..DETECTORS {
            let row = (p * DETECTORS + c) * outputs;
            dense[row + c] = 1.0 / pooled as f32;
            // horizontal detectors are 0 and 2, vertical 1 and 3
            dense[row + DETECTORS + c % 2] = 0.5 / pooled as f32;
        }
    }

    let layers = vec![
        Layer::Conv2d {
            name: "conv1".into(),
            kernel_size: [3, 3],
            in_channels: CHANNELS,
            out_channels: DETECTORS,
            stride: 1,
            padding: Padding::Valid,
            weights: conv1,
            bias: vec![-0.3; DETECTORS],
        },
        Layer::Relu {
            name: "relu1".into(),
        },
        Layer::Maxpool2d {
            name: "pool1".into(),
            window: 2,
            stride: None,
        },
        Layer::Conv2d {
            name: "conv2".into(),
            kernel_size: [3, 3],
            in_channels: DETECTORS,
            out_channels: DETECTORS,
            stride: 1,
            padding: Padding::Same,
            weights: conv2,
            bias: vec![0.0; DETECTORS],
        },
        Layer::Relu {
            name: "relu2".into(),
        },
        Layer::Flatten {
            name: "flatten".into(),
        },
        Layer::Dense {
            name: "dense".into(),
            in_features: pooled * DETECTORS,
            out_features: outputs,
            weights: dense,
            bias: vec![0.0; outputs],
        },
    ];
    MicroModel::new("toy-bars", vec![IMAGE_SIZE, IMAGE_SIZE, CHANNELS], layers)
        .expect("toy model is consistent")
}
