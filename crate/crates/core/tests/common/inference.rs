//! Independent direct-summation forward pass and a generator of small
//! random models.

use napkit_core::model::{Layer, MicroModel, Padding};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense row-major `(h, w, c)` volume or flat vector, in f64.
#[derive(Debug, Clone)]
pub struct Volume {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Volume {
    fn at(&self, y: usize, x: usize, c: usize) -> f64 {
        let (w, ch) = (self.shape[1], self.shape[2]);
        self.data[(y * w + x) * ch + c]
    }
}

/// Runs `model` up to and including `stop` on one sample.
pub fn naive_forward(model: &MicroModel, sample: &[f32], stop: &str) -> Vec<f64> {
    let mut v = Volume {
        shape: model.input_shape().to_vec(),
        data: sample.iter().map(|&x| f64::from(x)).collect(),
    };
    for layer in model.layers() {
        v = naive_layer(layer, &v);
        if layer.name() == stop {
            break;
        }
    }
    v.data
}

// Index loops are the point of the oracle.
#[allow(clippy::needless_range_loop)]
fn naive_layer(layer: &Layer, v: &Volume) -> Volume {
    match layer {
        Layer::Dense {
            in_features,
            out_features,
            weights,
            bias,
            ..
        } => {
            let data = (0..*out_features)
                .map(|o| {
                    let mut s = f64::from(bias[o]);
                    for i in 0..*in_features {
                        s += v.data[i] * f64::from(weights[i * out_features + o]);
                    }
                    s
                })
                .collect();
            Volume {
                shape: vec![*out_features],
                data,
            }
        }
        Layer::Conv2d {
            kernel_size: [kh, kw],
            in_channels,
            out_channels,
            stride,
            padding,
            weights,
            bias,
            ..
        } => {
            let (h, w) = (v.shape[0] as i64, v.shape[1] as i64);
            let (kh, kw, s) = (*kh as i64, *kw as i64, *stride as i64);
            let (oh, ow, top, left) = match padding {
                Padding::Valid => ((h - kh) / s + 1, (w - kw) / s + 1, 0, 0),
                Padding::Same => {
                    let oh = (h + s - 1) / s;
                    let ow = (w + s - 1) / s;
                    let ph = ((oh - 1) * s + kh - h).max(0);
                    let pw = ((ow - 1) * s + kw - w).max(0);
                    (oh, ow, ph / 2, pw / 2)
                }
            };
            let mut data = Vec::new();
            for oy in 0..oh {
                for ox in 0..ow {
                    for co in 0..*out_channels {
                        let mut acc = f64::from(bias[co]);
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let iy = oy * s + ky - top;
                                let ix = ox * s + kx - left;
                                if iy < 0 || ix < 0 || iy >= h || ix >= w {
                                    continue;
                                }
                                for ci in 0..*in_channels {
                                    let widx = (((ky * kw + kx) as usize * in_channels) + ci)
                                        * out_channels
                                        + co;
                                    acc += v.at(iy as usize, ix as usize, ci)
                                        * f64::from(weights[widx]);
                                }
                            }
                        }
                        data.push(acc);
                    }
                }
            }
            Volume {
                shape: vec![oh as usize, ow as usize, *out_channels],
                data,
            }
        }
        Layer::Relu { .. } => Volume {
            shape: v.shape.clone(),
            data: v
                .data
                .iter()
                .map(|&x| if x > 0.0 { x } else { 0.0 })
                .collect(),
        },
        Layer::Maxpool2d { window, stride, .. } => {
            let s = stride.unwrap_or(*window);
            let (h, w, c) = (v.shape[0], v.shape[1], v.shape[2]);
            let (oh, ow) = ((h - window) / s + 1, (w - window) / s + 1);
            let mut data = Vec::new();
            for oy in 0..oh {
                for ox in 0..ow {
                    for ch in 0..c {
                        let mut m = f64::NEG_INFINITY;
                        for dy in 0..*window {
                            for dx in 0..*window {
                                m = m.max(v.at(oy * s + dy, ox * s + dx, ch));
                            }
                        }
                        data.push(m);
                    }
                }
            }
            Volume {
                shape: vec![oh, ow, c],
                data,
            }
        }
        Layer::Flatten { .. } => Volume {
            shape: vec![v.data.len()],
            data: v.data.clone(),
        },
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    (0..n).map(|_| rng.random_range(-1.0f32..1.0)).collect()
}

/// A model of one to three layers on an input of at most 16×16×3. The first
/// layer is always a convolution; later layers are drawn from relu, pool,
/// another convolution, or flatten followed by nothing.
pub fn random_model(seed: u64) -> MicroModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = rng.random_range(4..=16);
    let w = rng.random_range(4..=16);
    let c = rng.random_range(1..=3);
    let depth = rng.random_range(1..=3);
    let mut shape = vec![h, w, c];
    let mut layers = Vec::new();
    for i in 0..depth {
        let name = format!("l{i}");
        let flat = shape.len() == 1;
        let kind = if i == 0 { 0 } else { rng.random_range(0..5) };
        let layer = match (kind, flat) {
            (_, true) => {
                let out = rng.random_range(1..=8);
                Layer::Dense {
                    name,
                    in_features: shape[0],
                    out_features: out,
                    weights: uniform(&mut rng, shape[0] * out),
                    bias: uniform(&mut rng, out),
                }
            }
            (0 | 1, false) => {
                let k = rng.random_range(1..=3.min(shape[0]).min(shape[1]));
                let cout = rng.random_range(1..=6);
                let padding = if rng.random_bool(0.5) {
                    Padding::Same
                } else {
                    Padding::Valid
                };
                Layer::Conv2d {
                    name,
                    kernel_size: [k, k],
                    in_channels: shape[2],
                    out_channels: cout,
                    stride: rng.random_range(1..=2),
                    padding,
                    weights: uniform(&mut rng, k * k * shape[2] * cout),
                    bias: uniform(&mut rng, cout),
                }
            }
            (2, false) => Layer::Relu { name },
            (3, false) if shape[0] >= 2 && shape[1] >= 2 => Layer::Maxpool2d {
                name,
                window: 2,
                stride: None,
            },
            _ => Layer::Flatten { name },
        };
        layers.push(layer);
        let m = MicroModel::new("random", vec![h, w, c], layers.clone())
            .expect("generated model is valid");
        shape = m.output_shape(&format!("l{i}")).unwrap().to_vec();
    }
    MicroModel::new("random", vec![h, w, c], layers).unwrap()
}

pub fn random_inputs(model: &MicroModel, n: usize, seed: u64) -> napkit_core::ActivationTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shape = vec![n];
    shape.extend_from_slice(model.input_shape());
    let len = shape.iter().product();
    napkit_core::ActivationTensor::new("input", shape, uniform(&mut rng, len)).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
