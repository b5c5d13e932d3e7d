//! A small feed-forward inference engine for producing layer activations
//! without an external ML framework.
//!
//! Models are JSON documents (see `docs/model-format.md`). Every layer is a
//! tap point: `run_model` returns the output of any named layer, so taking
//! activations before or after a nonlinearity is a matter of picking the
//! conv layer or the relu that follows it.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bail, NapError, Result};
use crate::tensor::ActivationTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    #[default]
    Valid,
    /// Output is `ceil(input / stride)`; odd padding puts the extra row and
    /// column on the bottom/right.
    Same,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Layer {
    /// `weights` is `in_features × out_features`, row-major.
    Dense {
        name: String,
        in_features: usize,
        out_features: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
    /// `weights` is `kernel_h × kernel_w × in_channels × out_channels`, row-major.
    Conv2d {
        name: String,
        kernel_size: [usize; 2],
        in_channels: usize,
        out_channels: usize,
        #[serde(default = "default_stride")]
        stride: usize,
        #[serde(default)]
        padding: Padding,
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
    Relu {
        name: String,
    },
    Maxpool2d {
        name: String,
        window: usize,
        #[serde(default)]
        stride: Option<usize>,
    },
    Flatten {
        name: String,
    },
}

impl Layer {
    pub fn name(&self) -> &str {
        match self {
            Layer::Dense { name, .. }
            | Layer::Conv2d { name, .. }
            | Layer::Relu { name }
            | Layer::Maxpool2d { name, .. }
            | Layer::Flatten { name } => name,
        }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let name = self.name();
        match self {
            Layer::Dense {
                in_features,
                out_features,
                weights,
                bias,
                ..
            } => {
                if input != [*in_features] {
                    bail!(
                        Shape,
                        "dense layer '{name}' expects [{in_features}] but receives {input:?}"
                    );
                }
                if weights.len() != in_features * out_features || bias.len() != *out_features {
                    bail!(Shape, "dense layer '{name}' has mis-sized weights or bias");
                }
                Ok(vec![*out_features])
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
                let &[h, w, c] = input else {
                    bail!(
                        Shape,
                        "conv2d layer '{name}' expects (h, w, c) but receives {input:?}"
                    );
                };
                if c != *in_channels {
                    bail!(
                        Shape,
                        "conv2d layer '{name}' expects {in_channels} channels, got {c}"
                    );
                }
                if *kh == 0 || *kw == 0 || *stride == 0 || *out_channels == 0 {
                    bail!(
                        Shape,
                        "conv2d layer '{name}' has a zero kernel, stride or channel count"
                    );
                }
                if weights.len() != kh * kw * in_channels * out_channels
                    || bias.len() != *out_channels
                {
                    bail!(Shape, "conv2d layer '{name}' has mis-sized weights or bias");
                }
                let (oh, ow) = match padding {
                    Padding::Valid => {
                        if h < *kh || w < *kw {
                            bail!(
                                Shape,
                                "conv2d layer '{name}': kernel {kh}x{kw} exceeds input {h}x{w}"
                            );
                        }
                        ((h - kh) / stride + 1, (w - kw) / stride + 1)
                    }
                    Padding::Same => (h.div_ceil(*stride), w.div_ceil(*stride)),
                };
                Ok(vec![oh, ow, *out_channels])
            }
            Layer::Relu { .. } => Ok(input.to_vec()),
            Layer::Maxpool2d { window, stride, .. } => {
                let &[h, w, c] = input else {
                    bail!(
                        Shape,
                        "maxpool2d layer '{name}' expects (h, w, c) but receives {input:?}"
                    );
                };
                let stride = stride.unwrap_or(*window);
                if *window == 0 || stride == 0 {
                    bail!(
                        Shape,
                        "maxpool2d layer '{name}' has a zero window or stride"
                    );
                }
                if h < *window || w < *window {
                    bail!(
                        Shape,
                        "maxpool2d layer '{name}': window {window} exceeds input {h}x{w}"
                    );
                }
                Ok(vec![
                    (h - window) / stride + 1,
                    (w - window) / stride + 1,
                    c,
                ])
            }
            Layer::Flatten { .. } => Ok(vec![input.iter().product()]),
        }
    }

    fn weights_finite(&self) -> bool {
        match self {
            Layer::Dense { weights, bias, .. } | Layer::Conv2d { weights, bias, .. } => {
                weights.iter().chain(bias).all(|v| v.is_finite())
            }
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    name: String,
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
}

/// A validated stack of layers. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroModel {
    name: String,
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    // output shape of every layer, per sample
    shapes: Vec<Vec<usize>>,
}

impl MicroModel {
    pub fn new(
        name: impl Into<String>,
        input_shape: Vec<usize>,
        layers: Vec<Layer>,
    ) -> Result<Self> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            bail!(
                Shape,
                "model input shape {input_shape:?} must be non-empty and positive"
            );
        }
        if layers.is_empty() {
            bail!(Shape, "model has no layers");
        }
        let mut shapes = Vec::with_capacity(layers.len());
        let mut current = input_shape.clone();
        for (i, layer) in layers.iter().enumerate() {
            if layers[..i].iter().any(|l| l.name() == layer.name()) {
                bail!(Data, "duplicate layer name '{}'", layer.name());
            }
            if !layer.weights_finite() {
                bail!(Data, "layer '{}' has non-finite weights", layer.name());
            }
            current = layer.output_shape(&current)?;
            shapes.push(current.clone());
        }
        Ok(Self {
            name: name.into(),
            input_shape,
            layers,
            shapes,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)
            .map_err(|e| NapError::Format(format!("model document: {e}")))?;
        Self::new(doc.name, doc.input_shape, doc.layers)
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            name: self.name.clone(),
            input_shape: self.input_shape.clone(),
            layers: self.layers.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_names(&self) -> impl Iterator<Item = &str> {
        self.layers.iter().map(Layer::name)
    }

    pub fn layer_index(&self, name: &str) -> Result<usize> {
        self.layers
            .iter()
            .position(|l| l.name() == name)
            .ok_or_else(|| NapError::Lookup(format!("model '{}' has no layer '{name}'", self.name)))
    }

    pub fn output_shape(&self, name: &str) -> Result<&[usize]> {
        Ok(&self.shapes[self.layer_index(name)?])
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MicroModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| NapError::io(path.display().to_string(), e))?;
    MicroModel::from_json(&text)
}

/// Output of `layer_name` for every sample of `inputs`, in sample order.
pub fn run_model(
    model: &MicroModel,
    inputs: &ActivationTensor,
    layer_name: &str,
) -> Result<ActivationTensor> {
    let stop = model.layer_index(layer_name)?;
    if inputs.sample_shape() != model.input_shape() {
        bail!(
            Shape,
            "model '{}' expects samples of shape {:?} but inputs have {:?}",
            model.name(),
            model.input_shape(),
            inputs.sample_shape()
        );
    }
    let out_shape = &model.shapes[stop];
    let out_len: usize = out_shape.iter().product();
    let n = inputs.n_samples();

    let mut values = vec![0f32; n * out_len];
    values
        .par_chunks_mut(out_len)
        .enumerate()
        .for_each(|(i, out)| {
            let mut x = inputs.sample(i).to_vec();
            let mut shape = model.input_shape.clone();
            for (layer, next_shape) in model.layers[..=stop].iter().zip(&model.shapes) {
                x = forward(layer, &x, &shape, next_shape);
                shape.clone_from(next_shape);
            }
            out.copy_from_slice(&x);
        });

    let mut shape = Vec::with_capacity(out_shape.len() + 1);
    shape.push(n);
    shape.extend_from_slice(out_shape);
    // Relu/pool of finite values stays finite, but large weights can overflow.
    ActivationTensor::new(layer_name, shape, values)
}

fn forward(layer: &Layer, x: &[f32], in_shape: &[usize], out_shape: &[usize]) -> Vec<f32> {
    match layer {
        Layer::Dense {
            in_features,
            out_features,
            weights,
            bias,
            ..
        } => {
            let mut y = bias.clone();
            for i in 0..*in_features {
                let xi = x[i];
                let row = &weights[i * out_features..(i + 1) * out_features];
                for (acc, w) in y.iter_mut().zip(row) {
                    *acc += xi * w;
                }
            }
            y
        }
        Layer::Conv2d {
            kernel_size: [kh, kw],
            in_channels: cin,
            out_channels: cout,
            stride,
            padding,
            weights,
            bias,
            ..
        } => {
            let (h, w) = (in_shape[0], in_shape[1]);
            let (oh, ow) = (out_shape[0], out_shape[1]);
            let (pad_top, pad_left) = match padding {
                Padding::Valid => (0, 0),
                Padding::Same => {
                    let pad_h = ((oh - 1) * stride + kh).saturating_sub(h);
                    let pad_w = ((ow - 1) * stride + kw).saturating_sub(w);
                    (pad_h / 2, pad_w / 2)
                }
            };
            let mut y = vec![0f32; oh * ow * cout];
            for oy in 0..oh {
                for ox in 0..ow {
                    let acc = &mut y[(oy * ow + ox) * cout..(oy * ow + ox + 1) * cout];
                    acc.copy_from_slice(bias);
                    for ky in 0..*kh {
                        let Some(iy) = (oy * stride + ky).checked_sub(pad_top).filter(|&v| v < h)
                        else {
                            continue;
                        };
                        for kx in 0..*kw {
                            let Some(ix) =
                                (ox * stride + kx).checked_sub(pad_left).filter(|&v| v < w)
                            else {
                                continue;
                            };
                            let pixel = &x[(iy * w + ix) * cin..(iy * w + ix + 1) * cin];
                            for (ci, &xv) in pixel.iter().enumerate() {
                                let base = ((ky * kw + kx) * cin + ci) * cout;
                                for (a, wv) in acc.iter_mut().zip(&weights[base..base + cout]) {
                                    *a += xv * wv;
                                }
                            }
                        }
                    }
                }
            }
            y
        }
        Layer::Relu { .. } => x.iter().map(|&v| v.max(0.0)).collect(),
        Layer::Maxpool2d { window, stride, .. } => {
            let stride = stride.unwrap_or(*window);
            let (w, c) = (in_shape[1], in_shape[2]);
            let (oh, ow) = (out_shape[0], out_shape[1]);
            let mut y = vec![f32::NEG_INFINITY; oh * ow * c];
            for oy in 0..oh {
                for ox in 0..ow {
                    let out = &mut y[(oy * ow + ox) * c..(oy * ow + ox + 1) * c];
                    for dy in 0..*window {
                        for dx in 0..*window {
                            let (iy, ix) = (oy * stride + dy, ox * stride + dx);
                            let pixel = &x[(iy * w + ix) * c..(iy * w + ix + 1) * c];
                            for (o, &v) in out.iter_mut().zip(pixel) {
                                *o = o.max(v);
                            }
                        }
                    }
                }
            }
            y
        }
        Layer::Flatten { .. } => x.to_vec(),
    }
}
