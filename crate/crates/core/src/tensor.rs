//! Dense activation tensors and their on-disk formats.
//!
//! The native `.napt` layout is:
//!
//! ```text
//! b"NAPT" | version: u16 | rank: u16 | shape: rank × u64 | payload: f32 × prod(shape)
//! ```
//!
//! All integers and floats are little-endian; the payload is row-major with
//! the unit (channel) axis last. A converter from NPY v1.0/v2.0 `<f4`
//! C-order arrays is included.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{bail, NapError, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"NAPT";
pub const TENSOR_VERSION: u16 = 1;

const NPY_MAGIC: &[u8; 6] = b"\x93NUMPY";

/// Raw layer outputs for a batch of samples, `(samples, spatial..., units)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTensor {
    layer_id: String,
    shape: Vec<usize>,
    values: Vec<f32>,
}

impl ActivationTensor {
    pub fn new(layer_id: impl Into<String>, shape: Vec<usize>, values: Vec<f32>) -> Result<Self> {
        if shape.is_empty() {
            bail!(Shape, "tensor must have rank >= 1");
        }
        if let Some(axis) = shape.iter().position(|&d| d == 0) {
            bail!(Data, "dimension {axis} of shape {shape:?} is zero");
        }
        let len = checked_len(&shape)?;
        if len != values.len() {
            bail!(
                Shape,
                "shape {shape:?} needs {len} values but {} were given",
                values.len()
            );
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            bail!(Data, "non-finite value {} at flat index {idx}", values[idx]);
        }
        Ok(Self {
            layer_id: layer_id.into(),
            shape,
            values,
        })
    }

    pub fn layer_id(&self) -> &str {
        &self.layer_id
    }

    pub fn with_layer_id(mut self, layer_id: impl Into<String>) -> Self {
        self.layer_id = layer_id.into();
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn n_samples(&self) -> usize {
        self.shape[0]
    }

    pub fn n_units(&self) -> usize {
        *self.shape.last().unwrap()
    }

    /// Shape of one sample, without the leading sample axis.
    pub fn sample_shape(&self) -> &[usize] {
        &self.shape[1..]
    }

    /// Number of values per sample.
    pub fn sample_len(&self) -> usize {
        self.values.len() / self.n_samples()
    }

    /// Number of interior (spatial) cells per unit; 1 for `(samples, units)` tensors.
    pub fn n_positions(&self) -> usize {
        if self.rank() < 2 {
            return 1;
        }
        self.sample_len() / self.n_units()
    }

    pub fn sample(&self, i: usize) -> &[f32] {
        let len = self.sample_len();
        &self.values[i * len..(i + 1) * len]
    }

    /// Keep the given samples, in the given order.
    pub fn select_samples(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.sample_len());
        for &r in rows {
            if r >= self.n_samples() {
                bail!(
                    Lookup,
                    "sample {r} out of range (n_samples = {})",
                    self.n_samples()
                );
            }
            values.extend_from_slice(self.sample(r));
        }
        let mut shape = self.shape.clone();
        shape[0] = rows.len();
        Self::new(self.layer_id.clone(), shape, values)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 8 * self.rank() + 4 * self.values.len());
        out.extend_from_slice(TENSOR_MAGIC);
        out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.rank() as u16).to_le_bytes());
        for &d in &self.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(layer_id: impl Into<String>, bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor::new(bytes);
        if cur.take(4)? != TENSOR_MAGIC {
            bail!(Format, "missing NAPT magic");
        }
        let version = cur.u16()?;
        if version != TENSOR_VERSION {
            bail!(Format, "unsupported tensor format version {version}");
        }
        let rank = cur.u16()? as usize;
        if rank == 0 {
            bail!(Format, "tensor rank is zero");
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            let d = cur.u64()?;
            let d = usize::try_from(d)
                .map_err(|_| NapError::Data(format!("dimension {d} overflows")))?;
            shape.push(d);
        }
        let len = checked_len(&shape)?;
        let payload = cur.rest();
        if payload.len() != len * 4 {
            bail!(
                Format,
                "shape {shape:?} declares {len} values but payload holds {} bytes",
                payload.len()
            );
        }
        let values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::new(layer_id, shape, values)
    }

    /// Hex SHA-256 over the canonical byte encoding.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}

fn checked_len(shape: &[usize]) -> Result<usize> {
    shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or_else(|| NapError::Data(format!("shape {shape:?} overflows")))
}

fn layer_id_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Read a `.napt` file; the layer id is taken from the file stem.
pub fn load_tensor(path: impl AsRef<Path>) -> Result<ActivationTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| NapError::io(path.display().to_string(), e))?;
    ActivationTensor::from_bytes(layer_id_from_path(path), &bytes)
}

pub fn save_tensor(tensor: &ActivationTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, tensor.to_bytes()).map_err(|e| NapError::io(path.display().to_string(), e))
}

/// Parse an NPY array of little-endian `f32` in C order.
pub fn tensor_from_npy(layer_id: impl Into<String>, bytes: &[u8]) -> Result<ActivationTensor> {
    let mut cur = Cursor::new(bytes);
    if cur.take(6)? != NPY_MAGIC {
        bail!(Format, "missing NPY magic");
    }
    let major = cur.take(1)?[0];
    let _minor = cur.take(1)?[0];
    let header_len = match major {
        1 => cur.u16()? as usize,
        2 | 3 => cur.u32()? as usize,
        v => bail!(Format, "unsupported NPY version {v}"),
    };
    let header = std::str::from_utf8(cur.take(header_len)?)
        .map_err(|_| NapError::Format("NPY header is not valid text".into()))?;

    let descr = npy_header_value(header, "descr")?;
    let descr = descr.trim().trim_matches(|c| c == '\'' || c == '"');
    if descr != "<f4" && descr != "=f4" {
        bail!(Format, "NPY dtype {descr} is not little-endian f32");
    }
    let fortran = npy_header_value(header, "fortran_order")?;
    if fortran.trim() != "False" {
        bail!(Format, "Fortran-ordered NPY arrays are not supported");
    }
    let shape_src = npy_header_value(header, "shape")?;
    let inner = shape_src
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| NapError::Format(format!("bad NPY shape {shape_src}")))?;
    let shape = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| NapError::Format(format!("bad NPY dimension {s}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if shape.is_empty() {
        bail!(Shape, "scalar NPY arrays are not tensors");
    }
    let len = checked_len(&shape)?;
    let payload = cur.rest();
    if payload.len() != len * 4 {
        bail!(
            Format,
            "NPY shape {shape:?} declares {len} values but payload holds {} bytes",
            payload.len()
        );
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    ActivationTensor::new(layer_id, shape, values)
}

/// Encode a tensor as an NPY v1.0 array.
pub fn tensor_to_npy(tensor: &ActivationTensor) -> Vec<u8> {
    let dims: Vec<String> = tensor.shape().iter().map(|d| d.to_string()).collect();
    let shape = if dims.len() == 1 {
        format!("({},)", dims[0])
    } else {
        format!("({})", dims.join(", "))
    };
    let mut header = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': {shape}, }}");
    // magic(6) + version(2) + len(2) + header + '\n' must be a multiple of 64
    let unpadded = 10 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');

    let mut out = Vec::with_capacity(10 + header.len() + 4 * tensor.values().len());
    out.extend_from_slice(NPY_MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in tensor.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Convert an `.npy` file into a `.napt` file.
pub fn convert_npy(src: impl AsRef<Path>, dst: impl AsRef<Path>) -> Result<ActivationTensor> {
    let src = src.as_ref();
    let bytes = fs::read(src).map_err(|e| NapError::io(src.display().to_string(), e))?;
    let tensor = tensor_from_npy(layer_id_from_path(dst.as_ref()), &bytes)?;
    save_tensor(&tensor, dst)?;
    Ok(tensor)
}

fn npy_header_value<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let missing = || NapError::Format(format!("NPY header lacks '{key}'"));
    let start = header
        .find(&format!("'{key}'"))
        .or_else(|| header.find(&format!("\"{key}\"")))
        .ok_or_else(missing)?;
    let rest = &header[start + key.len() + 2..];
    let rest = rest
        .trim_start()
        .strip_prefix(':')
        .ok_or_else(missing)?
        .trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')').map(|i| i + 1)
    } else {
        rest.find([',', '}'])
    }
    .ok_or_else(missing)?;
    Ok(&rest[..end])
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            bail!(Format, "unexpected end of file at byte {}", self.pos);
        };
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn rest(&mut self) -> &'a [u8] {
        let out = &self.bytes[self.pos..];
        self.pos = self.bytes.len();
        out
    }
}
