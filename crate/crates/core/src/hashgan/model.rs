//! The trained hash function and its on-disk format.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::losses::{binarize, RelaxedCode};
use super::networks::Encoder;
use super::train::{HashConfig, Sample};
use crate::code::BinaryCode;
use crate::diagrams::{BoundingBox, PersistenceDiagram};
use crate::error::{Error, Result};
use crate::par::{map_slice, Execution};
use crate::vectorize::{histogram, HistogramVector};

pub const MODEL_MAGIC: &[u8; 8] = b"TPHASH\0\0";
pub const MODEL_VERSION: u32 = 1;

/// Encoder plus everything needed to hash unseen diagrams.
///
/// Parameters are held at `f32` precision so a saved and reloaded model
/// hashes bit-identically.
#[derive(Debug, Clone, PartialEq)]
pub struct HashModel {
    pub config: HashConfig,
    pub encoder: Encoder,
    pub bounding_box: BoundingBox,
    pub resolution: usize,
    /// Multiplier turning a histogram's total count into the side-feature.
    pub count_scale: f64,
}

impl HashModel {
    pub fn new(config: HashConfig, mut encoder: Encoder, bounding_box: BoundingBox, count_scale: f64) -> Self {
        for p in &mut encoder.params {
            *p = *p as f32 as f64;
        }
        Self {
            resolution: encoder.resolution(),
            config,
            encoder,
            bounding_box,
            count_scale,
        }
    }

    pub fn code_length(&self) -> usize {
        self.encoder.code_length()
    }

    /// Encoder pre-activations `x ∈ R^L`.
    pub fn preactivation(&self, v: &HistogramVector) -> Result<Vec<f64>> {
        if v.resolution != self.resolution {
            return Err(Error::Dimension(format!(
                "histogram resolution {} does not match model resolution {}",
                v.resolution, self.resolution
            )));
        }
        let s = Sample::from_histogram(v, self.count_scale);
        Ok(self.encoder.forward(&s.grid, s.side).preactivation().to_vec())
    }

    pub fn encode_relaxed(&self, v: &HistogramVector) -> Result<RelaxedCode> {
        Ok(RelaxedCode::from_preactivation(&self.preactivation(v)?))
    }

    /// Code and whether any coordinate had to be clamped into the model's
    /// bounding box.
    pub fn hash_checked(&self, diagram: &PersistenceDiagram) -> (BinaryCode, bool) {
        let (normalized, clamped) = self.bounding_box.normalize_diagram(diagram);
        let h = histogram(&normalized, self.resolution).expect("normalized diagram lies in the unit square");
        let relaxed = self.encode_relaxed(&h).expect("resolution matches by construction");
        (binarize(&relaxed), clamped)
    }

    pub fn hash(&self, diagram: &PersistenceDiagram) -> BinaryCode {
        self.hash_checked(diagram).0
    }

    pub fn hash_all(&self, diagrams: &[PersistenceDiagram], exec: Execution) -> Vec<(BinaryCode, bool)> {
        map_slice(diagrams, exec, |d| self.hash_checked(d))
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn model_to_bytes(model: &HashModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    put_u32(&mut out, MODEL_VERSION);
    let config = serde_json::to_vec(&model.config).expect("config serializes");
    put_u32(&mut out, config.len() as u32);
    out.extend_from_slice(&config);
    put_f64(&mut out, model.bounding_box.min_value);
    put_f64(&mut out, model.bounding_box.max_value);
    put_u32(&mut out, model.resolution as u32);
    put_f64(&mut out, model.count_scale);
    let shapes = model.encoder.tensor_shapes();
    put_u32(&mut out, shapes.len() as u32);
    let mut params = model.encoder.params.iter();
    for shape in &shapes {
        put_u32(&mut out, shape.len() as u32);
        for &d in shape {
            put_u32(&mut out, d as u32);
        }
        for _ in 0..shape.iter().product::<usize>() {
            let v = *params.next().expect("tensor shapes cover the parameters") as f32;
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Corrupt("unexpected end of data".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<HashModel> {
    if bytes.len() < MODEL_MAGIC.len() + 4 || &bytes[..8] != MODEL_MAGIC {
        return Err(Error::Corrupt("not a model file".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(Error::Version {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    if bytes.len() < 12 + 32 {
        return Err(Error::Checksum);
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checksum);
    }
    let mut r = Reader { bytes: body, pos: 12 };
    let n = r.u32()? as usize;
    let config: HashConfig =
        serde_json::from_slice(r.take(n)?).map_err(|e| Error::Corrupt(format!("config: {e}")))?;
    config.validate()?;
    let bounding_box = BoundingBox::new(r.f64()?, r.f64()?)?;
    let resolution = r.u32()? as usize;
    let count_scale = r.f64()?;
    let mut encoder = Encoder::new(resolution, config.code_length, &config.architecture.encoder_channels)?;
    let expected = encoder.tensor_shapes();
    if r.u32()? as usize != expected.len() {
        return Err(Error::Corrupt("tensor count does not match the architecture".into()));
    }
    let mut params = Vec::with_capacity(encoder.n_params());
    for want in &expected {
        let ndim = r.u32()? as usize;
        let shape = (0..ndim).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if &shape != want {
            return Err(Error::Corrupt(format!("tensor shape {shape:?}, expected {want:?}")));
        }
        for _ in 0..shape.iter().product::<usize>() {
            params.push(r.f32()? as f64);
        }
    }
    if r.pos != body.len() {
        return Err(Error::Corrupt("trailing bytes after tensors".into()));
    }
    encoder.params = params;
    Ok(HashModel::new(config, encoder, bounding_box, count_scale))
}

pub fn save_model(model: &HashModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<HashModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}
