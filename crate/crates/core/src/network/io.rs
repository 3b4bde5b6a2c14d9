//! Model checkpoint file: architecture, parameter tensors and the basis
//! spec, as JSON with base64-encoded little-endian f64 payloads so floats
//! round-trip exactly.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Architecture, NetworkParams};
use crate::error::{Error, Result};
use crate::funcdata::BasisSpec;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Tensor {
    shape: Vec<usize>,
    data: String,
}

impl Tensor {
    fn encode(shape: Vec<usize>, values: &[f64]) -> Self {
        let mut bytes = Vec::with_capacity(values.len() * 8);
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        Tensor {
            shape,
            data: B64.encode(bytes),
        }
    }

    fn decode(&self) -> Result<Vec<f64>> {
        let bytes = B64
            .decode(&self.data)
            .map_err(|e| Error::Load(format!("bad tensor payload: {e}")))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Load("tensor payload not a multiple of 8 bytes".into()));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let expected: usize = self.shape.iter().product();
        if values.len() != expected {
            return Err(Error::Load(format!(
                "tensor shape {:?} expects {expected} values, payload has {}",
                self.shape,
                values.len()
            )));
        }
        Ok(values)
    }
}

/// Versioned on-disk model record.
#[derive(Debug, Serialize, Deserialize)]
pub struct SavedModel {
    version: u32,
    pub architecture: Architecture,
    pub basis: BasisSpec,
    scale: Tensor,
    shift: Tensor,
    residual: Tensor,
    layers: Vec<Tensor>,
}

impl SavedModel {
    pub fn new(arch: &Architecture, basis: &BasisSpec, params: &NetworkParams) -> Self {
        SavedModel {
            version: FORMAT_VERSION,
            architecture: arch.clone(),
            basis: basis.clone(),
            scale: Tensor::encode(vec![params.scale.len()], params.scale.as_slice().unwrap()),
            shift: Tensor::encode(vec![params.shift.len()], params.shift.as_slice().unwrap()),
            residual: Tensor::encode(
                params.residual.shape().to_vec(),
                params.residual.as_slice().unwrap(),
            ),
            layers: params
                .layers
                .iter()
                .map(|l| Tensor::encode(l.shape().to_vec(), l.as_slice().unwrap()))
                .collect(),
        }
    }

    pub fn into_params(&self) -> Result<NetworkParams> {
        let scale = Array1::from_vec(self.scale.decode()?);
        let shift = Array1::from_vec(self.shift.decode()?);
        let residual = decode2(&self.residual)?;
        let layers = self.layers.iter().map(decode2).collect::<Result<Vec<_>>>()?;
        Ok(NetworkParams {
            scale,
            shift,
            residual,
            layers,
        })
    }
}

fn decode2(t: &Tensor) -> Result<Array2<f64>> {
    if t.shape.len() != 2 {
        return Err(Error::Load(format!("expected a rank-2 tensor, got shape {:?}", t.shape)));
    }
    Array2::from_shape_vec((t.shape[0], t.shape[1]), t.decode()?)
        .map_err(|e| Error::Load(format!("tensor reshape failed: {e}")))
}

pub fn save_model(
    path: &Path,
    arch: &Architecture,
    basis: &BasisSpec,
    params: &NetworkParams,
) -> Result<()> {
    let record = SavedModel::new(arch, basis, params);
    fs::write(path, serde_json::to_string(&record)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(Architecture, BasisSpec, NetworkParams)> {
    let record: SavedModel = serde_json::from_str(&fs::read_to_string(path)?)?;
    if record.version != FORMAT_VERSION {
        return Err(Error::Load(format!(
            "unsupported model format version {}",
            record.version
        )));
    }
    let params = record.into_params()?;
    Ok((record.architecture, record.basis, params))
}
