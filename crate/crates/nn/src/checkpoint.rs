//! Binary model checkpoints.
//!
//! Layout: magic `DAPM`, version (u16 LE), header length (u32 LE), a JSON
//! header holding the config, the class names and the layer manifest
//! (name and element count of every blob, in order), then the blobs as
//! little-endian f32.

use std::path::Path;

use dapotion_core::fsutil::write_atomic;
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::model::{init_model, ClassifierConfig, Model};

pub const MAGIC: &[u8; 4] = b"DAPM";
pub const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub name: String,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    config: ClassifierConfig,
    class_names: Vec<String>,
    layers: Vec<LayerEntry>,
}

fn blobs(model: &Model<f32>) -> Vec<(String, &Vec<f32>)> {
    let mut out: Vec<(String, &Vec<f32>)> = model.param_names().into_iter().zip(model.params()).collect();
    for (i, u) in model.units.iter().enumerate() {
        out.push((format!("unit{i}.bn.running_mean"), &u.bn.running_mean));
        out.push((format!("unit{i}.bn.running_var"), &u.bn.running_var));
    }
    out
}

/// Same order as [`blobs`].
fn blobs_mut(model: &mut Model<f32>) -> Vec<&mut Vec<f32>> {
    let Model { units, dense, .. } = model;
    let mut params = Vec::new();
    let mut running = Vec::new();
    for u in units.iter_mut() {
        params.push(&mut u.conv.weight);
        params.push(&mut u.conv.bias);
        params.push(&mut u.bn.gamma);
        params.push(&mut u.bn.beta);
        running.push(&mut u.bn.running_mean);
        running.push(&mut u.bn.running_var);
    }
    params.push(&mut dense.weight);
    params.push(&mut dense.bias);
    params.extend(running);
    params
}

pub fn encode_checkpoint(model: &Model<f32>, class_names: &[String]) -> Result<Vec<u8>> {
    let blobs = blobs(model);
    let header = Header {
        config: model.config.clone(),
        class_names: class_names.to_vec(),
        layers: blobs
            .iter()
            .map(|(name, b)| LayerEntry {
                name: name.clone(),
                len: b.len(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    let mut out = Vec::with_capacity(10 + json.len() + 4 * blobs.iter().map(|b| b.1.len()).sum::<usize>());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, b) in blobs {
        for v in b {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(Model<f32>, Vec<String>)> {
    let bad = |m: &str| NnError::Checkpoint(m.to_string());
    if bytes.len() < 10 || &bytes[..4] != MAGIC {
        return Err(bad("missing DAPM magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let len = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let json = bytes.get(10..10 + len).ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(json).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    let mut model = init_model::<f32>(&header.config, 0)?;
    let expected: Vec<(String, usize)> = blobs(&model).into_iter().map(|(n, b)| (n, b.len())).collect();
    let found: Vec<(String, usize)> = header.layers.iter().map(|l| (l.name.clone(), l.len)).collect();
    if expected != found {
        return Err(bad("layer manifest does not match the config"));
    }
    let mut offset = 10 + len;
    for target in blobs_mut(&mut model) {
        let n = target.len();
        let raw = bytes.get(offset..offset + 4 * n).ok_or_else(|| bad("truncated blob"))?;
        for (dst, chunk) in target.iter_mut().zip(raw.chunks_exact(4)) {
            *dst = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        }
        offset += 4 * n;
    }
    if offset != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    if model.units.iter().any(|u| u.bn.running_var.iter().any(|&v| !(v > 0.0))) {
        return Err(bad("running variance must be positive"));
    }
    Ok((model, header.class_names))
}

pub fn write_checkpoint(path: &Path, model: &Model<f32>, class_names: &[String]) -> Result<()> {
    Ok(write_atomic(path, &encode_checkpoint(model, class_names)?)?)
}

pub fn read_checkpoint(path: &Path) -> Result<(Model<f32>, Vec<String>)> {
    let bytes = std::fs::read(path).map_err(|source| NnError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let cfg = ClassifierConfig {
            filters: vec![2, 3],
            ..ClassifierConfig::new(4, 3)
        };
        let mut model = init_model::<f32>(&cfg, 9).unwrap();
        model.units[1].bn.running_mean[0] = 0.125;
        model.units[2].bn.running_var[1] = 3.5;
        let names = vec!["a".to_string(), "b".into(), "c".into()];
        let bytes = encode_checkpoint(&model, &names).unwrap();
        let (back, back_names) = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(back_names, names);
        assert_eq!(encode_checkpoint(&back, &back_names).unwrap(), bytes);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(decode_checkpoint(&wrong).is_err());
    }
}
