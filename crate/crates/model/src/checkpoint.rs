//! Binary checkpoints: magic, format version, a JSON header with the model
//! config and block census, then every block as little-endian f64 in
//! census order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::params::Params;
use crate::transformer::Model;

pub const MAGIC: &[u8; 4] = b"RMCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub config: ModelConfig,
    pub tensors: Vec<TensorEntry>,
    /// Free-form provenance such as training step and seed.
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn save<W: Write>(model: &Model, meta: serde_json::Value, out: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    let header = Header {
        config: model.config.clone(),
        tensors: model
            .params
            .census()
            .into_iter()
            .map(|(name, shape)| TensorEntry { name, shape })
            .collect(),
        meta,
    };
    let json = serde_json::to_vec(&header)?;
    out.write_all(MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    let mut result = Ok(());
    model.params.for_each(|_, t| {
        if result.is_ok() {
            for v in t.iter() {
                if let Err(e) = out.write_all(&v.to_le_bytes()) {
                    result = Err(e);
                    break;
                }
            }
        }
    });
    result?;
    out.flush()?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn load<R: Read>(input: R) -> Result<(Model, serde_json::Value)> {
    let mut input = std::io::BufReader::new(input);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(|_| bad("file too short"))?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint (bad magic)"));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!(
            "version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    input.read_exact(&mut json).map_err(|_| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(&json)?;
    let mut params = Params::zeros(&header.config)?;
    let census = params.census();
    if census.len() != header.tensors.len()
        || census
            .iter()
            .zip(&header.tensors)
            .any(|((n, s), e)| *n != e.name || *s != e.shape)
    {
        return Err(bad("tensor census does not match the config"));
    }
    let mut buf = [0u8; 8];
    let mut result = Ok(());
    params.for_each_mut(|name, mut t| {
        if result.is_err() {
            return;
        }
        for v in t.iter_mut() {
            if input.read_exact(&mut buf).is_err() {
                result = Err(bad(format!("truncated data in {name}")));
                return;
            }
            *v = f64::from_le_bytes(buf);
        }
    });
    result?;
    if input.read(&mut buf)? != 0 {
        return Err(bad("trailing bytes after tensor data"));
    }
    Ok((
        Model {
            config: header.config,
            params,
        },
        header.meta,
    ))
}
