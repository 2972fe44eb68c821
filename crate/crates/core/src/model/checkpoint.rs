//! Binary checkpoint format. See `docs/checkpoint-format.md` for the byte
//! layout.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ModelConfig, ModelError, RelationNetwork};
use crate::numcore::{AdamState, ParamStore, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"EEGFSRN\0";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON header stored ahead of the tensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub model: ModelConfig,
    /// Training iteration the parameters were taken at.
    pub iteration: u64,
    /// Validation loss at that iteration, if one was measured.
    pub val_loss: Option<f64>,
    /// Seeds used by the run, as `(label, seed)` pairs from the master
    /// seed down.
    pub seed_lineage: Vec<(String, u64)>,
    /// Fold index and held-out subject this model was trained for.
    pub fold: Option<usize>,
    pub test_subject: Option<String>,
    /// Echo of the full run configuration.
    pub run_config: serde_json::Value,
    pub crate_version: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: ParamStore,
}

impl Checkpoint {
    pub fn network(&self) -> Result<RelationNetwork, ModelError> {
        RelationNetwork::from_params(self.header.model.clone(), self.params.clone())
    }
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(buf: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serialises a checkpoint to bytes.
pub fn encode_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut buf, CHECKPOINT_VERSION);
    let header = serde_json::to_vec(&ckpt.header).expect("header serialises");
    put_u64(&mut buf, header.len() as u64);
    buf.extend_from_slice(&header);
    put_u64(&mut buf, ckpt.params.len() as u64);
    for (name, value) in ckpt.params.iter() {
        let adam = ckpt.params.adam_state(name).expect("every entry has state");
        put_u32(&mut buf, name.len() as u32);
        buf.extend_from_slice(name.as_bytes());
        put_u32(&mut buf, value.rank() as u32);
        for &d in value.shape() {
            put_u64(&mut buf, d as u64);
        }
        put_u64(&mut buf, adam.step);
        put_f64s(&mut buf, value.data());
        put_f64s(&mut buf, adam.first_moment.data());
        put_f64s(&mut buf, adam.second_moment.data());
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        if self.bytes.len() - self.pos < n {
            return Err(format!("truncated at byte {} (needed {n} more)", self.pos));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize, String> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| format!("length {v} does not fit in memory"))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, String> {
        let bytes = self.take(n.checked_mul(8).ok_or("tensor too large")?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

/// Parses checkpoint bytes; the error string says what is wrong.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint, String> {
    if bytes.len() < CHECKPOINT_MAGIC.len() + 4 + 32 {
        return Err("file too short to be a checkpoint".into());
    }
    if &bytes[..8] != CHECKPOINT_MAGIC {
        return Err("bad magic bytes: not a checkpoint file".into());
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    let mut r = Reader { bytes: body, pos: 8 };
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(format!("unsupported format version {version} (this build reads {CHECKPOINT_VERSION})"));
    }
    if Sha256::digest(body).as_slice() != digest {
        return Err("checksum mismatch: file is corrupted".into());
    }
    let header_len = r.len()?;
    let header: CheckpointHeader =
        serde_json::from_slice(r.take(header_len)?).map_err(|e| format!("header is not valid JSON: {e}"))?;
    let count = r.len()?;
    let mut params = ParamStore::new();
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?).map_err(|_| "parameter name is not UTF-8")?.to_string();
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.len()).collect::<Result<Vec<_>, _>>()?;
        let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or("tensor too large")?;
        let step = r.u64()?;
        let tensor = |data| Tensor::new(shape.clone(), data).map_err(|e| format!("parameter `{name}`: {e}"));
        let value = tensor(r.f64s(n)?)?;
        let adam = AdamState {
            first_moment: tensor(r.f64s(n)?)?,
            second_moment: tensor(r.f64s(n)?)?,
            step,
        };
        params
            .insert_with_state(&name, value, adam)
            .map_err(|e| format!("parameter `{name}`: {e}"))?;
    }
    if r.pos != body.len() {
        return Err(format!("{} trailing bytes after the last tensor", body.len() - r.pos));
    }
    Ok(Checkpoint { header, params })
}

/// Writes atomically: a sibling temp file is renamed over `path`.
pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), ModelError> {
    let io = |source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    };
    let bytes = encode_checkpoint(ckpt);
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(&bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

/// Reads and validates a checkpoint, including its parameter shapes.
pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, ModelError> {
    let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let ckpt = decode_checkpoint(&bytes).map_err(|message| ModelError::Checkpoint {
        path: path.to_path_buf(),
        message,
    })?;
    ckpt.network().map_err(|e| ModelError::Checkpoint {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(ckpt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let net = RelationNetwork::new(ModelConfig::reduced(), 1).unwrap();
        Checkpoint {
            header: CheckpointHeader {
                model: ModelConfig::reduced(),
                iteration: 7,
                val_loss: Some(0.5),
                seed_lineage: vec![("master".into(), 1)],
                fold: Some(0),
                test_subject: Some("S01".into()),
                run_config: serde_json::json!({"k": 1}),
                crate_version: "0".into(),
            },
            params: net.into_params(),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let c = sample();
        assert_eq!(decode_checkpoint(&encode_checkpoint(&c)).unwrap(), c);
    }

    #[test]
    fn corruption_is_detected() {
        let mut bytes = encode_checkpoint(&sample());
        let mid = bytes.len() / 2;
        bytes[mid] ^= 1;
        assert!(decode_checkpoint(&bytes).unwrap_err().contains("checksum"));
        let mut bad = encode_checkpoint(&sample());
        bad[0] = b'X';
        assert!(decode_checkpoint(&bad).unwrap_err().contains("magic"));
        let mut v2 = encode_checkpoint(&sample());
        v2[8] = 2;
        assert!(decode_checkpoint(&v2).unwrap_err().contains("version"));
    }
}
