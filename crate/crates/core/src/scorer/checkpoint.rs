//! Checkpoint file: one JSON header line, then every tensor as little-endian f64.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{Dims, ScorerParams, Tensors, Vocabulary};
use crate::error::{Error, Result};
use crate::microworld::Family;
use crate::training::Mode;

/// Where a set of weights came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// `None` for untrained weights.
    pub mode: Option<Mode>,
    pub seed: u64,
    /// Families present in the training instances.
    pub trained_families: Vec<Family>,
    /// Digest of the training data bytes.
    pub data_digest: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    dims: Dims,
    vocabulary: Vec<String>,
    vocabulary_digest: String,
    provenance: Provenance,
}

pub fn save_checkpoint(params: &ScorerParams, provenance: &Provenance) -> Result<Vec<u8>> {
    if !params.weights.all_finite() {
        return Err(Error::Checkpoint(
            "refusing to save non-finite weights".into(),
        ));
    }
    let header = Header {
        version: crate::SCHEMA_VERSION,
        dims: params.dims,
        vocabulary: params.vocab.words().to_vec(),
        vocabulary_digest: params.vocab.digest(),
        provenance: provenance.clone(),
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    out.reserve(params.weights.len() * 8);
    for x in params.weights.iter() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<(ScorerParams, Provenance)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Checkpoint("missing header line".into()))?;
    let header: Header = serde_json::from_slice(&bytes[..nl])
        .map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
    if header.version != crate::SCHEMA_VERSION {
        return Err(Error::Checkpoint(format!(
            "checkpoint version {} (expected {})",
            header.version,
            crate::SCHEMA_VERSION
        )));
    }
    let vocab = Vocabulary::from_words(header.vocabulary.iter().skip(1).cloned());
    if vocab.words() != header.vocabulary.as_slice() || vocab.len() != header.dims.vocab {
        return Err(Error::Checkpoint("vocabulary does not match dims".into()));
    }
    if vocab.digest() != header.vocabulary_digest {
        return Err(Error::Checkpoint("vocabulary digest mismatch".into()));
    }
    let body = &bytes[nl + 1..];
    let mut weights = Tensors::zeros(header.dims);
    if body.len() != weights.len() * 8 {
        return Err(Error::Checkpoint(format!(
            "expected {} tensor bytes, found {}",
            weights.len() * 8,
            body.len()
        )));
    }
    let mut chunks = body.chunks_exact(8);
    for slice in weights.slices_mut() {
        for (x, c) in slice.iter_mut().zip(&mut chunks) {
            *x = f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
        }
    }
    if !weights.all_finite() {
        return Err(Error::Checkpoint("non-finite tensor value".into()));
    }
    Ok((
        ScorerParams {
            vocab,
            dims: header.dims,
            weights,
        },
        header.provenance,
    ))
}

pub fn read_checkpoint(path: &Path) -> Result<(ScorerParams, Provenance)> {
    let bytes = std::fs::read(path)?;
    load_checkpoint(&bytes).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
}
