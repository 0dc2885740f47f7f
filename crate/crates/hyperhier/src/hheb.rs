//! `HHEB` embedding dumps.
//!
//! Little-endian layout:
//!
//! ```text
//! b"HHEB" | version: u32 | n: u32 | count: u32 | count × ( n × f64 | label: u32 )
//! ```

use std::fs;
use std::path::Path;

use hyperhier_core::analysis::{EmbeddingSpace, LabeledEmbeddings};

use crate::{FormatError, HarnessError};

pub const MAGIC: &[u8; 4] = b"HHEB";
pub const VERSION: u32 = 1;

/// Decoded dump: raw coordinates plus labels (ignore values included).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDump {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
}

impl EmbeddingDump {
    pub fn from_embeddings(data: &LabeledEmbeddings, dim: usize) -> Self {
        Self {
            dim,
            points: data.points().to_vec(),
            labels: data.labels().iter().map(|&l| l as u32).collect(),
        }
    }

    /// Euclidean-tagged samples, dropping those labelled `ignore`.
    pub fn into_embeddings(self, ignore: Option<u32>) -> Result<LabeledEmbeddings, hyperhier_core::Error> {
        let (points, labels): (Vec<_>, Vec<_>) = self
            .points
            .into_iter()
            .zip(self.labels)
            .filter(|(_, l)| Some(*l) != ignore)
            .map(|(p, l)| (p, l as usize))
            .unzip();
        LabeledEmbeddings::new(EmbeddingSpace::Euclidean, points, labels)
    }
}

pub fn encode(dump: &EmbeddingDump) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + dump.labels.len() * (dump.dim * 8 + 4));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dump.dim as u32).to_le_bytes());
    out.extend_from_slice(&(dump.labels.len() as u32).to_le_bytes());
    for (p, l) in dump.points.iter().zip(&dump.labels) {
        for v in p {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], FormatError> {
        let (head, rest) = self.bytes.split_first_chunk::<N>().ok_or(FormatError::Truncated)?;
        self.bytes = rest;
        Ok(*head)
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn decode(bytes: &[u8]) -> Result<EmbeddingDump, FormatError> {
    let mut cur = Cursor { bytes };
    if &cur.take::<4>()? != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let dim = cur.u32()? as usize;
    let count = cur.u32()? as usize;
    let record = dim * 8 + 4;
    if cur.bytes.len() < count.saturating_mul(record) {
        return Err(FormatError::Truncated);
    }
    let mut points = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        points.push((0..dim).map(|_| cur.f64()).collect::<Result<Vec<_>, _>>()?);
        labels.push(cur.u32()?);
    }
    if !cur.bytes.is_empty() {
        return Err(FormatError::TrailingBytes(cur.bytes.len()));
    }
    Ok(EmbeddingDump { dim, points, labels })
}

pub fn write_file(path: &Path, dump: &EmbeddingDump) -> Result<(), HarnessError> {
    fs::write(path, encode(dump)).map_err(|e| HarnessError::io(path, e))
}

pub fn read_file(path: &Path) -> Result<EmbeddingDump, HarnessError> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    decode(&bytes).map_err(|e| HarnessError::format(path, e))
}
