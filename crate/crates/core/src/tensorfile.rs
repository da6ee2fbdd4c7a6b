//! Named-tensor container used for checkpoints and corpus splits.
//!
//! Layout:
//!
//! ```text
//! magic    8 bytes   "STDMTNSR"
//! hlen     u64 LE    length of the JSON index in bytes
//! index    hlen      {"format_version":1,"dtype":"f64_le","meta":{..},
//!                     "tensors":[{"name","shape","offset","len"}, ..]}
//! payload  ..        contiguous little-endian f64 values; offset/len in elements
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"STDMTNSR";
pub const FORMAT_VERSION: u32 = 1;
pub const DTYPE: &str = "f64_le";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedTensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let name = name.into();
        let expect: usize = shape.iter().product();
        if expect != data.len() {
            return Err(Error::Dimension(format!(
                "tensor `{name}`: shape {shape:?} holds {expect} values, got {}",
                data.len()
            )));
        }
        Ok(Self { name, shape, data })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Index {
    format_version: u32,
    dtype: String,
    #[serde(default)]
    meta: serde_json::Value,
    tensors: Vec<IndexEntry>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TensorFile {
    pub meta: serde_json::Value,
    pub tensors: Vec<NamedTensor>,
}

impl TensorFile {
    pub fn new(meta: serde_json::Value) -> Self {
        Self {
            meta,
            tensors: Vec::new(),
        }
    }

    pub fn push(&mut self, tensor: NamedTensor) {
        self.tensors.push(tensor);
    }

    pub fn get(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut offset = 0;
        let entries = self
            .tensors
            .iter()
            .map(|t| {
                let e = IndexEntry {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    offset,
                    len: t.data.len(),
                };
                offset += t.data.len();
                e
            })
            .collect();
        let index = Index {
            format_version: FORMAT_VERSION,
            dtype: DTYPE.to_string(),
            meta: self.meta.clone(),
            tensors: entries,
        };
        let header = serde_json::to_vec(&index).expect("index serializes");
        let mut out = Vec::with_capacity(16 + header.len() + offset * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 {
            return Err(Error::Truncated(format!(
                "{} bytes is shorter than the fixed preamble",
                bytes.len()
            )));
        }
        if &bytes[..8] != MAGIC {
            return Err(Error::Version("missing tensor-container magic".into()));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let header_end = 16usize
            .checked_add(hlen)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| Error::Truncated(format!("index of {hlen} bytes runs past end of file")))?;
        let index: Index = serde_json::from_slice(&bytes[16..header_end])
            .map_err(|e| Error::Version(format!("unreadable index: {e}")))?;
        if index.format_version != FORMAT_VERSION {
            return Err(Error::Version(format!(
                "format_version {} (expected {FORMAT_VERSION})",
                index.format_version
            )));
        }
        if index.dtype != DTYPE {
            return Err(Error::Version(format!("dtype `{}` (expected `{DTYPE}`)", index.dtype)));
        }
        let payload = &bytes[header_end..];
        let mut tensors = Vec::with_capacity(index.tensors.len());
        for e in index.tensors {
            let expect: usize = e.shape.iter().product();
            if expect != e.len {
                return Err(Error::Schema(format!(
                    "tensor `{}`: shape {:?} disagrees with len {}",
                    e.name, e.shape, e.len
                )));
            }
            let start = e.offset * 8;
            let end = start + e.len * 8;
            if end > payload.len() {
                return Err(Error::Truncated(format!(
                    "tensor `{}` needs bytes {start}..{end} of a {}-byte payload",
                    e.name,
                    payload.len()
                )));
            }
            let data = payload[start..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push(NamedTensor {
                name: e.name,
                shape: e.shape,
                data,
            });
        }
        Ok(Self {
            meta: index.meta,
            tensors,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TensorFile {
        let mut f = TensorFile::new(serde_json::json!({"kind": "test"}));
        f.push(NamedTensor::new("a", vec![2, 3], vec![1.0, -2.5, 3.0, f64::MIN_POSITIVE, 0.1, -0.0]).unwrap());
        f.push(NamedTensor::new("b", vec![1], vec![std::f64::consts::PI]).unwrap());
        f
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let f = sample();
        let back = TensorFile::from_bytes(&f.to_bytes()).unwrap();
        assert_eq!(back.meta, f.meta);
        for (x, y) in f.tensors.iter().zip(&back.tensors) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.shape, y.shape);
            let xb: Vec<u64> = x.data.iter().map(|v| v.to_bits()).collect();
            let yb: Vec<u64> = y.data.iter().map(|v| v.to_bits()).collect();
            assert_eq!(xb, yb);
        }
    }

    #[test]
    fn truncated_payload_is_reported() {
        let bytes = sample().to_bytes();
        let err = TensorFile::from_bytes(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, Error::Truncated(_)), "{err}");
    }

    #[test]
    fn corrupted_header_is_a_version_error() {
        let mut bytes = sample().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(TensorFile::from_bytes(&bytes), Err(Error::Version(_))));

        let mut bytes = sample().to_bytes();
        bytes[17] = b'!';
        assert!(matches!(TensorFile::from_bytes(&bytes), Err(Error::Version(_))));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut out = sample().to_bytes();
        let hlen = u64::from_le_bytes(out[8..16].try_into().unwrap()) as usize;
        let key = b"\"format_version\":1";
        let pos = out[16..16 + hlen]
            .windows(key.len())
            .position(|w| w == key)
            .unwrap();
        out[16 + pos + key.len() - 1] = b'9';
        let err = TensorFile::from_bytes(&out).unwrap_err();
        assert!(matches!(err, Error::Version(_)), "{err}");
    }

    #[test]
    fn shape_must_match_data() {
        assert!(NamedTensor::new("x", vec![2, 2], vec![0.0; 3]).is_err());
    }
}
