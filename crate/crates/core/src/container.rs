//! The `SASA` tensor container used for model weights and embedding sidecars.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! b"SASA"
//! u32  format version (1)
//! u32  config length, then that many bytes of UTF-8 JSON
//! u32  tensor count
//!      per tensor: u32 name length, name bytes (UTF-8),
//!                  u32 rank, rank × u32 dims,
//!                  u64 byte offset into the payload
//! u64  payload length, then the payload (f32 LE values)
//! u32  CRC32 of the payload
//! ```

use std::path::Path;

use crate::error::{ContainerError, Error, Result};

pub const MAGIC: [u8; 4] = *b"SASA";
pub const FORMAT_VERSION: u32 = 1;

/// A named dense `f32` array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::dim(
                "Tensor",
                format!("shape {shape:?} needs {n} values, got {}", data.len()),
            ));
        }
        Ok(Self { shape, data })
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }
}

/// Config text plus ordered named tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub config: String,
    pub tensors: Vec<(String, Tensor)>,
}

impl Container {
    pub fn new(config: String) -> Self {
        Self {
            config,
            tensors: Vec::new(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let payload_len: usize = self.tensors.iter().map(|(_, t)| t.numel() * 4).sum();
        let mut out = Vec::with_capacity(payload_len + 4096);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.config.len() as u32).to_le_bytes());
        out.extend_from_slice(self.config.as_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        let mut offset = 0u64;
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
            for &d in &t.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            out.extend_from_slice(&offset.to_le_bytes());
            offset += (t.numel() * 4) as u64;
        }
        out.extend_from_slice(&(payload_len as u64).to_le_bytes());
        let start = out.len();
        for (_, t) in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ContainerError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
        if magic != MAGIC {
            return Err(ContainerError::BadMagic(magic));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(ContainerError::Version(version));
        }
        let config_len = r.u32()? as usize;
        let config = std::str::from_utf8(r.take(config_len)?)
            .map_err(|e| ContainerError::Config(e.to_string()))?
            .to_string();
        let count = r.u32()? as usize;
        let mut entries = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|e| ContainerError::Directory(format!("tensor name: {e}")))?
                .to_string();
            let rank = r.u32()? as usize;
            if rank > 8 {
                return Err(ContainerError::Directory(format!("{name}: rank {rank}")));
            }
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u32()? as usize);
            }
            let offset = r.u64()?;
            entries.push((name, shape, offset));
        }
        let payload_len = r.u64()? as usize;
        let payload_start = r.pos;
        let payload = r.take(payload_len)?;
        let stored = r.u32()?;
        if r.pos != bytes.len() {
            return Err(ContainerError::Trailing(bytes.len() - r.pos));
        }
        let computed = crc32fast::hash(payload);
        if stored != computed {
            return Err(ContainerError::Checksum { stored, computed });
        }

        // Offsets must tile disjoint, in-bounds ranges.
        let mut spans: Vec<(u64, u64, &str)> = Vec::with_capacity(entries.len());
        for (name, shape, offset) in &entries {
            let bytes_len = shape
                .iter()
                .try_fold(4u64, |acc, &d| acc.checked_mul(d as u64))
                .ok_or_else(|| ContainerError::Directory(format!("{name}: size overflow")))?;
            let end = offset
                .checked_add(bytes_len)
                .filter(|&e| e <= payload_len as u64)
                .ok_or_else(|| {
                    ContainerError::Directory(format!("{name}: range exceeds payload of {payload_len} bytes"))
                })?;
            if offset % 4 != 0 {
                return Err(ContainerError::Directory(format!("{name}: misaligned offset")));
            }
            spans.push((*offset, end, name));
        }
        spans.sort();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(ContainerError::Directory(format!(
                    "{} overlaps {}",
                    w[1].2, w[0].2
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        let mut tensors = Vec::with_capacity(entries.len());
        for (name, shape, offset) in entries {
            if !seen.insert(name.clone()) {
                return Err(ContainerError::Directory(format!("duplicate tensor {name:?}")));
            }
            let n: usize = shape.iter().product();
            let start = offset as usize;
            let data = payload[start..start + n * 4]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push((name, Tensor { shape, data }));
        }
        debug_assert!(payload_start <= bytes.len());
        Ok(Self { config, tensors })
    }

    /// CRC32 of the payload section as it would be written.
    pub fn payload_checksum(&self) -> u32 {
        let mut h = crc32fast::Hasher::new();
        for (_, t) in &self.tensors {
            for v in &t.data {
                h.update(&v.to_le_bytes());
            }
        }
        h.finalize()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Ok(Self::from_bytes(&bytes)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ContainerError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(ContainerError::Truncated(self.bytes.len()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ContainerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ContainerError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
