//! Binary tensor container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "DTGC" | version: u32 | header_len: u32 | header: utf-8 `key=value` lines
//! tensor_count: u32
//! repeated: name_len: u16 | name | rank: u8 | dims: u32 * rank | dtype: u8 | data
//! ```
//!
//! `dtype` 0 is f64 (8 bytes per element). Reading then writing a container
//! reproduces the input bytes exactly.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DTGC";
pub const CHECKPOINT_VERSION: u32 = 1;
const DTYPE_F64: u8 = 0;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub header: BTreeMap<String, String>,
    pub tensors: Vec<(String, Tensor)>,
}

fn fmt_err(detail: impl Into<String>) -> Error {
    Error::Format {
        kind: "checkpoint",
        detail: detail.into(),
    }
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| fmt_err(format!("truncated: {e}")))?;
    Ok(b)
}

impl Checkpoint {
    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        let mut header = String::new();
        for (k, v) in &self.header {
            if k.contains(['=', '\n']) || v.contains('\n') {
                return Err(fmt_err(format!("header entry {k:?} is not a single line")));
            }
            header.push_str(k);
            header.push('=');
            header.push_str(v);
            header.push('\n');
        }
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(header.as_bytes())?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for (name, t) in &self.tensors {
            let name_len = u16::try_from(name.len()).map_err(|_| fmt_err("tensor name too long"))?;
            w.write_all(&name_len.to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&[t.shape().len() as u8])?;
            for &d in t.shape() {
                w.write_all(&(d as u32).to_le_bytes())?;
            }
            w.write_all(&[DTYPE_F64])?;
            for v in t.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let magic: [u8; 4] = read_exact(r)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::BadMagic {
                kind: "checkpoint",
                found: magic,
            });
        }
        let version = u32::from_le_bytes(read_exact(r)?);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Version {
                kind: "checkpoint",
                expected: CHECKPOINT_VERSION,
                found: version,
            });
        }
        let header_len = u32::from_le_bytes(read_exact(r)?) as usize;
        let mut header_bytes = vec![0u8; header_len];
        r.read_exact(&mut header_bytes)
            .map_err(|e| fmt_err(format!("truncated header: {e}")))?;
        let header_text = String::from_utf8(header_bytes).map_err(|_| fmt_err("header not utf-8"))?;
        let mut header = BTreeMap::new();
        for line in header_text.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| fmt_err(format!("header line {line:?}")))?;
            header.insert(k.to_string(), v.to_string());
        }
        let count = u32::from_le_bytes(read_exact(r)?) as usize;
        let mut tensors = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let name_len = u16::from_le_bytes(read_exact(r)?) as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)
                .map_err(|e| fmt_err(format!("truncated name: {e}")))?;
            let name = String::from_utf8(name).map_err(|_| fmt_err("tensor name not utf-8"))?;
            let [rank] = read_exact::<1>(r)?;
            let mut shape = Vec::with_capacity(rank as usize);
            for _ in 0..rank {
                shape.push(u32::from_le_bytes(read_exact(r)?) as usize);
            }
            let [dtype] = read_exact::<1>(r)?;
            if dtype != DTYPE_F64 {
                return Err(fmt_err(format!("unsupported dtype {dtype} for {name}")));
            }
            let n: usize = shape.iter().product();
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                data.push(f64::from_le_bytes(read_exact(r)?));
            }
            tensors.push((name, Tensor::new(shape, data)?));
        }
        Ok(Self { header, tensors })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = bytes;
        let ck = Self::read_from(&mut cursor)?;
        if !cursor.is_empty() {
            return Err(fmt_err(format!("{} trailing bytes", cursor.len())));
        }
        Ok(ck)
    }
}
