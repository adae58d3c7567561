//! Binary tensor archives.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        6 bytes   (b"WVCST1" for model parameters)
//! header_len   u64
//! header       header_len bytes of UTF-8 JSON
//! then, repeated until end of file, one record per tensor:
//!   name_len   u32
//!   name       name_len bytes of UTF-8
//!   rank       u32
//!   extents    rank x u64
//!   values     prod(extents) x f64 (IEEE-754 binary64), row-major
//! ```
//!
//! A model file's header is its `ModelConfig`; tensors appear in parameter
//! order under their parameter names.

use std::fs;
use std::path::Path;

use super::config::ModelConfig;
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::nn::{ParamSet, Tensor};

pub const MODEL_MAGIC: &[u8; 6] = b"WVCST1";

pub fn encode_archive(magic: &[u8; 6], header: &str, tensors: &[(String, &Tensor)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(magic);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for (name, t) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.err("unexpected end of file"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn utf8(&mut self, n: usize) -> Result<String> {
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| self.err("invalid UTF-8"))
    }

    fn err(&self, message: &str) -> Error {
        Error::Format {
            path: self.path.to_string(),
            message: format!("{message} at byte {}", self.pos),
        }
    }
}

pub fn decode_archive(bytes: &[u8], magic: &[u8; 6], path: &str) -> Result<(String, Vec<(String, Tensor)>)> {
    let mut c = Cursor { buf: bytes, pos: 0, path };
    if c.take(6)? != magic {
        return Err(Error::Format {
            path: path.to_string(),
            message: format!("bad magic, expected {}", String::from_utf8_lossy(magic)),
        });
    }
    let header_len = c.u64()? as usize;
    let header = c.utf8(header_len)?;
    let mut tensors = Vec::new();
    while c.pos < bytes.len() {
        let name_len = c.u32()? as usize;
        let name = c.utf8(name_len)?;
        let rank = c.u32()? as usize;
        let shape = (0..rank).map(|_| c.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let len: usize = shape.iter().product();
        let raw = c.take(len.checked_mul(8).ok_or_else(|| c.err("tensor too large"))?)?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        let t = Tensor::from_vec(&shape, data).map_err(|e| c.err(&e.to_string()))?;
        tensors.push((name, t));
    }
    Ok((header, tensors))
}

pub fn write_archive(path: &Path, magic: &[u8; 6], header: &str, tensors: &[(String, &Tensor)]) -> Result<()> {
    fs::write(path, encode_archive(magic, header, tensors)).map_err(|e| Error::io(path, e))
}

pub fn read_archive(path: &Path, magic: &[u8; 6]) -> Result<(String, Vec<(String, Tensor)>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_archive(&bytes, magic, &path.display().to_string())
}

pub fn params_to_bytes(params: &ModelParams) -> Vec<u8> {
    let header = serde_json::to_string(&params.config).expect("config serializes");
    let named: Vec<(String, &Tensor)> = params.names().into_iter().zip(params.tensors()).collect();
    encode_archive(MODEL_MAGIC, &header, &named)
}

pub fn params_from_bytes(bytes: &[u8], path: &str) -> Result<ModelParams> {
    let (header, tensors) = decode_archive(bytes, MODEL_MAGIC, path)?;
    let config: ModelConfig = serde_json::from_str(&header).map_err(|e| Error::Format {
        path: path.to_string(),
        message: format!("bad config header: {e}"),
    })?;
    config.validate()?;
    let mut params = ModelParams::zeros(&config);
    let names = params.names();
    if tensors.len() != names.len() {
        return Err(Error::Format {
            path: path.to_string(),
            message: format!("expected {} tensors, found {}", names.len(), tensors.len()),
        });
    }
    for ((want, slot), (name, t)) in names.iter().zip(params.tensors_mut()).zip(tensors) {
        if *want != name || slot.shape() != t.shape() {
            return Err(Error::Format {
                path: path.to_string(),
                message: format!(
                    "tensor `{name}` {:?} does not match expected `{want}` {:?}",
                    t.shape(),
                    slot.shape()
                ),
            });
        }
        if !t.is_finite() {
            return Err(Error::Format {
                path: path.to_string(),
                message: format!("tensor `{name}` holds non-finite values"),
            });
        }
        *slot = t;
    }
    Ok(params)
}

pub fn save_params(path: impl AsRef<Path>, params: &ModelParams) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, params_to_bytes(params)).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    params_from_bytes(&bytes, &path.display().to_string())
}
