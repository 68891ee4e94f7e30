//! Versioned binary checkpoint container: string metadata plus named f64
//! arrays (f32 tensors widen losslessly, so round trips are bit-exact).
//! Writes go to a temp file first and are renamed into place.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::scalar::Scalar;
use super::tensor::Tensor;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"TLSRCKP\x01";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayData {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub arrays: BTreeMap<String, ArrayData>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn meta_str(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Data(format!("checkpoint missing meta key '{key}'")))
    }

    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.meta_str(key)?
            .parse()
            .map_err(|_| Error::Data(format!("checkpoint meta '{key}' unparsable")))
    }

    pub fn insert_tensor<S: Scalar>(&mut self, name: &str, tensor: &Tensor<S>) {
        self.arrays.insert(
            name.to_string(),
            ArrayData { shape: tensor.shape().to_vec(), data: tensor.to_f64_vec() },
        );
    }

    pub fn tensor<S: Scalar>(&self, name: &str) -> Result<Tensor<S>> {
        let arr = self
            .arrays
            .get(name)
            .ok_or_else(|| Error::Data(format!("checkpoint missing array '{name}'")))?;
        Tensor::from_f64_slice(&arr.shape, &arr.data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.meta.len() as u32).to_le_bytes());
        for (k, v) in &self.meta {
            write_str(&mut buf, k);
            write_str(&mut buf, v);
        }
        buf.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for (name, arr) in &self.arrays {
            write_str(&mut buf, name);
            buf.extend_from_slice(&(arr.shape.len() as u32).to_le_bytes());
            for d in &arr.shape {
                buf.extend_from_slice(&(*d as u64).to_le_bytes());
            }
            for v in &arr.data {
                buf.extend_from_slice(&v.to_bits().to_le_bytes());
            }
        }
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&buf)?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
            if *pos + n > bytes.len() {
                return Err(Error::Data("checkpoint truncated".to_string()));
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        if take(&mut pos, 8)? != MAGIC {
            return Err(Error::Data("not a checkpoint file".to_string()));
        }
        let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::Data(format!("unsupported checkpoint version {version}")));
        }
        let mut ckpt = Checkpoint::new();
        let n_meta = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        for _ in 0..n_meta {
            let k = read_str(&bytes, &mut pos)?;
            let v = read_str(&bytes, &mut pos)?;
            ckpt.meta.insert(k, v);
        }
        let n_arrays = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        for _ in 0..n_arrays {
            let name = read_str(&bytes, &mut pos)?;
            let ndim = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize);
            }
            let numel: usize = shape.iter().product();
            let mut data = Vec::with_capacity(numel);
            for _ in 0..numel {
                data.push(f64::from_bits(u64::from_le_bytes(
                    take(&mut pos, 8)?.try_into().unwrap(),
                )));
            }
            ckpt.arrays.insert(name, ArrayData { shape, data });
        }
        Ok(ckpt)
    }
}

fn write_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

fn read_str(bytes: &[u8], pos: &mut usize) -> Result<String> {
    if *pos + 4 > bytes.len() {
        return Err(Error::Data("checkpoint truncated".to_string()));
    }
    let len = u32::from_le_bytes(bytes[*pos..*pos + 4].try_into().unwrap()) as usize;
    *pos += 4;
    if *pos + len > bytes.len() {
        return Err(Error::Data("checkpoint truncated".to_string()));
    }
    let s = String::from_utf8(bytes[*pos..*pos + len].to_vec())
        .map_err(|_| Error::Data("checkpoint string not utf-8".to_string()))?;
    *pos += len;
    Ok(s)
}
