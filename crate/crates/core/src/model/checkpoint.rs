//! Flat binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes   "CCKPT\0\0\0"
//! version      u32       1
//! config_len   u32       length of the JSON-encoded EncoderConfig
//! config       bytes
//! entries      u32       number of parameter tensors
//! per entry:   u32 name length, name (UTF-8), u32 ndim, ndim x u32 dims,
//!              u64 offset (in f32 elements from the start of the data block)
//! data         f32 values, little-endian, in table order
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::encoder::{EncoderConfig, EncoderModel};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CCKPT\0\0\0";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(model: &EncoderModel<f32>, mut out: W) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    let config = serde_json::to_vec(&model.config).map_err(std::io::Error::other)?;
    out.write_all(&(config.len() as u32).to_le_bytes())?;
    out.write_all(&config)?;
    let params = model.params();
    out.write_all(&(params.len() as u32).to_le_bytes())?;
    let mut offset = 0u64;
    for (name, t) in &params {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        out.write_all(&(t.shape.len() as u32).to_le_bytes())?;
        for &d in &t.shape {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
        out.write_all(&offset.to_le_bytes())?;
        offset += t.len() as u64;
    }
    for (_, t) in &params {
        for v in &t.data {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn parse(buf: &[u8]) -> std::result::Result<EncoderModel<f32>, String> {
    let mut cur = Cursor { buf, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err("bad magic".into());
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let config_len = cur.u32()? as usize;
    let config: EncoderConfig =
        serde_json::from_slice(cur.take(config_len)?).map_err(|e| format!("config: {e}"))?;
    let mut model = EncoderModel::<f32>::new(config, 0).map_err(|e| e.to_string())?;

    let count = cur.u32()? as usize;
    let expected: Vec<(String, Vec<usize>)> = model
        .params()
        .into_iter()
        .map(|(n, t)| (n, t.shape.clone()))
        .collect();
    if count != expected.len() {
        return Err(format!("{count} tensors, architecture has {}", expected.len()));
    }
    let mut offsets = Vec::with_capacity(count);
    for (want_name, want_shape) in &expected {
        let len = cur.u32()? as usize;
        let name = std::str::from_utf8(cur.take(len)?).map_err(|_| "non-UTF-8 tensor name")?;
        let ndim = cur.u32()? as usize;
        let shape = (0..ndim)
            .map(|_| cur.u32().map(|d| d as usize))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if name != want_name || &shape != want_shape {
            return Err(format!(
                "tensor {name} {shape:?} does not match {want_name} {want_shape:?}"
            ));
        }
        offsets.push(cur.u64()? as usize);
    }
    let data = &buf[cur.pos..];
    let total: usize = expected.iter().map(|(_, s)| s.iter().product::<usize>()).sum();
    if data.len() != total * 4 {
        return Err(format!("data block has {} bytes, expected {}", data.len(), total * 4));
    }
    for (t, &off) in model.params_mut().into_iter().zip(&offsets) {
        let bytes = data
            .get(off * 4..(off + t.len()) * 4)
            .ok_or_else(|| format!("offset {off} out of range"))?;
        for (v, chunk) in t.data.iter_mut().zip(bytes.chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        }
    }
    Ok(model)
}

pub fn read_checkpoint<R: Read>(mut input: R, path: &Path) -> Result<EncoderModel<f32>> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
    parse(&buf).map_err(|reason| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn save_checkpoint(model: &EncoderModel<f32>, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(model, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<EncoderModel<f32>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(file, path)
}
