//! Binary checkpoints. A filter checkpoint is `ATFM`, format version (u32), the configuration as
//! JSON, then every parameter block in declaration order as
//! `name_len (u32) | name | ndim (u32) | dims (u64 each) | f64 values`.
//! All integers and floats are little-endian.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::config::FilterConfig;
use super::model::FilterModel;
use crate::diffcore::{ParamStore, Tensor};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ATFM";
pub const FORMAT_VERSION: u32 = 1;

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_bytes<R: Read>(r: &mut R, n: usize, what: &str) -> Result<Vec<u8>> {
    if n > 1 << 30 {
        return Err(Error::Checkpoint(format!("{what} length {n} is implausible")));
    }
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// Writes every block of `store` in declaration order.
pub fn write_param_blocks<W: Write>(store: &ParamStore<f64>, w: &mut W) -> Result<()> {
    put_u32(w, store.len() as u32)?;
    for id in store.ids() {
        let name = store.name(id).as_bytes();
        put_u32(w, name.len() as u32)?;
        w.write_all(name)?;
        let t = store.get(id);
        put_u32(w, t.shape().len() as u32)?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for &v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Overwrites every block of `store`, which must declare the same names and
/// shapes in the same order.
pub fn read_param_blocks<R: Read>(store: &mut ParamStore<f64>, r: &mut R) -> Result<()> {
    let count = get_u32(r)? as usize;
    if count != store.len() {
        return Err(Error::Checkpoint(format!("{count} parameter blocks, the configuration declares {}", store.len())));
    }
    for id in store.ids().collect::<Vec<_>>() {
        let nlen = get_u32(r)? as usize;
        let name = String::from_utf8(get_bytes(r, nlen, "name")?)
            .map_err(|_| Error::Checkpoint("parameter name is not UTF-8".into()))?;
        if name != store.name(id) {
            return Err(Error::Checkpoint(format!("expected block {}, found {name}", store.name(id))));
        }
        let ndim = get_u32(r)? as usize;
        if ndim > 8 {
            return Err(Error::Checkpoint(format!("{name}: {ndim} dimensions")));
        }
        let shape = (0..ndim).map(|_| get_u64(r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if shape != store.get(id).shape() {
            return Err(Error::Checkpoint(format!("{name}: shape {shape:?}, expected {:?}", store.get(id).shape())));
        }
        let n: usize = shape.iter().product();
        let raw = get_bytes(r, n * 8, &name)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        store.set(id, Tensor::new(&shape, data)?)?;
    }
    Ok(())
}

/// Magic, version and a JSON header.
pub fn write_header<W: Write, H: Serialize>(w: &mut W, magic: &[u8; 4], header: &H) -> Result<()> {
    w.write_all(magic)?;
    put_u32(w, FORMAT_VERSION)?;
    let json = serde_json::to_vec(header)?;
    put_u32(w, json.len() as u32)?;
    w.write_all(&json)?;
    Ok(())
}

pub fn read_header<R: Read, H: DeserializeOwned>(r: &mut R, magic: &[u8; 4]) -> Result<H> {
    let mut found = [0u8; 4];
    r.read_exact(&mut found)?;
    if &found != magic {
        return Err(Error::Checkpoint(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&found),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = get_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("format version {version}, this build reads {FORMAT_VERSION}")));
    }
    let len = get_u32(r)? as usize;
    Ok(serde_json::from_slice(&get_bytes(r, len, "header")?)?)
}

pub fn expect_end<R: Read>(r: &mut R) -> Result<()> {
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after the last block".into()));
    }
    Ok(())
}

pub fn write_checkpoint<W: Write>(model: &FilterModel, w: &mut W) -> Result<()> {
    write_header(w, MAGIC, &model.config)?;
    write_param_blocks(&model.params, w)
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<FilterModel> {
    let config: FilterConfig = read_header(r, MAGIC)?;
    let mut model = FilterModel::new(config, 0)?;
    read_param_blocks(&mut model.params, r)?;
    expect_end(r)?;
    Ok(model)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(std::path::Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_checkpoint(model: &FilterModel, path: &std::path::Path) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(model, &mut buf)?;
    write_atomic(path, &buf)
}

pub fn load_checkpoint(path: &std::path::Path) -> Result<FilterModel> {
    let bytes = std::fs::read(path)?;
    read_checkpoint(&mut bytes.as_slice())
}
