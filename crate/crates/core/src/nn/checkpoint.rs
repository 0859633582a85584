//! Flat binary checkpoints:
//! magic `NGNCKPT\0`, version `u32`, dtype width `u32` (4 or 8), tensor
//! count `u32`, then per tensor: name length `u32`, UTF-8 name, rows `u64`,
//! cols `u64`, little-endian values.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{ParamStore, Real, Tensor};

const MAGIC: &[u8; 8] = b"NGNCKPT\0";
const VERSION: u32 = 1;

pub fn write_checkpoint<T: Real>(w: &mut impl Write, store: &ParamStore<T>) -> Result<()> {
    let width = std::mem::size_of::<T>() as u32;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&width.to_le_bytes())?;
    w.write_all(&(store.len() as u32).to_le_bytes())?;
    for (name, t) in store.iter() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.rows() as u64).to_le_bytes())?;
        w.write_all(&(t.cols() as u64).to_le_bytes())?;
        for &x in t.data() {
            if width == 4 {
                w.write_all(&(x.to_f64() as f32).to_le_bytes())?;
            } else {
                w.write_all(&x.to_f64().to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn u32_from(r: &mut impl Read) -> Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn u64_from(r: &mut impl Read) -> Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_checkpoint<T: Real>(r: &mut impl Read) -> Result<ParamStore<T>> {
    let mut magic = [0; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a checkpoint file".into()));
    }
    let version = u32_from(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("checkpoint version {version} (expected {VERSION})")));
    }
    let width = u32_from(r)?;
    if width != 4 && width != 8 {
        return Err(Error::Format(format!("unsupported value width {width}")));
    }
    let count = u32_from(r)?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let len = u32_from(r)? as usize;
        let mut name = vec![0; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
        let rows = u64_from(r)? as usize;
        let cols = u64_from(r)? as usize;
        let n = rows.checked_mul(cols).ok_or_else(|| Error::Format("tensor too large".into()))?;
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(if width == 4 {
                T::from_f64(f32::from_bits(u32_from(r)?) as f64)
            } else {
                T::from_f64(f64::from_bits(u64_from(r)?))
            });
        }
        if store.index_of(&name).is_some() {
            return Err(Error::Format(format!("duplicate tensor {name}")));
        }
        store.add(name, Tensor::new(rows, cols, data)?);
    }
    Ok(store)
}

pub fn save_checkpoint<T: Real>(path: impl AsRef<Path>, store: &ParamStore<T>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_checkpoint(&mut f, store)?;
    f.flush()?;
    Ok(())
}

pub fn load_checkpoint<T: Real>(path: impl AsRef<Path>) -> Result<ParamStore<T>> {
    read_checkpoint(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}
