//! Named parameter store with binary checkpoint serialization.
//!
//! Checkpoint layout (little-endian throughout):
//! magic `COREFCKP`, u32 format version, u32 config length + UTF-8 config
//! string, u64 parameter count, then per parameter: u32 name length + name,
//! u32 rank, u64 dims, f64 values.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"COREFCKP";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Param {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Param {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Ordered map from parameter name to tensor. Insertion order is the
/// canonical order used by initialization, Adam state, and checkpoints.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    names: Vec<String>,
    params: Vec<Param>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, shape: Vec<usize>, values: Vec<f64>) {
        assert!(
            !self.index.contains_key(name),
            "duplicate parameter {name}"
        );
        assert_eq!(shape.iter().product::<usize>(), values.len());
        self.index.insert(name.to_string(), self.params.len());
        self.names.push(name.to_string());
        self.params.push(Param { shape, values });
    }

    /// Xavier-uniform matrix parameter.
    pub fn insert_xavier(&mut self, name: &str, rows: usize, cols: usize, rng: &mut ChaCha8Rng) {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let values = (0..rows * cols)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        self.insert(name, vec![rows, cols], values);
    }

    /// Embedding table with small uniform entries.
    pub fn insert_embedding(&mut self, name: &str, rows: usize, dim: usize, rng: &mut ChaCha8Rng) {
        let limit = (3.0 / dim as f64).sqrt();
        let values = (0..rows * dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        self.insert(name, vec![rows, dim], values);
    }

    pub fn insert_zeros(&mut self, name: &str, shape: Vec<usize>) {
        let n = shape.iter().product();
        self.insert(name, shape, vec![0.0; n]);
    }

    pub fn get(&self, name: &str) -> &Param {
        &self.params[self.index[name]]
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Param {
        &mut self.params[self.index[name]]
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn total_values(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.params.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.params.iter_mut())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn save(&self, path: &Path, config_str: &str) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(config_str.len() as u32).to_le_bytes())?;
        w.write_all(config_str.as_bytes())?;
        w.write_all(&(self.params.len() as u64).to_le_bytes())?;
        for (name, p) in self.iter() {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&(p.shape.len() as u32).to_le_bytes())?;
            for &d in &p.shape {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            for &v in &p.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Load a checkpoint, returning the store and the embedded config string.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic bytes".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let cfg_len = read_u32(&mut r)? as usize;
        let mut cfg = vec![0u8; cfg_len];
        r.read_exact(&mut cfg)?;
        let config_str = String::from_utf8(cfg)
            .map_err(|_| Error::Checkpoint("config string is not UTF-8".into()))?;
        let count = read_u64(&mut r)? as usize;
        let mut store = ParamStore::new();
        for _ in 0..count {
            let name_len = read_u32(&mut r)? as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::Checkpoint("parameter name is not UTF-8".into()))?;
            let rank = read_u32(&mut r)? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(read_u64(&mut r)? as usize);
            }
            let n: usize = shape.iter().product();
            let mut values = Vec::with_capacity(n);
            let mut buf = [0u8; 8];
            for _ in 0..n {
                r.read_exact(&mut buf)?;
                values.push(f64::from_le_bytes(buf));
            }
            store.insert(&name, shape, values);
        }
        Ok((store, config_str))
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}
