//! MVEC: a flat little-endian embedding table.
//!
//! ```text
//! magic   b"MVEC"
//! version u32 (= 1)
//! dim     u32
//! count   u32
//! count x { key_len u32, key [u8; key_len] (UTF-8), vector [f32; dim] }
//! ```
//!
//! All integers and floats are little-endian. Keys are unique and every float
//! is finite. Entries are written in insertion order.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MVEC_MAGIC: &[u8; 4] = b"MVEC";
pub const MVEC_VERSION: u32 = 1;

/// Keyed, fixed-width `f32` vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    keys: Vec<String>,
    values: Vec<f32>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            keys: Vec::new(),
            values: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: &[f32]) -> Result<()> {
        let key = key.into();
        if vector.len() != self.dim {
            return Err(Error::Format(format!(
                "vector for `{key}` has dim {}, table dim is {}",
                vector.len(),
                self.dim
            )));
        }
        if let Some(bad) = vector.iter().find(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite value {bad} for `{key}`")));
        }
        if self.index.contains_key(&key) {
            return Err(Error::Format(format!("duplicate key `{key}`")));
        }
        self.index.insert(key.clone(), self.keys.len());
        self.keys.push(key);
        self.values.extend_from_slice(vector);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&[f32]> {
        self.index
            .get(key)
            .map(|&i| &self.values[i * self.dim..(i + 1) * self.dim])
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.as_str(), &self.values[i * self.dim..(i + 1) * self.dim]))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.values.len() * 4 + self.keys.len() * 16);
        out.extend_from_slice(MVEC_MAGIC);
        out.extend_from_slice(&MVEC_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.keys.len() as u32).to_le_bytes());
        for (key, vector) in self.iter() {
            out.extend_from_slice(&(key.len() as u32).to_le_bytes());
            out.extend_from_slice(key.as_bytes());
            for v in vector {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = Cursor { bytes, pos: 0 };
        let magic = cursor.take(4, "magic")?;
        if magic != MVEC_MAGIC {
            return Err(Error::Format(format!("bad magic {:?}", String::from_utf8_lossy(magic))));
        }
        let version = cursor.u32("version")?;
        if version != MVEC_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dim = cursor.u32("dim")? as usize;
        let count = cursor.u32("count")? as usize;
        let mut table = EmbeddingTable::new(dim);
        let mut vector = vec![0f32; dim];
        for entry in 0..count {
            let key_len = cursor.u32("key length").map_err(|e| truncated(e, entry, count))? as usize;
            let key = cursor.take(key_len, "key").map_err(|e| truncated(e, entry, count))?;
            let key = std::str::from_utf8(key)
                .map_err(|_| Error::Format(format!("entry {entry}: key is not valid UTF-8")))?
                .to_string();
            for v in vector.iter_mut() {
                let raw = cursor.take(4, "vector").map_err(|e| truncated(e, entry, count))?;
                *v = f32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]);
            }
            table.insert(key, &vector)?;
        }
        if cursor.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after {count} entries",
                bytes.len() - cursor.pos
            )));
        }
        Ok(table)
    }
}

fn truncated(err: Error, entry: usize, count: usize) -> Error {
    Error::Format(format!("truncated: declared {count} entries, data ends in entry {entry} ({err})"))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("unexpected end of file reading {what}")))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let raw = self.take(4, what)?;
        Ok(u32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]))
    }
}

pub fn read_mvec(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    EmbeddingTable::from_bytes(&bytes)
}

pub fn write_mvec(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, table.to_bytes()).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    key: String,
    vector: Vec<f32>,
}

/// Reads an embedding table in MVEC form, or as JSONL lines of
/// `{"key": ..., "vector": [...]}` when the file lacks the MVEC magic.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MVEC_MAGIC) {
        return EmbeddingTable::from_bytes(&bytes);
    }
    let mut table: Option<EmbeddingTable> = None;
    for (i, line) in BufReader::new(bytes.as_slice()).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: JsonEntry = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            cause: e.to_string(),
        })?;
        let t = table.get_or_insert_with(|| EmbeddingTable::new(entry.vector.len()));
        t.insert(entry.key, &entry.vector).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            cause: e.to_string(),
        })?;
    }
    table.ok_or_else(|| Error::Format(format!("{} is neither MVEC nor non-empty JSONL", path.display())))
}
