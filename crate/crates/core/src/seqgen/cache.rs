//! On-disk cache of sequence blocks.
//!
//! Layout: `b"MULAB1"`, one storage-tag byte, `start` as u64 LE, `length`
//! as u64 LE, then the packed payload (see [`SequenceBlock::payload_bytes`]).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::block::{SequenceBlock, Storage};
use crate::error::{MulabError, Result};

pub const MAGIC: &[u8; 6] = b"MULAB1";
const HEADER_LEN: usize = 6 + 1 + 8 + 8;

pub fn encode(block: &SequenceBlock) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + block.len() / 4);
    out.extend_from_slice(MAGIC);
    out.push(block.storage().tag());
    out.extend_from_slice(&block.start().to_le_bytes());
    out.extend_from_slice(&(block.len() as u64).to_le_bytes());
    out.extend_from_slice(&block.payload_bytes());
    out
}

pub fn decode(bytes: &[u8]) -> Result<SequenceBlock> {
    if bytes.len() < HEADER_LEN || &bytes[..6] != MAGIC {
        return Err(MulabError::Cache("missing MULAB1 header".into()));
    }
    let storage = Storage::from_tag(bytes[6])
        .ok_or_else(|| MulabError::Cache(format!("unknown storage tag {}", bytes[6])))?;
    let start = u64::from_le_bytes(bytes[7..15].try_into().unwrap());
    let len = u64::from_le_bytes(bytes[15..23].try_into().unwrap());
    SequenceBlock::from_payload(start, len as usize, storage, &bytes[HEADER_LEN..])
}

/// Cache file name for a named function over `[start, start + len)`.
pub fn cache_path(dir: &Path, name: &str, start: u64, len: u64) -> PathBuf {
    dir.join(format!("{name}_{start}_{len}.mulab"))
}

pub fn write(path: &Path, block: &SequenceBlock) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| MulabError::Cache(e.to_string()))?;
    }
    let mut f = fs::File::create(path).map_err(|e| MulabError::Cache(e.to_string()))?;
    f.write_all(&encode(block)).map_err(|e| MulabError::Cache(e.to_string()))
}

pub fn read(path: &Path) -> Result<SequenceBlock> {
    let bytes = fs::read(path).map_err(|e| MulabError::Cache(e.to_string()))?;
    decode(&bytes)
}

/// Load `name` over exactly `[start, end)` if a cache file exists.
pub fn load_exact(dir: &Path, name: &str, start: u64, end: u64) -> Option<SequenceBlock> {
    let path = cache_path(dir, name, start, end - start);
    let block = read(&path).ok()?;
    (block.start() == start && block.end() == end).then_some(block)
}
