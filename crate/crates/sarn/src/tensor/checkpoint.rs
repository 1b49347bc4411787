//! Checkpoint container: named tensor groups plus a step counter.
//!
//! Layout (little-endian): magic `SARNCKPT`, version u16, group count u32,
//! step u64, then per group: name length u16, UTF-8 name, rank u8, dims u32
//! each, raw f32 data. Optimizer moments ride along as groups named with
//! `.m` / `.v` suffixes. The decoder treats input as untrusted: every length
//! is validated against the remaining bytes before any allocation, and errors
//! carry the offset where parsing stopped.

use std::path::Path;

use crate::bytes::Reader;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &[u8; 8] = b"SARNCKPT";
const VERSION: u16 = 1;
const MAX_RANK: u8 = 8;
const MAX_NAME_LEN: u16 = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub step: u64,
    pub groups: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn find(&self, name: &str) -> Option<&Tensor> {
        self.groups
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }
}

pub fn checkpoint_to_bytes(ckpt: &Checkpoint) -> Vec<u8> {
    let payload: usize = ckpt
        .groups
        .iter()
        .map(|(n, t)| 2 + n.len() + 1 + 4 * t.shape().len() + 4 * t.numel())
        .sum();
    let mut out = Vec::with_capacity(MAGIC.len() + 2 + 4 + 8 + payload);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(ckpt.groups.len() as u32).to_le_bytes());
    out.extend_from_slice(&ckpt.step.to_le_bytes());
    for (name, tensor) in &ckpt.groups {
        assert!(
            !name.is_empty() && name.len() <= MAX_NAME_LEN as usize,
            "group name length {} outside 1..={}",
            name.len(),
            MAX_NAME_LEN
        );
        assert!(
            tensor.shape().len() <= MAX_RANK as usize,
            "group {:?} rank {} exceeds {}",
            name,
            tensor.shape().len(),
            MAX_RANK
        );
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(tensor.shape().len() as u8);
        for &dim in tensor.shape() {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        for &v in tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    std::fs::write(path, checkpoint_to_bytes(ckpt)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes)
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader::new(bytes);
    let magic = r.take(MAGIC.len(), "magic")?;
    if magic != MAGIC {
        return Err(Error::format(0, "bad magic, expected SARNCKPT"));
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(Error::format(
            r.pos - 2,
            format!("unsupported version {}", version),
        ));
    }
    let group_count = r.u32("group count")? as usize;
    let step = r.u64("step counter")?;

    let mut groups = Vec::new();
    for gi in 0..group_count {
        let at = r.pos;
        let name_len = r.u16("group name length")?;
        if name_len == 0 || name_len > MAX_NAME_LEN {
            return Err(Error::format(
                at,
                format!("group {}: name length {} outside 1..={}", gi, name_len, MAX_NAME_LEN),
            ));
        }
        let name_bytes = r.take(name_len as usize, "group name")?;
        let name = std::str::from_utf8(name_bytes)
            .map_err(|_| Error::format(at + 2, format!("group {}: name is not UTF-8", gi)))?
            .to_string();
        if groups.iter().any(|(n, _)| *n == name) {
            return Err(Error::format(
                at,
                format!("duplicate group name {:?}", name),
            ));
        }
        let rank = r.u8("rank")?;
        if rank > MAX_RANK {
            return Err(Error::format(
                r.pos - 1,
                format!("group {:?}: rank {} exceeds {}", name, rank, MAX_RANK),
            ));
        }
        let mut shape = Vec::with_capacity(rank as usize);
        let mut numel: u64 = 1;
        for _ in 0..rank {
            let at = r.pos;
            let dim = r.u32("dimension")?;
            if dim == 0 {
                return Err(Error::format(at, format!("group {:?}: zero dimension", name)));
            }
            numel = numel
                .checked_mul(dim as u64)
                .filter(|&n| n <= (u32::MAX as u64))
                .ok_or_else(|| {
                    Error::format(at, format!("group {:?}: element count overflows", name))
                })?;
            shape.push(dim as usize);
        }
        let data_bytes = r.take(numel as usize * 4, "tensor data")?;
        let data: Vec<f32> = data_bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        groups.push((name, Tensor::new(shape, data)));
    }
    if r.pos != bytes.len() {
        return Err(Error::format(
            r.pos,
            format!("{} trailing bytes after last group", bytes.len() - r.pos),
        ));
    }
    Ok(Checkpoint { step, groups })
}
