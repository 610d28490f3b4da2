//! SHA-256 and fixed-block piecewise digests, and sample-level deduplication.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::manifest::FirmwareRecord;

pub const DEFAULT_BLOCK_SIZE: usize = 4096;
pub const MIN_BLOCK_SIZE: usize = 1024;
pub const MAX_BLOCK_SIZE: usize = 64 * 1024;

#[derive(Debug, Error)]
pub enum DigestError {
    #[error("block size {0} must be a power of two between 1 KiB and 64 KiB")]
    InvalidBlockSize(usize),
    #[error("block size mismatch: {0} vs {1}")]
    BlockSizeMismatch(usize, usize),
    #[error("record {index} ({manufacturer} {model}) has no sha256")]
    MissingSha256 { index: usize, manufacturer: String, model: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Lowercase hex SHA-256 of everything readable from `reader`.
pub fn sha256_digest<R: Read>(mut reader: R) -> io::Result<String> {
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn sha256_bytes(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    sha256_digest(BufReader::new(File::open(path)?))
}

/// Hashes files in parallel; results keep the input order.
pub fn sha256_files(paths: &[PathBuf]) -> Vec<io::Result<String>> {
    paths.par_iter().map(|p| sha256_file(p)).collect()
}

/// Piecewise digest: the first 8 bytes (big endian) of the SHA-256 of every
/// fixed-size block. The last block may be short and is hashed as-is.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FuzzyDigest {
    pub block_size: usize,
    pub block_hashes: Vec<u64>,
}

impl FuzzyDigest {
    pub const PREFIX: &'static str = "blk:";
}

impl fmt::Display for FuzzyDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}:", Self::PREFIX, self.block_size)?;
        for h in &self.block_hashes {
            write!(f, "{h:016x}")?;
        }
        Ok(())
    }
}

impl FromStr for FuzzyDigest {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let rest = s.strip_prefix(Self::PREFIX).ok_or_else(|| format!("missing '{}' prefix", Self::PREFIX))?;
        let (size, hashes) = rest.split_once(':').ok_or("missing block hash list")?;
        let block_size: usize = size.parse().map_err(|_| format!("bad block size '{size}'"))?;
        check_block_size(block_size).map_err(|e| e.to_string())?;
        if hashes.len() % 16 != 0 || !hashes.is_ascii() {
            return Err("block hash list must be 16 hex chars per block".into());
        }
        let block_hashes = (0..hashes.len())
            .step_by(16)
            .map(|i| u64::from_str_radix(&hashes[i..i + 16], 16).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        Ok(Self { block_size, block_hashes })
    }
}

fn check_block_size(block_size: usize) -> Result<(), DigestError> {
    if block_size.is_power_of_two() && (MIN_BLOCK_SIZE..=MAX_BLOCK_SIZE).contains(&block_size) {
        Ok(())
    } else {
        Err(DigestError::InvalidBlockSize(block_size))
    }
}

fn fill_block<R: Read>(reader: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

pub fn block_digest<R: Read>(mut reader: R, block_size: usize) -> Result<FuzzyDigest, DigestError> {
    check_block_size(block_size)?;
    let mut buf = vec![0u8; block_size];
    let mut block_hashes = Vec::new();
    loop {
        let n = fill_block(&mut reader, &mut buf)?;
        if n == 0 {
            break;
        }
        let d = Sha256::digest(&buf[..n]);
        block_hashes.push(u64::from_be_bytes(d[..8].try_into().expect("8 bytes")));
        if n < block_size {
            break;
        }
    }
    Ok(FuzzyDigest { block_size, block_hashes })
}

/// Multiset intersection of block hashes over the longer digest's length.
pub fn fuzzy_similarity(a: &FuzzyDigest, b: &FuzzyDigest) -> Result<f64, DigestError> {
    if a.block_size != b.block_size {
        return Err(DigestError::BlockSizeMismatch(a.block_size, b.block_size));
    }
    let longest = a.block_hashes.len().max(b.block_hashes.len());
    if longest == 0 {
        return Ok(1.0);
    }
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for h in &a.block_hashes {
        *counts.entry(*h).or_insert(0) += 1;
    }
    let mut common = 0usize;
    for h in &b.block_hashes {
        if let Some(c) = counts.get_mut(h) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    Ok(common as f64 / longest as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateGroup {
    pub sha256: String,
    /// All records with this hash, in input order; the first is the representative.
    pub members: Vec<FirmwareRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DedupResult {
    pub unique: Vec<FirmwareRecord>,
    pub duplicate_groups: Vec<DuplicateGroup>,
}

impl DedupResult {
    pub fn duplicate_count(&self) -> usize {
        self.duplicate_groups.iter().map(|g| g.members.len() - 1).sum()
    }
}

/// Keeps the first record per sha256 and groups the rest with it.
pub fn dedup(records: &[FirmwareRecord]) -> Result<DedupResult, DigestError> {
    let mut first: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of: HashMap<usize, usize> = HashMap::new();
    let mut unique = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if r.sha256.trim().is_empty() {
            return Err(DigestError::MissingSha256 {
                index: i,
                manufacturer: r.manufacturer.clone(),
                model: r.model.clone(),
            });
        }
        match first.get(r.sha256.as_str()) {
            None => {
                first.insert(&r.sha256, i);
                unique.push(r.clone());
            }
            Some(&rep) => {
                let g = *group_of.entry(rep).or_insert_with(|| {
                    groups.push(vec![rep]);
                    groups.len() - 1
                });
                groups[g].push(i);
            }
        }
    }
    let duplicate_groups = groups
        .into_iter()
        .map(|idx| DuplicateGroup {
            sha256: records[idx[0]].sha256.clone(),
            members: idx.into_iter().map(|i| records[i].clone()).collect(),
        })
        .collect();
    Ok(DedupResult { unique, duplicate_groups })
}
