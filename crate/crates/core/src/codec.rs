// SPDX-License-Identifier: Apache-2.0

//! Splitting files into an `n x s` sector matrix and joining them back.

use serde::{Deserialize, Serialize};

use crate::encoding::{canonical_json, expect_header, hex_bytes, sha256, Reader};
use crate::error::{Error, Result};
use crate::params::SUPPORTED_SECTOR_BITS;

const BLOCKS_MAGIC: &[u8; 16] = b"SEVDEL-BLOCKS\0\0\0";
const BLOCKS_VERSION: u8 = 1;

/// Identity and layout of an outsourced file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileManifest {
    /// `I_M`: 32-byte digest of owner, name and content.
    #[serde(with = "hex_bytes")]
    pub file_id: Vec<u8>,
    pub n: usize,
    pub s: usize,
    pub sector_bits: u32,
    pub original_len: u64,
}

impl FileManifest {
    pub fn sector_bytes(&self) -> usize {
        self.sector_bits as usize / 8
    }

    pub fn to_json(&self) -> String {
        canonical_json(self).expect("manifest always serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s).map_err(|e| Error::Decode(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        check_layout(self.s, self.sector_bits)?;
        if self.n == 0 {
            return Err(Error::EmptyFile);
        }
        let capacity = (self.n * self.s * self.sector_bytes()) as u64;
        if capacity < self.original_len {
            return Err(Error::DimensionMismatch(format!(
                "{} blocks hold {capacity} bytes, manifest claims {}",
                self.n, self.original_len
            )));
        }
        Ok(())
    }

    /// Check that a block-indexed collection has the manifest's shape.
    pub fn check_rows(&self, rows: usize, what: &str) -> Result<()> {
        if rows != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{what} has {rows} blocks, manifest has {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Derive `I_M` from the owner, the file name and the content.
pub fn derive_file_id(owner_id: &str, file_name: &str, content: &[u8]) -> Vec<u8> {
    let content_digest = sha256(&[content]);
    sha256(&[
        &(owner_id.len() as u64).to_be_bytes(),
        owner_id.as_bytes(),
        &(file_name.len() as u64).to_be_bytes(),
        file_name.as_bytes(),
        &content_digest,
    ])
    .to_vec()
}

/// Row-major `n x s` matrix of sector values `m_ij`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockMatrix {
    s: usize,
    values: Vec<u64>,
}

impl BlockMatrix {
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let s = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != s) {
            return Err(Error::DimensionMismatch("ragged block rows".into()));
        }
        Ok(BlockMatrix { s, values: rows.concat() })
    }

    pub fn n(&self) -> usize {
        self.values.len().checked_div(self.s).unwrap_or(0)
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Sector `j` of block `i`, both 0-based.
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.values[i * self.s + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.values[i * self.s + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.values[i * self.s..(i + 1) * self.s]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.values.chunks(self.s.max(1))
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn check_shape(&self, manifest: &FileManifest) -> Result<()> {
        if self.n() != manifest.n || self.s != manifest.s {
            return Err(Error::DimensionMismatch(format!(
                "block matrix is {}x{}, manifest is {}x{}",
                self.n(),
                self.s,
                manifest.n,
                manifest.s
            )));
        }
        let bound = 1u64 << manifest.sector_bits;
        if let Some(v) = self.values.iter().find(|v| **v >= bound) {
            return Err(Error::DimensionMismatch(format!(
                "sector value {v} exceeds {} bits",
                manifest.sector_bits
            )));
        }
        Ok(())
    }

    /// Packed form: magic, version, `n`, `s`, `sector_bits`, then each sector
    /// as its little-endian bytes.
    pub fn to_packed(&self, sector_bits: u32) -> Vec<u8> {
        let w = sector_bits as usize / 8;
        let mut out = Vec::with_capacity(26 + self.values.len() * w);
        out.extend_from_slice(BLOCKS_MAGIC);
        out.push(BLOCKS_VERSION);
        out.extend_from_slice(&(self.n() as u32).to_be_bytes());
        out.extend_from_slice(&(self.s as u32).to_be_bytes());
        out.push(sector_bits as u8);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes()[..w]);
        }
        out
    }

    pub fn from_packed(bytes: &[u8]) -> Result<(Self, u32)> {
        let mut r = Reader::new(bytes);
        expect_header(&mut r, BLOCKS_MAGIC, BLOCKS_VERSION)?;
        let n = r.u32()? as usize;
        let s = r.u32()? as usize;
        let bits = r.u8()? as u32;
        check_layout(s, bits)?;
        let w = bits as usize / 8;
        let mut values = Vec::with_capacity(n * s);
        for _ in 0..n * s {
            values.push(sector_value(r.take(w)?));
        }
        r.finish()?;
        Ok((BlockMatrix { s, values }, bits))
    }
}

fn check_layout(s: usize, sector_bits: u32) -> Result<()> {
    if s == 0 {
        return Err(Error::InvalidLayout("s must be at least 1".into()));
    }
    if !SUPPORTED_SECTOR_BITS.contains(&sector_bits) {
        return Err(Error::InvalidLayout(format!(
            "sector_bits must be one of {SUPPORTED_SECTOR_BITS:?}, got {sector_bits}"
        )));
    }
    Ok(())
}

fn sector_value(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .rev()
        .fold(0u64, |acc, b| (acc << 8) | *b as u64)
}

/// Split `data` into `n = ceil(len / (s * sector_bits / 8))` blocks of `s`
/// sectors; the tail is zero-padded.
pub fn split(
    owner_id: &str,
    file_name: &str,
    data: &[u8],
    s: usize,
    sector_bits: u32,
) -> Result<(FileManifest, BlockMatrix)> {
    check_layout(s, sector_bits)?;
    if data.is_empty() {
        return Err(Error::EmptyFile);
    }
    let w = sector_bits as usize / 8;
    let block_len = s * w;
    let n = data.len().div_ceil(block_len);

    let mut values = Vec::with_capacity(n * s);
    let mut sector = vec![0u8; w];
    for k in 0..n * s {
        let start = k * w;
        sector.fill(0);
        if start < data.len() {
            let end = (start + w).min(data.len());
            sector[..end - start].copy_from_slice(&data[start..end]);
        }
        values.push(sector_value(&sector));
    }

    let manifest = FileManifest {
        file_id: derive_file_id(owner_id, file_name, data),
        n,
        s,
        sector_bits,
        original_len: data.len() as u64,
    };
    Ok((manifest, BlockMatrix { s, values }))
}

/// Inverse of [`split`]: concatenate sectors and truncate the padding.
pub fn join(manifest: &FileManifest, blocks: &BlockMatrix) -> Result<Vec<u8>> {
    manifest.validate()?;
    blocks.check_shape(manifest)?;
    let w = manifest.sector_bytes();
    let mut out = Vec::with_capacity(blocks.values.len() * w);
    for v in &blocks.values {
        out.extend_from_slice(&v.to_le_bytes()[..w]);
    }
    out.truncate(manifest.original_len as usize);
    Ok(out)
}
