//! Checksummed little-endian binary files: selector head checkpoints and
//! embedding caches.
//!
//! Both end with the SHA-256 digest of every preceding byte.
//!
//! Head checkpoint: `EGHD`, version u32, d_v u32, d_c u32, hidden u32,
//! f⁺ tag u8 (0 exp, 1 square), parameter count u64, parameters f64.
//!
//! Embedding cache: `EGEC`, version u32, dimension u32, entry count u64, then
//! per entry a u32 byte length, the canonical predicate string and
//! `dimension` f64 components. Entries are sorted by predicate string.

use std::collections::BTreeMap;
use std::path::Path;

use entgraph_core::{parse_predicate, FPlus, HeadDims, SphereHead, TypedPredicate};
use sha2::{Digest, Sha256};

use crate::error::{read_bytes, write_file, Error, FormatError, Result};

const HEAD_MAGIC: &[u8; 4] = b"EGHD";
const CACHE_MAGIC: &[u8; 4] = b"EGEC";
const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

fn seal(mut body: Vec<u8>) -> Vec<u8> {
    let digest = Sha256::digest(&body);
    body.extend_from_slice(&digest);
    body
}

/// Verifies the trailing digest and returns the body.
fn unseal(bytes: &[u8]) -> Result<&[u8], FormatError> {
    if bytes.len() < DIGEST_LEN {
        return Err(FormatError::binary("file shorter than its checksum"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(FormatError::binary("checksum mismatch"));
    }
    Ok(body)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| FormatError::binary(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, FormatError> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| FormatError::binary("length overflow"))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<(), FormatError> {
        if self.take(4)? != magic {
            return Err(FormatError::binary("bad magic"));
        }
        match self.u32()? {
            VERSION => Ok(()),
            v => Err(FormatError::binary(format!("unsupported version {v}"))),
        }
    }

    fn finish(&self) -> Result<(), FormatError> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(FormatError::binary(format!("{} trailing bytes", self.bytes.len() - self.pos)))
        }
    }
}

fn dim_u32(x: usize, what: &str) -> u32 {
    u32::try_from(x).unwrap_or_else(|_| panic!("{what} {x} exceeds the file format's u32 range"))
}

fn f_plus_tag(f: FPlus) -> u8 {
    match f {
        FPlus::Exp => 0,
        FPlus::Square => 1,
    }
}

pub fn encode_head(head: &SphereHead) -> Vec<u8> {
    let dims = head.dims();
    let mut out = Vec::with_capacity(33 + 8 * head.params().len() + DIGEST_LEN);
    out.extend_from_slice(HEAD_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in [dims.d_v, dims.d_c, dims.hidden] {
        out.extend_from_slice(&dim_u32(d, "head dimension").to_le_bytes());
    }
    out.push(f_plus_tag(head.f_plus()));
    out.extend_from_slice(&(head.params().len() as u64).to_le_bytes());
    for p in head.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    seal(out)
}

pub fn decode_head(bytes: &[u8]) -> Result<SphereHead, FormatError> {
    let mut c = Cursor { bytes: unseal(bytes)?, pos: 0 };
    c.header(HEAD_MAGIC)?;
    let dims = HeadDims { d_v: c.u32()? as usize, d_c: c.u32()? as usize, hidden: c.u32()? as usize };
    let f_plus = match c.u8()? {
        0 => FPlus::Exp,
        1 => FPlus::Square,
        t => return Err(FormatError::binary(format!("unknown f+ tag {t}"))),
    };
    let count = c.u64()? as usize;
    if dims.validate().is_err() || count != dims.param_count() {
        return Err(FormatError::binary(format!("{count} parameters do not fit dimensions {dims:?}")));
    }
    let params = c.f64s(count)?;
    c.finish()?;
    SphereHead::from_params(dims, f_plus, params).map_err(|e| FormatError::binary(e.to_string()))
}

pub fn read_head(path: &Path) -> Result<SphereHead> {
    decode_head(&read_bytes(path)?).map_err(|e| Error::format(path, e))
}

pub fn write_head(path: &Path, head: &SphereHead) -> Result<()> {
    write_file(path, encode_head(head))
}

/// Predicate embeddings of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCache {
    dim: usize,
    vectors: BTreeMap<TypedPredicate, Vec<f64>>,
}

impl EmbeddingCache {
    pub fn new(dim: usize) -> Self {
        EmbeddingCache { dim, vectors: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stores `v`; returns false (and stores nothing) on a dimension mismatch
    /// or non-finite component.
    pub fn insert(&mut self, p: TypedPredicate, v: Vec<f64>) -> bool {
        if v.len() != self.dim || !v.iter().all(|x| x.is_finite()) {
            return false;
        }
        self.vectors.insert(p, v);
        true
    }

    pub fn get(&self, p: &TypedPredicate) -> Option<&[f64]> {
        self.vectors.get(p).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TypedPredicate, &[f64])> {
        self.vectors.iter().map(|(p, v)| (p, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn extend(&mut self, other: EmbeddingCache) -> bool {
        if other.dim != self.dim {
            return false;
        }
        self.vectors.extend(other.vectors);
        true
    }
}

pub fn encode_embeddings(cache: &EmbeddingCache) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&dim_u32(cache.dim, "embedding dimension").to_le_bytes());
    out.extend_from_slice(&(cache.len() as u64).to_le_bytes());
    for (p, v) in cache.iter() {
        out.extend_from_slice(&dim_u32(p.as_str().len(), "predicate length").to_le_bytes());
        out.extend_from_slice(p.as_str().as_bytes());
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    seal(out)
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingCache, FormatError> {
    let mut c = Cursor { bytes: unseal(bytes)?, pos: 0 };
    c.header(CACHE_MAGIC)?;
    let dim = c.u32()? as usize;
    let count = c.u64()?;
    let mut cache = EmbeddingCache::new(dim);
    for i in 0..count {
        let len = c.u32()? as usize;
        let text =
            std::str::from_utf8(c.take(len)?).map_err(|_| FormatError::binary(format!("entry {i}: invalid UTF-8")))?;
        let p = parse_predicate(text).map_err(|e| FormatError::binary(format!("entry {i}: {e}")))?;
        let v = c.f64s(dim)?;
        if !cache.insert(p, v) {
            return Err(FormatError::binary(format!("entry {i}: non-finite component")));
        }
    }
    if cache.len() as u64 != count {
        return Err(FormatError::binary("duplicate entries"));
    }
    c.finish()?;
    Ok(cache)
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingCache> {
    decode_embeddings(&read_bytes(path)?).map_err(|e| Error::format(path, e))
}

pub fn write_embeddings(path: &Path, cache: &EmbeddingCache) -> Result<()> {
    write_file(path, encode_embeddings(cache))
}
