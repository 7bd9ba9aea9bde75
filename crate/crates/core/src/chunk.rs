//! Symbol strings, fixed-size chunking of byte files, and file manifests.

use serde::{Deserialize, Serialize};

use crate::bits::{pack_symbols, unpack_symbols, ByteReader};
use crate::crypto::FileTag;
use crate::{Error, Result};

/// Largest supported symbol width in bits.
pub const MAX_SYMBOL_BITS: u8 = 16;

/// A sequence of `q`-bit symbols. Every symbol is `< 2^q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolString {
    symbols: Vec<u16>,
    q: u8,
}

impl SymbolString {
    pub fn new(symbols: Vec<u16>, q: u8) -> Result<Self> {
        check_symbol_bits(q)?;
        let limit = 1u32 << q;
        if let Some((i, s)) = symbols
            .iter()
            .enumerate()
            .find(|(_, &s)| u32::from(s) >= limit)
        {
            return Err(Error::params(format!(
                "symbol {s} at index {i} does not fit in {q} bits"
            )));
        }
        Ok(Self { symbols, q })
    }

    /// Caller guarantees every symbol fits in `q` bits.
    pub(crate) fn from_trusted(symbols: Vec<u16>, q: u8) -> Self {
        debug_assert!(symbols.iter().all(|&s| u32::from(s) < 1u32 << q));
        Self { symbols, q }
    }

    pub fn symbols(&self) -> &[u16] {
        &self.symbols
    }

    pub fn into_symbols(self) -> Vec<u16> {
        self.symbols
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn bit_len(&self) -> u64 {
        self.symbols.len() as u64 * u64::from(self.q)
    }

    pub fn pack(&self) -> Vec<u8> {
        pack_symbols(&self.symbols, self.q)
    }

    pub fn unpack(bytes: &[u8], count: usize, q: u8) -> Result<Self> {
        check_symbol_bits(q)?;
        Ok(Self::from_trusted(unpack_symbols(bytes, count, q), q))
    }
}

fn check_symbol_bits(q: u8) -> Result<()> {
    if q == 0 || q > MAX_SYMBOL_BITS {
        return Err(Error::params(format!(
            "symbol width {q} outside 1..={MAX_SYMBOL_BITS}"
        )));
    }
    Ok(())
}

/// Chunk geometry: `chunk_bits` (s_org) split into `symbol_bits`-wide symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChunkingParams {
    pub chunk_bits: u32,
    pub symbol_bits: u8,
}

impl ChunkingParams {
    pub fn new(chunk_bits: u32, symbol_bits: u8) -> Result<Self> {
        let p = Self {
            chunk_bits,
            symbol_bits,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_symbol_bits(self.symbol_bits)?;
        if self.chunk_bits == 0 || !self.chunk_bits.is_multiple_of(u32::from(self.symbol_bits)) {
            return Err(Error::params(format!(
                "chunk_bits {} must be a positive multiple of symbol_bits {}",
                self.chunk_bits, self.symbol_bits
            )));
        }
        Ok(())
    }

    /// Symbols per chunk (n_org).
    pub fn symbols_per_chunk(&self) -> usize {
        (self.chunk_bits / u32::from(self.symbol_bits)) as usize
    }

    /// Saturates rather than overflowing on absurd lengths.
    pub fn chunk_count(&self, byte_len: u64) -> u64 {
        let n = (u128::from(byte_len) * 8).div_ceil(u128::from(self.chunk_bits));
        u64::try_from(n).unwrap_or(u64::MAX)
    }
}

impl Default for ChunkingParams {
    fn default() -> Self {
        Self {
            chunk_bits: 2048,
            symbol_bits: 8,
        }
    }
}

/// Public per-file metadata kept by the cloud next to the object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileManifest {
    pub file_tag: FileTag,
    pub chunk_count: u32,
    pub original_byte_length: u64,
    pub params: ChunkingParams,
    pub n_del: u32,
}

impl FileManifest {
    pub fn new(
        file_tag: FileTag,
        original_byte_length: u64,
        params: ChunkingParams,
        n_del: u32,
    ) -> Result<Self> {
        let chunk_count = u32::try_from(params.chunk_count(original_byte_length))
            .map_err(|_| Error::params("file has too many chunks"))?;
        let m = Self {
            file_tag,
            chunk_count,
            original_byte_length,
            params,
            n_del,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let expected = self.params.chunk_count(self.original_byte_length);
        if u64::from(self.chunk_count) != expected {
            return Err(Error::params(format!(
                "chunk_count {} inconsistent with {} bytes (expected {expected})",
                self.chunk_count, self.original_byte_length
            )));
        }
        if self.n_del as usize >= self.params.symbols_per_chunk() {
            return Err(Error::params(format!(
                "n_del {} must be below n_org {}",
                self.n_del,
                self.params.symbols_per_chunk()
            )));
        }
        Ok(())
    }

    /// Symbols per outsourced base (n_base = n_org - n_del).
    pub fn base_len(&self) -> usize {
        self.params.symbols_per_chunk() - self.n_del as usize
    }

    /// `[u8 mac_kind][tag][u32 chunk_count][u64 length][u32 chunk_bits][u8 q][u32 n_del]`,
    /// little-endian.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        self.file_tag.encode_into(out);
        out.extend_from_slice(&self.chunk_count.to_le_bytes());
        out.extend_from_slice(&self.original_byte_length.to_le_bytes());
        out.extend_from_slice(&self.params.chunk_bits.to_le_bytes());
        out.push(self.params.symbol_bits);
        out.extend_from_slice(&self.n_del.to_le_bytes());
    }

    pub fn decode(r: &mut ByteReader<'_>) -> Result<Self> {
        let file_tag = FileTag::decode(r)?;
        let m = Self {
            file_tag,
            chunk_count: r.u32_le()?,
            original_byte_length: r.u64_le()?,
            params: ChunkingParams {
                chunk_bits: r.u32_le()?,
                symbol_bits: r.u8()?,
            },
            n_del: r.u32_le()?,
        };
        m.validate().map_err(|e| Error::malformed(e.to_string()))?;
        Ok(m)
    }
}

/// Splits `data` into chunks of `params.chunk_bits` bits. Bits are read
/// MSB-first; the last chunk is zero-padded. Empty input yields no chunks.
pub fn chunk_file(data: &[u8], params: ChunkingParams) -> Result<Vec<SymbolString>> {
    params.validate()?;
    let n_org = params.symbols_per_chunk();
    let count = params.chunk_count(data.len() as u64) as usize;
    let all = unpack_symbols(data, count * n_org, params.symbol_bits);
    Ok(all
        .chunks(n_org)
        .map(|c| SymbolString::from_trusted(c.to_vec(), params.symbol_bits))
        .collect())
}

/// Inverse of [`chunk_file`]. Padding bits past the original length must be
/// zero, so tampering with them is reported rather than silently dropped.
pub fn assemble_file(chunks: &[SymbolString], manifest: &FileManifest) -> Result<Vec<u8>> {
    manifest.validate()?;
    if chunks.len() != manifest.chunk_count as usize {
        return Err(Error::LengthMismatch {
            expected: manifest.chunk_count as usize,
            actual: chunks.len(),
        });
    }
    let q = manifest.params.symbol_bits;
    let n_org = manifest.params.symbols_per_chunk();
    let mut symbols = Vec::with_capacity(chunks.len() * n_org);
    for c in chunks {
        if c.q() != q {
            return Err(Error::params(format!(
                "chunk symbol width {} differs from manifest {q}",
                c.q()
            )));
        }
        if c.len() != n_org {
            return Err(Error::LengthMismatch {
                expected: n_org,
                actual: c.len(),
            });
        }
        symbols.extend_from_slice(c.symbols());
    }
    let mut bytes = pack_symbols(&symbols, q);
    let len = manifest.original_byte_length as usize;
    if bytes[len..].iter().any(|&b| b != 0) {
        return Err(Error::params("nonzero padding after end of file"));
    }
    bytes.truncate(len);
    Ok(bytes)
}
