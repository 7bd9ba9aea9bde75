//! Client-side deletion transform.
//!
//! A chunk of `n_org` symbols loses `n_del` of them at distinct positions
//! drawn from a PRNG seeded with a 32-bit [`Seed`]. Positions index the
//! original chunk and are removed simultaneously. The shortened chunk (the
//! outsource piece, or base) goes to the cloud; the seed and the removed
//! values, in draw order, form the [`DeletionDeviation`] that stays secret.

use crate::bits::{pack_symbols, packed_len, unpack_symbols};
use crate::chunk::SymbolString;
use crate::crypto::{padded_len, prng_stream, IndexSource, Padding, PrngStream};
use crate::{Error, Result};

pub const SEED_BYTES: usize = 4;
pub const SEED_BITS: u32 = 8 * SEED_BYTES as u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub [u8; SEED_BYTES]);

/// Maps a seed to an index stream. Production code uses [`ChaChaPositions`].
pub trait PositionPrng {
    type Stream: IndexSource;
    fn stream(&self, seed: &Seed) -> Self::Stream;
}

/// The ChaCha20-backed stream from [`crate::crypto::prng_stream`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ChaChaPositions;

impl PositionPrng for ChaChaPositions {
    type Stream = PrngStream;

    fn stream(&self, seed: &Seed) -> PrngStream {
        prng_stream(&seed.0)
    }
}

/// `n_del` distinct indices below `n_org`, in draw order. Out-of-range and
/// repeated draws are skipped.
pub fn derive_positions<P: PositionPrng>(
    prng: &P,
    seed: &Seed,
    n_org: usize,
    n_del: usize,
) -> Result<Vec<usize>> {
    if n_del >= n_org {
        return Err(Error::params(format!(
            "n_del {n_del} must be below n_org {n_org}"
        )));
    }
    let bound = u32::try_from(n_org).map_err(|_| Error::params("chunk too long"))?;
    let mut stream = prng.stream(seed);
    let mut taken = vec![false; n_org];
    let mut out = Vec::with_capacity(n_del);
    while out.len() < n_del {
        let p = stream.next_index(bound) as usize;
        if p < n_org && !taken[p] {
            taken[p] = true;
            out.push(p);
        }
    }
    Ok(out)
}

/// The client's secret for one chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeletionDeviation {
    pub seed: Seed,
    /// Deleted symbols, in the order their positions were drawn.
    pub deleted_values: Vec<u16>,
}

impl DeletionDeviation {
    /// s_dev = seed bits + n_del * q.
    pub fn plaintext_bits(&self, q: u8) -> u64 {
        u64::from(SEED_BITS) + self.deleted_values.len() as u64 * u64::from(q)
    }

    /// Seed bytes, then the values packed big-endian at `q` bits each. No
    /// length prefix: the reader knows `n_del` from the manifest.
    pub fn to_plaintext(&self, q: u8) -> Vec<u8> {
        let mut out = self.seed.0.to_vec();
        out.extend(pack_symbols(&self.deleted_values, q));
        out
    }

    pub fn plaintext_len(n_del: usize, q: u8) -> usize {
        SEED_BYTES + packed_len(n_del, q)
    }

    /// Parses [`Self::to_plaintext`] output, tolerating zero fill up to the
    /// next 128-bit boundary.
    pub fn from_plaintext(bytes: &[u8], n_del: usize, q: u8) -> Result<Self> {
        let exact = Self::plaintext_len(n_del, q);
        if bytes.len() < exact || bytes.len() > padded_len(exact, Padding::Block128) {
            return Err(Error::LengthMismatch {
                expected: exact,
                actual: bytes.len(),
            });
        }
        if bytes[exact..].iter().any(|&b| b != 0) {
            return Err(Error::malformed("nonzero deviation padding"));
        }
        let mut seed = [0u8; SEED_BYTES];
        seed.copy_from_slice(&bytes[..SEED_BYTES]);
        let packed = &bytes[SEED_BYTES..exact];
        let deleted_values = unpack_symbols(packed, n_del, q);
        if pack_symbols(&deleted_values, q) != packed {
            return Err(Error::malformed("nonzero fill bits in deviation"));
        }
        Ok(Self {
            seed: Seed(seed),
            deleted_values,
        })
    }
}

/// The punctured chunk sent to the cloud.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutsourcePiece {
    pub base: SymbolString,
}

pub fn delete_transform<P: PositionPrng>(
    prng: &P,
    chunk: &SymbolString,
    seed: Seed,
    n_del: usize,
) -> Result<(OutsourcePiece, DeletionDeviation)> {
    let positions = derive_positions(prng, &seed, chunk.len(), n_del)?;
    let symbols = chunk.symbols();
    let deleted_values = positions.iter().map(|&p| symbols[p]).collect();
    let mut keep = vec![true; symbols.len()];
    for &p in &positions {
        keep[p] = false;
    }
    let base = symbols
        .iter()
        .zip(&keep)
        .filter_map(|(&s, &k)| k.then_some(s))
        .collect();
    Ok((
        OutsourcePiece {
            base: SymbolString::from_trusted(base, chunk.q()),
        },
        DeletionDeviation {
            seed,
            deleted_values,
        },
    ))
}

/// Inverse of [`delete_transform`].
pub fn reinsert<P: PositionPrng>(
    prng: &P,
    piece: &OutsourcePiece,
    dev: &DeletionDeviation,
    n_org: usize,
) -> Result<SymbolString> {
    let n_del = dev.deleted_values.len();
    if piece.base.len() + n_del != n_org {
        return Err(Error::LengthMismatch {
            expected: n_org,
            actual: piece.base.len() + n_del,
        });
    }
    let q = piece.base.q();
    if dev.deleted_values.iter().any(|&v| u32::from(v) >= 1 << q) {
        return Err(Error::params("deviation value wider than the symbol size"));
    }
    let positions = derive_positions(prng, &dev.seed, n_org, n_del)?;
    let mut pairs: Vec<(usize, u16)> = positions
        .into_iter()
        .zip(dev.deleted_values.iter().copied())
        .collect();
    pairs.sort_unstable_by_key(|&(p, _)| p);

    let mut out = Vec::with_capacity(n_org);
    let mut rest = piece.base.symbols().iter();
    let mut pending = pairs.into_iter().peekable();
    for i in 0..n_org {
        match pending.peek() {
            Some(&(p, v)) if p == i => {
                out.push(v);
                pending.next();
            }
            _ => out.push(*rest.next().expect("lengths checked above")),
        }
    }
    Ok(SymbolString::from_trusted(out, q))
}
