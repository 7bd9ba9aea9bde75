//! Deterministic byte stream keyed by a short seed.
//!
//! Construction: `key = SHA-256(PRNG_DOMAIN || seed)`, then the ChaCha20
//! keystream under that key with an all-zero 96-bit nonce and block counter
//! starting at 0. Fixture vectors live in `tests/fixtures/prng_vectors.txt`.

use chacha20::cipher::{KeyIvInit, StreamCipher};
use chacha20::ChaCha20;
use sha2::{Digest, Sha256};

pub const PRNG_DOMAIN: &[u8] = b"bifrost/prng/v1";

/// A source of uniformly distributed bytes.
pub trait ByteSource {
    fn next_byte(&mut self) -> u8;

    /// Uniform integer in `0..range` by rejection sampling over the fewest
    /// whole bytes that cover `range`, read big-endian. Draws at or above the
    /// largest multiple of `range` that fits in those bytes are discarded.
    fn uniform_int(&mut self, range: u32) -> u32 {
        assert!(range > 0, "uniform_int over an empty range");
        if range == 1 {
            return 0;
        }
        let width = (32 - (range - 1).leading_zeros()).div_ceil(8);
        let space = 1u64 << (8 * width);
        let zone = space - space % u64::from(range);
        loop {
            let mut x = 0u64;
            for _ in 0..width {
                x = (x << 8) | u64::from(self.next_byte());
            }
            if x < zone {
                return (x % u64::from(range)) as u32;
            }
        }
    }
}

/// Supplies indices below a bound. Deletion positions are drawn through
/// this so tests can script them.
pub trait IndexSource {
    fn next_index(&mut self, bound: u32) -> u32;
}

pub struct PrngStream {
    cipher: ChaCha20,
    block: [u8; 64],
    used: usize,
}

/// Opens the deterministic stream for `seed`.
pub fn prng_stream(seed: &[u8]) -> PrngStream {
    let mut h = Sha256::new();
    h.update(PRNG_DOMAIN);
    h.update(seed);
    let key = h.finalize();
    PrngStream {
        cipher: ChaCha20::new(&key, &[0u8; 12].into()),
        block: [0; 64],
        used: 64,
    }
}

impl PrngStream {
    pub fn fill_bytes(&mut self, out: &mut [u8]) {
        for b in out {
            *b = self.next_byte();
        }
    }
}

impl ByteSource for PrngStream {
    fn next_byte(&mut self) -> u8 {
        if self.used == self.block.len() {
            self.block = [0; 64];
            self.cipher.apply_keystream(&mut self.block);
            self.used = 0;
        }
        let b = self.block[self.used];
        self.used += 1;
        b
    }
}

impl IndexSource for PrngStream {
    fn next_index(&mut self, bound: u32) -> u32 {
        self.uniform_int(bound)
    }
}

impl std::fmt::Debug for PrngStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrngStream").finish_non_exhaustive()
    }
}
