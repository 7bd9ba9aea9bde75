//! AES-GCM sealing of deviations, with an optional zero pad to 128-bit
//! blocks that mimics block-cipher storage overhead.

use std::sync::atomic::{AtomicU64, Ordering};

use aes_gcm::aead::AeadInPlace;
use aes_gcm::{Aes128Gcm, Aes256Gcm, KeyInit, Nonce, Tag};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::bits::ByteReader;
use crate::crypto::EncKey;
use crate::{Error, Result};

pub const NONCE_BYTES: usize = 12;
pub const AUTH_TAG_BYTES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Padding {
    #[default]
    #[serde(rename = "none")]
    None,
    /// Zero-fill the plaintext up to a multiple of 128 bits. Plaintexts that
    /// are already aligned are not extended; readers know the true length
    /// from the manifest.
    #[serde(rename = "block128")]
    Block128,
}

impl Padding {
    pub fn block_bits(self) -> u32 {
        match self {
            Padding::None => 0,
            Padding::Block128 => 128,
        }
    }
}

pub fn padded_len(len: usize, padding: Padding) -> usize {
    match padding {
        Padding::None => len,
        Padding::Block128 => len.div_ceil(16) * 16,
    }
}

/// An encrypted deviation as stored by the cloud.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedDeviation {
    pub nonce: Vec<u8>,
    pub ciphertext: Vec<u8>,
    pub auth_tag: Vec<u8>,
}

impl EncryptedDeviation {
    /// Nonce, ciphertext and tag together; length prefixes excluded.
    pub fn stored_size_bits(&self) -> u64 {
        8 * (self.nonce.len() + self.ciphertext.len() + self.auth_tag.len()) as u64
    }

    /// `nonce || ciphertext || auth_tag`, each behind a big-endian u16 length.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        for field in [&self.nonce, &self.ciphertext, &self.auth_tag] {
            let len = u16::try_from(field.len()).expect("deviation field fits u16");
            out.extend_from_slice(&len.to_be_bytes());
            out.extend_from_slice(field);
        }
    }

    pub fn to_wire(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    pub fn decode(r: &mut ByteReader<'_>) -> Result<Self> {
        let mut field = || -> Result<Vec<u8>> {
            let len = r.u16_be()? as usize;
            Ok(r.take(len)?.to_vec())
        };
        Ok(Self {
            nonce: field()?,
            ciphertext: field()?,
            auth_tag: field()?,
        })
    }
}

/// Nonce supply. Implementations must never hand out the same nonce twice,
/// including under concurrent callers.
pub trait NonceSource: Send + Sync {
    fn next_nonce(&self) -> [u8; NONCE_BYTES];
}

/// Random 32-bit prefix followed by a 64-bit atomic counter.
#[derive(Debug)]
pub struct CounterNonces {
    prefix: [u8; 4],
    counter: AtomicU64,
}

impl CounterNonces {
    pub fn new() -> Self {
        let mut prefix = [0u8; 4];
        rand::rngs::OsRng.fill_bytes(&mut prefix);
        Self::with_prefix(prefix)
    }

    pub fn with_prefix(prefix: [u8; 4]) -> Self {
        Self {
            prefix,
            counter: AtomicU64::new(0),
        }
    }
}

impl Default for CounterNonces {
    fn default() -> Self {
        Self::new()
    }
}

impl NonceSource for CounterNonces {
    fn next_nonce(&self) -> [u8; NONCE_BYTES] {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        assert!(n != u64::MAX, "nonce counter exhausted");
        let mut out = [0u8; NONCE_BYTES];
        out[..4].copy_from_slice(&self.prefix);
        out[4..].copy_from_slice(&n.to_be_bytes());
        out
    }
}

/// 96 bits from the OS RNG per call.
#[derive(Debug, Default, Clone, Copy)]
pub struct RandomNonces;

impl NonceSource for RandomNonces {
    fn next_nonce(&self) -> [u8; NONCE_BYTES] {
        let mut out = [0u8; NONCE_BYTES];
        rand::rngs::OsRng.fill_bytes(&mut out);
        out
    }
}

pub fn encrypt(
    key: &EncKey,
    plaintext: &[u8],
    padding: Padding,
    aad: &[u8],
    nonces: &dyn NonceSource,
) -> Result<EncryptedDeviation> {
    let nonce = nonces.next_nonce();
    let mut buf = plaintext.to_vec();
    buf.resize(padded_len(plaintext.len(), padding), 0);
    let tag = match key.as_bytes().len() {
        16 => Aes128Gcm::new_from_slice(key.as_bytes())
            .expect("checked key size")
            .encrypt_in_place_detached(Nonce::from_slice(&nonce), aad, &mut buf),
        _ => Aes256Gcm::new_from_slice(key.as_bytes())
            .expect("checked key size")
            .encrypt_in_place_detached(Nonce::from_slice(&nonce), aad, &mut buf),
    }
    .map_err(|_| Error::params("plaintext too long for AES-GCM"))?;
    Ok(EncryptedDeviation {
        nonce: nonce.to_vec(),
        ciphertext: buf,
        auth_tag: tag.to_vec(),
    })
}

/// Returns the (possibly padded) plaintext, or [`Error::Authentication`] if
/// anything about the ciphertext, nonce, tag, key or `aad` is off.
pub fn decrypt(key: &EncKey, enc: &EncryptedDeviation, aad: &[u8]) -> Result<Vec<u8>> {
    if enc.nonce.len() != NONCE_BYTES || enc.auth_tag.len() != AUTH_TAG_BYTES {
        return Err(Error::Authentication);
    }
    let nonce = Nonce::from_slice(&enc.nonce);
    let tag = Tag::from_slice(&enc.auth_tag);
    let mut buf = enc.ciphertext.clone();
    match key.as_bytes().len() {
        16 => Aes128Gcm::new_from_slice(key.as_bytes())
            .expect("checked key size")
            .decrypt_in_place_detached(nonce, aad, &mut buf, tag),
        _ => Aes256Gcm::new_from_slice(key.as_bytes())
            .expect("checked key size")
            .decrypt_in_place_detached(nonce, aad, &mut buf, tag),
    }
    .map_err(|_| Error::Authentication)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key128() -> EncKey {
        EncKey::new(vec![0x42; 16]).unwrap()
    }

    #[test]
    fn roundtrip_128_bit_plaintext() {
        let p: Vec<u8> = (0..16).collect();
        let enc = encrypt(&key128(), &p, Padding::None, b"ad", &RandomNonces).unwrap();
        assert_eq!(decrypt(&key128(), &enc, b"ad").unwrap(), p);
        assert_eq!(enc.stored_size_bits(), (12 + 16 + 16) * 8);
    }

    #[test]
    fn padding_boundaries() {
        let size = |bits: usize| {
            let p = vec![1u8; bits / 8];
            encrypt(&key128(), &p, Padding::Block128, b"", &RandomNonces)
                .unwrap()
                .ciphertext
                .len()
        };
        for bits in (40..=128).step_by(8) {
            assert_eq!(size(bits), 16, "s_dev = {bits}");
        }
        assert_eq!(size(136), 32);
    }

    #[test]
    fn every_single_bit_flip_is_rejected() {
        let key = EncKey::new(vec![9; 32]).unwrap();
        let enc = encrypt(&key, b"deviation", Padding::None, b"x", &RandomNonces).unwrap();
        fn field(e: &mut EncryptedDeviation, f: usize) -> &mut Vec<u8> {
            match f {
                0 => &mut e.nonce,
                1 => &mut e.ciphertext,
                _ => &mut e.auth_tag,
            }
        }
        for f in 0..3 {
            let len = field(&mut enc.clone(), f).len();
            for bit in 0..len * 8 {
                let mut e = enc.clone();
                field(&mut e, f)[bit / 8] ^= 1 << (bit % 8);
                assert!(matches!(decrypt(&key, &e, b"x"), Err(Error::Authentication)));
            }
        }
        assert!(decrypt(&EncKey::new(vec![8; 32]).unwrap(), &enc, b"x").is_err());
        assert!(decrypt(&key, &enc, b"y").is_err());
    }

    #[test]
    fn counter_nonces_are_unique_across_threads() {
        let src = std::sync::Arc::new(CounterNonces::with_prefix([1, 2, 3, 4]));
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let s = src.clone();
                std::thread::spawn(move || (0..1000).map(|_| s.next_nonce()).collect::<Vec<_>>())
            })
            .collect();
        let mut all: Vec<_> = handles.into_iter().flat_map(|h| h.join().unwrap()).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 4000);
    }

    #[test]
    fn wire_layout_uses_big_endian_lengths() {
        let enc = EncryptedDeviation {
            nonce: vec![1; 12],
            ciphertext: vec![2; 3],
            auth_tag: vec![3; 16],
        };
        let w = enc.to_wire();
        assert_eq!(&w[..2], &[0, 12]);
        assert_eq!(&w[14..16], &[0, 3]);
        let mut r = ByteReader::new(&w);
        assert_eq!(EncryptedDeviation::decode(&mut r).unwrap(), enc);
        r.finish().unwrap();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn roundtrip_up_to_large_sizes(len in prop_oneof![0usize..64, Just(1 << 20)], byte in any::<u8>()) {
            let p = vec![byte; len];
            let enc = encrypt(&key128(), &p, Padding::None, b"", &RandomNonces).unwrap();
            prop_assert_eq!(decrypt(&key128(), &enc, b"").unwrap(), p.clone());
            let padded = encrypt(&key128(), &p, Padding::Block128, b"", &RandomNonces).unwrap();
            let out = decrypt(&key128(), &padded, b"").unwrap();
            prop_assert_eq!(&out[..len], &p[..]);
            prop_assert!(out[len..].iter().all(|&b| b == 0));
        }
    }
}
