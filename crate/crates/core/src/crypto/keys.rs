use rand::{CryptoRng, RngCore};

use crate::crypto::MacKind;
use crate::{Error, Result};

/// HMAC key (k_h); its length matches the MAC output.
#[derive(Clone, PartialEq, Eq)]
pub struct MacKey {
    kind: MacKind,
    bytes: Vec<u8>,
}

impl MacKey {
    pub fn new(kind: MacKind, bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() != kind.key_len() {
            return Err(Error::params(format!(
                "{kind:?} key must be {} bits, got {}",
                kind.key_len() * 8,
                bytes.len() * 8
            )));
        }
        Ok(Self { kind, bytes })
    }

    pub fn kind(&self) -> MacKind {
        self.kind
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bit_len(&self) -> u64 {
        self.bytes.len() as u64 * 8
    }
}

/// AES-GCM key (k_e): 128 or 256 bits.
#[derive(Clone, PartialEq, Eq)]
pub struct EncKey(Vec<u8>);

impl EncKey {
    pub fn new(bytes: Vec<u8>) -> Result<Self> {
        match bytes.len() {
            16 | 32 => Ok(Self(bytes)),
            n => Err(Error::params(format!(
                "encryption key must be 128 or 256 bits, got {}",
                n * 8
            ))),
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn bit_len(&self) -> u64 {
        self.0.len() as u64 * 8
    }
}

impl std::fmt::Debug for MacKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MacKey({:?}, <{} bits>)", self.kind, self.bit_len())
    }
}

impl std::fmt::Debug for EncKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "EncKey(<{} bits>)", self.bit_len())
    }
}

/// The two per-file secrets a sender keeps and later shares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    pub mac_key: MacKey,
    pub enc_key: EncKey,
}

impl KeyMaterial {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R, mac: MacKind, enc_bits: u32) -> Result<Self> {
        if enc_bits != 128 && enc_bits != 256 {
            return Err(Error::params(format!("unsupported key size {enc_bits}")));
        }
        let mut mk = vec![0u8; mac.key_len()];
        rng.fill_bytes(&mut mk);
        let mut ek = vec![0u8; enc_bits as usize / 8];
        rng.fill_bytes(&mut ek);
        Ok(Self {
            mac_key: MacKey::new(mac, mk)?,
            enc_key: EncKey::new(ek)?,
        })
    }
}
