//! Cryptographic building blocks: the seeded position PRNG, HMAC file tags
//! and AES-GCM encryption of deviations.

mod aead;
mod keys;
mod mac;
mod prng;

pub use aead::{
    decrypt, encrypt, padded_len, CounterNonces, EncryptedDeviation, NonceSource, Padding,
    RandomNonces, AUTH_TAG_BYTES, NONCE_BYTES,
};
pub use keys::{EncKey, KeyMaterial, MacKey};
pub use mac::{mac_tag, mac_verify, FileTag, MacKind};
pub use prng::{prng_stream, ByteSource, IndexSource, PrngStream, PRNG_DOMAIN};
