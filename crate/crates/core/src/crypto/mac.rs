use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::{Sha256, Sha512};

use crate::bits::ByteReader;
use crate::crypto::MacKey;
use crate::{Error, Result};

/// HMAC flavour. The key is as long as the tag: 256 or 512 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MacKind {
    #[serde(rename = "hmac-sha256")]
    HmacSha256,
    #[serde(rename = "hmac-sha512")]
    HmacSha512,
}

impl MacKind {
    pub fn code(self) -> u8 {
        match self {
            MacKind::HmacSha256 => 1,
            MacKind::HmacSha512 => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(MacKind::HmacSha256),
            2 => Ok(MacKind::HmacSha512),
            other => Err(Error::malformed(format!("unknown mac kind {other}"))),
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            256 => Ok(MacKind::HmacSha256),
            512 => Ok(MacKind::HmacSha512),
            other => Err(Error::params(format!("unsupported MAC size {other} bits"))),
        }
    }

    pub fn tag_len(self) -> usize {
        match self {
            MacKind::HmacSha256 => 32,
            MacKind::HmacSha512 => 64,
        }
    }

    pub fn key_len(self) -> usize {
        self.tag_len()
    }

    pub fn bits(self) -> u32 {
        self.tag_len() as u32 * 8
    }
}

/// A file's MAC, which doubles as its identifier on the cloud.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FileTag {
    kind: MacKind,
    bytes: Vec<u8>,
}

impl FileTag {
    pub fn new(kind: MacKind, bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() != kind.tag_len() {
            return Err(Error::LengthMismatch {
                expected: kind.tag_len(),
                actual: bytes.len(),
            });
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

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    /// Parses a hex tag; the kind follows from its length.
    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::malformed(format!("tag hex: {e}")))?;
        let kind = match bytes.len() {
            32 => MacKind::HmacSha256,
            64 => MacKind::HmacSha512,
            n => return Err(Error::malformed(format!("tag of {n} bytes"))),
        };
        Self::new(kind, bytes)
    }

    /// `[u8 mac_kind][tag bytes]`.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.kind.code());
        out.extend_from_slice(&self.bytes);
    }

    pub fn decode(r: &mut ByteReader<'_>) -> Result<Self> {
        let kind = MacKind::from_code(r.u8()?)?;
        let bytes = r.take(kind.tag_len())?.to_vec();
        Self::new(kind, bytes)
    }
}

impl std::fmt::Debug for FileTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FileTag({})", self.to_hex())
    }
}

impl std::fmt::Display for FileTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

pub fn mac_tag(key: &MacKey, message: &[u8]) -> FileTag {
    let bytes = match key.kind() {
        MacKind::HmacSha256 => {
            let mut m = Hmac::<Sha256>::new_from_slice(key.as_bytes()).expect("hmac accepts any key");
            m.update(message);
            m.finalize().into_bytes().to_vec()
        }
        MacKind::HmacSha512 => {
            let mut m = Hmac::<Sha512>::new_from_slice(key.as_bytes()).expect("hmac accepts any key");
            m.update(message);
            m.finalize().into_bytes().to_vec()
        }
    };
    FileTag {
        kind: key.kind(),
        bytes,
    }
}

/// Constant-time check that `tag` is the MAC of `message` under `key`.
pub fn mac_verify(key: &MacKey, message: &[u8], tag: &FileTag) -> bool {
    if tag.kind != key.kind() {
        return false;
    }
    match key.kind() {
        MacKind::HmacSha256 => {
            let mut m = Hmac::<Sha256>::new_from_slice(key.as_bytes()).expect("hmac accepts any key");
            m.update(message);
            m.verify_slice(&tag.bytes).is_ok()
        }
        MacKind::HmacSha512 => {
            let mut m = Hmac::<Sha512>::new_from_slice(key.as_bytes()).expect("hmac accepts any key");
            m.update(message);
            m.verify_slice(&tag.bytes).is_ok()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_bit_message_change_changes_tag() {
        let key = MacKey::new(MacKind::HmacSha256, vec![7; 32]).unwrap();
        let a = mac_tag(&key, b"hello world");
        assert_eq!(a, mac_tag(&key, b"hello world"));
        assert_ne!(a, mac_tag(&key, b"hello worle"));
    }

    #[test]
    fn verify_rejects_flipped_tags_messages_and_keys() {
        let key = MacKey::new(MacKind::HmacSha512, vec![3; 64]).unwrap();
        let msg = b"sixteen byte msg";
        let tag = mac_tag(&key, msg);
        assert!(mac_verify(&key, msg, &tag));
        for bit in 0..tag.bytes.len() * 8 {
            let mut t = tag.clone();
            t.bytes[bit / 8] ^= 1 << (bit % 8);
            assert!(!mac_verify(&key, msg, &t));
        }
        for bit in 0..msg.len() * 8 {
            let mut m = msg.to_vec();
            m[bit / 8] ^= 1 << (bit % 8);
            assert!(!mac_verify(&key, &m, &tag));
        }
        let other = MacKey::new(MacKind::HmacSha512, vec![4; 64]).unwrap();
        assert!(!mac_verify(&other, msg, &tag));
    }

    #[test]
    fn tag_codec_and_hex() {
        let tag = FileTag::new(MacKind::HmacSha256, (0..32).collect()).unwrap();
        let mut buf = Vec::new();
        tag.encode_into(&mut buf);
        assert_eq!(buf.len(), 33);
        let back = FileTag::decode(&mut ByteReader::new(&buf)).unwrap();
        assert_eq!(back, tag);
        assert_eq!(FileTag::from_hex(&tag.to_hex()).unwrap(), tag);
        assert!(FileTag::new(MacKind::HmacSha512, vec![0; 32]).is_err());
    }
}
