//! Client/cloud wire format.
//!
//! Frame: `[u32 frame_len][u8 version = 1][u8 kind][body]`, where
//! `frame_len` counts every byte after itself. Integers are little-endian;
//! encrypted deviations keep their own big-endian field lengths.
//!
//! Bodies:
//! - `UPLOAD`, `OBJECT`: `[manifest][u32 n]{[u32 symbols][packed]}[u32 m]{deviation}`
//! - `DOWNLOAD`, `UPLOAD_OK`: `[u8 mac_kind][tag]`
//! - `ERROR`: `[u16 code][u32 len][utf-8 message]`

use std::io::{self, Read, Write};

use crate::bits::{packed_len, ByteReader};
use crate::chunk::{FileManifest, SymbolString};
use crate::crypto::{EncryptedDeviation, FileTag};
use crate::store::ObjectPayload;
use crate::transform::OutsourcePiece;
use crate::{Error, Result};

pub const PROTOCOL_VERSION: u8 = 1;
/// Frames above this size are refused before allocation.
pub const MAX_FRAME_LEN: u32 = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MessageKind {
    Upload = 1,
    Download = 2,
    UploadOk = 3,
    Object = 4,
    Error = 5,
}

impl MessageKind {
    fn from_u8(v: u8) -> Result<Self> {
        Ok(match v {
            1 => MessageKind::Upload,
            2 => MessageKind::Download,
            3 => MessageKind::UploadOk,
            4 => MessageKind::Object,
            5 => MessageKind::Error,
            other => return Err(Error::malformed(format!("unknown message kind {other}"))),
        })
    }
}

pub mod error_code {
    pub const MALFORMED: u16 = 1;
    pub const NOT_FOUND: u16 = 2;
    pub const CONFLICT: u16 = 3;
    pub const INVALID: u16 = 4;
    pub const INTERNAL: u16 = 5;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WireMessage {
    Upload(ObjectPayload),
    Download(FileTag),
    UploadOk(FileTag),
    Object(ObjectPayload),
    Error { code: u16, message: String },
}

impl WireMessage {
    pub fn kind(&self) -> MessageKind {
        match self {
            WireMessage::Upload(_) => MessageKind::Upload,
            WireMessage::Download(_) => MessageKind::Download,
            WireMessage::UploadOk(_) => MessageKind::UploadOk,
            WireMessage::Object(_) => MessageKind::Object,
            WireMessage::Error { .. } => MessageKind::Error,
        }
    }

    /// Full frame including the length prefix.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![0, 0, 0, 0, PROTOCOL_VERSION, self.kind() as u8];
        match self {
            WireMessage::Upload(obj) | WireMessage::Object(obj) => encode_object(obj, &mut out),
            WireMessage::Download(tag) | WireMessage::UploadOk(tag) => tag.encode_into(&mut out),
            WireMessage::Error { code, message } => {
                out.extend_from_slice(&code.to_le_bytes());
                out.extend_from_slice(&(message.len() as u32).to_le_bytes());
                out.extend_from_slice(message.as_bytes());
            }
        }
        let len = (out.len() - 4) as u32;
        out[..4].copy_from_slice(&len.to_le_bytes());
        out
    }

    /// Decodes a full frame, length prefix included.
    pub fn decode(frame: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(frame);
        let len = r.u32_le()? as usize;
        if len != r.remaining() {
            return Err(Error::malformed(format!(
                "frame length {len} but {} bytes follow",
                r.remaining()
            )));
        }
        Self::decode_body(r.take(len)?)
    }

    /// Decodes what follows the length prefix.
    pub fn decode_body(body: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(body);
        let version = r.u8()?;
        if version != PROTOCOL_VERSION {
            return Err(Error::malformed(format!("protocol version {version}")));
        }
        let msg = match MessageKind::from_u8(r.u8()?)? {
            MessageKind::Upload => WireMessage::Upload(decode_object(&mut r)?),
            MessageKind::Object => WireMessage::Object(decode_object(&mut r)?),
            MessageKind::Download => WireMessage::Download(FileTag::decode(&mut r)?),
            MessageKind::UploadOk => WireMessage::UploadOk(FileTag::decode(&mut r)?),
            MessageKind::Error => {
                let code = r.u16_le()?;
                let len = r.u32_le()? as usize;
                let message = String::from_utf8(r.take(len)?.to_vec())
                    .map_err(|_| Error::malformed("error message is not utf-8"))?;
                WireMessage::Error { code, message }
            }
        };
        r.finish()?;
        Ok(msg)
    }

    /// Wire form of a service-side failure.
    pub fn from_error(e: &Error) -> Self {
        let code = match e {
            Error::Malformed(_) => error_code::MALFORMED,
            Error::NotFound(_) => error_code::NOT_FOUND,
            Error::Conflict(_) => error_code::CONFLICT,
            Error::InvalidParams(_) | Error::LengthMismatch { .. } => error_code::INVALID,
            _ => error_code::INTERNAL,
        };
        let message = match e {
            Error::NotFound(t) | Error::Conflict(t) => t.clone(),
            other => other.to_string(),
        };
        WireMessage::Error { code, message }
    }

    /// Client-side error for an `ERROR` reply.
    pub fn into_error(code: u16, message: String) -> Error {
        match code {
            error_code::NOT_FOUND => Error::NotFound(message),
            error_code::CONFLICT => Error::Conflict(message),
            _ => Error::Remote { code, message },
        }
    }
}

fn encode_object(obj: &ObjectPayload, out: &mut Vec<u8>) {
    obj.manifest.encode_into(out);
    out.extend_from_slice(&(obj.pieces.len() as u32).to_le_bytes());
    for p in &obj.pieces {
        out.extend_from_slice(&(p.base.len() as u32).to_le_bytes());
        out.extend_from_slice(&p.base.pack());
    }
    out.extend_from_slice(&(obj.enc_locals.len() as u32).to_le_bytes());
    for e in &obj.enc_locals {
        e.encode_into(out);
    }
}

fn decode_object(r: &mut ByteReader<'_>) -> Result<ObjectPayload> {
    let manifest = FileManifest::decode(r)?;
    let q = manifest.params.symbol_bits;
    let n = r.u32_le()? as usize;
    if n > r.remaining() / 4 {
        return Err(Error::malformed("piece count exceeds frame"));
    }
    let mut pieces = Vec::with_capacity(n);
    for _ in 0..n {
        let count = r.u32_le()? as usize;
        if count > r.remaining() * 8 {
            return Err(Error::malformed("piece length exceeds frame"));
        }
        let bytes = r.take(packed_len(count, q))?;
        pieces.push(OutsourcePiece {
            base: SymbolString::unpack(bytes, count, q)?,
        });
    }
    let m = r.u32_le()? as usize;
    if m > r.remaining() / 6 {
        return Err(Error::malformed("deviation count exceeds frame"));
    }
    let enc_locals = (0..m)
        .map(|_| EncryptedDeviation::decode(r))
        .collect::<Result<_>>()?;
    Ok(ObjectPayload {
        manifest,
        pieces,
        enc_locals,
    })
}

pub fn write_message<W: Write>(w: &mut W, msg: &WireMessage) -> io::Result<()> {
    w.write_all(&msg.encode())?;
    w.flush()
}

/// Reads one frame. `Ok(None)` on a clean end of stream before any byte.
pub fn read_message<R: Read>(r: &mut R) -> Result<Option<WireMessage>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_le_bytes(len);
    if len > MAX_FRAME_LEN {
        return Err(Error::malformed(format!("frame of {len} bytes exceeds limit")));
    }
    let mut body = vec![0u8; len as usize];
    r.read_exact(&mut body)?;
    WireMessage::decode_body(&body).map(Some)
}
