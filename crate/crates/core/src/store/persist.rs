//! On-disk layout.
//!
//! `bases.log`: 8-byte magic, then `[u32 record_len][record]` frames.
//! Record type byte: 0 unique base `[u8 q][u32 n][packed symbols]`,
//! 1 deduplicated base `[u32 base_id][u16 op_count][ops]`, 2 object
//! `[manifest][u32 n][u32 record ids][u32 m][encrypted deviations]`.
//! Base records are numbered in log order; object records take no id.
//!
//! `index.bin`: 8-byte magic, then `[u8 mac_kind][tag][u64 offset]` entries
//! pointing at the frame of each object record.
//!
//! All integers little-endian except the deviation field lengths. A torn
//! frame at the tail of either file is truncated away on open.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::bits::ByteReader;
use crate::chunk::FileManifest;
use crate::crypto::{EncryptedDeviation, FileTag, MacKind};
use crate::store::delta::DeltaOp;
use crate::store::engine::StoredRecord;
use crate::{Error, Result};

pub const LOG_FILE: &str = "bases.log";
pub const INDEX_FILE: &str = "index.bin";
pub const LOG_MAGIC: [u8; 8] = *b"BFRSTLG1";
pub const INDEX_MAGIC: [u8; 8] = *b"BFRSTIX1";

pub const REC_UNIQUE: u8 = 0;
pub const REC_DEDUPED: u8 = 1;
pub const REC_OBJECT: u8 = 2;

#[derive(Debug, Clone)]
pub(crate) struct ObjectRecord {
    pub manifest: FileManifest,
    pub record_ids: Vec<u32>,
    pub enc_locals: Vec<EncryptedDeviation>,
}

#[derive(Debug)]
pub(crate) enum LogRecord {
    Base(StoredRecord),
    Object(ObjectRecord),
}

pub(crate) fn encode_base(rec: &StoredRecord) -> Vec<u8> {
    let mut out = Vec::new();
    match rec {
        StoredRecord::Unique { q, len, packed } => {
            out.push(REC_UNIQUE);
            out.push(*q);
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(packed);
        }
        StoredRecord::Deduped { base_id, delta } => {
            out.push(REC_DEDUPED);
            out.extend_from_slice(&base_id.to_le_bytes());
            let count = u16::try_from(delta.len()).expect("delta bounded by t_max");
            out.extend_from_slice(&count.to_le_bytes());
            for op in delta {
                op.encode_into(&mut out);
            }
        }
    }
    out
}

pub(crate) fn encode_object(obj: &ObjectRecord) -> Vec<u8> {
    let mut out = vec![REC_OBJECT];
    obj.manifest.encode_into(&mut out);
    out.extend_from_slice(&(obj.record_ids.len() as u32).to_le_bytes());
    for id in &obj.record_ids {
        out.extend_from_slice(&id.to_le_bytes());
    }
    out.extend_from_slice(&(obj.enc_locals.len() as u32).to_le_bytes());
    for e in &obj.enc_locals {
        e.encode_into(&mut out);
    }
    out
}

pub(crate) fn decode_record(bytes: &[u8]) -> Result<LogRecord> {
    let mut r = ByteReader::new(bytes);
    let rec = match r.u8()? {
        REC_UNIQUE => {
            let q = r.u8()?;
            let len = r.u32_le()?;
            let packed = r.take(r.remaining())?.to_vec().into_boxed_slice();
            LogRecord::Base(StoredRecord::Unique { q, len, packed })
        }
        REC_DEDUPED => {
            let base_id = r.u32_le()?;
            let count = r.u16_le()?;
            let delta = (0..count)
                .map(|_| DeltaOp::decode(&mut r))
                .collect::<Result<_>>()?;
            LogRecord::Base(StoredRecord::Deduped { base_id, delta })
        }
        REC_OBJECT => {
            let manifest = FileManifest::decode(&mut r)?;
            let n = r.u32_le()? as usize;
            if n > r.remaining() / 4 {
                return Err(Error::malformed("record id count exceeds record"));
            }
            let record_ids = (0..n).map(|_| r.u32_le()).collect::<Result<_>>()?;
            let m = r.u32_le()? as usize;
            if m > r.remaining() / 6 {
                return Err(Error::malformed("deviation count exceeds record"));
            }
            let enc_locals = (0..m)
                .map(|_| EncryptedDeviation::decode(&mut r))
                .collect::<Result<_>>()?;
            LogRecord::Object(ObjectRecord {
                manifest,
                record_ids,
                enc_locals,
            })
        }
        other => return Err(Error::malformed(format!("unknown record type {other}"))),
    };
    r.finish()?;
    Ok(rec)
}

/// Open append handles on the two files.
#[derive(Debug)]
pub(crate) struct LogFiles {
    log: File,
    index: File,
    log_len: u64,
}

/// Everything read back when opening a store directory.
pub(crate) struct Recovered {
    pub files: LogFiles,
    /// (frame offset, decoded record) in log order.
    pub records: Vec<(u64, LogRecord)>,
    pub index: Vec<(FileTag, u64)>,
}

impl LogFiles {
    pub fn open(dir: &Path) -> Result<Recovered> {
        std::fs::create_dir_all(dir)?;
        let mut log = open_rw(&dir.join(LOG_FILE), &LOG_MAGIC)?;
        let mut index = open_rw(&dir.join(INDEX_FILE), &INDEX_MAGIC)?;

        let log_bytes = read_all(&mut log)?;
        let mut records = Vec::new();
        let mut pos = LOG_MAGIC.len();
        while pos < log_bytes.len() {
            if log_bytes.len() - pos < 4 {
                break;
            }
            let len = u32::from_le_bytes(log_bytes[pos..pos + 4].try_into().unwrap()) as usize;
            if log_bytes.len() - pos - 4 < len {
                break;
            }
            let body = &log_bytes[pos + 4..pos + 4 + len];
            let rec = decode_record(body)
                .map_err(|e| Error::corrupt(format!("log record at offset {pos}: {e}")))?;
            records.push((pos as u64, rec));
            pos += 4 + len;
        }
        if pos < log_bytes.len() {
            tracing::warn!(offset = pos, "truncating torn tail of {LOG_FILE}");
            log.set_len(pos as u64)?;
        }
        let log_len = pos as u64;

        let index_bytes = read_all(&mut index)?;
        let mut entries = Vec::new();
        let mut r = ByteReader::new(&index_bytes[INDEX_MAGIC.len()..]);
        let mut good = INDEX_MAGIC.len();
        while r.remaining() > 0 {
            // only a short final entry counts as torn; a bad kind byte is damage
            let kind = MacKind::from_code(index_bytes[good])
                .map_err(|_| Error::corrupt(format!("index entry at offset {good}: bad MAC kind")))?;
            if r.remaining() < 1 + kind.tag_len() + 8 {
                break;
            }
            let tag = FileTag::decode(&mut r)?;
            let offset = r.u64_le()?;
            entries.push((tag, offset));
            good = INDEX_MAGIC.len() + r.position();
        }
        if good < index_bytes.len() {
            tracing::warn!(offset = good, "truncating torn tail of {INDEX_FILE}");
            index.set_len(good as u64)?;
        }

        log.seek(SeekFrom::End(0))?;
        index.seek(SeekFrom::End(0))?;
        Ok(Recovered {
            files: LogFiles { log, index, log_len },
            records,
            index: entries,
        })
    }

    /// Appends framed records in one write and returns their frame offsets.
    pub fn append_records(&mut self, bodies: &[Vec<u8>]) -> Result<Vec<u64>> {
        let mut buf = Vec::new();
        let mut offsets = Vec::with_capacity(bodies.len());
        for b in bodies {
            offsets.push(self.log_len + buf.len() as u64);
            buf.extend_from_slice(&(b.len() as u32).to_le_bytes());
            buf.extend_from_slice(b);
        }
        self.log.write_all(&buf)?;
        self.log.flush()?;
        self.log_len += buf.len() as u64;
        Ok(offsets)
    }

    pub fn append_index(&mut self, tag: &FileTag, offset: u64) -> Result<()> {
        let mut buf = Vec::new();
        tag.encode_into(&mut buf);
        buf.extend_from_slice(&offset.to_le_bytes());
        self.index.write_all(&buf)?;
        self.index.flush()?;
        Ok(())
    }
}

fn open_rw(path: &Path, magic: &[u8; 8]) -> Result<File> {
    let mut f = OpenOptions::new()
        .read(true)
        .write(true)
        .create(true)
        .truncate(false)
        .open(path)?;
    let len = f.metadata()?.len();
    if len < magic.len() as u64 {
        if len != 0 {
            return Err(Error::corrupt(format!("{} shorter than its header", path.display())));
        }
        f.write_all(magic)?;
        f.flush()?;
    } else {
        let mut head = [0u8; 8];
        f.seek(SeekFrom::Start(0))?;
        f.read_exact(&mut head)?;
        if &head != magic {
            return Err(Error::corrupt(format!("bad magic in {}", path.display())));
        }
    }
    Ok(f)
}

fn read_all(f: &mut File) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    f.seek(SeekFrom::Start(0))?;
    f.read_to_end(&mut out)?;
    Ok(out)
}
