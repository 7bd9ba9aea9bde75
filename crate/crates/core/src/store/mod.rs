//! The cloud's object store with generalized deduplication.
//!
//! Incoming bases are matched against stored unique bases: exact copies
//! become a bare pointer, near copies within swap/change distance `t_max`
//! become a pointer plus an edit delta when that is smaller than the base
//! itself, and everything else is stored verbatim. Encrypted deviations and
//! tags are kept as received.

mod delta;
mod engine;
mod persist;

use std::collections::HashMap;
use std::path::Path;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::chunk::{FileManifest, SymbolString};
use crate::crypto::{EncryptedDeviation, FileTag};
use crate::transform::OutsourcePiece;
use crate::{Error, Result};

pub use delta::{
    apply_delta, delta_cost_bits, delta_from_alignment, position_bits, validate_delta, DeltaOp,
};
pub use persist::{
    INDEX_FILE, INDEX_MAGIC, LOG_FILE, LOG_MAGIC, REC_DEDUPED, REC_OBJECT, REC_UNIQUE,
};

use engine::Engine;
use persist::{encode_base, encode_object, LogFiles, LogRecord, ObjectRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreConfig {
    /// Largest swap/change distance considered for a delta; 0 keeps only
    /// exact deduplication.
    pub t_max: u32,
    /// Pointer width charged to every deduplicated record.
    pub pointer_bits: u32,
    /// When set, every base must have this length and symbol width.
    pub base_geometry: Option<(usize, u8)>,
}

impl Default for StoreConfig {
    fn default() -> Self {
        Self {
            t_max: 8,
            pointer_bits: 32,
            base_geometry: None,
        }
    }
}

/// How the cloud represents one ingested base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CloudRecord {
    Unique { base: SymbolString },
    Deduped { base_id: u32, delta: Vec<DeltaOp> },
}

/// Bit accounting over everything the store holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreStats {
    pub unique_records: u64,
    pub dedup_records: u64,
    /// Symbol payload of unique bases.
    pub unique_base_bits: u64,
    /// Pointer plus priced delta for each deduplicated base.
    pub dedup_record_bits: u64,
    /// Nonce, ciphertext and auth tag of every stored deviation.
    pub enc_local_bits: u64,
    /// Tags of stored objects; also the file identifiers.
    pub tag_bits: u64,
    /// Number of stored files.
    pub n_f: u64,
    /// Compressed size of bases and deviations (excludes tags).
    pub c_size: u64,
}

/// One file as exchanged with the cloud: manifest, bases and deviations in
/// chunk order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectPayload {
    pub manifest: FileManifest,
    pub pieces: Vec<OutsourcePiece>,
    pub enc_locals: Vec<EncryptedDeviation>,
}

impl ObjectPayload {
    pub fn tag(&self) -> &FileTag {
        &self.manifest.file_tag
    }

    pub fn validate(&self) -> Result<()> {
        self.manifest.validate()?;
        let count = self.manifest.chunk_count as usize;
        for (what, n) in [("pieces", self.pieces.len()), ("deviations", self.enc_locals.len())] {
            if n != count {
                return Err(Error::params(format!(
                    "{n} {what} for a {count}-chunk manifest"
                )));
            }
        }
        let n_base = self.manifest.base_len();
        let q = self.manifest.params.symbol_bits;
        for (i, p) in self.pieces.iter().enumerate() {
            if p.base.len() != n_base || p.base.q() != q {
                return Err(Error::params(format!(
                    "piece {i} has {} symbols of {} bits, manifest wants {n_base} of {q}",
                    p.base.len(),
                    p.base.q()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PutOutcome {
    Stored,
    /// Same tag with byte-identical content was already present.
    AlreadyStored,
}

#[derive(Debug)]
struct Inner {
    engine: Engine,
    objects: HashMap<FileTag, ObjectRecord>,
    files: Option<LogFiles>,
    enc_local_bits: u64,
    tag_bits: u64,
    poisoned: bool,
}

/// Single-writer, multi-reader object store.
#[derive(Debug)]
pub struct GdStore {
    inner: RwLock<Inner>,
}

impl GdStore {
    /// A store that keeps everything in memory.
    pub fn ephemeral(config: StoreConfig) -> Self {
        Self {
            inner: RwLock::new(Inner {
                engine: Engine::new(config),
                objects: HashMap::new(),
                files: None,
                enc_local_bits: 0,
                tag_bits: 0,
                poisoned: false,
            }),
        }
    }

    /// Opens (or creates) a persistent store in `dir`, replaying its log.
    pub fn open(dir: impl AsRef<Path>, config: StoreConfig) -> Result<Self> {
        let recovered = LogFiles::open(dir.as_ref())?;
        let mut inner = Inner {
            engine: Engine::new(config),
            objects: HashMap::new(),
            files: None,
            enc_local_bits: 0,
            tag_bits: 0,
            poisoned: false,
        };
        let mut by_offset: HashMap<u64, ObjectRecord> = HashMap::new();
        for (offset, rec) in recovered.records {
            match rec {
                LogRecord::Base(b) => inner.engine.replay(b)?,
                LogRecord::Object(o) => {
                    check_object_record(&o, inner.engine.len())?;
                    by_offset.insert(offset, o);
                }
            }
        }
        let mut files = recovered.files;
        for (tag, offset) in recovered.index {
            let obj = by_offset
                .remove(&offset)
                .ok_or_else(|| Error::corrupt(format!("index entry {tag} points at no object")))?;
            if obj.manifest.file_tag != tag {
                return Err(Error::corrupt(format!("index tag {tag} disagrees with its object")));
            }
            inner.insert_object(obj)?;
        }
        let mut orphans: Vec<_> = by_offset.into_iter().collect();
        orphans.sort_by_key(|(o, _)| *o);
        for (offset, obj) in orphans {
            tracing::warn!(tag = %obj.manifest.file_tag, "re-indexing object missing from {INDEX_FILE}");
            files.append_index(&obj.manifest.file_tag, offset)?;
            inner.insert_object(obj)?;
        }
        inner.files = Some(files);
        Ok(Self {
            inner: RwLock::new(inner),
        })
    }

    /// Deduplicates one base and persists the resulting record.
    pub fn ingest_base(&self, base: &SymbolString) -> Result<(u32, CloudRecord)> {
        let mut inner = self.write()?;
        let (id, rec) = inner.engine.ingest(base)?;
        let body = encode_base(inner.engine.record(id).expect("just pushed"));
        inner.persist(&[body])?;
        Ok((id, rec))
    }

    /// Rebuilds the base a record stands for.
    pub fn materialize(&self, record: &CloudRecord) -> Result<SymbolString> {
        match record {
            CloudRecord::Unique { base } => Ok(base.clone()),
            CloudRecord::Deduped { base_id, delta } => self.read().engine.apply_to(*base_id, delta),
        }
    }

    pub fn record(&self, id: u32) -> Result<CloudRecord> {
        self.read().engine.cloud_record(id)
    }

    pub fn record_count(&self) -> usize {
        self.read().engine.len()
    }

    pub fn put_object(&self, obj: &ObjectPayload) -> Result<PutOutcome> {
        obj.validate()?;
        let mut inner = self.write()?;
        if let Some(existing) = inner.objects.get(obj.tag()) {
            let same = existing.manifest == obj.manifest
                && existing.enc_locals == obj.enc_locals
                && existing
                    .record_ids
                    .iter()
                    .zip(&obj.pieces)
                    .all(|(&id, p)| inner.engine.materialize(id).is_ok_and(|b| b == p.base));
            return if same {
                Ok(PutOutcome::AlreadyStored)
            } else {
                Err(Error::Conflict(obj.tag().to_hex()))
            };
        }

        for p in &obj.pieces {
            inner.engine.check_geometry(&p.base)?;
        }
        let mut bodies = Vec::with_capacity(obj.pieces.len() + 1);
        let mut record_ids = Vec::with_capacity(obj.pieces.len());
        for p in &obj.pieces {
            let (id, _) = match inner.engine.ingest(&p.base) {
                Ok(r) => r,
                Err(e) => {
                    // earlier pieces of this object are already in the engine
                    inner.poisoned = !bodies.is_empty();
                    return Err(e);
                }
            };
            bodies.push(encode_base(inner.engine.record(id).expect("just pushed")));
            record_ids.push(id);
        }
        let record = ObjectRecord {
            manifest: obj.manifest.clone(),
            record_ids,
            enc_locals: obj.enc_locals.clone(),
        };
        bodies.push(encode_object(&record));
        if let Some(offset) = inner.persist(&bodies)? {
            let files = inner.files.as_mut().expect("persist returned an offset");
            if let Err(e) = files.append_index(obj.tag(), offset) {
                inner.poisoned = true;
                return Err(e);
            }
        }
        inner.insert_object(record)?;
        Ok(PutOutcome::Stored)
    }

    pub fn get_object(&self, tag: &FileTag) -> Result<ObjectPayload> {
        let inner = self.read();
        let obj = inner
            .objects
            .get(tag)
            .ok_or_else(|| Error::NotFound(tag.to_hex()))?;
        let pieces = obj
            .record_ids
            .iter()
            .map(|&id| inner.engine.materialize(id).map(|base| OutsourcePiece { base }))
            .collect::<Result<_>>()?;
        Ok(ObjectPayload {
            manifest: obj.manifest.clone(),
            pieces,
            enc_locals: obj.enc_locals.clone(),
        })
    }

    /// Record ids backing a stored object, in chunk order.
    pub fn object_records(&self, tag: &FileTag) -> Result<Vec<u32>> {
        self.read()
            .objects
            .get(tag)
            .map(|o| o.record_ids.clone())
            .ok_or_else(|| Error::NotFound(tag.to_hex()))
    }

    pub fn stats(&self) -> StoreStats {
        let inner = self.read();
        let t = inner.engine.totals;
        StoreStats {
            unique_records: t.unique_records,
            dedup_records: t.dedup_records,
            unique_base_bits: t.unique_base_bits,
            dedup_record_bits: t.dedup_record_bits,
            enc_local_bits: inner.enc_local_bits,
            tag_bits: inner.tag_bits,
            n_f: inner.objects.len() as u64,
            c_size: t.unique_base_bits + t.dedup_record_bits + inner.enc_local_bits,
        }
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().expect("store lock poisoned")
    }

    fn write(&self) -> Result<std::sync::RwLockWriteGuard<'_, Inner>> {
        let inner = self.inner.write().expect("store lock poisoned");
        if inner.poisoned {
            return Err(Error::corrupt(
                "an earlier write failed part-way; reopen the store",
            ));
        }
        Ok(inner)
    }
}

fn check_object_record(o: &ObjectRecord, records_so_far: usize) -> Result<()> {
    let count = o.manifest.chunk_count as usize;
    if o.record_ids.len() != count || o.enc_locals.len() != count {
        return Err(Error::corrupt(format!(
            "object {} lists {} records and {} deviations for {count} chunks",
            o.manifest.file_tag,
            o.record_ids.len(),
            o.enc_locals.len()
        )));
    }
    if let Some(bad) = o.record_ids.iter().find(|&&id| id as usize >= records_so_far) {
        return Err(Error::corrupt(format!(
            "object {} references future record {bad}",
            o.manifest.file_tag
        )));
    }
    Ok(())
}

impl Inner {
    /// Appends bodies to the log; returns the offset of the last one.
    fn persist(&mut self, bodies: &[Vec<u8>]) -> Result<Option<u64>> {
        let Some(files) = self.files.as_mut() else {
            return Ok(None);
        };
        match files.append_records(bodies) {
            Ok(offsets) => Ok(offsets.last().copied()),
            Err(e) => {
                self.poisoned = true;
                Err(e)
            }
        }
    }

    fn insert_object(&mut self, obj: ObjectRecord) -> Result<()> {
        let tag = obj.manifest.file_tag.clone();
        if self.objects.contains_key(&tag) {
            return Err(Error::corrupt(format!("tag {tag} stored twice")));
        }
        self.enc_local_bits += obj
            .enc_locals
            .iter()
            .map(EncryptedDeviation::stored_size_bits)
            .sum::<u64>();
        self.tag_bits += tag.bit_len();
        self.objects.insert(tag, obj);
        Ok(())
    }
}
