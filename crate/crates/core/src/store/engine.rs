//! In-memory dedup state: records, the exact-match table and the segment
//! index used to find near-duplicate bases.
//!
//! The segment index is lossless for the distance cutoff. A base within
//! swap/change distance `t` of another differs from it in at most `2t`
//! positions, so splitting both into `2t + 1` aligned segments leaves at
//! least one segment identical. Every base within the cutoff therefore
//! shares a segment key with the query, and the candidate set matches a
//! full scan.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use crate::bits::{pack_symbols, unpack_symbols};
use crate::chunk::SymbolString;
use crate::distance::{hamming_slices, swap_change_alignment};
use crate::store::delta::{apply_delta, delta_cost_bits, delta_from_alignment, validate_delta, DeltaOp};
use crate::store::{CloudRecord, StoreConfig};
use crate::{Error, Result};

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub(crate) enum StoredRecord {
    Unique { q: u8, len: u32, packed: Box<[u8]> },
    Deduped { base_id: u32, delta: Vec<DeltaOp> },
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct EngineTotals {
    pub unique_records: u64,
    pub dedup_records: u64,
    pub unique_base_bits: u64,
    pub dedup_record_bits: u64,
}

#[derive(Debug)]
pub(crate) struct Engine {
    config: StoreConfig,
    records: Vec<StoredRecord>,
    exact: HashMap<u64, Vec<u32>>,
    seg_heads: HashMap<u64, u32>,
    /// (base id, next entry) chains hanging off `seg_heads`.
    seg_entries: Vec<(u32, u32)>,
    by_geometry: HashMap<(u32, u8), Vec<u32>>,
    pub totals: EngineTotals,
}

impl Engine {
    pub fn new(config: StoreConfig) -> Self {
        Self {
            config,
            records: Vec::new(),
            exact: HashMap::new(),
            seg_heads: HashMap::new(),
            seg_entries: Vec::new(),
            by_geometry: HashMap::new(),
            totals: EngineTotals::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn record(&self, id: u32) -> Option<&StoredRecord> {
        self.records.get(id as usize)
    }

    pub fn check_geometry(&self, base: &SymbolString) -> Result<()> {
        if let Some((n, q)) = self.config.base_geometry {
            if base.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: base.len(),
                });
            }
            if base.q() != q {
                return Err(Error::params(format!(
                    "base symbol width {} differs from store's {q}",
                    base.q()
                )));
            }
        }
        Ok(())
    }

    /// Deduplicates `base` against everything stored and appends the result.
    pub fn ingest(&mut self, base: &SymbolString) -> Result<(u32, CloudRecord)> {
        self.check_geometry(base)?;
        let id = u32::try_from(self.records.len())
            .ok()
            .filter(|&id| id != NIL)
            .ok_or_else(|| Error::params("record id space exhausted"))?;
        let packed = pack_symbols(base.symbols(), base.q());

        let exact_key = exact_key(base.len(), base.q(), &packed);
        if let Some(ids) = self.exact.get(&exact_key) {
            for &cand in ids {
                if let StoredRecord::Unique { q, len, packed: p } = &self.records[cand as usize] {
                    if *q == base.q() && *len as usize == base.len() && **p == packed[..] {
                        let rec = StoredRecord::Deduped {
                            base_id: cand,
                            delta: Vec::new(),
                        };
                        self.push(rec)?;
                        return Ok((
                            id,
                            CloudRecord::Deduped {
                                base_id: cand,
                                delta: Vec::new(),
                            },
                        ));
                    }
                }
            }
        }

        if let Some((base_id, delta)) = self.nearest(base) {
            let cost = delta_cost_bits(&delta, base.len(), base.q());
            if cost + u64::from(self.config.pointer_bits) < base.bit_len() {
                self.push(StoredRecord::Deduped {
                    base_id,
                    delta: delta.clone(),
                })?;
                return Ok((id, CloudRecord::Deduped { base_id, delta }));
            }
        }

        self.push(StoredRecord::Unique {
            q: base.q(),
            len: base.len() as u32,
            packed: packed.into_boxed_slice(),
        })?;
        Ok((id, CloudRecord::Unique { base: base.clone() }))
    }

    /// Closest stored unique base within `t_max`, lowest id on ties.
    fn nearest(&self, base: &SymbolString) -> Option<(u32, Vec<DeltaOp>)> {
        let t_max = self.config.t_max as usize;
        if t_max == 0 {
            return None;
        }
        let n = base.len();
        let q = base.q();
        let target = base.symbols();
        let mut candidates: Vec<u32> = match segment_count(n, t_max) {
            Some(segs) => {
                let mut out = Vec::new();
                for (s, range) in segment_ranges(n, segs).enumerate() {
                    let key = segment_key(n, q, s, &target[range]);
                    let mut e = self.seg_heads.get(&key).copied().unwrap_or(NIL);
                    while e != NIL {
                        let (bid, next) = self.seg_entries[e as usize];
                        out.push(bid);
                        e = next;
                    }
                }
                out.sort_unstable();
                out.dedup();
                out
            }
            None => self
                .by_geometry
                .get(&(n as u32, q))
                .cloned()
                .unwrap_or_default(),
        };
        candidates.retain(|&c| {
            matches!(&self.records[c as usize], StoredRecord::Unique { q: cq, len, .. } if *cq == q && *len as usize == n)
        });

        let mut best: Option<(usize, u32, Vec<DeltaOp>)> = None;
        for cand in candidates {
            let bound = best.as_ref().map_or(t_max, |b| b.0.min(t_max));
            let StoredRecord::Unique { packed, .. } = &self.records[cand as usize] else {
                unreachable!("filtered to unique records");
            };
            let stored = unpack_symbols(packed, n, q);
            if hamming_slices(&stored, target).div_ceil(2) > bound {
                continue;
            }
            let Some(al) = swap_change_alignment(&stored, target, Some(bound)) else {
                continue;
            };
            let cost = al.cost();
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, cand, delta_from_alignment(&al, target)));
            }
        }
        best.map(|(_, id, delta)| (id, delta))
    }

    /// Re-adds a record read back from disk, checking its references.
    pub fn replay(&mut self, rec: StoredRecord) -> Result<()> {
        match &rec {
            StoredRecord::Unique { q, len, packed } => {
                if *q == 0 || *q > crate::chunk::MAX_SYMBOL_BITS
                    || packed.len() != crate::bits::packed_len(*len as usize, *q)
                {
                    return Err(Error::corrupt("unique record geometry"));
                }
                if pack_symbols(&unpack_symbols(packed, *len as usize, *q), *q)[..] != packed[..] {
                    return Err(Error::corrupt("nonzero fill bits in unique record"));
                }
            }
            StoredRecord::Deduped { base_id, delta } => {
                let Some(StoredRecord::Unique { q, len, .. }) = self.records.get(*base_id as usize) else {
                    return Err(Error::corrupt(format!(
                        "record {} points at {base_id}, which is not an earlier unique base",
                        self.records.len()
                    )));
                };
                validate_delta(delta, *len as usize, *q)?;
            }
        }
        self.push(rec)
    }

    fn push(&mut self, rec: StoredRecord) -> Result<()> {
        let id = self.records.len() as u32;
        match &rec {
            StoredRecord::Unique { q, len, packed } => {
                let n = *len as usize;
                self.totals.unique_records += 1;
                self.totals.unique_base_bits += n as u64 * u64::from(*q);
                self.exact
                    .entry(exact_key(n, *q, packed))
                    .or_default()
                    .push(id);
                let t_max = self.config.t_max as usize;
                if t_max > 0 {
                    match segment_count(n, t_max) {
                        Some(segs) => {
                            let symbols = unpack_symbols(packed, n, *q);
                            for (s, range) in segment_ranges(n, segs).enumerate() {
                                let key = segment_key(n, *q, s, &symbols[range]);
                                let head = self.seg_heads.get(&key).copied().unwrap_or(NIL);
                                let entry = self.seg_entries.len() as u32;
                                self.seg_entries.push((id, head));
                                self.seg_heads.insert(key, entry);
                            }
                        }
                        None => self.by_geometry.entry((*len, *q)).or_default().push(id),
                    }
                }
            }
            StoredRecord::Deduped { base_id, delta } => {
                let Some(StoredRecord::Unique { q, len, .. }) = self.records.get(*base_id as usize) else {
                    return Err(Error::corrupt("dedup record without unique base"));
                };
                self.totals.dedup_records += 1;
                self.totals.dedup_record_bits += u64::from(self.config.pointer_bits)
                    + delta_cost_bits(delta, *len as usize, *q);
            }
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn materialize(&self, id: u32) -> Result<SymbolString> {
        match self.records.get(id as usize) {
            Some(StoredRecord::Unique { q, len, packed }) => {
                Ok(SymbolString::from_trusted(unpack_symbols(packed, *len as usize, *q), *q))
            }
            Some(StoredRecord::Deduped { base_id, delta }) => self.apply_to(*base_id, delta),
            None => Err(Error::corrupt(format!("dangling record id {id}"))),
        }
    }

    /// Applies `delta` to unique base `base_id`.
    pub fn apply_to(&self, base_id: u32, delta: &[DeltaOp]) -> Result<SymbolString> {
        match self.records.get(base_id as usize) {
            Some(StoredRecord::Unique { q, len, packed }) => {
                let mut symbols = unpack_symbols(packed, *len as usize, *q);
                validate_delta(delta, symbols.len(), *q)?;
                apply_delta(&mut symbols, delta);
                Ok(SymbolString::from_trusted(symbols, *q))
            }
            _ => Err(Error::corrupt(format!("dangling base id {base_id}"))),
        }
    }

    pub fn cloud_record(&self, id: u32) -> Result<CloudRecord> {
        match self.records.get(id as usize) {
            Some(StoredRecord::Deduped { base_id, delta }) => Ok(CloudRecord::Deduped {
                base_id: *base_id,
                delta: delta.clone(),
            }),
            Some(StoredRecord::Unique { .. }) => Ok(CloudRecord::Unique {
                base: self.materialize(id)?,
            }),
            None => Err(Error::corrupt(format!("dangling record id {id}"))),
        }
    }
}

/// `None` when the base is too short for the pigeonhole split; callers then
/// scan every base of that geometry.
fn segment_count(n: usize, t_max: usize) -> Option<usize> {
    let segs = 2 * t_max + 1;
    (n >= segs).then_some(segs)
}

fn segment_ranges(n: usize, segs: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..segs).map(move |s| s * n / segs..(s + 1) * n / segs)
}

fn segment_key(n: usize, q: u8, seg: usize, symbols: &[u16]) -> u64 {
    let mut h = DefaultHasher::new();
    (n, q, seg, symbols).hash(&mut h);
    h.finish()
}

fn exact_key(n: usize, q: u8, packed: &[u8]) -> u64 {
    let mut h = DefaultHasher::new();
    (n, q, packed).hash(&mut h);
    h.finish()
}
