use std::io::Write;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{generate_corpus, CorpusSpec};
use super::metrics::{compression_ratio, grouped_tag_bits, transmission_size};
use crate::chunk::ChunkingParams;
use crate::crypto::{padded_len, CounterNonces, KeyMaterial, MacKind, Padding, AUTH_TAG_BYTES, NONCE_BYTES};
use crate::sharing::{receiver_fetch, sender_store, SenderConfig};
use crate::store::{GdStore, StoreConfig, StoreStats};
use crate::transform::{DeletionDeviation, SEED_BITS};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_del: Vec<u32>,
    pub chunk_bits: Vec<u32>,
    pub mac_bits: Vec<u32>,
    pub enc_bits: Vec<u32>,
    pub padding: Vec<bool>,
    pub symbol_bits: u8,
    pub t_max: u32,
    pub pointer_bits: u32,
    /// Chunks per tag for the grouped-tagging columns.
    pub tag_group: u64,
    pub corpus: CorpusSpec,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_del: (2..=26).step_by(2).collect(),
            chunk_bits: vec![512, 1024, 2048],
            mac_bits: vec![256, 512],
            enc_bits: vec![128, 256],
            padding: vec![true, false],
            symbol_bits: 8,
            t_max: 8,
            pointer_bits: 32,
            tag_group: 100,
            corpus: CorpusSpec::default(),
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, empty) in [
            ("n_del", self.n_del.is_empty()),
            ("chunk_bits", self.chunk_bits.is_empty()),
            ("mac_bits", self.mac_bits.is_empty()),
            ("enc_bits", self.enc_bits.is_empty()),
            ("padding", self.padding.is_empty()),
        ] {
            if empty {
                return bad(format!("{name} has no values"));
            }
        }
        for &c in &self.chunk_bits {
            let params = ChunkingParams::new(c, self.symbol_bits)?;
            if let Some(&d) = self.n_del.iter().find(|&&d| d as usize >= params.symbols_per_chunk()) {
                return bad(format!("n_del {d} leaves nothing of a {c}-bit chunk"));
            }
        }
        for &m in &self.mac_bits {
            MacKind::from_bits(m)?;
        }
        if let Some(e) = self.enc_bits.iter().find(|&&e| e != 128 && e != 256) {
            return bad(format!("unsupported encryption key size {e}"));
        }
        if self.tag_group == 0 {
            return bad("tag_group must be positive".into());
        }
        self.corpus.validate()
    }

    fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &chunk_bits in &self.chunk_bits {
            for &n_del in &self.n_del {
                for &mac_bits in &self.mac_bits {
                    for &enc_bits in &self.enc_bits {
                        for &padding in &self.padding {
                            out.push(Cell { n_del, chunk_bits, mac_bits, enc_bits, padding });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    n_del: u32,
    chunk_bits: u32,
    mac_bits: u32,
    enc_bits: u32,
    padding: bool,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n_del: u32,
    pub chunk_bits: u32,
    pub mac_bits: u32,
    pub enc_bits: u32,
    pub padding: bool,
    pub chi: f64,
    pub tau: u64,
    pub s_dev: u64,
    pub s_base: u64,
    /// Stored size of one encrypted deviation: nonce, ciphertext, auth tag.
    pub enc_local_bits: u64,
    pub unique_records: u64,
    pub dedup_records: u64,
    /// χ with one tag per `tag_group` chunks instead of per file.
    pub chi_grouped_tags: f64,
    /// τ for one corpus file with one tag per `tag_group` chunks.
    pub tau_grouped_tags: u64,
}

/// Runs every cell against a fresh on-disk store. Cells run in parallel;
/// rows come back in a fixed order.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let corpus = generate_corpus(&config.corpus)?;
    let mut master = [0u8; 32];
    ChaCha8Rng::seed_from_u64(config.corpus.seed).fill_bytes(&mut master);
    config
        .cells()
        .into_par_iter()
        .enumerate()
        .map(|(i, cell)| run_cell(config, &corpus, master, i as u64, cell))
        .collect()
}

fn run_cell(
    config: &SweepConfig,
    corpus: &[Vec<u8>],
    master: [u8; 32],
    index: u64,
    cell: Cell,
) -> Result<SweepRow> {
    let q = config.symbol_bits;
    let params = ChunkingParams::new(cell.chunk_bits, q)?;
    let mac = MacKind::from_bits(cell.mac_bits)?;
    let padding = if cell.padding { Padding::Block128 } else { Padding::None };
    let sender = SenderConfig {
        params,
        n_del: cell.n_del,
        padding,
        master_seed: Some(master),
    };
    let n_base = params.symbols_per_chunk() - cell.n_del as usize;
    let store_config = StoreConfig {
        t_max: config.t_max,
        pointer_bits: config.pointer_bits,
        base_geometry: Some((n_base, q)),
    };

    let dir = tempfile::tempdir()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.corpus.seed ^ index.rotate_left(32));
    let nonces = CounterNonces::with_prefix([0; 4]);
    let stats = {
        let store = GdStore::open(dir.path(), store_config)?;
        for file in corpus {
            let keys = KeyMaterial::generate(&mut rng, mac, cell.enc_bits)?;
            let token = sender_store(file, &sender, &keys, &nonces, &store)?;
            if receiver_fetch(&token, &store)? != *file {
                return Err(Error::IntegrityFailure);
            }
        }
        store.stats()
    };
    let reopened = GdStore::open(dir.path(), store_config)?.stats();
    if reopened != stats {
        return Err(Error::corrupt(format!(
            "sweep cell {index}: stats after reopen differ ({stats:?} vs {reopened:?})"
        )));
    }

    let fid = u64::from(cell.mac_bits);
    let db_bits = config.corpus.total_bytes() * 8;
    let chunks_per_file = params.chunk_count(config.corpus.file_bytes as u64);
    let grouped_tags = grouped_tag_bits(chunks_per_file, config.tag_group, fid);
    let grouped = StoreStats {
        c_size: stats.c_size + grouped_tags * corpus.len() as u64,
        n_f: 0,
        ..stats
    };
    let dev_bytes = DeletionDeviation::plaintext_len(cell.n_del as usize, q);
    Ok(SweepRow {
        n_del: cell.n_del,
        chunk_bits: cell.chunk_bits,
        mac_bits: cell.mac_bits,
        enc_bits: cell.enc_bits,
        padding: cell.padding,
        chi: compression_ratio(&stats, fid, db_bits)?,
        tau: transmission_size(fid, u64::from(mac.key_len() as u32 * 8), u64::from(cell.enc_bits)),
        s_dev: u64::from(SEED_BITS) + u64::from(q) * u64::from(cell.n_del),
        s_base: n_base as u64 * u64::from(q),
        enc_local_bits: 8 * (NONCE_BYTES + padded_len(dev_bytes, padding) + AUTH_TAG_BYTES) as u64,
        unique_records: stats.unique_records,
        dedup_records: stats.dedup_records,
        chi_grouped_tags: compression_ratio(&grouped, fid, db_bits)?,
        tau_grouped_tags: grouped_tags + u64::from(mac.key_len() as u32 * 8) + u64::from(cell.enc_bits),
    })
}

/// A `#` comment line describing the corpus, then a header and one row per
/// cell.
pub fn write_csv<W: Write>(config: &SweepConfig, rows: &[SweepRow], mut out: W) -> Result<()> {
    let c = &config.corpus;
    writeln!(
        out,
        "# corpus seed={} clusters={} files_per_cluster={} file_bytes={} mutation_rate={} symbol_bits={} t_max={} pointer_bits={} tag_group={}",
        c.seed,
        c.clusters,
        c.files_per_cluster,
        c.file_bytes,
        c.mutation_rate,
        config.symbol_bits,
        config.t_max,
        config.pointer_bits,
        config.tag_group
    )?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}
