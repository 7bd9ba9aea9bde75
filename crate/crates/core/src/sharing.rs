//! Sender and receiver flows.
//!
//! The sender chunks a file, punctures every chunk with the deletion
//! transform, encrypts the deviations under one per-file key and uploads
//! the lot under the file's MAC tag. The receiver needs only the
//! [`ShareToken`] to download, decrypt, rebuild and verify the file.

use rand::RngCore;

use crate::bits::ByteReader;
use crate::chunk::{assemble_file, chunk_file, ChunkingParams, FileManifest};
use crate::crypto::{
    decrypt, encrypt, mac_tag, mac_verify, prng_stream, EncKey, FileTag, KeyMaterial, MacKey,
    NonceSource, Padding,
};
use crate::store::{GdStore, ObjectPayload, PutOutcome};
use crate::transform::{
    delete_transform, reinsert, ChaChaPositions, DeletionDeviation, Seed, SEED_BYTES,
};
use crate::{Error, Result};

/// Everything a receiver needs: tag plus the two keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareToken {
    pub tag: FileTag,
    pub mac_key: MacKey,
    pub enc_key: EncKey,
}

impl ShareToken {
    /// Information content in bits: |tag| + |k_h| + |k_e|.
    pub fn bit_size(&self) -> u64 {
        self.tag.bit_len() + self.mac_key.bit_len() + self.enc_key.bit_len()
    }

    /// `[u8 mac_kind][tag][u16 klen][k_h][u16 klen][k_e]`, lengths little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.tag.encode_into(&mut out);
        for key in [self.mac_key.as_bytes(), self.enc_key.as_bytes()] {
            out.extend_from_slice(&(key.len() as u16).to_le_bytes());
            out.extend_from_slice(key);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let tag = FileTag::decode(&mut r)?;
        let len = r.u16_le()? as usize;
        let mac_key = MacKey::new(tag.kind(), r.take(len)?.to_vec())
            .map_err(|e| Error::malformed(format!("token MAC key: {e}")))?;
        let len = r.u16_le()? as usize;
        let enc_key = EncKey::new(r.take(len)?.to_vec())
            .map_err(|e| Error::malformed(format!("token encryption key: {e}")))?;
        r.finish()?;
        Ok(Self {
            tag,
            mac_key,
            enc_key,
        })
    }
}

/// Where objects go. Implemented for a local store and by the network client.
pub trait CloudStorage {
    fn upload(&self, object: &ObjectPayload) -> Result<()>;
    fn download(&self, tag: &FileTag) -> Result<ObjectPayload>;
}

impl CloudStorage for GdStore {
    fn upload(&self, object: &ObjectPayload) -> Result<()> {
        self.put_object(object).map(|_: PutOutcome| ())
    }

    fn download(&self, tag: &FileTag) -> Result<ObjectPayload> {
        self.get_object(tag)
    }
}

impl<T: CloudStorage + ?Sized> CloudStorage for &T {
    fn upload(&self, object: &ObjectPayload) -> Result<()> {
        (**self).upload(object)
    }

    fn download(&self, tag: &FileTag) -> Result<ObjectPayload> {
        (**self).download(tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SenderConfig {
    pub params: ChunkingParams,
    pub n_del: u32,
    pub padding: Padding,
    /// Per-file master for the chunk seeds. `None` draws a fresh one. A
    /// fixed master makes equal chunks at equal offsets yield equal bases
    /// across files, which is what lets the cloud deduplicate them.
    pub master_seed: Option<[u8; 32]>,
}

impl Default for SenderConfig {
    fn default() -> Self {
        Self {
            params: ChunkingParams::default(),
            n_del: 12,
            padding: Padding::Block128,
            master_seed: None,
        }
    }
}

/// Seed of chunk `index`: the first four PRNG bytes keyed by `master ‖ index`.
pub fn chunk_seed(master: &[u8; 32], index: u64) -> Seed {
    let mut input = master.to_vec();
    input.extend_from_slice(&index.to_le_bytes());
    let mut seed = [0u8; SEED_BYTES];
    prng_stream(&input).fill_bytes(&mut seed);
    Seed(seed)
}

/// Associated data binding deviation `index` to its file.
fn deviation_aad(tag: &FileTag, index: usize) -> Vec<u8> {
    let mut aad = tag.as_bytes().to_vec();
    aad.extend_from_slice(&(index as u32).to_le_bytes());
    aad
}

/// Runs the client side up to the upload: tag, manifest, bases and
/// encrypted deviations.
pub fn prepare_upload(
    file: &[u8],
    config: &SenderConfig,
    keys: &KeyMaterial,
    nonces: &dyn NonceSource,
) -> Result<ObjectPayload> {
    if keys.mac_key.kind().tag_len() != keys.mac_key.as_bytes().len() {
        return Err(Error::params("MAC key length must equal the tag length"));
    }
    let tag = mac_tag(&keys.mac_key, file);
    let manifest = FileManifest::new(tag, file.len() as u64, config.params, config.n_del)?;
    let master = config.master_seed.unwrap_or_else(|| {
        let mut m = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut m);
        m
    });
    let q = config.params.symbol_bits;
    let chunks = chunk_file(file, config.params)?;
    let mut pieces = Vec::with_capacity(chunks.len());
    let mut enc_locals = Vec::with_capacity(chunks.len());
    for (i, chunk) in chunks.iter().enumerate() {
        let seed = chunk_seed(&master, i as u64);
        let (piece, dev) = delete_transform(&ChaChaPositions, chunk, seed, config.n_del as usize)?;
        let aad = deviation_aad(&manifest.file_tag, i);
        enc_locals.push(encrypt(&keys.enc_key, &dev.to_plaintext(q), config.padding, &aad, nonces)?);
        pieces.push(piece);
    }
    Ok(ObjectPayload {
        manifest,
        pieces,
        enc_locals,
    })
}

/// Uploads `file` and returns the token to hand to receivers.
pub fn sender_store<C: CloudStorage + ?Sized>(
    file: &[u8],
    config: &SenderConfig,
    keys: &KeyMaterial,
    nonces: &dyn NonceSource,
    cloud: &C,
) -> Result<ShareToken> {
    let object = prepare_upload(file, config, keys, nonces)?;
    cloud.upload(&object)?;
    Ok(ShareToken {
        tag: object.manifest.file_tag,
        mac_key: keys.mac_key.clone(),
        enc_key: keys.enc_key.clone(),
    })
}

/// Downloads, decrypts, rebuilds and verifies. Bytes are returned only if
/// the MAC over the rebuilt file matches the token's tag.
pub fn receiver_fetch<C: CloudStorage + ?Sized>(token: &ShareToken, cloud: &C) -> Result<Vec<u8>> {
    let object = cloud.download(&token.tag)?;
    reconstruct(token, &object)
}

/// The receiver's work on an already downloaded object.
pub fn reconstruct(token: &ShareToken, object: &ObjectPayload) -> Result<Vec<u8>> {
    if object.manifest.file_tag != token.tag {
        return Err(Error::IntegrityFailure);
    }
    object.validate().map_err(|_| Error::IntegrityFailure)?;
    let manifest = &object.manifest;
    let q = manifest.params.symbol_bits;
    let n_org = manifest.params.symbols_per_chunk();
    let n_del = manifest.n_del as usize;
    let mut chunks = Vec::with_capacity(object.pieces.len());
    for (i, (piece, enc)) in object.pieces.iter().zip(&object.enc_locals).enumerate() {
        let plain = decrypt(&token.enc_key, enc, &deviation_aad(&token.tag, i))
            .map_err(|_| Error::DecryptionFailure { chunk: i })?;
        // authenticated, so a parse failure means the cloud altered n_del or q
        let dev = DeletionDeviation::from_plaintext(&plain, n_del, q)
            .map_err(|_| Error::IntegrityFailure)?;
        let chunk = reinsert(&ChaChaPositions, piece, &dev, n_org)
            .map_err(|_| Error::IntegrityFailure)?;
        chunks.push(chunk);
    }
    let file = assemble_file(&chunks, manifest).map_err(|_| Error::IntegrityFailure)?;
    if !mac_verify(&token.mac_key, &file, &token.tag) {
        return Err(Error::IntegrityFailure);
    }
    Ok(file)
}
