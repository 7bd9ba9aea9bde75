use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bifrost_core::bits::packed_len;
use bifrost_core::chunk::{ChunkingParams, FileManifest, SymbolString};
use bifrost_core::crypto::{EncryptedDeviation, FileTag};
use bifrost_core::store::{CloudRecord, DeltaOp, GdStore, ObjectPayload, PutOutcome, StoreStats};
use bifrost_core::transform::OutsourcePiece;
use bifrost_core::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestJson {
    /// Hex; its length fixes the MAC.
    pub tag: String,
    pub chunk_count: u32,
    pub original_byte_length: u64,
    pub chunk_bits: u32,
    pub symbol_bits: u8,
    pub n_del: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationJson {
    pub nonce: String,
    pub ciphertext: String,
    pub auth_tag: String,
}

/// An object with bases as hex of their packed symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectJson {
    pub manifest: ManifestJson,
    pub pieces: Vec<String>,
    pub enc_locals: Vec<DeviationJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordJson {
    Unique { q: u8, symbols: Vec<u16> },
    Deduped { base_id: u32, delta: Vec<DeltaOp> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PutJson {
    pub tag: String,
    pub already_stored: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BaseJson {
    q: u8,
    symbols: Vec<u16>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IngestJson {
    id: u32,
    record: RecordJson,
}

#[derive(Debug, Serialize)]
struct ErrorJson {
    error: String,
}

impl From<&ObjectPayload> for ObjectJson {
    fn from(o: &ObjectPayload) -> Self {
        let m = &o.manifest;
        Self {
            manifest: ManifestJson {
                tag: m.file_tag.to_hex(),
                chunk_count: m.chunk_count,
                original_byte_length: m.original_byte_length,
                chunk_bits: m.params.chunk_bits,
                symbol_bits: m.params.symbol_bits,
                n_del: m.n_del,
            },
            pieces: o.pieces.iter().map(|p| hex::encode(p.base.pack())).collect(),
            enc_locals: o
                .enc_locals
                .iter()
                .map(|e| DeviationJson {
                    nonce: hex::encode(&e.nonce),
                    ciphertext: hex::encode(&e.ciphertext),
                    auth_tag: hex::encode(&e.auth_tag),
                })
                .collect(),
        }
    }
}

impl TryFrom<ObjectJson> for ObjectPayload {
    type Error = Error;

    fn try_from(j: ObjectJson) -> Result<Self, Error> {
        let unhex = |s: &str| hex::decode(s).map_err(|e| Error::Malformed(format!("hex: {e}")));
        let m = j.manifest;
        let manifest = FileManifest {
            file_tag: FileTag::from_hex(&m.tag)?,
            chunk_count: m.chunk_count,
            original_byte_length: m.original_byte_length,
            params: ChunkingParams {
                chunk_bits: m.chunk_bits,
                symbol_bits: m.symbol_bits,
            },
            n_del: m.n_del,
        };
        manifest.validate()?;
        let (n, q) = (manifest.base_len(), manifest.params.symbol_bits);
        let pieces = j
            .pieces
            .iter()
            .map(|p| {
                let bytes = unhex(p)?;
                if bytes.len() != packed_len(n, q) {
                    return Err(Error::LengthMismatch {
                        expected: packed_len(n, q),
                        actual: bytes.len(),
                    });
                }
                Ok(OutsourcePiece {
                    base: SymbolString::unpack(&bytes, n, q)?,
                })
            })
            .collect::<Result<_, Error>>()?;
        let enc_locals = j
            .enc_locals
            .iter()
            .map(|d| {
                Ok(EncryptedDeviation {
                    nonce: unhex(&d.nonce)?,
                    ciphertext: unhex(&d.ciphertext)?,
                    auth_tag: unhex(&d.auth_tag)?,
                })
            })
            .collect::<Result<_, Error>>()?;
        Ok(ObjectPayload {
            manifest,
            pieces,
            enc_locals,
        })
    }
}

impl From<CloudRecord> for RecordJson {
    fn from(r: CloudRecord) -> Self {
        match r {
            CloudRecord::Unique { base } => RecordJson::Unique {
                q: base.q(),
                symbols: base.into_symbols(),
            },
            CloudRecord::Deduped { base_id, delta } => RecordJson::Deduped { base_id, delta },
        }
    }
}

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::Conflict(_) => StatusCode::CONFLICT,
            Error::InvalidParams(_)
            | Error::LengthMismatch { .. }
            | Error::Malformed(_)
            | Error::Config(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ErrorJson { error: self.0.to_string() })).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T, F>(store: Arc<GdStore>, op: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&GdStore) -> bifrost_core::Result<T> + Send + 'static,
{
    tokio::task::spawn_blocking(move || op(&store))
        .await
        .map_err(|e| ApiError(Error::Corruption(format!("store task failed: {e}"))))?
        .map_err(ApiError)
}

/// JSON routes over `store`.
pub fn router(store: Arc<GdStore>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/v1/stats", get(stats))
        .route("/v1/objects", post(put_object))
        .route("/v1/objects/{tag}", get(get_object))
        .route("/v1/objects/{tag}/records", get(object_records))
        .route("/v1/records/{id}", get(record))
        .route("/v1/bases", post(ingest_base))
        .with_state(store)
}

async fn stats(State(store): State<Arc<GdStore>>) -> Json<StoreStats> {
    Json(store.stats())
}

async fn put_object(
    State(store): State<Arc<GdStore>>,
    Json(body): Json<ObjectJson>,
) -> ApiResult<(StatusCode, Json<PutJson>)> {
    let obj = ObjectPayload::try_from(body)?;
    let tag = obj.tag().to_hex();
    let outcome = blocking(store, move |s| s.put_object(&obj)).await?;
    let already_stored = outcome == PutOutcome::AlreadyStored;
    let status = if already_stored { StatusCode::OK } else { StatusCode::CREATED };
    Ok((status, Json(PutJson { tag, already_stored })))
}

async fn get_object(State(store): State<Arc<GdStore>>, Path(tag): Path<String>) -> ApiResult<Json<ObjectJson>> {
    let tag = FileTag::from_hex(&tag)?;
    let obj = blocking(store, move |s| s.get_object(&tag)).await?;
    Ok(Json(ObjectJson::from(&obj)))
}

async fn object_records(State(store): State<Arc<GdStore>>, Path(tag): Path<String>) -> ApiResult<Json<Vec<u32>>> {
    let tag = FileTag::from_hex(&tag)?;
    Ok(Json(store.object_records(&tag)?))
}

async fn record(State(store): State<Arc<GdStore>>, Path(id): Path<u32>) -> ApiResult<Json<RecordJson>> {
    if id as usize >= store.record_count() {
        return Err(Error::NotFound(format!("record {id}")).into());
    }
    let rec = blocking(store, move |s| s.record(id)).await?;
    Ok(Json(rec.into()))
}

async fn ingest_base(State(store): State<Arc<GdStore>>, Json(body): Json<BaseJson>) -> ApiResult<Json<IngestJson>> {
    let base = SymbolString::new(body.symbols, body.q)?;
    let (id, rec) = blocking(store, move |s| s.ingest_base(&base)).await?;
    Ok(Json(IngestJson { id, record: rec.into() }))
}
