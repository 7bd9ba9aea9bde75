use std::io::{Read, Write};
use std::net::TcpStream;

use bifrost_core::chunk::ChunkingParams;
use bifrost_core::crypto::{CounterNonces, KeyMaterial, MacKind};
use bifrost_core::sharing::{prepare_upload, SenderConfig};
use bifrost_core::store::{ObjectPayload, StoreConfig, StoreStats};
use bifrost_core::wire::{error_code, read_message, write_message, WireMessage};
use bifrost_service::{BackgroundServer, ObjectJson, PutJson, RecordJson, ServiceConfig};
use rand::SeedableRng;

fn config(dir: Option<&std::path::Path>) -> ServiceConfig {
    ServiceConfig {
        listen: "127.0.0.1:0".parse().unwrap(),
        http: Some("127.0.0.1:0".parse().unwrap()),
        store_dir: dir.map(Into::into),
        store: StoreConfig::default(),
    }
}

fn object(seed: u64, len: usize) -> ObjectPayload {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let keys = KeyMaterial::generate(&mut rng, MacKind::HmacSha256, 128).unwrap();
    let file: Vec<u8> = (0..len).map(|i| (i as u64 * 31 + seed) as u8).collect();
    let cfg = SenderConfig {
        params: ChunkingParams::new(1024, 8).unwrap(),
        ..SenderConfig::default()
    };
    prepare_upload(&file, &cfg, &keys, &CounterNonces::new()).unwrap()
}

fn roundtrip(sock: &mut TcpStream, msg: &WireMessage) -> WireMessage {
    write_message(sock, msg).unwrap();
    read_message(sock).unwrap().expect("reply")
}

#[test]
fn upload_then_download_over_tcp() {
    let server = BackgroundServer::start(config(None)).unwrap();
    let mut sock = TcpStream::connect(server.tcp_addr()).unwrap();
    let obj = object(1, 5000);
    let tag = obj.tag().clone();
    assert_eq!(roundtrip(&mut sock, &WireMessage::Upload(obj.clone())), WireMessage::UploadOk(tag.clone()));
    // same session keeps serving
    assert_eq!(roundtrip(&mut sock, &WireMessage::Download(tag.clone())), WireMessage::Object(obj.clone()));
    assert_eq!(server.store().get_object(&tag).unwrap(), obj);
    // repeat upload is acknowledged
    assert_eq!(roundtrip(&mut sock, &WireMessage::Upload(obj)), WireMessage::UploadOk(tag));
}

#[test]
fn store_errors_keep_the_session_open() {
    let server = BackgroundServer::start(config(None)).unwrap();
    let mut sock = TcpStream::connect(server.tcp_addr()).unwrap();
    let missing = object(2, 100).tag().clone();
    let reply = roundtrip(&mut sock, &WireMessage::Download(missing));
    assert!(matches!(reply, WireMessage::Error { code: error_code::NOT_FOUND, .. }));

    let obj = object(3, 700);
    roundtrip(&mut sock, &WireMessage::Upload(obj.clone()));
    let mut changed = obj;
    changed.enc_locals[0].auth_tag[0] ^= 1;
    let reply = roundtrip(&mut sock, &WireMessage::Upload(changed));
    assert!(matches!(reply, WireMessage::Error { code: error_code::CONFLICT, .. }));

    let mut wrong = object(4, 700);
    wrong.pieces.pop();
    let reply = roundtrip(&mut sock, &WireMessage::Upload(wrong));
    assert!(matches!(reply, WireMessage::Error { code: error_code::INVALID, .. }));
}

#[test]
fn malformed_frames_get_an_error_and_a_close() {
    let server = BackgroundServer::start(config(None)).unwrap();
    for bad in [
        vec![3, 0, 0, 0, 9, 1, 0],             // wrong version
        vec![2, 0, 0, 0, 1, 77],               // unknown kind
        vec![4, 0, 0, 0, 1, 2, 1, 0],          // truncated tag
        vec![0xff, 0xff, 0xff, 0xff],          // oversized
    ] {
        let mut sock = TcpStream::connect(server.tcp_addr()).unwrap();
        sock.write_all(&bad).unwrap();
        let reply = read_message(&mut sock).unwrap().unwrap();
        assert!(matches!(reply, WireMessage::Error { code: error_code::MALFORMED, .. }), "{bad:?}");
        let mut rest = Vec::new();
        sock.read_to_end(&mut rest).unwrap();
        assert!(rest.is_empty());
    }
    // a reply kind sent as a request
    let mut sock = TcpStream::connect(server.tcp_addr()).unwrap();
    let reply = roundtrip(&mut sock, &WireMessage::UploadOk(object(5, 10).tag().clone()));
    assert!(matches!(reply, WireMessage::Error { code: error_code::MALFORMED, .. }));
    // the service is still up
    let mut sock = TcpStream::connect(server.tcp_addr()).unwrap();
    let obj = object(6, 300);
    assert!(matches!(roundtrip(&mut sock, &WireMessage::Upload(obj)), WireMessage::UploadOk(_)));
}

#[test]
fn concurrent_sessions() {
    let server = BackgroundServer::start(config(None)).unwrap();
    let addr = server.tcp_addr();
    let handles: Vec<_> = (0..8u64)
        .map(|t| {
            std::thread::spawn(move || {
                let mut sock = TcpStream::connect(addr).unwrap();
                for i in 0..10 {
                    let obj = object(100 + t * 10 + i, 3000 + i as usize);
                    let tag = obj.tag().clone();
                    assert!(matches!(roundtrip(&mut sock, &WireMessage::Upload(obj.clone())), WireMessage::UploadOk(_)));
                    assert_eq!(roundtrip(&mut sock, &WireMessage::Download(tag)), WireMessage::Object(obj));
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!(server.store().stats().n_f, 80);
}

#[test]
fn persists_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let obj = object(7, 4000);
    {
        let server = BackgroundServer::start(config(Some(dir.path()))).unwrap();
        let mut sock = TcpStream::connect(server.tcp_addr()).unwrap();
        roundtrip(&mut sock, &WireMessage::Upload(obj.clone()));
    }
    let server = BackgroundServer::start(config(Some(dir.path()))).unwrap();
    let mut sock = TcpStream::connect(server.tcp_addr()).unwrap();
    assert_eq!(roundtrip(&mut sock, &WireMessage::Download(obj.tag().clone())), WireMessage::Object(obj));
}

#[tokio::test(flavor = "multi_thread")]
async fn json_api() {
    let server = tokio::task::spawn_blocking(|| BackgroundServer::start(config(None)).unwrap())
        .await
        .unwrap();
    let base = format!("http://{}", server.http_addr().unwrap());
    let http = reqwest::Client::new();

    let health = http.get(format!("{base}/healthz")).send().await.unwrap();
    assert_eq!(health.text().await.unwrap(), "ok");

    let obj = object(8, 2000);
    let body = ObjectJson::from(&obj);
    let put = http.post(format!("{base}/v1/objects")).json(&body).send().await.unwrap();
    assert_eq!(put.status(), 201);
    let put: PutJson = put.json().await.unwrap();
    assert_eq!(put.tag, obj.tag().to_hex());
    assert!(!put.already_stored);
    let again = http.post(format!("{base}/v1/objects")).json(&body).send().await.unwrap();
    assert_eq!(again.status(), 200);

    let got: ObjectJson = http
        .get(format!("{base}/v1/objects/{}", put.tag))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(got, body);
    assert_eq!(ObjectPayload::try_from(got).unwrap(), obj);

    let ids: Vec<u32> = http
        .get(format!("{base}/v1/objects/{}/records", put.tag))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(ids.len(), obj.pieces.len());
    let rec: RecordJson = http
        .get(format!("{base}/v1/records/{}", ids[0]))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(matches!(rec, RecordJson::Unique { q: 8, ref symbols } if symbols == obj.pieces[0].base.symbols()));

    let stats: StoreStats = http.get(format!("{base}/v1/stats")).send().await.unwrap().json().await.unwrap();
    assert_eq!(stats.n_f, 1);
    assert_eq!(stats, server.store().stats());

    let ingest: serde_json::Value = http
        .post(format!("{base}/v1/bases"))
        .json(&serde_json::json!({"q": 8, "symbols": obj.pieces[0].base.symbols()}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(ingest["record"]["kind"], "deduped");
    assert_eq!(ingest["record"]["delta"], serde_json::json!([]));

    let missing = http.get(format!("{base}/v1/objects/{}", "00".repeat(32))).send().await.unwrap();
    assert_eq!(missing.status(), 404);
    let bad = http.get(format!("{base}/v1/objects/zz")).send().await.unwrap();
    assert_eq!(bad.status(), 400);
    let no_record = http.get(format!("{base}/v1/records/999")).send().await.unwrap();
    assert_eq!(no_record.status(), 404);

    tokio::task::spawn_blocking(move || drop(server)).await.unwrap();
}
