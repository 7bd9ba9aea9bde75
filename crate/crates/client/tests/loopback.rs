use bifrost_client::{Client, HttpClient};
use bifrost_core::crypto::{CounterNonces, EncKey, KeyMaterial, MacKind};
use bifrost_core::sharing::{receiver_fetch, sender_store, SenderConfig};
use bifrost_core::store::StoreConfig;
use bifrost_core::Error;
use bifrost_service::{BackgroundServer, ServiceConfig};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn server() -> BackgroundServer {
    BackgroundServer::start(ServiceConfig {
        listen: "127.0.0.1:0".parse().unwrap(),
        http: Some("127.0.0.1:0".parse().unwrap()),
        store_dir: None,
        store: StoreConfig::default(),
    })
    .unwrap()
}

#[test]
fn sharing_over_the_network() {
    let server = server();
    let sender = Client::connect(server.tcp_addr()).unwrap();
    let receiver = Client::connect(server.tcp_addr()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let nonces = CounterNonces::new();
    for len in [0usize, 1, 300, 65_536, 200_001] {
        let mut file = vec![0u8; len];
        rng.fill_bytes(&mut file);
        let keys = KeyMaterial::generate(&mut rng, MacKind::HmacSha512, 256).unwrap();
        let token = sender_store(&file, &SenderConfig::default(), &keys, &nonces, &sender).unwrap();
        assert_eq!(receiver_fetch(&token, &receiver).unwrap(), file);
        // pieces come back as the store holds them
        assert_eq!(
            receiver.download(&token.tag).unwrap(),
            server.store().get_object(&token.tag).unwrap()
        );
    }
}

#[test]
fn remote_errors_surface_as_typed_errors() {
    let server = server();
    let client = Client::connect(server.tcp_addr()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let keys = KeyMaterial::generate(&mut rng, MacKind::HmacSha256, 128).unwrap();
    let nonces = CounterNonces::new();
    let mut token = sender_store(b"hello", &SenderConfig::default(), &keys, &nonces, &client).unwrap();

    // same tag, fresh nonces: different content under an existing tag
    let err = sender_store(b"hello", &SenderConfig::default(), &keys, &nonces, &client).unwrap_err();
    assert!(matches!(err, Error::Conflict(_)), "{err:?}");

    token.enc_key = EncKey::new(vec![1; 16]).unwrap();
    assert!(matches!(receiver_fetch(&token, &client), Err(Error::DecryptionFailure { .. })));

    let other = KeyMaterial::generate(&mut rng, MacKind::HmacSha256, 128).unwrap();
    let missing = bifrost_core::crypto::mac_tag(&other.mac_key, b"nothing");
    assert!(matches!(client.download(&missing), Err(Error::NotFound(_))));
}

#[test]
fn stats_over_http() {
    let server = server();
    let http = HttpClient::new(&server.http_addr().unwrap().to_string());
    assert!(http.healthy().unwrap());
    let client = Client::connect(server.tcp_addr()).unwrap();
    let keys = KeyMaterial::generate(&mut ChaCha8Rng::seed_from_u64(3), MacKind::HmacSha256, 128).unwrap();
    sender_store(&[7u8; 1000], &SenderConfig::default(), &keys, &CounterNonces::new(), &client).unwrap();
    let stats = http.stats().unwrap();
    assert_eq!(stats, server.store().stats());
    assert_eq!(stats.n_f, 1);
}
