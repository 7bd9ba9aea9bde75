//! Known-answer vectors produced by an unrelated implementation (Python's
//! `hashlib`, `hmac` and `cryptography` packages).

use bifrost_core::crypto::{
    decrypt, encrypt, mac_tag, mac_verify, prng_stream, EncKey, EncryptedDeviation, FileTag,
    MacKey, MacKind, NonceSource, Padding, NONCE_BYTES,
};
use bifrost_core::transform::{derive_positions, ChaChaPositions, Seed};

fn lines(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split_whitespace().collect())
}

fn hex(s: &str) -> Vec<u8> {
    if s == "-" {
        Vec::new()
    } else {
        hex::decode(s).unwrap()
    }
}

struct Fixed([u8; NONCE_BYTES]);

impl NonceSource for Fixed {
    fn next_nonce(&self) -> [u8; NONCE_BYTES] {
        self.0
    }
}

#[test]
fn prng_stream_and_positions() {
    let mut seen = 0;
    for f in lines(include_str!("fixtures/prng_vectors.txt")) {
        match f[0] {
            "stream" => {
                let want = hex(f[2]);
                let mut got = vec![0u8; want.len()];
                prng_stream(&hex(f[1])).fill_bytes(&mut got);
                assert_eq!(got, want, "stream for seed {}", f[1]);
            }
            "positions" => {
                let seed = Seed(hex(f[1]).try_into().unwrap());
                let n_org: usize = f[2].parse().unwrap();
                let n_del: usize = f[3].parse().unwrap();
                let want: Vec<usize> = f[4].split(',').map(|p| p.parse().unwrap()).collect();
                assert_eq!(derive_positions(&ChaChaPositions, &seed, n_org, n_del).unwrap(), want);
            }
            other => panic!("unknown fixture line {other}"),
        }
        seen += 1;
    }
    assert_eq!(seen, 10);
}

#[test]
fn hmac_and_aes_gcm() {
    let mut seen = 0;
    for f in lines(include_str!("fixtures/crypto_vectors.txt")) {
        match f[0] {
            "hmac-sha256" | "hmac-sha512" => {
                let kind = if f[0] == "hmac-sha256" { MacKind::HmacSha256 } else { MacKind::HmacSha512 };
                let key = MacKey::new(kind, hex(f[1])).unwrap();
                let msg = hex(f[2]);
                let tag = mac_tag(&key, &msg);
                assert_eq!(tag.to_hex(), f[3]);
                assert!(mac_verify(&key, &msg, &FileTag::new(kind, hex(f[3])).unwrap()));
            }
            "aes-gcm" => {
                let key = EncKey::new(hex(f[1])).unwrap();
                let nonce: [u8; NONCE_BYTES] = hex(f[2]).try_into().unwrap();
                let aad = hex(f[3]);
                let enc = encrypt(&key, &hex(f[4]), Padding::None, &aad, &Fixed(nonce)).unwrap();
                let want = EncryptedDeviation {
                    nonce: nonce.to_vec(),
                    ciphertext: hex(f[5]),
                    auth_tag: hex(f[6]),
                };
                assert_eq!(enc, want);
                assert_eq!(decrypt(&key, &want, &aad).unwrap(), hex(f[4]));
            }
            other => panic!("unknown fixture line {other}"),
        }
        seen += 1;
    }
    assert_eq!(seen, 12);
}
