//! Secure file sharing over an untrusted storage service with dual
//! deduplication.
//!
//! A sender splits a file into fixed-size symbol chunks, deletes a few
//! symbols from each chunk at positions drawn from a seeded PRNG, and
//! encrypts the small deviation (seed plus deleted values). The punctured
//! chunks ("bases") go to the cloud, which compresses them further with
//! generalized deduplication over swap and change-value edits. Sharing a
//! file means handing the receiver a [`sharing::ShareToken`]: the file's MAC
//! tag and two keys, nothing else.
//!
//! Module map:
//! - [`chunk`]: symbol strings, chunking and file manifests
//! - [`distance`]: Hamming, swap/change and Damerau–Levenshtein metrics
//! - [`transform`]: the client-side deletion transform and its inverse
//! - [`crypto`]: seeded PRNG, HMAC tags, AES-GCM deviations
//! - [`store`]: the cloud's generalized-dedup object store
//! - [`wire`]: binary client/cloud framing
//! - [`sharing`]: sender and receiver flows
//! - [`bench`]: metrics, synthetic corpora and parameter sweeps

pub mod bench;
pub mod bits;
pub mod chunk;
pub mod crypto;
pub mod distance;
mod error;
pub mod sharing;
pub mod store;
pub mod transform;
pub mod wire;

pub use error::{Error, Result};
