//! Metrics, synthetic corpora and parameter sweeps.

mod corpus;
mod metrics;
mod sweep;

pub use corpus::{generate_corpus, CorpusSpec};
pub use metrics::{compression_ratio, grouped_tag_bits, transmission_size};
pub use sweep::{run_sweep, write_csv, SweepConfig, SweepRow};
