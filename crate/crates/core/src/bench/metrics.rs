use crate::store::StoreStats;
use crate::{Error, Result};

/// χ = (C_size + n_f · fid_size) / |D|, with |D| the original database size
/// in bits.
pub fn compression_ratio(stats: &StoreStats, fid_bits: u64, db_bits: u64) -> Result<f64> {
    if db_bits == 0 {
        return Err(Error::EmptyDatabase);
    }
    let stored = stats.c_size as f64 + stats.n_f as f64 * fid_bits as f64;
    Ok(stored / db_bits as f64)
}

/// τ = fid_size + |k_h| + |k_e|.
pub fn transmission_size(fid_bits: u64, mac_key_bits: u64, enc_key_bits: u64) -> u64 {
    fid_bits + mac_key_bits + enc_key_bits
}

/// Tag bits when one tag covers each group of `group` chunks instead of a
/// whole file.
pub fn grouped_tag_bits(chunk_count: u64, group: u64, fid_bits: u64) -> u64 {
    chunk_count.div_ceil(group.max(1)) * fid_bits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_arithmetic() {
        let stats = StoreStats {
            c_size: 700,
            n_f: 2,
            ..StoreStats::default()
        };
        assert!((compression_ratio(&stats, 100, 1000).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn empty_database_is_an_error() {
        assert!(matches!(
            compression_ratio(&StoreStats::default(), 256, 0),
            Err(Error::EmptyDatabase)
        ));
    }

    #[test]
    fn transmission_arithmetic() {
        assert_eq!(transmission_size(256, 256, 128), 640);
        assert_eq!(transmission_size(0, 0, 0), 0);
        assert_eq!(transmission_size(512, 512, 256), 1280);
    }

    #[test]
    fn grouped_tags() {
        assert_eq!(grouped_tag_bits(0, 100, 256), 0);
        assert_eq!(grouped_tag_bits(100, 100, 256), 256);
        assert_eq!(grouped_tag_bits(101, 100, 256), 512);
    }
}
