//! Edit deltas the cloud stores against an existing base.

use serde::{Deserialize, Serialize};

use crate::bits::ByteReader;
use crate::distance::Alignment;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeltaOp {
    /// Overwrite position `pos` with `value`.
    ChangeValue { pos: u32, value: u16 },
    /// Exchange positions `pos` and `pos + 1`.
    AdjSwap { pos: u32 },
}

impl DeltaOp {
    const CHANGE: u8 = 0;
    const SWAP: u8 = 1;

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        match *self {
            DeltaOp::ChangeValue { pos, value } => {
                out.push(Self::CHANGE);
                out.extend_from_slice(&pos.to_le_bytes());
                out.extend_from_slice(&value.to_le_bytes());
            }
            DeltaOp::AdjSwap { pos } => {
                out.push(Self::SWAP);
                out.extend_from_slice(&pos.to_le_bytes());
            }
        }
    }

    pub fn decode(r: &mut ByteReader<'_>) -> Result<Self> {
        match r.u8()? {
            Self::CHANGE => Ok(DeltaOp::ChangeValue {
                pos: r.u32_le()?,
                value: r.u16_le()?,
            }),
            Self::SWAP => Ok(DeltaOp::AdjSwap { pos: r.u32_le()? }),
            other => Err(Error::malformed(format!("unknown delta opcode {other}"))),
        }
    }
}

/// Bits to address one of `n_base` positions.
pub fn position_bits(n_base: usize) -> u64 {
    if n_base <= 1 {
        0
    } else {
        u64::from(usize::BITS - (n_base - 1).leading_zeros())
    }
}

/// Priced size of a delta: each op costs one opcode bit plus a position;
/// a change also carries a `q`-bit value.
pub fn delta_cost_bits(delta: &[DeltaOp], n_base: usize, q: u8) -> u64 {
    let pos = position_bits(n_base);
    delta
        .iter()
        .map(|op| match op {
            DeltaOp::ChangeValue { .. } => 1 + pos + u64::from(q),
            DeltaOp::AdjSwap { .. } => 1 + pos,
        })
        .sum()
}

pub fn validate_delta(delta: &[DeltaOp], n_base: usize, q: u8) -> Result<()> {
    for op in delta {
        let ok = match *op {
            DeltaOp::ChangeValue { pos, value } => {
                (pos as usize) < n_base && u32::from(value) < 1u32 << q
            }
            DeltaOp::AdjSwap { pos } => (pos as usize) + 1 < n_base,
        };
        if !ok {
            return Err(Error::corrupt(format!(
                "delta op {op:?} out of range for {n_base} symbols of {q} bits"
            )));
        }
    }
    Ok(())
}

/// Applies `delta` in order. Ops must already be validated.
pub fn apply_delta(base: &mut [u16], delta: &[DeltaOp]) {
    for op in delta {
        match *op {
            DeltaOp::ChangeValue { pos, value } => base[pos as usize] = value,
            DeltaOp::AdjSwap { pos } => base.swap(pos as usize, pos as usize + 1),
        }
    }
}

/// Turns an alignment from a stored base to `target` into ops, grouped
/// left to right. Inside a swap block the swaps follow the block's required
/// order.
pub fn delta_from_alignment(al: &Alignment, target: &[u16]) -> Vec<DeltaOp> {
    let mut out = Vec::with_capacity(al.cost());
    let mut changes = al.changes.iter().peekable();
    for block in &al.blocks {
        while let Some(&&c) = changes.peek() {
            if c > block.start {
                break;
            }
            out.push(change(c, target));
            changes.next();
        }
        out.extend(
            block
                .swap_order()
                .into_iter()
                .map(|k| DeltaOp::AdjSwap { pos: k as u32 }),
        );
    }
    out.extend(changes.map(|&c| change(c, target)));
    out
}

fn change(pos: usize, target: &[u16]) -> DeltaOp {
    DeltaOp::ChangeValue {
        pos: pos as u32,
        value: target[pos],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::swap_change_alignment;
    use proptest::prelude::*;

    #[test]
    fn cost_arithmetic() {
        assert_eq!(delta_cost_bits(&[], 244, 8), 0);
        assert_eq!(delta_cost_bits(&[DeltaOp::ChangeValue { pos: 3, value: 1 }], 244, 8), 17);
        assert_eq!(delta_cost_bits(&[DeltaOp::AdjSwap { pos: 3 }], 244, 8), 9);
        assert_eq!(position_bits(256), 8);
        assert_eq!(position_bits(257), 9);
        assert_eq!(position_bits(1), 0);
    }

    #[test]
    fn single_change_applies() {
        let mut b = vec![4, 1, 10, 8];
        apply_delta(&mut b, &[DeltaOp::ChangeValue { pos: 0, value: 5 }]);
        assert_eq!(b, vec![5, 1, 10, 8]);
    }

    #[test]
    fn validation_catches_out_of_range() {
        assert!(validate_delta(&[DeltaOp::AdjSwap { pos: 3 }], 4, 8).is_err());
        assert!(validate_delta(&[DeltaOp::ChangeValue { pos: 1, value: 16 }], 4, 4).is_err());
        assert!(validate_delta(&[DeltaOp::AdjSwap { pos: 2 }], 4, 8).is_ok());
    }

    proptest! {
        #[test]
        fn derived_delta_reaches_target(
            pair in (2usize..60).prop_flat_map(|n| (
                proptest::collection::vec(0u16..5, n),
                proptest::collection::vec(0u16..5, n),
            ))
        ) {
            let (a, b) = pair;
            let al = swap_change_alignment(&a, &b, None).unwrap();
            let delta = delta_from_alignment(&al, &b);
            prop_assert_eq!(delta.len(), al.cost());
            validate_delta(&delta, a.len(), 8).unwrap();
            let mut out = a.clone();
            apply_delta(&mut out, &delta);
            prop_assert_eq!(out, b);
            let mut buf = Vec::new();
            for op in &delta { op.encode_into(&mut buf); }
            let mut r = ByteReader::new(&buf);
            let back: Vec<DeltaOp> = (0..delta.len()).map(|_| DeltaOp::decode(&mut r).unwrap()).collect();
            prop_assert_eq!(back, delta);
        }
    }
}
