//! String metrics over symbol strings.
//!
//! * [`hamming`]: substitutions only.
//! * [`swap_change_distance`]: substitutions plus adjacent transpositions,
//!   equal lengths only.
//! * [`damerau_levenshtein`]: insert, delete, substitute and adjacent
//!   transpose.
//!
//! All three return the true minimum number of unit-cost operations.
//!
//! # Swap/change distance
//!
//! Any sequence of adjacent swaps and substitutions can be rearranged so
//! the swaps happen first (as a permutation of tokens) and each moved token
//! is substituted at most once at its final place. The cost of a token
//! permutation `p` is `inversions(p) + mismatches(p)`. Cutting `p` into
//! indecomposable blocks on contiguous intervals, a block of length `L` has
//! at least `L - 1` inversions while leaving it in place costs at most `L`
//! substitutions. So a non-trivial block only pays off when it uses exactly
//! `L - 1` swaps, fixes every position exactly, and every position in it was
//! a mismatch. Permutations with exactly `L - 1` inversions that are
//! indecomposable are the Coxeter elements: every boundary swap
//! `(k, k + 1)` inside the block is applied once, in an order fixed by one
//! direction choice per interior position. Across each interior boundary one
//! token travels right and one travels left, so a block is scanned left to
//! right carrying just two symbol values: the token moving right and the
//! value still owed from the right. That gives an exact dynamic program whose
//! per-position state is a set of value pairs.
//!
//! # Damerau–Levenshtein
//!
//! Unrestricted (Lowrance–Wagner) variant, which is the true edit distance
//! for unit costs. The optimal-string-alignment shortcut undercounts nothing
//! but overcounts cases such as `ca -> abc`.

use std::collections::HashMap;
use std::hash::Hash;

use crate::chunk::SymbolString;
use crate::{Error, Result};

pub fn hamming(a: &SymbolString, b: &SymbolString) -> Result<usize> {
    same_shape(a, b)?;
    Ok(hamming_slices(a.symbols(), b.symbols()))
}

pub fn swap_change_distance(a: &SymbolString, b: &SymbolString) -> Result<usize> {
    same_shape(a, b)?;
    Ok(swap_change_alignment(a.symbols(), b.symbols(), None)
        .map(|al| al.cost())
        .expect("no cutoff"))
}

pub fn damerau_levenshtein(a: &SymbolString, b: &SymbolString) -> usize {
    damerau_levenshtein_slices(a.symbols(), b.symbols())
}

fn same_shape(a: &SymbolString, b: &SymbolString) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.q() != b.q() {
        return Err(Error::params(format!(
            "symbol widths differ: {} vs {}",
            a.q(),
            b.q()
        )));
    }
    Ok(())
}

/// Panics if the lengths differ.
pub fn hamming_slices<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    assert_eq!(a.len(), b.len(), "hamming on unequal lengths");
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Which way the original token at an interior block position leaves it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    /// Leaves through the right boundary; swap `(k, k+1)` precedes `(k-1, k)`.
    Right,
    /// Leaves through the left boundary; swap `(k-1, k)` precedes `(k, k+1)`.
    Left,
}

/// A run of positions `start..=end` fixed purely by `end - start` adjacent
/// swaps, one per inner boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapBlock {
    pub start: usize,
    pub end: usize,
    /// Exit direction for each interior position `start+1..end`.
    pub exits: Vec<Exit>,
}

impl SwapBlock {
    /// Left positions of the swaps `(k, k+1)` in an order that realizes the
    /// block when applied sequentially.
    pub fn swap_order(&self) -> Vec<usize> {
        let mut order = vec![self.start];
        for (i, exit) in self.exits.iter().enumerate() {
            let k = self.start + 1 + i;
            let at = order
                .iter()
                .position(|&x| x == k - 1)
                .expect("previous swap placed");
            match exit {
                Exit::Right => order.insert(at, k),
                Exit::Left => order.insert(at + 1, k),
            }
        }
        order
    }
}

/// An optimal swap/change edit script from `a` to `b`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alignment {
    /// Positions fixed by a substitution, ascending.
    pub changes: Vec<usize>,
    /// Swap blocks, ascending and disjoint from each other and `changes`.
    pub blocks: Vec<SwapBlock>,
}

impl Alignment {
    pub fn cost(&self) -> usize {
        self.changes.len()
            + self
                .blocks
                .iter()
                .map(|b| b.end - b.start)
                .sum::<usize>()
    }

    pub fn swap_count(&self) -> usize {
        self.cost() - self.changes.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Cost {
    ops: u32,
    changes: u32,
}

impl Cost {
    const ZERO: Cost = Cost { ops: 0, changes: 0 };

    fn swap(self) -> Cost {
        Cost {
            ops: self.ops + 1,
            ..self
        }
    }

    fn change(self) -> Cost {
        Cost {
            ops: self.ops + 1,
            changes: self.changes + 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum PrefixStep {
    Keep,
    Change,
    Close { state: usize },
}

#[derive(Debug, Clone, Copy)]
enum BlockLink {
    Start,
    Extend { prev: usize, exit: Exit },
}

#[derive(Debug, Clone, Copy)]
struct BlockState<T> {
    carried: T,
    owed: T,
    cost: Cost,
    link: BlockLink,
}

/// Exact swap/change alignment of two equal-length slices. Ties prefer
/// fewer substitutions. With `cutoff`, returns `None` as soon as the
/// distance provably exceeds it.
///
/// Panics if the lengths differ.
pub fn swap_change_alignment<T: Copy + Eq + Hash>(
    a: &[T],
    b: &[T],
    cutoff: Option<usize>,
) -> Option<Alignment> {
    assert_eq!(a.len(), b.len(), "swap/change distance on unequal lengths");
    let n = a.len();
    let limit = cutoff.map(|c| c as u32);

    let mut prefix: Vec<Option<(Cost, PrefixStep)>> = vec![None; n + 1];
    prefix[0] = Some((Cost::ZERO, PrefixStep::Keep));
    // layers[k]: open blocks whose swap across boundary (k, k+1) is counted.
    let mut layers: Vec<Vec<BlockState<T>>> = Vec::with_capacity(n);

    for i in 0..n {
        let here = prefix[i].map(|(c, _)| c);
        let mismatch = a[i] != b[i];

        if let Some(c) = here {
            let step = if mismatch {
                (c.change(), PrefixStep::Change)
            } else {
                (c, PrefixStep::Keep)
            };
            relax_prefix(&mut prefix[i + 1], step.0, step.1);
        }

        let mut layer = Vec::new();
        if mismatch {
            if i >= 1 {
                for (idx, st) in layers[i - 1].iter().enumerate() {
                    if a[i] == st.owed && b[i] == st.carried {
                        relax_prefix(&mut prefix[i + 1], st.cost, PrefixStep::Close { state: idx });
                    }
                }
            }
            if i + 1 < n {
                let mut index: HashMap<(T, T), usize> = HashMap::new();
                if i >= 1 {
                    for (idx, st) in layers[i - 1].iter().enumerate() {
                        if b[i] == st.carried {
                            push_state(&mut layer, &mut index, a[i], st.owed, st.cost.swap(),
                                BlockLink::Extend { prev: idx, exit: Exit::Right });
                        }
                        if a[i] == st.owed {
                            push_state(&mut layer, &mut index, st.carried, b[i], st.cost.swap(),
                                BlockLink::Extend { prev: idx, exit: Exit::Left });
                        }
                    }
                }
                if let Some(c) = here {
                    push_state(&mut layer, &mut index, a[i], b[i], c.swap(), BlockLink::Start);
                }
            }
        }
        layers.push(layer);

        if let Some(limit) = limit {
            let best = prefix[i + 1]
                .map(|(c, _)| c.ops)
                .into_iter()
                .chain(layers[i].iter().map(|s| s.cost.ops))
                .min();
            match best {
                Some(ops) if ops <= limit => {}
                _ => return None,
            }
        }
    }

    let (total, _) = prefix[n].expect("singleton path always reaches the end");
    if limit.is_some_and(|l| total.ops > l) {
        return None;
    }

    let mut al = Alignment::default();
    let mut i = n;
    while i > 0 {
        let (_, step) = prefix[i].expect("traceback through reachable prefix");
        match step {
            PrefixStep::Keep => i -= 1,
            PrefixStep::Change => {
                al.changes.push(i - 1);
                i -= 1;
            }
            PrefixStep::Close { state } => {
                let end = i - 1;
                let mut exits = Vec::new();
                let mut k = end - 1;
                let mut idx = state;
                let start = loop {
                    match layers[k][idx].link {
                        BlockLink::Start => break k,
                        BlockLink::Extend { prev, exit } => {
                            exits.push(exit);
                            idx = prev;
                            k -= 1;
                        }
                    }
                };
                exits.reverse();
                al.blocks.push(SwapBlock { start, end, exits });
                i = start;
            }
        }
    }
    al.changes.reverse();
    al.blocks.reverse();
    debug_assert_eq!(al.cost() as u32, total.ops);
    Some(al)
}

fn relax_prefix(slot: &mut Option<(Cost, PrefixStep)>, cost: Cost, step: PrefixStep) {
    if slot.is_none_or(|(c, _)| cost < c) {
        *slot = Some((cost, step));
    }
}

fn push_state<T: Copy + Eq + Hash>(
    layer: &mut Vec<BlockState<T>>,
    index: &mut HashMap<(T, T), usize>,
    carried: T,
    owed: T,
    cost: Cost,
    link: BlockLink,
) {
    match index.get(&(carried, owed)) {
        Some(&at) => {
            if cost < layer[at].cost {
                layer[at].cost = cost;
                layer[at].link = link;
            }
        }
        None => {
            index.insert((carried, owed), layer.len());
            layer.push(BlockState {
                carried,
                owed,
                cost,
                link,
            });
        }
    }
}

/// Unrestricted Damerau–Levenshtein distance (Lowrance–Wagner).
pub fn damerau_levenshtein_slices<T: Copy + Eq + Hash>(a: &[T], b: &[T]) -> usize {
    let (la, lb) = (a.len(), b.len());
    if la == 0 {
        return lb;
    }
    if lb == 0 {
        return la;
    }
    let inf = la + lb;
    let w = lb + 2;
    let mut h = vec![0usize; (la + 2) * w];
    h[0] = inf;
    for i in 0..=la {
        h[(i + 1) * w] = inf;
        h[(i + 1) * w + 1] = i;
    }
    for j in 0..=lb {
        h[j + 1] = inf;
        h[w + j + 1] = j;
    }
    let mut last_row: HashMap<T, usize> = HashMap::new();
    for i in 1..=la {
        let mut last_col = 0;
        for j in 1..=lb {
            let i1 = last_row.get(&b[j - 1]).copied().unwrap_or(0);
            let j1 = last_col;
            let cost = if a[i - 1] == b[j - 1] {
                last_col = j;
                0
            } else {
                1
            };
            let sub = h[i * w + j] + cost;
            let ins = h[(i + 1) * w + j] + 1;
            let del = h[i * w + j + 1] + 1;
            let trans = h[i1 * w + j1] + (i - i1 - 1) + 1 + (j - j1 - 1);
            h[(i + 1) * w + j + 1] = sub.min(ins).min(del).min(trans);
        }
        last_row.insert(a[i - 1], i);
    }
    h[(la + 1) * w + lb + 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &[u16]) -> SymbolString {
        SymbolString::new(v.to_vec(), 8).unwrap()
    }

    fn apply(a: &[u16], b: &[u16], al: &Alignment) -> Vec<u16> {
        let mut out = a.to_vec();
        for block in &al.blocks {
            for k in block.swap_order() {
                out.swap(k, k + 1);
            }
        }
        for &c in &al.changes {
            out[c] = b[c];
        }
        out
    }

    #[test]
    fn hamming_by_inspection() {
        assert_eq!(hamming(&s(&[1, 0, 1, 0]), &s(&[1, 0, 0, 1])).unwrap(), 2);
        assert_eq!(hamming(&s(&[3, 4]), &s(&[3, 4])).unwrap(), 0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            hamming(&s(&[1, 2]), &s(&[1])),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(swap_change_distance(&s(&[1, 2]), &s(&[1])).is_err());
    }

    #[test]
    fn single_adjacent_swap() {
        assert_eq!(swap_change_distance(&s(&[2, 1]), &s(&[1, 2])).unwrap(), 1);
        assert_eq!(damerau_levenshtein(&s(&[2, 1]), &s(&[1, 2])), 1);
    }

    #[test]
    fn rotations_use_overlapping_swaps() {
        // abc -> bca: two swaps, where a single pass of swap-or-substitute
        // would pay three.
        assert_eq!(swap_change_distance(&s(&[0, 1, 2]), &s(&[1, 2, 0])).unwrap(), 2);
        assert_eq!(swap_change_distance(&s(&[0, 1, 2]), &s(&[2, 0, 1])).unwrap(), 2);
        // a Coxeter element that is not a rotation: 1 3 0 2
        assert_eq!(swap_change_distance(&s(&[0, 1, 2, 3]), &s(&[1, 3, 0, 2])).unwrap(), 3);
    }

    #[test]
    fn damerau_levenshtein_is_unrestricted() {
        assert_eq!(damerau_levenshtein(&s(&[2, 0]), &s(&[0, 1, 2])), 2);
        assert_eq!(damerau_levenshtein(&s(&[1, 2, 3]), &s(&[])), 3);
        assert_eq!(damerau_levenshtein(&s(&[]), &s(&[7])), 1);
    }

    #[test]
    fn cutoff_stops_early() {
        let a: Vec<u16> = (0..50).collect();
        let b: Vec<u16> = (100..150).collect();
        assert!(swap_change_alignment(&a, &b, Some(8)).is_none());
        assert_eq!(swap_change_alignment(&a, &b, Some(50)).unwrap().cost(), 50);
    }

    #[test]
    fn swap_order_realizes_every_coxeter_shape() {
        for len in 2..7usize {
            for mask in 0..(1u32 << (len - 2)) {
                let exits: Vec<Exit> = (0..len - 2)
                    .map(|i| if mask >> i & 1 == 1 { Exit::Right } else { Exit::Left })
                    .collect();
                let block = SwapBlock { start: 0, end: len - 1, exits };
                let order = block.swap_order();
                assert_eq!(order.len(), len - 1);
                let mut v: Vec<u16> = (0..len as u16).collect();
                for k in order {
                    v.swap(k, k + 1);
                }
                let al = swap_change_alignment(&(0..len as u16).collect::<Vec<_>>(), &v, None).unwrap();
                assert_eq!(al.cost(), len - 1);
            }
        }
    }

    proptest! {
        #[test]
        fn alignment_script_reproduces_target(
            pair in (1usize..40).prop_flat_map(|n| (
                proptest::collection::vec(0u16..4, n),
                proptest::collection::vec(0u16..4, n),
            ))
        ) {
            let (a, b) = pair;
            let al = swap_change_alignment(&a, &b, None).unwrap();
            prop_assert_eq!(apply(&a, &b, &al), b.clone());
            prop_assert!(al.cost() <= hamming_slices(&a, &b));
            prop_assert!(al.cost() >= hamming_slices(&a, &b).div_ceil(2));
        }

        #[test]
        fn metric_ordering_and_symmetry(
            triple in (0usize..12).prop_flat_map(|n| (
                proptest::collection::vec(0u16..3, n),
                proptest::collection::vec(0u16..3, n),
                proptest::collection::vec(0u16..3, n),
            ))
        ) {
            let (a, b, c) = triple;
            let (sa, sb, sc) = (s(&a), s(&b), s(&c));
            let h = hamming(&sa, &sb).unwrap();
            let sw = swap_change_distance(&sa, &sb).unwrap();
            let dl = damerau_levenshtein(&sa, &sb);
            prop_assert!(dl <= sw && sw <= h);
            prop_assert_eq!(sw, swap_change_distance(&sb, &sa).unwrap());
            prop_assert_eq!(h, hamming(&sb, &sa).unwrap());
            prop_assert!(sw <= swap_change_distance(&sa, &sc).unwrap() + swap_change_distance(&sc, &sb).unwrap());
            prop_assert!(h <= hamming(&sa, &sc).unwrap() + hamming(&sc, &sb).unwrap());
        }

        #[test]
        fn dl_bounded_below_by_length_gap(
            a in proptest::collection::vec(0u16..3, 0..10),
            b in proptest::collection::vec(0u16..3, 0..10),
        ) {
            prop_assert!(damerau_levenshtein(&s(&a), &s(&b)) >= a.len().abs_diff(b.len()));
        }
    }
}
