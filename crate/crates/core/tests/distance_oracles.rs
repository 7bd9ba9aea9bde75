//! Every metric against breadth-first search over its edit graph.

use std::collections::{HashMap, VecDeque};

use bifrost_core::distance::{damerau_levenshtein_slices, hamming_slices, swap_change_alignment};

type Word = Vec<u8>;

fn all_words(alphabet: u8, max_len: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for c in 0..alphabet {
                let mut v: Word = w.clone();
                v.push(c);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[derive(Clone, Copy)]
struct Ops {
    change: bool,
    swap: bool,
    indel: bool,
}

fn neighbours(w: &Word, alphabet: u8, ops: Ops, max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    if ops.change {
        for i in 0..w.len() {
            for c in 0..alphabet {
                if c != w[i] {
                    let mut v = w.clone();
                    v[i] = c;
                    out.push(v);
                }
            }
        }
    }
    if ops.swap {
        for i in 0..w.len().saturating_sub(1) {
            if w[i] != w[i + 1] {
                let mut v = w.clone();
                v.swap(i, i + 1);
                out.push(v);
            }
        }
    }
    if ops.indel {
        for i in 0..w.len() {
            let mut v = w.clone();
            v.remove(i);
            out.push(v);
        }
        if w.len() < max_len {
            for i in 0..=w.len() {
                for c in 0..alphabet {
                    let mut v = w.clone();
                    v.insert(i, c);
                    out.push(v);
                }
            }
        }
    }
    out
}

fn bfs(src: &Word, alphabet: u8, ops: Ops, max_len: usize) -> HashMap<Word, usize> {
    let mut dist = HashMap::from([(src.clone(), 0)]);
    let mut queue = VecDeque::from([src.clone()]);
    while let Some(w) = queue.pop_front() {
        let d = dist[&w];
        for v in neighbours(&w, alphabet, ops, max_len) {
            if !dist.contains_key(&v) {
                dist.insert(v.clone(), d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

fn check_same_length(alphabet: u8, max_len: usize, ops: Ops, metric: impl Fn(&[u8], &[u8]) -> usize) -> usize {
    let words = all_words(alphabet, max_len);
    let mut pairs = 0;
    for a in &words {
        let dist = bfs(a, alphabet, ops, a.len());
        for b in words.iter().filter(|b| b.len() == a.len()) {
            assert_eq!(metric(a, b), dist[b], "{a:?} -> {b:?}");
            pairs += 1;
        }
    }
    pairs
}

const HAMMING: Ops = Ops { change: true, swap: false, indel: false };
const SWAP_CHANGE: Ops = Ops { change: true, swap: true, indel: false };
const FULL: Ops = Ops { change: true, swap: true, indel: true };

#[test]
fn hamming_matches_bfs() {
    let pairs = check_same_length(3, 4, HAMMING, hamming_slices);
    assert_eq!(pairs, 1 + 9 + 81 + 729 + 6561);
}

#[test]
fn swap_change_matches_bfs_alphabet_3() {
    check_same_length(3, 4, SWAP_CHANGE, |a, b| swap_change_alignment(a, b, None).unwrap().cost());
}

#[test]
fn swap_change_matches_bfs_alphabet_4_length_5() {
    check_same_length(4, 5, SWAP_CHANGE, |a, b| swap_change_alignment(a, b, None).unwrap().cost());
}

#[test]
fn swap_change_matches_bfs_on_longer_binary_words() {
    check_same_length(2, 8, SWAP_CHANGE, |a, b| swap_change_alignment(a, b, None).unwrap().cost());
}

#[test]
fn cutoff_agrees_with_full_distance() {
    let words = all_words(3, 4);
    for a in &words {
        for b in words.iter().filter(|b| b.len() == a.len()) {
            let d = swap_change_alignment(a, b, None).unwrap().cost();
            for t in 0..=4 {
                let cut = swap_change_alignment(a, b, Some(t));
                assert_eq!(cut.map(|al| al.cost()), (d <= t).then_some(d), "{a:?} {b:?} t={t}");
            }
        }
    }
}

#[test]
fn damerau_levenshtein_matches_bfs() {
    // intermediate words may be longer than both endpoints
    let words = all_words(3, 4);
    let mut pairs = 0;
    for a in &words {
        let dist = bfs(a, 3, FULL, 6);
        for b in &words {
            assert_eq!(damerau_levenshtein_slices(a, b), dist[b], "{a:?} -> {b:?}");
            pairs += 1;
        }
    }
    assert_eq!(pairs, 121 * 121);
}
