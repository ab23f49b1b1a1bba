//! Fixtures and independent oracles shared by the integration tests. The
//! oracles work on plain vectors and avoid the library's parsing and
//! matrix code.

#![allow(dead_code)]

use std::collections::HashMap;

use markov_codes::{
    verify_markov_code, CodeCandidate, EventuallyPeriodicPoint, MarkovCode, Symbol, TransitionMatrix,
};

pub const A1: &[&[i64]] = &[&[1, 1], &[1, 0]];
pub const A2: &[&[i64]] = &[&[0, 1, 0], &[0, 0, 1], &[1, 1, 0]];
pub const A3: &[&[i64]] = &[&[1, 1, 1], &[1, 0, 1], &[1, 0, 0]];

pub const C1: &[&[Symbol]] = &[&[1], &[2, 1]];
pub const C2: &[&[Symbol]] = &[&[1, 2], &[2, 3], &[3, 2, 3], &[3, 1, 2]];
pub const C3: &[&[Symbol]] = &[&[1], &[2, 1], &[3, 1], &[2, 3, 1]];

pub fn rows(raw: &[&[i64]]) -> Vec<Vec<i64>> {
    raw.iter().map(|r| r.to_vec()).collect()
}

pub fn matrix(raw: &[&[i64]]) -> TransitionMatrix {
    TransitionMatrix::new(&rows(raw)).unwrap()
}

pub fn full(n: usize) -> TransitionMatrix {
    TransitionMatrix::full_shift(n).unwrap()
}

pub fn code(raw: &[&[i64]], words: &[&[Symbol]]) -> MarkovCode {
    verify_markov_code(&CodeCandidate::from_symbols(matrix(raw), words).unwrap(), 8).unwrap()
}

pub fn point(pre: &[Symbol], per: &[Symbol]) -> EventuallyPeriodicPoint {
    EventuallyPeriodicPoint::new(pre.to_vec(), per.to_vec()).unwrap()
}

pub fn allowed(raw: &[Vec<i64>], a: Symbol, b: Symbol) -> bool {
    raw[a as usize - 1][b as usize - 1] == 1
}

/// `A(C)(i, j) = A(last ω(i), first ω(j))`, straight from the definition.
pub fn coded_matrix_oracle(raw: &[Vec<i64>], words: &[Vec<Symbol>]) -> Vec<Vec<u8>> {
    words
        .iter()
        .map(|u| {
            words
                .iter()
                .map(|v| u8::from(allowed(raw, *u.last().unwrap(), v[0])))
                .collect()
        })
        .collect()
}

/// First `len` symbols of `pre · per · per ⋯`.
pub fn expand(x: &EventuallyPeriodicPoint, len: usize) -> Vec<Symbol> {
    x.preperiod()
        .iter()
        .chain(x.period().iter().cycle())
        .take(len)
        .copied()
        .collect()
}

/// Greedy left-to-right factorization of `s` into code words by linear scan.
/// Returns the indices and the number of symbols consumed.
pub fn greedy_parse_oracle(words: &[Vec<Symbol>], s: &[Symbol]) -> (Vec<Symbol>, usize) {
    let mut out = Vec::new();
    let mut pos = 0;
    'scan: while pos < s.len() {
        for (i, w) in words.iter().enumerate() {
            if s.len() - pos >= w.len() && s[pos..pos + w.len()] == w[..] {
                out.push(i as Symbol + 1);
                pos += w.len();
                continue 'scan;
            }
        }
        break;
    }
    (out, pos)
}

/// Cylinders `[u]` and `[v]` meet iff the words agree on their common length.
pub fn cylinders_intersect(u: &[Symbol], v: &[Symbol]) -> bool {
    u.iter().zip(v).all(|(a, b)| a == b)
}

/// Two distinct index sequences of at most `max_words` words with equal
/// concatenations.
pub fn double_factorization_oracle(words: &[Vec<Symbol>], max_words: usize) -> bool {
    let mut seen: HashMap<Vec<Symbol>, Vec<usize>> = HashMap::new();
    let mut layer: Vec<(Vec<usize>, Vec<Symbol>)> = vec![(Vec::new(), Vec::new())];
    for _ in 0..max_words {
        let mut next = Vec::new();
        for (seq, s) in &layer {
            for (i, w) in words.iter().enumerate() {
                let mut seq2 = seq.clone();
                seq2.push(i);
                let mut s2 = s.clone();
                s2.extend_from_slice(w);
                if let Some(other) = seen.get(&s2) {
                    if *other != seq2 {
                        return true;
                    }
                }
                seen.insert(s2.clone(), seq2.clone());
                next.push((seq2, s2));
            }
        }
        layer = next;
    }
    false
}
