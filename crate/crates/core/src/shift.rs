//! Transition matrices, admissible words, cylinders and exact eventually
//! periodic points of one-sided topological Markov shifts.
//!
//! Symbols are 1-based throughout: a matrix of size `n` has alphabet
//! `{1, ..., n}`.

use std::fmt;

use thiserror::Error;

/// A vertex label in `1..=n`.
pub type Symbol = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("matrix is empty")]
    Empty,
    #[error("row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("entry ({row}, {col}) is {value}, expected 0 or 1")]
    NotZeroOne { row: usize, col: usize, value: i64 },
    #[error("matrix is not irreducible: state {to} is unreachable from state {from}")]
    NotIrreducible { from: usize, to: usize },
    #[error("matrix is a permutation matrix")]
    IsPermutation,
}

impl MatrixError {
    /// Stable machine-readable code.
    pub fn reason(&self) -> &'static str {
        match self {
            MatrixError::Empty => "empty",
            MatrixError::NotSquare { .. } => "not_square",
            MatrixError::NotZeroOne { .. } => "not_zero_one",
            MatrixError::NotIrreducible { .. } => "not_irreducible",
            MatrixError::IsPermutation => "is_permutation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShiftError {
    #[error("symbol {symbol} at position {position} is outside 1..={n}")]
    SymbolOutOfRange { symbol: Symbol, position: usize, n: usize },
    #[error("transition {from} -> {to} at position {position} is not allowed")]
    NotAdmissible { from: Symbol, to: Symbol, position: usize },
    #[error("period of an eventually periodic point must be nonempty")]
    EmptyPeriod,
    #[error("cylinder base must be nonempty")]
    EmptyCylinder,
}

/// Irreducible, non-permutation 0-1 square matrix. Doubles as the graph G_A.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TransitionMatrix {
    n: usize,
    entries: Vec<bool>,
}

impl fmt::Debug for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TransitionMatrix{:?}", self.to_rows())
    }
}

impl fmt::Display for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.n {
            let row: Vec<String> = (1..=self.n)
                .map(|j| if self.allows(i as Symbol, j as Symbol) { "1" } else { "0" }.to_string())
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Validates a raw integer matrix as a shift presentation.
pub fn validate_matrix(raw: &[Vec<i64>]) -> Result<TransitionMatrix, MatrixError> {
    TransitionMatrix::from_bool(BoolMatrix::from_raw(raw)?)
}

impl TransitionMatrix {
    pub fn new(raw: &[Vec<i64>]) -> Result<Self, MatrixError> {
        validate_matrix(raw)
    }

    /// The full `n`-shift, presented by the all-ones matrix.
    pub fn full_shift(n: usize) -> Result<Self, MatrixError> {
        validate_matrix(&vec![vec![1; n]; n])
    }

    pub(crate) fn from_bool(m: BoolMatrix) -> Result<Self, MatrixError> {
        if m.is_permutation() {
            return Err(MatrixError::IsPermutation);
        }
        m.check_irreducible()?;
        Ok(TransitionMatrix {
            n: m.n,
            entries: m.entries,
        })
    }

    /// Alphabet size N.
    pub fn size(&self) -> usize {
        self.n
    }

    /// `A(a, b) = 1`. Symbols are 1-based; out-of-range symbols are never allowed.
    pub fn allows(&self, a: Symbol, b: Symbol) -> bool {
        let (a, b) = (a as usize, b as usize);
        a >= 1 && b >= 1 && a <= self.n && b <= self.n && self.entries[(a - 1) * self.n + (b - 1)]
    }

    pub fn contains_symbol(&self, s: Symbol) -> bool {
        s >= 1 && (s as usize) <= self.n
    }

    pub fn successors(&self, a: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        (1..=self.n as Symbol).filter(move |&b| self.allows(a, b))
    }

    pub fn out_degree(&self, a: Symbol) -> usize {
        self.successors(a).count()
    }

    pub fn in_degree(&self, b: Symbol) -> usize {
        (1..=self.n as Symbol).filter(|&a| self.allows(a, b)).count()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.entries[i * self.n + j] as u8).collect())
            .collect()
    }

    /// Relabels states: the result `B` satisfies `B(perm[i], perm[j]) = A(i, j)`
    /// with 0-based `perm`.
    pub fn permuted(&self, perm: &[usize]) -> TransitionMatrix {
        let n = self.n;
        let mut entries = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[perm[i] * n + perm[j]] = self.entries[i * n + j];
            }
        }
        TransitionMatrix { n, entries }
    }

    /// `trace(A^k)`, the number of points of period dividing `k`.
    pub fn periodic_point_count(&self, k: usize) -> u128 {
        let n = self.n;
        let base: Vec<u128> = self.entries.iter().map(|&b| b as u128).collect();
        let mut power = identity(n);
        for _ in 0..k {
            power = mat_mul(&power, &base, n);
        }
        (0..n).map(|i| power[i * n + i]).sum()
    }

    /// Checks a raw symbol sequence against this matrix.
    pub fn check_word(&self, w: &[Symbol]) -> Result<(), ShiftError> {
        for (position, &s) in w.iter().enumerate() {
            if !self.contains_symbol(s) {
                return Err(ShiftError::SymbolOutOfRange {
                    symbol: s,
                    position,
                    n: self.n,
                });
            }
        }
        for (position, pair) in w.windows(2).enumerate() {
            if !self.allows(pair[0], pair[1]) {
                return Err(ShiftError::NotAdmissible {
                    from: pair[0],
                    to: pair[1],
                    position,
                });
            }
        }
        Ok(())
    }
}

fn identity(n: usize) -> Vec<u128> {
    let mut m = vec![0u128; n * n];
    for i in 0..n {
        m[i * n + i] = 1;
    }
    m
}

fn mat_mul(a: &[u128], b: &[u128], n: usize) -> Vec<u128> {
    let mut out = vec![0u128; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] = out[i * n + j].saturating_add(aik.saturating_mul(b[k * n + j]));
            }
        }
    }
    out
}

/// Unvalidated square 0-1 matrix used while building or amalgamating.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BoolMatrix {
    pub n: usize,
    pub entries: Vec<bool>,
}

impl BoolMatrix {
    pub fn from_raw(raw: &[Vec<i64>]) -> Result<Self, MatrixError> {
        let n = raw.len();
        if n == 0 {
            return Err(MatrixError::Empty);
        }
        let mut entries = Vec::with_capacity(n * n);
        for (row, r) in raw.iter().enumerate() {
            if r.len() != n {
                return Err(MatrixError::NotSquare {
                    row: row + 1,
                    len: r.len(),
                    expected: n,
                });
            }
            for (col, &value) in r.iter().enumerate() {
                match value {
                    0 => entries.push(false),
                    1 => entries.push(true),
                    _ => {
                        return Err(MatrixError::NotZeroOne {
                            row: row + 1,
                            col: col + 1,
                            value,
                        })
                    }
                }
            }
        }
        Ok(BoolMatrix { n, entries })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        BoolMatrix { n, entries }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j]
    }

    /// Transitive closure (paths of length >= 1), Warshall style.
    pub fn reachability(&self) -> Vec<bool> {
        let n = self.n;
        let mut r = self.entries.clone();
        for k in 0..n {
            for i in 0..n {
                if r[i * n + k] {
                    for j in 0..n {
                        if r[k * n + j] {
                            r[i * n + j] = true;
                        }
                    }
                }
            }
        }
        r
    }

    pub fn check_irreducible(&self) -> Result<(), MatrixError> {
        let r = self.reachability();
        let n = self.n;
        // Prefer reporting a pair of distinct states.
        let pairs = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .chain((0..n).map(|i| (i, i)));
        for (i, j) in pairs {
            if !r[i * n + j] {
                return Err(MatrixError::NotIrreducible { from: i + 1, to: j + 1 });
            }
        }
        Ok(())
    }

    pub fn is_permutation(&self) -> bool {
        let n = self.n;
        let rows_ok = (0..n).all(|i| (0..n).filter(|&j| self.get(i, j)).count() == 1);
        let cols_ok = (0..n).all(|j| (0..n).filter(|&i| self.get(i, j)).count() == 1);
        rows_ok && cols_ok
    }
}

/// Finite symbol sequence. Admissibility is relative to a matrix and checked
/// by the operations that take one.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn first(&self) -> Option<Symbol> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Symbol> {
        self.0.last().copied()
    }

    pub fn starts_with(&self, other: &Word) -> bool {
        self.0.starts_with(&other.0)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Drops the first symbol; the empty word stays empty.
    pub fn shifted(&self) -> Word {
        Word(self.0.iter().skip(1).copied().collect())
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl From<&[Symbol]> for Word {
    fn from(v: &[Symbol]) -> Self {
        Word(v.to_vec())
    }
}

/// Digits concatenated when every symbol is a single digit, dot-separated
/// otherwise. The empty word renders as `ε`.
pub fn render_symbols(w: &[Symbol]) -> String {
    if w.is_empty() {
        return "ε".to_string();
    }
    if w.iter().all(|&s| s <= 9) {
        w.iter().map(|s| s.to_string()).collect()
    } else {
        w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(".")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_symbols(&self.0))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({})", self)
    }
}

pub fn is_admissible(a: &TransitionMatrix, w: &[Symbol]) -> Result<bool, ShiftError> {
    match a.check_word(w) {
        Ok(()) => Ok(true),
        Err(ShiftError::NotAdmissible { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// All admissible words of length `k` in lexicographic order.
pub fn enumerate_words(a: &TransitionMatrix, k: usize) -> Vec<Word> {
    let mut out = Vec::new();
    if k == 0 {
        out.push(Word::empty());
        return out;
    }
    let mut stack = Vec::with_capacity(k);
    fn extend(a: &TransitionMatrix, k: usize, stack: &mut Vec<Symbol>, out: &mut Vec<Word>) {
        if stack.len() == k {
            out.push(Word(stack.clone()));
            return;
        }
        let candidates: Vec<Symbol> = match stack.last() {
            None => (1..=a.size() as Symbol).collect(),
            Some(&s) => a.successors(s).collect(),
        };
        for c in candidates {
            stack.push(c);
            extend(a, k, stack, out);
            stack.pop();
        }
    }
    extend(a, k, &mut stack, &mut out);
    out
}

/// The cylinder `U_base` of all points beginning with `base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderSet {
    base: Word,
}

impl CylinderSet {
    pub fn new(a: &TransitionMatrix, base: Word) -> Result<Self, ShiftError> {
        if base.is_empty() {
            return Err(ShiftError::EmptyCylinder);
        }
        a.check_word(base.symbols())?;
        Ok(CylinderSet { base })
    }

    pub fn base(&self) -> &Word {
        &self.base
    }

    pub fn contains(&self, x: &EventuallyPeriodicPoint) -> bool {
        point_in_cylinder(x, self)
    }
}

/// A point `pre · per · per · ...` held in canonical form: the period is
/// primitive and the preperiod cannot shrink by rotating the period.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventuallyPeriodicPoint {
    preperiod: Vec<Symbol>,
    period: Vec<Symbol>,
}

impl EventuallyPeriodicPoint {
    /// Builds and canonicalizes a point without checking admissibility.
    pub fn new(preperiod: Vec<Symbol>, period: Vec<Symbol>) -> Result<Self, ShiftError> {
        if period.is_empty() {
            return Err(ShiftError::EmptyPeriod);
        }
        let mut p = EventuallyPeriodicPoint { preperiod, period };
        p.canonicalize();
        Ok(p)
    }

    /// Builds a point and checks it lies in `X_A`.
    pub fn in_shift(
        a: &TransitionMatrix,
        preperiod: Vec<Symbol>,
        period: Vec<Symbol>,
    ) -> Result<Self, ShiftError> {
        let p = Self::new(preperiod, period)?;
        p.validate(a)?;
        Ok(p)
    }

    /// The fixed point `s^∞`.
    pub fn fixed(s: Symbol) -> Self {
        EventuallyPeriodicPoint {
            preperiod: Vec::new(),
            period: vec![s],
        }
    }

    /// `pre · per · per` admissible implies the whole infinite word is.
    pub fn validate(&self, a: &TransitionMatrix) -> Result<(), ShiftError> {
        let mut w = self.preperiod.clone();
        w.extend_from_slice(&self.period);
        w.extend_from_slice(&self.period);
        a.check_word(&w)
    }

    pub fn preperiod(&self) -> &[Symbol] {
        &self.preperiod
    }

    pub fn period(&self) -> &[Symbol] {
        &self.period
    }

    fn canonicalize(&mut self) {
        let root = primitive_root_len(&self.period);
        self.period.truncate(root);
        while let Some(&last) = self.preperiod.last() {
            if last != *self.period.last().unwrap() {
                break;
            }
            self.preperiod.pop();
            self.period.rotate_right(1);
        }
    }

    /// The symbol at 0-based position `i`.
    pub fn symbol_at(&self, i: usize) -> Symbol {
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    /// The first `len` symbols.
    pub fn prefix(&self, len: usize) -> Vec<Symbol> {
        (0..len).map(|i| self.symbol_at(i)).collect()
    }

    pub fn starts_with(&self, w: &[Symbol]) -> bool {
        w.iter().enumerate().all(|(i, &s)| self.symbol_at(i) == s)
    }

    /// `σ(x)`. The result is canonical whenever `self` is.
    pub fn shift(&self) -> Self {
        let mut p = self.clone();
        if p.preperiod.is_empty() {
            p.period.rotate_left(1);
        } else {
            p.preperiod.remove(0);
        }
        p
    }

    pub fn shift_by(&self, k: usize) -> Self {
        let pre = self.preperiod.len();
        if k <= pre {
            return EventuallyPeriodicPoint {
                preperiod: self.preperiod[k..].to_vec(),
                period: self.period.clone(),
            };
        }
        let mut period = self.period.clone();
        let r = (k - pre) % period.len();
        period.rotate_left(r);
        EventuallyPeriodicPoint {
            preperiod: Vec::new(),
            period,
        }
    }

    /// Length of a prefix on which two points must agree to be equal:
    /// `|pre_x| + |pre_y| + lcm(|per_x|, |per_y|)`.
    pub fn comparison_bound(&self, other: &Self) -> usize {
        self.preperiod.len()
            + other.preperiod.len()
            + lcm(self.period.len(), other.period.len())
    }
}

impl fmt::Display for EventuallyPeriodicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.preperiod.is_empty() {
            write!(f, "({})^∞", render_symbols(&self.period))
        } else {
            write!(
                f,
                "{}({})^∞",
                render_symbols(&self.preperiod),
                render_symbols(&self.period)
            )
        }
    }
}

impl fmt::Debug for EventuallyPeriodicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({})", self)
    }
}

fn primitive_root_len(w: &[Symbol]) -> usize {
    let n = w.len();
    (1..=n)
        .find(|&d| n % d == 0 && (d..n).all(|i| w[i] == w[i - d]))
        .unwrap_or(n)
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// `σ_A` on points. The matrix is only used to check the input.
pub fn shift_point(
    a: &TransitionMatrix,
    x: &EventuallyPeriodicPoint,
) -> Result<EventuallyPeriodicPoint, ShiftError> {
    x.validate(a)?;
    Ok(x.shift())
}

pub fn point_in_cylinder(x: &EventuallyPeriodicPoint, c: &CylinderSet) -> bool {
    x.starts_with(c.base().symbols())
}

/// The first `count` points of a fixed enumeration of eventually periodic
/// points of `X_A`: periods are the closed words of length 1, 2, … and each is
/// combined with every admissible preperiod of length at most 2.
pub fn sample_points(a: &TransitionMatrix, count: usize) -> Vec<EventuallyPeriodicPoint> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let prefixes: Vec<Word> = (0..=2).flat_map(|k| enumerate_words(a, k)).collect();
    let mut len = 1;
    while out.len() < count {
        for per in enumerate_words(a, len) {
            let (first, last) = (per.first().unwrap(), per.last().unwrap());
            if !a.allows(last, first) {
                continue;
            }
            for pre in &prefixes {
                if pre.last().is_some_and(|s| !a.allows(s, first)) {
                    continue;
                }
                let x = EventuallyPeriodicPoint::new(pre.0.clone(), per.0.clone())
                    .expect("period is nonempty");
                if seen.insert(x.clone()) {
                    out.push(x);
                    if out.len() == count {
                        return out;
                    }
                }
            }
        }
        len += 1;
    }
    out
}
