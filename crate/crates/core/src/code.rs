//! Codes over an admissible-word language: prefix and unique-decipherability
//! checks, greedy parsing, and the three conditions of a right Markov code.
//!
//! Code word indices are 1-based, so they double as the symbols of the coded
//! shift `A(C)`.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::shift::{enumerate_words, render_symbols, BoolMatrix, ShiftError, Symbol, TransitionMatrix, Word};

/// Default bound on candidate code sets visited by [`enumerate_markov_codes`].
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("a code needs at least one word")]
    Empty,
    #[error("code word {index} is empty")]
    EmptyWord { index: usize },
    #[error("code word {index} is not admissible: {source}")]
    NotAdmissible { index: usize, source: ShiftError },
    #[error("code words {first} and {second} are equal")]
    Duplicate { first: usize, second: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerationError {
    #[error("search budget exceeded: {count} candidate sets exceed the cap of {cap}")]
    SearchBudgetExceeded { count: u128, cap: u128 },
}

/// Prefix tree over the code words; lookups are linear in the word length.
#[derive(Debug, Clone, Default)]
struct Trie {
    nodes: Vec<TrieNode>,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: Vec<(Symbol, usize)>,
    word: Option<Symbol>,
}

impl Trie {
    fn build(words: &[Word]) -> Self {
        let mut t = Trie {
            nodes: vec![TrieNode::default()],
        };
        for (i, w) in words.iter().enumerate() {
            let mut node = 0;
            for &s in w.symbols() {
                node = match t.nodes[node].children.iter().find(|(c, _)| *c == s) {
                    Some(&(_, next)) => next,
                    None => {
                        t.nodes.push(TrieNode::default());
                        let next = t.nodes.len() - 1;
                        t.nodes[node].children.push((s, next));
                        next
                    }
                };
            }
            t.nodes[node].word.get_or_insert(i as Symbol + 1);
        }
        t
    }

    fn child(&self, node: usize, s: Symbol) -> Option<usize> {
        self.nodes[node]
            .children
            .iter()
            .find(|(c, _)| *c == s)
            .map(|&(_, n)| n)
    }

    /// Shortest code word that is a prefix of `s`.
    fn match_prefix(&self, s: &[Symbol]) -> Option<Symbol> {
        let mut node = 0;
        for &sym in s {
            node = self.child(node, sym)?;
            if let Some(w) = self.nodes[node].word {
                return Some(w);
            }
        }
        None
    }

    /// True if `s` is a proper prefix of some code word.
    fn is_proper_prefix(&self, s: &[Symbol]) -> bool {
        let mut node = 0;
        for &sym in s {
            match self.child(node, sym) {
                Some(n) => node = n,
                None => return false,
            }
        }
        !self.nodes[node].children.is_empty()
    }
}

/// A finite set of distinct nonempty admissible words, indexed `1..=M`.
#[derive(Clone)]
pub struct CodeCandidate {
    matrix: TransitionMatrix,
    words: Vec<Word>,
    trie: Trie,
}

impl PartialEq for CodeCandidate {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix && self.words == other.words
    }
}

impl Eq for CodeCandidate {}

impl fmt::Debug for CodeCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CodeCandidate({})", self)
    }
}

impl fmt::Display for CodeCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ws: Vec<String> = self.words.iter().map(|w| w.to_string()).collect();
        write!(f, "{{{}}}", ws.join(", "))
    }
}

impl CodeCandidate {
    pub fn new(matrix: TransitionMatrix, words: Vec<Word>) -> Result<Self, CodeError> {
        if words.is_empty() {
            return Err(CodeError::Empty);
        }
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() {
                return Err(CodeError::EmptyWord { index: i + 1 });
            }
            matrix
                .check_word(w.symbols())
                .map_err(|source| CodeError::NotAdmissible { index: i + 1, source })?;
        }
        let mut seen: BTreeMap<&Word, usize> = BTreeMap::new();
        for (i, w) in words.iter().enumerate() {
            if let Some(&first) = seen.get(w) {
                return Err(CodeError::Duplicate {
                    first: first + 1,
                    second: i + 1,
                });
            }
            seen.insert(w, i);
        }
        let trie = Trie::build(&words);
        Ok(CodeCandidate { matrix, words, trie })
    }

    pub fn from_symbols(matrix: TransitionMatrix, words: &[&[Symbol]]) -> Result<Self, CodeError> {
        Self::new(matrix, words.iter().map(|w| Word(w.to_vec())).collect())
    }

    /// The trivial code `Σ_A`.
    pub fn trivial(matrix: TransitionMatrix) -> Self {
        let words = (1..=matrix.size() as Symbol).map(|s| Word(vec![s])).collect();
        Self::new(matrix, words).expect("single symbols form a valid candidate")
    }

    pub fn matrix(&self) -> &TransitionMatrix {
        &self.matrix
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// `ω(i)` for 1-based `i`.
    pub fn word(&self, i: Symbol) -> &Word {
        &self.words[i as usize - 1]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// `K0`, the longest word length.
    pub fn max_word_len(&self) -> usize {
        self.words.iter().map(Word::len).max().unwrap_or(0)
    }

    /// Concatenation `ω(i_1)⋯ω(i_k)`.
    pub fn concat(&self, indices: &[Symbol]) -> Vec<Symbol> {
        let mut out = Vec::new();
        for &i in indices {
            out.extend_from_slice(self.word(i).symbols());
        }
        out
    }

    /// The code word that prefixes `s`, if any. Unique for prefix codes.
    pub fn match_prefix(&self, s: &[Symbol]) -> Option<Symbol> {
        self.trie.match_prefix(s)
    }

    pub fn is_proper_prefix_of_word(&self, s: &[Symbol]) -> bool {
        self.trie.is_proper_prefix(s)
    }

    /// `A(r(ω(i)), s(ω(j)))`: whether `ω(i)ω(j)` is admissible.
    pub fn follows(&self, i: Symbol, j: Symbol) -> bool {
        self.matrix
            .allows(self.word(i).last().unwrap(), self.word(j).first().unwrap())
    }

    pub(crate) fn coded_bool_matrix(&self) -> BoolMatrix {
        let m = self.len();
        BoolMatrix::from_fn(m, |i, j| self.follows(i as Symbol + 1, j as Symbol + 1))
    }

    fn parse_symbols(&self, s: &[Symbol]) -> ParseResult {
        let mut indices = Vec::new();
        let mut pos = 0;
        while pos < s.len() {
            match self.match_prefix(&s[pos..]) {
                Some(i) => {
                    indices.push(i);
                    pos += self.word(i).len();
                }
                None => {
                    let status = if self.is_proper_prefix_of_word(&s[pos..]) {
                        ParseStatus::Dangling(Word(s[pos..].to_vec()))
                    } else {
                        ParseStatus::Stuck(pos)
                    };
                    return ParseResult {
                        indices,
                        consumed: pos,
                        status,
                    };
                }
            }
        }
        ParseResult {
            indices,
            consumed: pos,
            status: ParseStatus::Complete,
        }
    }
}

/// Two code words whose cylinders intersect (the first prefixes the second).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixViolation {
    pub prefix: Symbol,
    pub word: Symbol,
    pub prefix_word: Word,
    pub longer_word: Word,
}

impl fmt::Display for PrefixViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.prefix_word, self.longer_word)
    }
}

/// No word is a prefix of another. Returns the first offending ordered pair.
pub fn is_prefix_code(c: &CodeCandidate) -> Result<(), PrefixViolation> {
    for (i, u) in c.words().iter().enumerate() {
        for (j, v) in c.words().iter().enumerate() {
            if i != j && v.starts_with(u) {
                return Err(PrefixViolation {
                    prefix: i as Symbol + 1,
                    word: j as Symbol + 1,
                    prefix_word: u.clone(),
                    longer_word: v.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Two distinct index sequences with equal concatenations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleFactorization {
    pub left: Vec<Symbol>,
    pub right: Vec<Symbol>,
}

/// Unique decipherability under free concatenation (Sardinas–Patterson).
pub fn is_code(c: &CodeCandidate) -> Result<(), DoubleFactorization> {
    struct Pending {
        dangling: Vec<Symbol>,
        ahead: Vec<Symbol>,
        behind: Vec<Symbol>,
    }
    let words = c.words();
    let mut queue = VecDeque::new();
    let mut seen: HashSet<Vec<Symbol>> = HashSet::new();
    for (i, u) in words.iter().enumerate() {
        for (j, v) in words.iter().enumerate() {
            if i != j && v.len() > u.len() && v.starts_with(u) {
                let d = v.symbols()[u.len()..].to_vec();
                if seen.insert(d.clone()) {
                    queue.push_back(Pending {
                        dangling: d,
                        ahead: vec![j as Symbol + 1],
                        behind: vec![i as Symbol + 1],
                    });
                }
            }
        }
    }
    // Invariant: concat(behind) · dangling == concat(ahead).
    while let Some(p) = queue.pop_front() {
        for (k, w) in words.iter().enumerate() {
            let k = k as Symbol + 1;
            let w = w.symbols();
            if w == p.dangling.as_slice() {
                let mut left = p.behind.clone();
                left.push(k);
                return Err(DoubleFactorization {
                    left,
                    right: p.ahead.clone(),
                });
            }
            let next = if p.dangling.starts_with(w) {
                let mut behind = p.behind.clone();
                behind.push(k);
                Pending {
                    dangling: p.dangling[w.len()..].to_vec(),
                    ahead: p.ahead.clone(),
                    behind,
                }
            } else if w.starts_with(&p.dangling) {
                let mut ahead = p.behind.clone();
                ahead.push(k);
                Pending {
                    dangling: w[p.dangling.len()..].to_vec(),
                    ahead,
                    behind: p.ahead.clone(),
                }
            } else {
                continue;
            };
            if seen.insert(next.dangling.clone()) {
                queue.push_back(next);
            }
        }
    }
    Ok(())
}

/// Every admissible word of length `K0` has a code-word prefix; otherwise an
/// uncovered word is returned. Assumes the prefix property.
pub fn check_factorization_complete(c: &CodeCandidate) -> Result<(), Word> {
    let k0 = c.max_word_len();
    match enumerate_words(c.matrix(), k0)
        .into_iter()
        .find(|w| c.match_prefix(w.symbols()).is_none())
    {
        Some(w) => Err(w),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseStatus {
    Complete,
    /// No code word prefixes the remainder at this offset.
    Stuck(usize),
    /// The remainder is a proper prefix of a code word.
    Dangling(Word),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseResult {
    pub indices: Vec<Symbol>,
    pub consumed: usize,
    pub status: ParseStatus,
}

impl ParseResult {
    pub fn is_complete(&self) -> bool {
        self.status == ParseStatus::Complete
    }
}

/// Greedy left-to-right factorization of `w`.
pub fn parse_word(c: &CodeCandidate, w: &Word) -> ParseResult {
    c.parse_symbols(w.symbols())
}

/// One row of the shift-invariance table: the parse of
/// `σ(ω(i_1))ω(i_2)⋯ω(i_L)` as `ω(j_1)⋯ω(j_k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftEntry {
    pub tuple: Vec<Symbol>,
    pub replacement: Vec<Symbol>,
}

impl ShiftEntry {
    pub fn k(&self) -> usize {
        self.replacement.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShiftInvariance {
    MinimalL { l: usize, table: Vec<ShiftEntry> },
    /// No `L <= l_max` works. Not a disproof.
    Inconclusive { l_max: usize, witness: Vec<Symbol> },
}

/// Parse state after feeding code words into the greedy parser: the pending
/// remainder (`None` once stuck) and the last base symbol seen.
type ParseState = (Option<Vec<Symbol>>, Symbol);

fn initial_states(c: &CodeCandidate) -> BTreeMap<ParseState, Vec<Symbol>> {
    let mut states = BTreeMap::new();
    for i in 1..=c.len() as Symbol {
        let w = c.word(i);
        let state = (residue(c, &w.symbols()[1..]), w.last().unwrap());
        states.entry(state).or_insert_with(|| vec![i]);
    }
    states
}

fn residue(c: &CodeCandidate, s: &[Symbol]) -> Option<Vec<Symbol>> {
    let r = c.parse_symbols(s);
    match r.status {
        ParseStatus::Complete => Some(Vec::new()),
        ParseStatus::Dangling(rest) => Some(rest.0),
        ParseStatus::Stuck(_) => None,
    }
}

fn step_state(c: &CodeCandidate, state: &ParseState, j: Symbol) -> ParseState {
    let w = c.word(j);
    let rem = state.0.as_ref().and_then(|r| {
        let mut s = r.clone();
        s.extend_from_slice(w.symbols());
        residue(c, &s)
    });
    (rem, w.last().unwrap())
}

fn successors_of(c: &CodeCandidate, last: Symbol) -> impl Iterator<Item = Symbol> + '_ {
    (1..=c.len() as Symbol).filter(move |&j| c.matrix().allows(last, c.word(j).first().unwrap()))
}

/// Least `L <= l_max` satisfying shift invariance, without building tables.
///
/// A complete parse stays complete when more code words are appended, so the
/// question reduces to the graph of pending remainders: `L` exists iff no
/// stuck remainder is reachable and the remainders form no cycle, and then
/// `L - 1` is the longest chain of pending remainders.
pub fn minimal_shift_constant(c: &CodeCandidate, l_max: usize) -> Option<usize> {
    enum Mark {
        Open,
        Done(usize),
    }
    fn depth(c: &CodeCandidate, r: &[Symbol], marks: &mut HashMap<Vec<Symbol>, Mark>, l_max: usize) -> Option<usize> {
        match marks.get(r) {
            Some(Mark::Open) => return None,
            Some(&Mark::Done(d)) => return Some(d),
            None => {}
        }
        marks.insert(r.to_vec(), Mark::Open);
        let mut d = 0;
        for j in successors_of(c, *r.last().unwrap()) {
            let mut s = r.to_vec();
            s.extend_from_slice(c.word(j).symbols());
            let next = residue(c, &s)?;
            if !next.is_empty() {
                d = d.max(depth(c, &next, marks, l_max)?);
                if d + 2 > l_max {
                    return None;
                }
            }
        }
        marks.insert(r.to_vec(), Mark::Done(d + 1));
        Some(d + 1)
    }
    let mut marks = HashMap::new();
    let mut longest = 0;
    for i in 1..=c.len() as Symbol {
        let r = residue(c, &c.word(i).symbols()[1..])?;
        if !r.is_empty() {
            longest = longest.max(depth(c, &r, &mut marks, l_max)?);
        }
    }
    (longest < l_max).then_some(longest + 1)
}

fn shift_table(c: &CodeCandidate, l: usize) -> Vec<ShiftEntry> {
    let mut table = Vec::new();
    let mut tuple = Vec::with_capacity(l);
    fn walk(c: &CodeCandidate, l: usize, tuple: &mut Vec<Symbol>, table: &mut Vec<ShiftEntry>) {
        if tuple.len() == l {
            let mut s = c.concat(tuple);
            s.remove(0);
            let parse = c.parse_symbols(&s);
            debug_assert!(parse.is_complete());
            table.push(ShiftEntry {
                tuple: tuple.clone(),
                replacement: parse.indices,
            });
            return;
        }
        let next: Vec<Symbol> = match tuple.last() {
            None => (1..=c.len() as Symbol).collect(),
            Some(&i) => successors_of(c, c.word(i).last().unwrap()).collect(),
        };
        for j in next {
            tuple.push(j);
            walk(c, l, tuple, table);
            tuple.pop();
        }
    }
    walk(c, l, &mut tuple, &mut table);
    table
}

/// Lexicographically least admissible tuple of length `l_max` whose shifted
/// concatenation does not parse completely.
fn failing_tuple(c: &CodeCandidate, l_max: usize) -> Vec<Symbol> {
    let mut states = initial_states(c);
    for _ in 1..l_max {
        let mut next: BTreeMap<ParseState, Vec<Symbol>> = BTreeMap::new();
        for (state, tuple) in &states {
            for j in successors_of(c, state.1) {
                let s = step_state(c, state, j);
                let mut t = tuple.clone();
                t.push(j);
                match next.get(&s) {
                    Some(existing) if *existing <= t => {}
                    _ => {
                        next.insert(s, t);
                    }
                }
            }
        }
        states = next;
    }
    states
        .into_iter()
        .filter(|((r, _), _)| !matches!(r, Some(v) if v.is_empty()))
        .map(|(_, t)| t)
        .min()
        .unwrap_or_default()
}

/// Searches `L = 1..=l_max` for the shift-invariance constant. The empty parse
/// (`k = 0`) counts as complete.
pub fn check_shift_invariance(c: &CodeCandidate, l_max: usize) -> ShiftInvariance {
    match minimal_shift_constant(c, l_max) {
        Some(l) => ShiftInvariance::MinimalL {
            l,
            table: shift_table(c, l),
        },
        None => ShiftInvariance::Inconclusive {
            l_max,
            witness: failing_tuple(c, l_max),
        },
    }
}

/// `A(C)` is irreducible. Direct adjacency `ω(i)ω(j)` counts as a chain.
pub fn check_code_irreducibility(c: &CodeCandidate) -> bool {
    c.coded_bool_matrix().check_irreducible().is_ok()
}

/// A verified right Markov code with its derived constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovCode {
    candidate: CodeCandidate,
    min_l: usize,
    table: Vec<ShiftEntry>,
}

impl MarkovCode {
    pub fn candidate(&self) -> &CodeCandidate {
        &self.candidate
    }

    pub fn matrix(&self) -> &TransitionMatrix {
        self.candidate.matrix()
    }

    pub fn words(&self) -> &[Word] {
        self.candidate.words()
    }

    pub fn word(&self, i: Symbol) -> &Word {
        self.candidate.word(i)
    }

    /// Number of code words `M`.
    pub fn len(&self) -> usize {
        self.candidate.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn k0(&self) -> usize {
        self.candidate.max_word_len()
    }

    /// Least shift-invariance constant `L` found.
    pub fn min_l(&self) -> usize {
        self.min_l
    }

    pub fn shift_table(&self) -> &[ShiftEntry] {
        &self.table
    }

    /// `s(ω(i))`.
    pub fn source(&self, i: Symbol) -> Symbol {
        self.word(i).first().unwrap()
    }

    /// `r(ω(i))`.
    pub fn range(&self, i: Symbol) -> Symbol {
        self.word(i).last().unwrap()
    }

    /// `ℓ(i)`.
    pub fn length(&self, i: Symbol) -> usize {
        self.word(i).len()
    }

    /// True when shift invariance relies on an empty parse (`k = 0`).
    pub fn uses_empty_factorization(&self) -> bool {
        self.table.iter().any(|e| e.replacement.is_empty())
    }

    pub fn is_trivial(&self) -> bool {
        self.words().iter().all(|w| w.len() == 1) && self.len() == self.matrix().size()
    }
}

impl fmt::Display for MarkovCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.candidate.fmt(f)
    }
}

/// The first failed right-Markov-code condition, with its witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeFailure {
    Prefix(PrefixViolation),
    Factorization { missing: Word },
    ShiftInvariance { l_max: usize, witness: Vec<Symbol> },
    Irreducibility,
}

impl CodeFailure {
    /// Machine-readable condition name.
    pub fn condition(&self) -> &'static str {
        match self {
            CodeFailure::Prefix(_) => "prefix",
            CodeFailure::Factorization { .. } => "factorization",
            CodeFailure::ShiftInvariance { .. } => "shift_invariance",
            CodeFailure::Irreducibility => "irreducibility",
        }
    }
}

impl fmt::Display for CodeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeFailure::Prefix(v) => write!(f, "prefix condition failed: {v}"),
            CodeFailure::Factorization { missing } => {
                write!(f, "factorization condition failed: {missing} has no code-word prefix")
            }
            CodeFailure::ShiftInvariance { l_max, witness } => write!(
                f,
                "shift invariance not established for L <= {l_max}: tuple {}",
                render_symbols(witness)
            ),
            CodeFailure::Irreducibility => write!(f, "irreducibility condition failed"),
        }
    }
}

/// Runs the prefix, factorization, shift-invariance and irreducibility
/// checks in that order.
pub fn verify_markov_code(c: &CodeCandidate, l_max: usize) -> Result<MarkovCode, CodeFailure> {
    is_prefix_code(c).map_err(CodeFailure::Prefix)?;
    check_factorization_complete(c).map_err(|missing| CodeFailure::Factorization { missing })?;
    let (min_l, table) = match check_shift_invariance(c, l_max) {
        ShiftInvariance::MinimalL { l, table } => (l, table),
        ShiftInvariance::Inconclusive { l_max, witness } => {
            return Err(CodeFailure::ShiftInvariance { l_max, witness })
        }
    };
    if !check_code_irreducibility(c) {
        return Err(CodeFailure::Irreducibility);
    }
    Ok(MarkovCode {
        candidate: c.clone(),
        min_l,
        table,
    })
}

/// Complete prefix codes of the subtree below a symbol with `depth` levels
/// left, as words starting at that symbol.
fn subtree_cuts(
    a: &TransitionMatrix,
    s: Symbol,
    depth: usize,
    memo: &mut BTreeMap<(Symbol, usize), Vec<Vec<Vec<Symbol>>>>,
) -> Vec<Vec<Vec<Symbol>>> {
    if let Some(v) = memo.get(&(s, depth)) {
        return v.clone();
    }
    let mut out = vec![vec![vec![s]]];
    if depth > 0 {
        let children: Vec<Vec<Vec<Vec<Symbol>>>> = a
            .successors(s)
            .map(|c| subtree_cuts(a, c, depth - 1, memo))
            .collect();
        for combo in product(&children) {
            let mut cut = Vec::new();
            for part in combo {
                for w in part {
                    let mut word = vec![s];
                    word.extend_from_slice(w);
                    cut.push(word);
                }
            }
            out.push(cut);
        }
    }
    memo.insert((s, depth), out.clone());
    out
}

fn product<T>(lists: &[Vec<T>]) -> Vec<Vec<&T>> {
    let mut out: Vec<Vec<&T>> = vec![Vec::new()];
    for list in lists {
        let mut next = Vec::with_capacity(out.len() * list.len());
        for prefix in &out {
            for item in list {
                let mut p = prefix.clone();
                p.push(item);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

fn cut_count(a: &TransitionMatrix, s: Symbol, depth: usize, memo: &mut BTreeMap<(Symbol, usize), u128>) -> u128 {
    if let Some(&v) = memo.get(&(s, depth)) {
        return v;
    }
    let mut v = 1u128;
    if depth > 0 {
        let mut p = 1u128;
        for c in a.successors(s).collect::<Vec<_>>() {
            p = p.saturating_mul(cut_count(a, c, depth - 1, memo));
        }
        v = v.saturating_add(p);
    }
    memo.insert((s, depth), v);
    v
}

/// Number of candidate sets [`enumerate_markov_codes`] would examine.
pub fn candidate_count(a: &TransitionMatrix, max_len: usize) -> u128 {
    let mut memo = BTreeMap::new();
    (1..=a.size() as Symbol)
        .map(|s| cut_count(a, s, max_len.saturating_sub(1), &mut memo))
        .fold(1u128, |acc, c| acc.saturating_mul(c))
}

pub fn enumerate_markov_codes(
    a: &TransitionMatrix,
    max_len: usize,
    l_max: usize,
) -> Result<Vec<MarkovCode>, EnumerationError> {
    enumerate_markov_codes_capped(a, max_len, l_max, DEFAULT_ENUMERATION_CAP)
}

/// All right Markov codes with word lengths `<= max_len`, verified with
/// bound `l_max`, sorted by word list.
///
/// Candidates are the complete prefix codes of the admissible-word tree cut
/// at depth `max_len`; every other word set fails the prefix or the
/// factorization condition.
pub fn enumerate_markov_codes_capped(
    a: &TransitionMatrix,
    max_len: usize,
    l_max: usize,
    cap: u128,
) -> Result<Vec<MarkovCode>, EnumerationError> {
    let max_len = max_len.max(1);
    let count = candidate_count(a, max_len);
    if count > cap {
        return Err(EnumerationError::SearchBudgetExceeded { count, cap });
    }
    let mut memo = BTreeMap::new();
    let per_symbol: Vec<Vec<Vec<Vec<Symbol>>>> = (1..=a.size() as Symbol)
        .map(|s| subtree_cuts(a, s, max_len - 1, &mut memo))
        .collect();
    let mut found = Vec::new();
    let mut odometer = vec![0usize; per_symbol.len()];
    loop {
        let words: Vec<Word> = odometer
            .iter()
            .zip(&per_symbol)
            .flat_map(|(&k, cuts)| cuts[k].iter().map(|w| Word(w.clone())))
            .collect();
        let candidate = CodeCandidate::new(a.clone(), words).expect("cut words are admissible and distinct");
        if minimal_shift_constant(&candidate, l_max).is_some() && check_code_irreducibility(&candidate) {
            if let Ok(code) = verify_markov_code(&candidate, l_max) {
                found.push(code);
            }
        }
        let mut pos = odometer.len();
        loop {
            if pos == 0 {
                found.sort_by(|x, y| x.words().cmp(y.words()));
                return Ok(found);
            }
            pos -= 1;
            odometer[pos] += 1;
            if odometer[pos] < per_symbol[pos].len() {
                break;
            }
            odometer[pos] = 0;
        }
    }
}
