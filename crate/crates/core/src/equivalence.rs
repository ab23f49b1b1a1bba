//! One-sided conjugacy (total column amalgamation plus a bounded block map
//! search), elementary coded equivalence, and continuous orbit equivalence
//! witnesses and certificates.

use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::code::{
    enumerate_markov_codes_capped, verify_markov_code, CodeCandidate, EnumerationError, MarkovCode,
    DEFAULT_ENUMERATION_CAP,
};
use crate::coded::{
    apply_sliding_block, coded_matrix_of, find_sliding_inverse, verify_inverse_pair, BlockMap, CodedError,
    CodedShift, InverseFailure,
};
use crate::report::{Check, Report};
use crate::shift::{
    enumerate_words, render_symbols, sample_points, BoolMatrix, EventuallyPeriodicPoint, ShiftError, Symbol,
    TransitionMatrix,
};

/// Leaf budget of the fallback conjugacy search.
pub const DEFAULT_MAP_BUDGET: usize = 20_000;

/// Periods `1..=INVARIANT_PERIODS` whose point counts must agree before any
/// conjugacy search.
const INVARIANT_PERIODS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("block maps do not connect the same pair of shifts")]
    ShiftMismatch,
    #[error("block maps are not mutually inverse: {0}")]
    NotInverse(InverseFailure),
}

/// A pair of mutually inverse sliding block codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjugacyWitness {
    forward: BlockMap,
    backward: BlockMap,
    verified_window: usize,
}

impl ConjugacyWitness {
    /// Verifies both composites on every admissible block of the combined window.
    pub fn new(forward: BlockMap, backward: BlockMap) -> Result<Self, WitnessError> {
        let verified_window = verify_inverse_pair(&forward, &backward).map_err(|e| match e {
            InverseFailure::ShiftMismatch => WitnessError::ShiftMismatch,
            e => WitnessError::NotInverse(e),
        })?;
        Ok(ConjugacyWitness {
            forward,
            backward,
            verified_window,
        })
    }

    pub fn identity(m: &TransitionMatrix) -> Self {
        ConjugacyWitness::new(BlockMap::identity(m.clone()), BlockMap::identity(m.clone()))
            .expect("identity is its own inverse")
    }

    pub fn forward(&self) -> &BlockMap {
        &self.forward
    }

    pub fn backward(&self) -> &BlockMap {
        &self.backward
    }

    pub fn verified_window(&self) -> usize {
        self.verified_window
    }

    pub fn source(&self) -> &TransitionMatrix {
        self.forward.source()
    }

    pub fn target(&self) -> &TransitionMatrix {
        self.forward.target()
    }

    pub fn inverse(&self) -> Self {
        ConjugacyWitness {
            forward: self.backward.clone(),
            backward: self.forward.clone(),
            verified_window: self.verified_window,
        }
    }

    /// `next ∘ self`, with windows reduced and the result re-verified.
    pub fn then(&self, next: &ConjugacyWitness) -> Result<Self, WitnessError> {
        let forward = self.forward.then(&next.forward).map_err(|_| WitnessError::ShiftMismatch)?;
        let backward = next.backward.then(&self.backward).map_err(|_| WitnessError::ShiftMismatch)?;
        ConjugacyWitness::new(forward.reduced(), backward.reduced())
    }
}

/// One accepted merge of states `i < j` (1-based, numbered in the matrix
/// the move applies to).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmalgamationMove {
    pub merged: (Symbol, Symbol),
    pub witness: ConjugacyWitness,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Amalgamation {
    pub original: TransitionMatrix,
    pub canonical: TransitionMatrix,
    pub moves: Vec<AmalgamationMove>,
}

impl Amalgamation {
    /// The composite conjugacy from the original matrix to the canonical one.
    pub fn witness(&self) -> ConjugacyWitness {
        let mut w = ConjugacyWitness::identity(&self.original);
        for m in &self.moves {
            w = w.then(&m.witness).expect("consecutive moves compose");
        }
        w
    }
}

fn mergeable_pairs(m: &TransitionMatrix) -> Vec<(usize, usize)> {
    let n = m.size();
    let rows = m.to_rows();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let same_column = (0..n).all(|k| rows[k][i] == rows[k][j]);
            let disjoint_rows = (0..n).all(|k| rows[i][k] == 0 || rows[j][k] == 0);
            if same_column && disjoint_rows {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Merges 0-based states `i < j` if the class projection has a verified
/// anticipation-1 inverse.
fn try_merge(m: &TransitionMatrix, i: usize, j: usize) -> Option<(TransitionMatrix, ConjugacyWitness)> {
    let n = m.size();
    let class = |k: usize| match k.cmp(&j) {
        std::cmp::Ordering::Less => k,
        std::cmp::Ordering::Equal => i,
        std::cmp::Ordering::Greater => k - 1,
    };
    let mut merged = vec![false; (n - 1) * (n - 1)];
    for p in 0..n {
        for q in 0..n {
            if m.allows(p as Symbol + 1, q as Symbol + 1) {
                merged[class(p) * (n - 1) + class(q)] = true;
            }
        }
    }
    let target = TransitionMatrix::from_bool(BoolMatrix {
        n: n - 1,
        entries: merged,
    })
    .ok()?;
    let forward = BlockMap::from_fn(m.clone(), target.clone(), 1, |b| class(b[0] as usize - 1) as Symbol + 1).ok()?;
    let backward = find_sliding_inverse(&forward, 1)?;
    let witness = ConjugacyWitness::new(forward, backward).ok()?;
    Some((target, witness))
}

/// Merges equal-column, disjoint-row state pairs, lowest indices first,
/// until no move applies.
pub fn total_amalgamation(a: &TransitionMatrix) -> Amalgamation {
    let mut current = a.clone();
    let mut moves = Vec::new();
    'outer: loop {
        for (i, j) in mergeable_pairs(&current) {
            if let Some((next, witness)) = try_merge(&current, i, j) {
                moves.push(AmalgamationMove {
                    merged: (i as Symbol + 1, j as Symbol + 1),
                    witness,
                });
                current = next;
                continue 'outer;
            }
        }
        break;
    }
    Amalgamation {
        original: a.clone(),
        canonical: current,
        moves,
    }
}

/// Fixpoints reached over every merge order, one representative per
/// isomorphism class.
pub fn amalgamation_fixpoints(a: &TransitionMatrix) -> Vec<TransitionMatrix> {
    let mut fixpoints: Vec<TransitionMatrix> = Vec::new();
    let mut visited: HashSet<TransitionMatrix> = HashSet::new();
    let mut stack = vec![a.clone()];
    while let Some(m) = stack.pop() {
        if !visited.insert(m.clone()) {
            continue;
        }
        let next: Vec<TransitionMatrix> = mergeable_pairs(&m)
            .into_iter()
            .filter_map(|(i, j)| try_merge(&m, i, j).map(|(t, _)| t))
            .collect();
        if next.is_empty() {
            if !fixpoints.iter().any(|f| matrices_isomorphic(f, &m).is_some()) {
                fixpoints.push(m);
            }
        } else {
            stack.extend(next);
        }
    }
    fixpoints
}

/// A 0-based permutation `p` with `a.permuted(p) == b`.
pub fn matrices_isomorphic(a: &TransitionMatrix, b: &TransitionMatrix) -> Option<Vec<usize>> {
    let n = a.size();
    if b.size() != n {
        return None;
    }
    let sig = |m: &TransitionMatrix, s: usize| {
        let v = s as Symbol + 1;
        (m.out_degree(v), m.in_degree(v), m.allows(v, v))
    };
    let mut sa: Vec<_> = (0..n).map(|s| sig(a, s)).collect();
    let mut sb: Vec<_> = (0..n).map(|s| sig(b, s)).collect();
    let (ua, ub) = (sa.clone(), sb.clone());
    sa.sort();
    sb.sort();
    if sa != sb {
        return None;
    }
    fn extend(
        a: &TransitionMatrix,
        b: &TransitionMatrix,
        ua: &[(usize, usize, bool)],
        ub: &[(usize, usize, bool)],
        perm: &mut Vec<usize>,
        used: &mut [bool],
    ) -> bool {
        let i = perm.len();
        if i == ua.len() {
            return true;
        }
        for t in 0..ua.len() {
            if used[t] || ua[i] != ub[t] {
                continue;
            }
            let fits = (0..i).all(|k| {
                let (ai, ak) = (i as Symbol + 1, k as Symbol + 1);
                let (bt, bk) = (t as Symbol + 1, perm[k] as Symbol + 1);
                a.allows(ai, ak) == b.allows(bt, bk) && a.allows(ak, ai) == b.allows(bk, bt)
            });
            if !fits {
                continue;
            }
            perm.push(t);
            used[t] = true;
            if extend(a, b, ua, ub, perm, used) {
                return true;
            }
            perm.pop();
            used[t] = false;
        }
        false
    }
    let mut perm = Vec::with_capacity(n);
    let mut used = vec![false; n];
    extend(a, b, &ua, &ub, &mut perm, &mut used).then_some(perm)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConjugacyResult {
    Found(ConjugacyWitness),
    /// No witness within the bounds. Not a disproof.
    NotFoundWithin { w_max: usize },
}

impl ConjugacyResult {
    pub fn witness(&self) -> Option<&ConjugacyWitness> {
        match self {
            ConjugacyResult::Found(w) => Some(w),
            ConjugacyResult::NotFoundWithin { .. } => None,
        }
    }
}

/// Agreement of the periodic point counts `tr(A^k)` for small `k`.
pub fn periodic_counts_agree(a: &TransitionMatrix, b: &TransitionMatrix) -> bool {
    (1..=INVARIANT_PERIODS).all(|k| a.periodic_point_count(k) == b.periodic_point_count(k))
}

/// Conjugacy through the amalgamation canonical forms, if they are isomorphic.
pub fn amalgamation_conjugacy(a: &TransitionMatrix, b: &TransitionMatrix) -> Option<ConjugacyWitness> {
    let am_a = total_amalgamation(a);
    let am_b = total_amalgamation(b);
    let perm = matrices_isomorphic(&am_a.canonical, &am_b.canonical)?;
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    let relabel = ConjugacyWitness::new(
        BlockMap::relabeling(&am_a.canonical, &perm),
        BlockMap::relabeling(&am_b.canonical, &inv),
    )
    .ok()?;
    let w = am_a.witness().then(&relabel).ok()?.then(&am_b.witness().inverse()).ok()?;
    ConjugacyWitness::new(w.forward, w.backward).ok()
}

/// Exhaustive search over forward block maps of window `1..=w_max + 1`,
/// each paired with `find_sliding_inverse`. `budget` caps the number of
/// complete forward maps examined.
pub fn search_conjugacy(
    a: &TransitionMatrix,
    b: &TransitionMatrix,
    w_max: usize,
    budget: usize,
) -> Option<ConjugacyWitness> {
    let mut remaining = budget;
    for window in 1..=w_max + 1 {
        if let Some(w) = search_window(a, b, window, w_max, &mut remaining) {
            return Some(w);
        }
        if remaining == 0 {
            break;
        }
    }
    None
}

fn search_window(
    a: &TransitionMatrix,
    b: &TransitionMatrix,
    window: usize,
    w_max: usize,
    remaining: &mut usize,
) -> Option<ConjugacyWitness> {
    let blocks = enumerate_words(a, window);
    let index: HashMap<&[Symbol], usize> = blocks.iter().enumerate().map(|(i, w)| (w.symbols(), i)).collect();
    // For block t: (p, t) and (t, p) overlaps with p <= t, checked when t is assigned.
    let mut into: Vec<Vec<usize>> = vec![Vec::new(); blocks.len()];
    let mut out_of: Vec<Vec<usize>> = vec![Vec::new(); blocks.len()];
    for long in enumerate_words(a, window + 1) {
        let s = long.symbols();
        let (p, q) = (index[&s[..window]], index[&s[1..]]);
        if p <= q {
            into[q].push(p);
        }
        if q <= p {
            out_of[p].push(q);
        }
    }
    let m = b.size() as Symbol;
    let mut out: Vec<Symbol> = Vec::with_capacity(blocks.len());
    let mut found = None;
    let assign = |out: &Vec<Symbol>, remaining: &mut usize| -> Option<ConjugacyWitness> {
        *remaining = remaining.saturating_sub(1);
        let used: BTreeSet<Symbol> = out.iter().copied().collect();
        if used.len() != b.size() {
            return None;
        }
        let table = blocks.iter().zip(out).map(|(w, &o)| (w.0.clone(), o)).collect();
        let phi = BlockMap::new(a.clone(), b.clone(), window, table).ok()?;
        let psi = find_sliding_inverse(&phi, w_max)?;
        ConjugacyWitness::new(phi, psi).ok()
    };
    // Iterative depth-first odometer.
    let mut next_choice: Vec<Symbol> = vec![1];
    while let Some(&choice) = next_choice.last() {
        if *remaining == 0 || found.is_some() {
            break;
        }
        let t = out.len();
        if choice > m {
            next_choice.pop();
            if out.pop().is_some() {
                *next_choice.last_mut().unwrap() += 1;
            }
            continue;
        }
        out.push(choice);
        let fits = into[t].iter().all(|&p| b.allows(out[p], choice))
            && out_of[t].iter().all(|&q| b.allows(choice, out[q]));
        if !fits {
            out.pop();
            *next_choice.last_mut().unwrap() += 1;
            continue;
        }
        if out.len() == blocks.len() {
            found = assign(&out, remaining);
            out.pop();
            *next_choice.last_mut().unwrap() += 1;
        } else {
            next_choice.push(1);
        }
    }
    found
}

/// Semi-decides one-sided conjugacy: invariant filter, then the amalgamation
/// fast path, then the bounded search. A returned witness is verified.
pub fn check_one_sided_conjugacy(a: &TransitionMatrix, b: &TransitionMatrix, w_max: usize) -> ConjugacyResult {
    check_one_sided_conjugacy_budgeted(a, b, w_max, DEFAULT_MAP_BUDGET)
}

pub fn check_one_sided_conjugacy_budgeted(
    a: &TransitionMatrix,
    b: &TransitionMatrix,
    w_max: usize,
    budget: usize,
) -> ConjugacyResult {
    if !periodic_counts_agree(a, b) {
        return ConjugacyResult::NotFoundWithin { w_max };
    }
    let found = amalgamation_conjugacy(a, b).or_else(|| search_conjugacy(a, b, w_max, budget));
    match found.and_then(|w| ConjugacyWitness::new(w.forward, w.backward).ok()) {
        Some(w) => ConjugacyResult::Found(w),
        None => ConjugacyResult::NotFoundWithin { w_max },
    }
}

/// The cell `U_{ω(i_1)⋯ω(i_L)}` with its exponent data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeCell {
    pub word_indices: Vec<Symbol>,
    pub k1: usize,
    pub replacement: Vec<Symbol>,
}

/// Piecewise-constant exponents for `h_C`: `l1 ≡ L` and `k1` on each cell,
/// `l2` per first coded symbol, and the constant `k2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeWitness {
    pub l: usize,
    pub cells: Vec<CoeCell>,
    /// `l2[i - 1]` for coded symbol `i`.
    pub l2: Vec<usize>,
    pub k2: usize,
    pub code: MarkovCode,
}

pub fn build_coe_witness(a: &TransitionMatrix, c: &MarkovCode) -> Result<CoeWitness, CodedError> {
    if c.matrix() != a {
        return Err(CodedError::MatrixMismatch);
    }
    let cells = c
        .shift_table()
        .iter()
        .map(|e| CoeCell {
            word_indices: e.tuple.clone(),
            k1: e.k(),
            replacement: e.replacement.clone(),
        })
        .collect();
    let l2 = (1..=c.len() as Symbol).map(|i| c.length(i)).collect();
    Ok(CoeWitness {
        l: c.min_l(),
        cells,
        l2,
        k2: 0,
        code: c.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoeError {
    #[error("point {index}: {source}")]
    InvalidPoint { index: usize, source: ShiftError },
    #[error(transparent)]
    Coded(#[from] CodedError),
}

fn partition_checks(w: &CoeWitness, coded: &TransitionMatrix, report: &mut Report) {
    let c = w.code.candidate();
    let expected: BTreeSet<Vec<Symbol>> = enumerate_words(coded, w.l).into_iter().map(|x| x.0).collect();
    let mut present: BTreeSet<Vec<Symbol>> = BTreeSet::new();
    let mut coverage = Check::pass("partition.coverage", format!("cells={}", w.cells.len()));
    for cell in &w.cells {
        if !expected.contains(&cell.word_indices) {
            coverage = Check::fail("partition.coverage", "cell_extra", render_symbols(&cell.word_indices));
            break;
        }
        if !present.insert(cell.word_indices.clone()) {
            coverage = Check::fail("partition.coverage", "cell_duplicate", render_symbols(&cell.word_indices));
            break;
        }
    }
    if coverage.passed {
        if let Some(missing) = expected.difference(&present).next() {
            coverage = Check::fail("partition.coverage", "cell_missing", render_symbols(missing));
        }
    }
    report.push(coverage);

    let bases: Vec<Vec<Symbol>> = w
        .cells
        .iter()
        .filter(|cell| cell.word_indices.iter().all(|&i| i >= 1 && i as usize <= c.len()))
        .map(|cell| c.concat(&cell.word_indices))
        .collect();
    let mut disjoint = Check::pass("partition.disjoint", "");
    'pairs: for (p, u) in bases.iter().enumerate() {
        for v in &bases[p + 1..] {
            if u.starts_with(v) || v.starts_with(u) {
                disjoint = Check::fail(
                    "partition.disjoint",
                    "cells_overlap",
                    format!("{} {}", render_symbols(u), render_symbols(v)),
                );
                break 'pairs;
            }
        }
    }
    report.push(disjoint);
}

/// Why a cell's exponent data disagrees with the code, if it does.
fn cell_inconsistency(w: &CoeWitness, cell: &CoeCell) -> Option<&'static str> {
    let c = w.code.candidate();
    if cell.k1 != cell.replacement.len() {
        return Some("k1_mismatch");
    }
    let mut shifted = c.concat(&cell.word_indices);
    shifted.remove(0);
    let valid = cell.replacement.iter().all(|&j| j >= 1 && j as usize <= c.len());
    if !valid || c.concat(&cell.replacement) != shifted {
        return Some("replacement_mismatch");
    }
    None
}

/// Checks both orbit-equivalence identities for `h = h_C` on every point,
/// plus the cell partition. Points larger than `budget` symbols fail with
/// `budget_exceeded`.
pub fn verify_coe_witness(
    w: &CoeWitness,
    points: &[EventuallyPeriodicPoint],
    budget: usize,
) -> Result<Report, CoeError> {
    let a = w.code.matrix();
    for (index, x) in points.iter().enumerate() {
        x.validate(a).map_err(|source| CoeError::InvalidPoint { index, source })?;
    }
    let cs = CodedShift::new(w.code.clone())?;
    let mut report = Report::default();
    partition_checks(w, cs.coded_matrix(), &mut report);
    let c = w.code.candidate();
    let l2_ok = w.l2.len() == c.len();
    if !l2_ok {
        report.push(Check::fail("l2", "l2_size", format!("{} entries for {} symbols", w.l2.len(), c.len())));
    }

    for x in points {
        if x.preperiod().len() + x.period().len() > budget {
            report.push(Check::fail("forward", "budget_exceeded", format!("x={x}")));
            continue;
        }
        let Some(cell) = locate_cell(w, x) else {
            report.push(Check::fail("forward", "cell_not_found", format!("x={x}")));
            continue;
        };
        let hx = cs.encode(x)?;
        let lhs = cs.encode(&x.shift())?.shift_by(cell.k1);
        let rhs = hx.shift_by(w.l);
        let detail = format!("x={x} cell={}", render_symbols(&cell.word_indices));
        if lhs != rhs {
            report.push(Check::fail("forward", "forward_identity", detail));
        } else if let Some(reason) = cell_inconsistency(w, cell) {
            report.push(Check::fail("forward", reason, detail));
        } else {
            report.push(Check::pass("forward", detail));
        }

        if !l2_ok {
            continue;
        }
        let y = hx;
        let l2 = w.l2[y.symbol_at(0) as usize - 1];
        let lhs = cs.decode(&y.shift())?.shift_by(w.k2);
        let rhs = cs.decode(&y)?.shift_by(l2);
        let detail = format!("y={y}");
        if lhs == rhs {
            report.push(Check::pass("backward", detail));
        } else {
            report.push(Check::fail("backward", "backward_identity", detail));
        }
    }
    Ok(report)
}

/// Lexicographically least `(k, l)` with `k, l <= bound` and
/// `σ^k(h(σx)) = σ^l(h(x))`.
pub fn find_coe_exponents<E>(
    h: impl Fn(&EventuallyPeriodicPoint) -> Result<EventuallyPeriodicPoint, E>,
    x: &EventuallyPeriodicPoint,
    bound: usize,
) -> Result<Option<(usize, usize)>, E> {
    let a = h(&x.shift())?;
    let b = h(x)?;
    let mut by_l: HashMap<EventuallyPeriodicPoint, usize> = HashMap::new();
    let mut cur = b;
    for l in 0..=bound {
        by_l.entry(cur.clone()).or_insert(l);
        cur = cur.shift();
    }
    let mut cur = a;
    for k in 0..=bound {
        if let Some(&l) = by_l.get(&cur) {
            return Ok(Some((k, l)));
        }
        cur = cur.shift();
    }
    Ok(None)
}

/// One link `A_i ~ A_{i+1}` of a coded equivalence chain, as claimed data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateStep {
    pub left: CodeCandidate,
    pub right: CodeCandidate,
    pub forward: BlockMap,
    pub backward: BlockMap,
    pub window: usize,
}

impl CertificateStep {
    pub fn from_witness(left: CodeCandidate, right: CodeCandidate, w: &ConjugacyWitness) -> Self {
        CertificateStep {
            left,
            right,
            forward: w.forward.clone(),
            backward: w.backward.clone(),
            window: w.verified_window,
        }
    }

    pub fn reversed(&self) -> Self {
        CertificateStep {
            left: self.right.clone(),
            right: self.left.clone(),
            forward: self.backward.clone(),
            backward: self.forward.clone(),
            window: self.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateError {
    #[error("certificate has no steps")]
    Empty,
    #[error("step {step} does not start at the matrix the previous step ends at")]
    ChainBroken { step: usize },
}

/// A chain `A_0 ~ A_1 ~ ⋯ ~ A_m` of elementary coded equivalences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceCertificate {
    pub steps: Vec<CertificateStep>,
}

impl EquivalenceCertificate {
    pub fn new(steps: Vec<CertificateStep>) -> Result<Self, CertificateError> {
        if steps.is_empty() {
            return Err(CertificateError::Empty);
        }
        for (i, pair) in steps.windows(2).enumerate() {
            if pair[0].right.matrix() != pair[1].left.matrix() {
                return Err(CertificateError::ChainBroken { step: i + 2 });
            }
        }
        Ok(EquivalenceCertificate { steps })
    }

    pub fn source(&self) -> &TransitionMatrix {
        self.steps[0].left.matrix()
    }

    pub fn target(&self) -> &TransitionMatrix {
        self.steps[self.steps.len() - 1].right.matrix()
    }

    pub fn reversed(&self) -> Self {
        EquivalenceCertificate {
            steps: self.steps.iter().rev().map(CertificateStep::reversed).collect(),
        }
    }

    /// `self` followed by `next`.
    pub fn chain(&self, next: &EquivalenceCertificate) -> Result<Self, CertificateError> {
        EquivalenceCertificate::new(self.steps.iter().chain(&next.steps).cloned().collect())
    }
}

/// Defaults for certificate verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub sample_count: usize,
    pub l_max: usize,
    pub budget: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            sample_count: 100,
            l_max: 8,
            budget: 256,
        }
    }
}

struct VerifiedStep {
    left: CodedShift,
    right: CodedShift,
    witness: ConjugacyWitness,
}

impl VerifiedStep {
    fn forward(&self, x: &EventuallyPeriodicPoint) -> Result<EventuallyPeriodicPoint, CodedError> {
        let y = apply_sliding_block(&self.witness.forward, &self.left.encode(x)?)?;
        self.right.decode(&y)
    }

    fn backward(&self, x: &EventuallyPeriodicPoint) -> Result<EventuallyPeriodicPoint, CodedError> {
        let y = apply_sliding_block(&self.witness.backward, &self.right.encode(x)?)?;
        self.left.decode(&y)
    }
}

fn verify_side(
    label: &str,
    c: &CodeCandidate,
    opts: &VerifyOptions,
    report: &mut Report,
) -> Option<CodedShift> {
    let code = match verify_markov_code(c, opts.l_max) {
        Ok(code) => code,
        Err(e) => {
            report.push(Check::fail(format!("{label}.code"), "code_invalid", format!("{c}: {e}")));
            return None;
        }
    };
    report.push(Check::pass(
        format!("{label}.code"),
        format!("{c} K0={} L={}", code.k0(), code.min_l()),
    ));
    let cs = match CodedShift::new(code) {
        Ok(cs) => cs,
        Err(e) => {
            report.push(Check::fail(format!("{label}.coded_matrix"), "coded_matrix_invalid", e.to_string()));
            return None;
        }
    };
    let coe = build_coe_witness(c.matrix(), cs.code())
        .map_err(CoeError::from)
        .and_then(|w| verify_coe_witness(&w, &sample_points(c.matrix(), opts.sample_count), opts.budget));
    match coe {
        Ok(r) if r.passed() => report.push(Check::pass(
            format!("{label}.coe"),
            format!("checks={}", r.checks.len()),
        )),
        Ok(r) => {
            let first = r.failures().next().unwrap();
            report.push(Check::fail(
                format!("{label}.coe"),
                first.reason.clone().unwrap_or_default(),
                first.detail.clone(),
            ));
        }
        Err(e) => report.push(Check::fail(format!("{label}.coe"), "coe_error", e.to_string())),
    }
    Some(cs)
}

fn composite_check(
    name: &str,
    points: &[EventuallyPeriodicPoint],
    bound: usize,
    h: impl Fn(&EventuallyPeriodicPoint) -> Result<EventuallyPeriodicPoint, CodedError>,
    h_inv: impl Fn(&EventuallyPeriodicPoint) -> Result<EventuallyPeriodicPoint, CodedError>,
) -> Check {
    let (mut max_k, mut max_l) = (0, 0);
    for x in points {
        match find_coe_exponents(&h, x, bound) {
            Ok(Some((k, l))) => {
                max_k = max_k.max(k);
                max_l = max_l.max(l);
            }
            Ok(None) => return Check::fail(name, "exponents_not_found", format!("x={x} bound={bound}")),
            Err(e) => return Check::fail(name, "transform_error", format!("x={x}: {e}")),
        }
        match h(x).and_then(|y| h_inv(&y)) {
            Ok(back) if &back == x => {}
            Ok(back) => return Check::fail(name, "not_inverse", format!("x={x} returned {back}")),
            Err(e) => return Check::fail(name, "transform_error", format!("x={x}: {e}")),
        }
    }
    Check::pass(
        name,
        format!("points={} max_k={max_k} max_l={max_l} bound={bound}", points.len()),
    )
}

/// Re-verifies every code, coded matrix and conjugacy of the chain, both
/// orbit-equivalence witnesses of every step, and then the exponent identity
/// of the end-to-end composite in both directions.
pub fn verify_certificate(cert: &EquivalenceCertificate, opts: &VerifyOptions) -> Report {
    let mut report = Report::default();
    if cert.steps.is_empty() {
        report.push(Check::fail("chain", "empty_chain", ""));
        return report;
    }
    let mut chain = Check::pass("chain", format!("steps={}", cert.steps.len()));
    for (i, pair) in cert.steps.windows(2).enumerate() {
        if pair[0].right.matrix() != pair[1].left.matrix() {
            chain = Check::fail("chain", "chain_broken", format!("between steps {} and {}", i + 1, i + 2));
        }
    }
    report.push(chain);

    let mut verified = Vec::new();
    for (i, step) in cert.steps.iter().enumerate() {
        let label = format!("step{}", i + 1);
        let left = verify_side(&format!("{label}.left"), &step.left, opts, &mut report);
        let right = verify_side(&format!("{label}.right"), &step.right, opts, &mut report);
        let name = format!("{label}.conjugacy");
        let matrices_ok = [(&step.forward, &step.left, &step.right), (&step.backward, &step.right, &step.left)]
            .iter()
            .all(|(map, from, to)| {
                coded_matrix_of(from).is_ok_and(|m| &m == map.source())
                    && coded_matrix_of(to).is_ok_and(|m| &m == map.target())
            });
        if !matrices_ok {
            report.push(Check::fail(name, "matrix_mismatch", "block maps do not act on A(C) of the step"));
            continue;
        }
        let witness = match ConjugacyWitness::new(step.forward.clone(), step.backward.clone()) {
            Ok(w) if w.verified_window == step.window => w,
            Ok(w) => {
                report.push(Check::fail(
                    name,
                    "window_mismatch",
                    format!("claimed {} verified {}", step.window, w.verified_window),
                ));
                continue;
            }
            Err(e) => {
                report.push(Check::fail(name, "conjugacy_not_inverse", e.to_string()));
                continue;
            }
        };
        report.push(Check::pass(name, format!("window={}", witness.verified_window)));
        if let (Some(left), Some(right)) = (left, right) {
            verified.push(VerifiedStep { left, right, witness });
        }
    }
    if !report.passed() || verified.len() != cert.steps.len() {
        return report;
    }

    let bound: usize = verified
        .iter()
        .map(|s| {
            let l = s.left.code().min_l().max(s.right.code().min_l());
            let k0 = s.left.code().k0().max(s.right.code().k0());
            let w = s.witness.forward.window().max(s.witness.backward.window());
            l * (k0 + w + 2)
        })
        .sum();
    let forward = |x: &EventuallyPeriodicPoint| verified.iter().try_fold(x.clone(), |p, s| s.forward(&p));
    let backward = |x: &EventuallyPeriodicPoint| verified.iter().rev().try_fold(x.clone(), |p, s| s.backward(&p));
    report.push(composite_check(
        "composite.forward",
        &sample_points(cert.source(), opts.sample_count),
        bound,
        forward,
        backward,
    ));
    report.push(composite_check(
        "composite.backward",
        &sample_points(cert.target(), opts.sample_count),
        bound,
        backward,
        forward,
    ));
    report
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElementaryResult {
    Found(EquivalenceCertificate),
    /// Nothing found within the bounds. Not a disproof.
    NotFoundWithin { max_len: usize, l_max: usize, w_max: usize },
}

/// Searches code pairs by increasing maximal word length `1..=max_len`:
/// at each level all new pairs are tried with the amalgamation fast path
/// before any bounded block map search.
pub fn check_elementary_coded_equivalence(
    a: &TransitionMatrix,
    b: &TransitionMatrix,
    max_len: usize,
    l_max: usize,
    w_max: usize,
) -> Result<ElementaryResult, EnumerationError> {
    let mut tried: HashSet<(Vec<crate::shift::Word>, Vec<crate::shift::Word>)> = HashSet::new();
    let mut slow: HashMap<(TransitionMatrix, TransitionMatrix), Option<ConjugacyWitness>> = HashMap::new();
    for m in 1..=max_len {
        let codes_a = enumerate_markov_codes_capped(a, m, l_max, DEFAULT_ENUMERATION_CAP)?;
        let codes_b = enumerate_markov_codes_capped(b, m, l_max, DEFAULT_ENUMERATION_CAP)?;
        let mut pairs = Vec::new();
        for ca in &codes_a {
            for cb in &codes_b {
                if tried.insert((ca.words().to_vec(), cb.words().to_vec())) {
                    let (Ok(ma), Ok(mb)) = (coded_matrix_of(ca.candidate()), coded_matrix_of(cb.candidate())) else {
                        continue;
                    };
                    if periodic_counts_agree(&ma, &mb) {
                        pairs.push((ca, cb, ma, mb));
                    }
                }
            }
        }
        for (ca, cb, ma, mb) in &pairs {
            if let Some(w) = amalgamation_conjugacy(ma, mb) {
                return Ok(ElementaryResult::Found(one_step(ca, cb, &w)));
            }
        }
        for (ca, cb, ma, mb) in &pairs {
            let w = slow
                .entry((ma.clone(), mb.clone()))
                .or_insert_with(|| search_conjugacy(ma, mb, w_max, DEFAULT_MAP_BUDGET));
            if let Some(w) = w {
                return Ok(ElementaryResult::Found(one_step(ca, cb, w)));
            }
        }
    }
    Ok(ElementaryResult::NotFoundWithin { max_len, l_max, w_max })
}

fn one_step(ca: &MarkovCode, cb: &MarkovCode, w: &ConjugacyWitness) -> EquivalenceCertificate {
    EquivalenceCertificate {
        steps: vec![CertificateStep::from_witness(
            ca.candidate().clone(),
            cb.candidate().clone(),
            w,
        )],
    }
}

/// The cell containing `x`, if any.
pub fn locate_cell<'a>(w: &'a CoeWitness, x: &EventuallyPeriodicPoint) -> Option<&'a CoeCell> {
    let c = w.code.candidate();
    w.cells.iter().find(|cell| {
        cell.word_indices.iter().all(|&i| i >= 1 && i as usize <= c.len()) && x.starts_with(&c.concat(&cell.word_indices))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::validate_matrix;

    fn m(rows: &[&[i64]]) -> TransitionMatrix {
        validate_matrix(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn a1() -> TransitionMatrix {
        m(&[&[1, 1], &[1, 0]])
    }

    fn a2() -> TransitionMatrix {
        m(&[&[0, 1, 0], &[0, 0, 1], &[1, 1, 0]])
    }

    fn a3() -> TransitionMatrix {
        m(&[&[1, 1, 1], &[1, 0, 1], &[1, 0, 0]])
    }

    fn full(n: usize) -> TransitionMatrix {
        TransitionMatrix::full_shift(n).unwrap()
    }

    fn code(a: TransitionMatrix, words: &[&[Symbol]]) -> MarkovCode {
        verify_markov_code(&CodeCandidate::from_symbols(a, words).unwrap(), 8).unwrap()
    }

    fn c1() -> MarkovCode {
        code(a1(), &[&[1], &[2, 1]])
    }

    fn c2() -> MarkovCode {
        code(a2(), &[&[1, 2], &[2, 3], &[3, 2, 3], &[3, 1, 2]])
    }

    fn c3() -> MarkovCode {
        code(a3(), &[&[1], &[2, 1], &[3, 1], &[2, 3, 1]])
    }

    fn ac2() -> TransitionMatrix {
        m(&[&[0, 0, 1, 1], &[1, 1, 0, 0], &[1, 1, 0, 0], &[0, 0, 1, 1]])
    }

    fn pt(pre: &[Symbol], per: &[Symbol]) -> EventuallyPeriodicPoint {
        EventuallyPeriodicPoint::new(pre.to_vec(), per.to_vec()).unwrap()
    }

    fn table(map: &BlockMap) -> Vec<(Vec<Symbol>, Symbol)> {
        map.table().iter().map(|(k, &v)| (k.clone(), v)).collect()
    }

    #[test]
    fn amalgamation_of_ac2_is_full_two() {
        let am = total_amalgamation(&ac2());
        assert_eq!(am.canonical, full(2));
        let merged: Vec<_> = am.moves.iter().map(|mv| mv.merged).collect();
        assert_eq!(merged, vec![(1, 2), (2, 3)]);
        for mv in &am.moves {
            assert_eq!(mv.witness.forward().window(), 1);
            assert_eq!(mv.witness.backward().window(), 2);
            ConjugacyWitness::new(mv.witness.forward().clone(), mv.witness.backward().clone()).unwrap();
        }
    }

    #[test]
    fn amalgamation_fixpoint_cases() {
        assert!(total_amalgamation(&a1()).moves.is_empty());
        assert!(total_amalgamation(&full(2)).moves.is_empty());
        assert_eq!(amalgamation_fixpoints(&ac2()), vec![full(2)]);
    }

    #[test]
    fn isomorphism_examples() {
        assert_eq!(matrices_isomorphic(&a1(), &m(&[&[0, 1], &[1, 1]])), Some(vec![1, 0]));
        assert_eq!(matrices_isomorphic(&a2(), &a2()), Some(vec![0, 1, 2]));
        assert_eq!(matrices_isomorphic(&full(2), &a1()), None);
        assert_eq!(matrices_isomorphic(&full(2), &full(3)), None);
    }

    #[test]
    fn conjugacy_of_ac2_and_full_two() {
        let w = check_one_sided_conjugacy(&ac2(), &full(2), 4).witness().cloned().unwrap();
        assert_eq!(
            table(w.forward()),
            vec![(vec![1], 1), (vec![2], 1), (vec![3], 2), (vec![4], 2)]
        );
        assert_eq!(
            table(w.backward()),
            vec![(vec![1, 1], 2), (vec![1, 2], 1), (vec![2, 1], 3), (vec![2, 2], 4)]
        );
    }

    #[test]
    fn self_conjugacy_is_identity() {
        for a in [a1(), a2(), ac2()] {
            let w = check_one_sided_conjugacy(&a, &a, 2).witness().cloned().unwrap();
            assert_eq!(w.forward(), &BlockMap::identity(a.clone()));
            assert_eq!(w.backward(), &BlockMap::identity(a));
        }
    }

    #[test]
    fn invariants_reject_full_two_against_full_four() {
        assert_eq!(
            check_one_sided_conjugacy(&full(2), &full(4), 4),
            ConjugacyResult::NotFoundWithin { w_max: 4 }
        );
    }

    #[test]
    fn fallback_search_finds_relabeling() {
        let b = m(&[&[0, 1], &[1, 1]]);
        let w = search_conjugacy(&a1(), &b, 1, DEFAULT_MAP_BUDGET).unwrap();
        assert_eq!(table(w.forward()), vec![(vec![1], 2), (vec![2], 1)]);
    }

    #[test]
    fn fallback_search_finds_amalgamation_inverse() {
        let w = search_conjugacy(&full(2), &ac2(), 1, DEFAULT_MAP_BUDGET).unwrap();
        assert_eq!(w.forward().window(), 2);
    }

    #[test]
    fn coe_witness_for_c1() {
        let w = build_coe_witness(&a1(), &c1()).unwrap();
        assert_eq!(w.l, 1);
        assert_eq!(
            w.cells,
            vec![
                CoeCell { word_indices: vec![1], k1: 0, replacement: vec![] },
                CoeCell { word_indices: vec![2], k1: 1, replacement: vec![1] },
            ]
        );
        assert_eq!(w.l2, vec![1, 2]);
        assert_eq!(w.k2, 0);
    }

    #[test]
    fn coe_witness_for_c2_sample_cell() {
        let w = build_coe_witness(&a2(), &c2()).unwrap();
        assert_eq!(w.l, 2);
        let cell = w.cells.iter().find(|c| c.word_indices == vec![1, 3]).unwrap();
        assert_eq!((cell.k1, cell.replacement.clone()), (2, vec![2, 2]));
    }

    #[test]
    fn coe_witness_for_trivial_code() {
        let a = a2();
        let trivial = verify_markov_code(&CodeCandidate::trivial(a.clone()), 8).unwrap();
        let w = build_coe_witness(&a, &trivial).unwrap();
        assert_eq!(w.l, 1);
        assert!(w.cells.iter().all(|c| c.k1 == 0));
        assert_eq!(w.l2, vec![1, 1, 1]);
        let r = verify_coe_witness(&w, &sample_points(&a, 50), 64).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn coe_witnesses_verify_on_samples() {
        for (a, c) in [(a1(), c1()), (a2(), c2()), (a3(), c3())] {
            let w = build_coe_witness(&a, &c).unwrap();
            let r = verify_coe_witness(&w, &sample_points(&a, 120), 64).unwrap();
            assert!(r.passed(), "{r}");
            assert_eq!(r.checks.len(), 2 + 2 * 120);
        }
    }

    #[test]
    fn coe_forward_example() {
        let w = build_coe_witness(&a1(), &c1()).unwrap();
        let x = pt(&[], &[1, 2]);
        assert_eq!(locate_cell(&w, &x).unwrap().word_indices, vec![1]);
        let cs = CodedShift::new(c1()).unwrap();
        assert_eq!(cs.encode(&x).unwrap(), pt(&[1], &[2]));
        assert_eq!(cs.encode(&x.shift()).unwrap(), pt(&[], &[2]));
        assert!(verify_coe_witness(&w, &[x], 16).unwrap().passed());
    }

    #[test]
    fn corrupted_k1_is_rejected() {
        let mut w = build_coe_witness(&a1(), &c1()).unwrap();
        w.cells[1].k1 = 0;
        let r = verify_coe_witness(&w, &[pt(&[2], &[1])], 16).unwrap();
        assert!(r.has_reason("k1_mismatch"), "{r}");
        let r = verify_coe_witness(&w, &[pt(&[], &[2, 1])], 16).unwrap();
        assert!(r.has_reason("forward_identity"), "{r}");
    }

    #[test]
    fn missing_cell_is_reported() {
        let mut w = build_coe_witness(&a1(), &c1()).unwrap();
        w.cells.remove(0);
        let r = verify_coe_witness(&w, &[pt(&[], &[1])], 16).unwrap();
        assert!(r.has_reason("cell_missing"));
        assert!(r.has_reason("cell_not_found"));
    }

    #[test]
    fn invalid_point_is_an_error() {
        let w = build_coe_witness(&a1(), &c1()).unwrap();
        assert!(matches!(
            verify_coe_witness(&w, &[pt(&[], &[2])], 16),
            Err(CoeError::InvalidPoint { index: 0, .. })
        ));
    }

    #[test]
    fn exponents_for_identity_and_c1() {
        let id = |x: &EventuallyPeriodicPoint| Ok::<_, CodedError>(x.clone());
        assert_eq!(find_coe_exponents(id, &pt(&[1], &[2, 1]), 4).unwrap(), Some((0, 1)));

        let cs = CodedShift::new(c1()).unwrap();
        let h = |x: &EventuallyPeriodicPoint| cs.encode(x);
        let x = pt(&[2], &[1]);
        assert_eq!(find_coe_exponents(h, &x, 4).unwrap(), Some((0, 1)));
        // (1, 1) satisfies the identity as well; (0, 1) precedes it.
        assert_eq!(h(&x.shift()).unwrap().shift(), h(&x).unwrap().shift());
    }

    #[test]
    fn exponents_for_c2_agree_with_witness() {
        let cs = CodedShift::new(c2()).unwrap();
        let w = build_coe_witness(&a2(), &c2()).unwrap();
        let x = pt(&[], &[2, 3, 1, 2, 3]);
        let cell = locate_cell(&w, &x).unwrap();
        assert_eq!(cell.word_indices[0], 2);
        let h = |x: &EventuallyPeriodicPoint| cs.encode(x);
        let (k, l) = find_coe_exponents(h, &x, 16).unwrap().unwrap();
        assert!((k, l) <= (cell.k1, w.l));
        assert_eq!(h(&x.shift()).unwrap().shift_by(k), h(&x).unwrap().shift_by(l));
        assert_eq!(h(&x.shift()).unwrap().shift_by(cell.k1), h(&x).unwrap().shift_by(w.l));
    }

    fn elementary(a: &TransitionMatrix, b: &TransitionMatrix, max_len: usize) -> EquivalenceCertificate {
        match check_elementary_coded_equivalence(a, b, max_len, 8, 4).unwrap() {
            ElementaryResult::Found(cert) => cert,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn elementary_a1_full_two() {
        let cert = elementary(&a1(), &full(2), 4);
        let step = &cert.steps[0];
        assert_eq!(step.left.to_string(), "{1, 21}");
        assert_eq!(step.right, CodeCandidate::trivial(full(2)));
        assert_eq!(step.forward, BlockMap::identity(full(2)));
        assert!(verify_certificate(&cert, &VerifyOptions::default()).passed());
    }

    #[test]
    fn elementary_a3_full_four() {
        let cert = elementary(&a3(), &full(4), 4);
        let step = &cert.steps[0];
        let words: BTreeSet<&[Symbol]> = step.left.words().iter().map(|w| w.symbols()).collect();
        let expected: BTreeSet<&[Symbol]> = [&[1][..], &[2, 1], &[3, 1], &[2, 3, 1]].into_iter().collect();
        assert_eq!(words, expected);
        assert_eq!(step.forward, BlockMap::identity(full(4)));
        assert!(verify_certificate(&cert, &VerifyOptions::default()).passed());
    }

    #[test]
    fn elementary_a2_full_two() {
        let cert = elementary(&a2(), &full(2), 4);
        let r = verify_certificate(&cert, &VerifyOptions::default());
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn elementary_not_found_for_full_two_and_full_three() {
        assert_eq!(
            check_elementary_coded_equivalence(&full(2), &full(3), 2, 4, 1).unwrap(),
            ElementaryResult::NotFoundWithin { max_len: 2, l_max: 4, w_max: 1 }
        );
    }

    fn two_step_chain() -> EquivalenceCertificate {
        let first = EquivalenceCertificate {
            steps: vec![CertificateStep::from_witness(
                c1().candidate().clone(),
                CodeCandidate::trivial(full(2)),
                &ConjugacyWitness::identity(&full(2)),
            )],
        };
        let w = check_one_sided_conjugacy(&ac2(), &full(2), 4).witness().cloned().unwrap();
        let second = EquivalenceCertificate {
            steps: vec![CertificateStep::from_witness(
                c2().candidate().clone(),
                CodeCandidate::trivial(full(2)),
                &w,
            )],
        };
        first.chain(&second.reversed()).unwrap()
    }

    #[test]
    fn two_step_chain_verifies() {
        let cert = two_step_chain();
        assert_eq!(cert.source(), &a1());
        assert_eq!(cert.target(), &a2());
        let r = verify_certificate(&cert, &VerifyOptions::default());
        assert!(r.passed(), "{r}");
        assert!(r.checks.iter().any(|c| c.name == "composite.backward" && c.passed));
    }

    #[test]
    fn injected_non_markov_code_fails() {
        let mut cert = two_step_chain();
        cert.steps[0].left = CodeCandidate::from_symbols(a1(), &[&[2], &[1, 1], &[1, 2]]).unwrap();
        let r = verify_certificate(&cert, &VerifyOptions::default());
        assert!(!r.passed());
        assert!(r.has_reason("code_invalid"), "{r}");
    }

    #[test]
    fn broken_chain_fails() {
        let cert = two_step_chain();
        assert_eq!(
            EquivalenceCertificate::new(vec![cert.steps[1].clone(), cert.steps[1].clone()]),
            Err(CertificateError::ChainBroken { step: 2 })
        );
    }
}
