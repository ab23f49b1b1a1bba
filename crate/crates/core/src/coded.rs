//! The coded shift `A(C)`, the standard coding homeomorphism and its inverse
//! on exact points, and sliding/moving block codes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::code::{CodeCandidate, MarkovCode};
use crate::shift::{enumerate_words, render_symbols, EventuallyPeriodicPoint, MatrixError, ShiftError, Symbol, TransitionMatrix, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodedError {
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    BlockMap(#[from] BlockMapError),
    #[error("code is defined over a different matrix")]
    MatrixMismatch,
    #[error("internal inconsistency: coded matrix of a verified code is invalid ({0})")]
    InternalInconsistency(MatrixError),
    #[error("no code word matches the input at position {position}")]
    StuckParse { position: usize },
    #[error("block {0:?} is not in the block map table")]
    BlockNotInTable(Vec<Symbol>),
}

/// A verified right Markov code together with its coded matrix `A(C)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedShift {
    code: MarkovCode,
    coded: TransitionMatrix,
}

/// Builds `A(C)(i, j) = A(r(ω(i)), s(ω(j)))`.
pub fn build_coded_matrix(a: &TransitionMatrix, c: &MarkovCode) -> Result<CodedShift, CodedError> {
    if c.matrix() != a {
        return Err(CodedError::MatrixMismatch);
    }
    CodedShift::new(c.clone())
}

/// `A(C)` for an unverified candidate; fails when it is not a valid matrix.
pub fn coded_matrix_of(c: &CodeCandidate) -> Result<TransitionMatrix, MatrixError> {
    TransitionMatrix::from_bool(c.coded_bool_matrix())
}

impl CodedShift {
    pub fn new(code: MarkovCode) -> Result<Self, CodedError> {
        let coded = TransitionMatrix::from_bool(code.candidate().coded_bool_matrix())
            .map_err(CodedError::InternalInconsistency)?;
        Ok(CodedShift { code, coded })
    }

    /// The shift with its trivial code; encoding is the identity.
    pub fn trivial(a: TransitionMatrix) -> Self {
        let code = crate::code::verify_markov_code(&CodeCandidate::trivial(a), 1)
            .expect("the trivial code is a right Markov code");
        CodedShift::new(code).expect("A(C_0) = A")
    }

    pub fn base_matrix(&self) -> &TransitionMatrix {
        self.code.matrix()
    }

    pub fn code(&self) -> &MarkovCode {
        &self.code
    }

    pub fn coded_matrix(&self) -> &TransitionMatrix {
        &self.coded
    }

    /// `h_C(x)`: the index sequence of the greedy factorization of `x`.
    pub fn encode(&self, x: &EventuallyPeriodicPoint) -> Result<EventuallyPeriodicPoint, CodedError> {
        x.validate(self.base_matrix())?;
        let candidate = self.code.candidate();
        let k0 = self.code.k0();
        let pre = x.preperiod().len();
        let per = x.period().len();
        // Parsing from any position past the preperiod only depends on the
        // phase within the period, so the first repeated phase closes the cycle.
        let mut seen: HashMap<usize, usize> = HashMap::new();
        let mut out = Vec::new();
        let mut pos = 0usize;
        loop {
            if pos >= pre {
                let phase = (pos - pre) % per;
                if let Some(&start) = seen.get(&phase) {
                    let period = out.split_off(start);
                    return Ok(EventuallyPeriodicPoint::new(out, period)?);
                }
                seen.insert(phase, out.len());
            }
            let window: Vec<Symbol> = (pos..pos + k0).map(|p| x.symbol_at(p)).collect();
            let i = candidate
                .match_prefix(&window)
                .ok_or(CodedError::StuckParse { position: pos })?;
            out.push(i);
            pos += self.code.length(i);
        }
    }

    /// `h_C^{-1}(y) = ω(y_1)ω(y_2)⋯`.
    pub fn decode(&self, y: &EventuallyPeriodicPoint) -> Result<EventuallyPeriodicPoint, CodedError> {
        y.validate(&self.coded)?;
        let c = self.code.candidate();
        Ok(EventuallyPeriodicPoint::new(c.concat(y.preperiod()), c.concat(y.period()))?)
    }

    /// Emits every code word that can be committed from `buffer` and returns
    /// the held-back remainder, a proper prefix of some code word.
    pub fn stream_step(&self, buffer: &[Symbol]) -> Result<(Vec<Symbol>, Word), CodedError> {
        self.base_matrix().check_word(buffer)?;
        let c = self.code.candidate();
        let mut emitted = Vec::new();
        let mut pos = 0;
        while pos < buffer.len() {
            match c.match_prefix(&buffer[pos..]) {
                Some(i) => {
                    emitted.push(i);
                    pos += self.code.length(i);
                }
                None if c.is_proper_prefix_of_word(&buffer[pos..]) => break,
                None => return Err(CodedError::StuckParse { position: pos }),
            }
        }
        Ok((emitted, Word(buffer[pos..].to_vec())))
    }
}

pub fn encode_point(cs: &CodedShift, x: &EventuallyPeriodicPoint) -> Result<EventuallyPeriodicPoint, CodedError> {
    cs.encode(x)
}

pub fn decode_point(cs: &CodedShift, y: &EventuallyPeriodicPoint) -> Result<EventuallyPeriodicPoint, CodedError> {
    cs.decode(y)
}

pub fn encode_stream_step(cs: &CodedShift, buffer: &Word) -> Result<(Vec<Symbol>, Word), CodedError> {
    cs.stream_step(buffer.symbols())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockMapError {
    #[error("block map window must be at least 1")]
    ZeroWindow,
    #[error("block {0:?} has the wrong length")]
    WrongLength(Vec<Symbol>),
    #[error("admissible block {0:?} has no image")]
    MissingBlock(Vec<Symbol>),
    #[error("block {0:?} is not admissible in the source shift")]
    InadmissibleBlock(Vec<Symbol>),
    #[error("image {out} of block {block:?} is outside the target alphabet")]
    SymbolOutOfRange { block: Vec<Symbol>, out: Symbol },
    #[error("images along block {0:?} are not admissible in the target shift")]
    NotIntoTarget(Vec<Symbol>),
    #[error("block maps do not compose: intermediate shifts differ")]
    ShiftMismatch,
}

/// A block map with memory 0 and anticipation `window - 1`, total on the
/// admissible blocks of the source shift and mapping into the target shift.
#[derive(Clone, PartialEq, Eq)]
pub struct BlockMap {
    source: TransitionMatrix,
    target: TransitionMatrix,
    window: usize,
    table: BTreeMap<Vec<Symbol>, Symbol>,
}

impl fmt::Debug for BlockMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlockMap")
            .field("window", &self.window)
            .field("table", &self.table)
            .finish()
    }
}

impl BlockMap {
    pub fn new(
        source: TransitionMatrix,
        target: TransitionMatrix,
        window: usize,
        table: BTreeMap<Vec<Symbol>, Symbol>,
    ) -> Result<Self, BlockMapError> {
        if window == 0 {
            return Err(BlockMapError::ZeroWindow);
        }
        for (block, &out) in &table {
            if block.len() != window {
                return Err(BlockMapError::WrongLength(block.clone()));
            }
            if source.check_word(block).is_err() {
                return Err(BlockMapError::InadmissibleBlock(block.clone()));
            }
            if !target.contains_symbol(out) {
                return Err(BlockMapError::SymbolOutOfRange {
                    block: block.clone(),
                    out,
                });
            }
        }
        for block in enumerate_words(&source, window) {
            if !table.contains_key(block.symbols()) {
                return Err(BlockMapError::MissingBlock(block.0));
            }
        }
        for long in enumerate_words(&source, window + 1) {
            let s = long.symbols();
            if !target.allows(table[&s[..window]], table[&s[1..]]) {
                return Err(BlockMapError::NotIntoTarget(long.0));
            }
        }
        Ok(BlockMap {
            source,
            target,
            window,
            table,
        })
    }

    pub fn from_fn(
        source: TransitionMatrix,
        target: TransitionMatrix,
        window: usize,
        f: impl Fn(&[Symbol]) -> Symbol,
    ) -> Result<Self, BlockMapError> {
        let table = enumerate_words(&source, window)
            .into_iter()
            .map(|w| {
                let out = f(w.symbols());
                (w.0, out)
            })
            .collect();
        BlockMap::new(source, target, window, table)
    }

    pub fn identity(m: TransitionMatrix) -> Self {
        BlockMap::from_fn(m.clone(), m, 1, |b| b[0]).expect("identity is a valid block map")
    }

    /// 1-block relabeling `s ↦ perm[s-1] + 1`, onto `m.permuted(perm)`.
    pub fn relabeling(m: &TransitionMatrix, perm: &[usize]) -> Self {
        BlockMap::from_fn(m.clone(), m.permuted(perm), 1, |b| perm[b[0] as usize - 1] as Symbol + 1)
            .expect("relabeling is a valid block map")
    }

    pub fn source(&self) -> &TransitionMatrix {
        &self.source
    }

    pub fn target(&self) -> &TransitionMatrix {
        &self.target
    }

    /// `n + 1`.
    pub fn window(&self) -> usize {
        self.window
    }

    /// `n`.
    pub fn anticipation(&self) -> usize {
        self.window - 1
    }

    pub fn table(&self) -> &BTreeMap<Vec<Symbol>, Symbol> {
        &self.table
    }

    pub fn apply_block(&self, block: &[Symbol]) -> Option<Symbol> {
        self.table.get(block).copied()
    }

    /// Image of a finite word; `|w| - n` symbols long.
    pub fn image_of_word(&self, w: &[Symbol]) -> Option<Vec<Symbol>> {
        if w.len() < self.window {
            return Some(Vec::new());
        }
        w.windows(self.window).map(|b| self.apply_block(b)).collect()
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &BlockMap) -> Result<BlockMap, BlockMapError> {
        if self.target != next.source {
            return Err(BlockMapError::ShiftMismatch);
        }
        let window = self.window + next.window - 1;
        let table = enumerate_words(&self.source, window)
            .into_iter()
            .map(|w| {
                let mid = self.image_of_word(w.symbols()).expect("total on admissible blocks");
                let out = next.apply_block(&mid).expect("intermediate block is admissible");
                (w.0, out)
            })
            .collect();
        BlockMap::new(self.source.clone(), next.target.clone(), window, table)
    }

    /// The same sliding block code with the smallest window that determines
    /// the output.
    pub fn reduced(&self) -> BlockMap {
        let mut best = self.clone();
        for w in (1..self.window).rev() {
            let mut table: BTreeMap<Vec<Symbol>, Symbol> = BTreeMap::new();
            let consistent = self.table.iter().all(|(block, &out)| {
                *table.entry(block[..w].to_vec()).or_insert(out) == out
            });
            if !consistent {
                break;
            }
            best = BlockMap {
                source: self.source.clone(),
                target: self.target.clone(),
                window: w,
                table,
            };
        }
        best
    }
}

/// `Φ_∞^{[0,n]}` applied to an exact point.
pub fn apply_sliding_block(phi: &BlockMap, y: &EventuallyPeriodicPoint) -> Result<EventuallyPeriodicPoint, CodedError> {
    let pre = y.preperiod().len();
    let per = y.period().len();
    let at = |m: usize| -> Result<Symbol, CodedError> {
        let block: Vec<Symbol> = (m..m + phi.window).map(|p| y.symbol_at(p)).collect();
        phi.apply_block(&block).ok_or(CodedError::BlockNotInTable(block))
    };
    let out_pre = (0..pre).map(at).collect::<Result<Vec<_>, _>>()?;
    let out_per = (pre..pre + per).map(at).collect::<Result<Vec<_>, _>>()?;
    Ok(EventuallyPeriodicPoint::new(out_pre, out_per)?)
}

/// Why a pair of block maps fails to be mutually inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InverseFailure {
    ShiftMismatch,
    /// `ψ∘φ` moves the first symbol of this source block.
    NotLeftInverse(Vec<Symbol>),
    /// `φ∘ψ` moves the first symbol of this target block.
    NotRightInverse(Vec<Symbol>),
}

impl fmt::Display for InverseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InverseFailure::ShiftMismatch => write!(f, "maps do not connect the same pair of shifts"),
            InverseFailure::NotLeftInverse(b) => write!(f, "backward after forward moves block {}", render_symbols(b)),
            InverseFailure::NotRightInverse(b) => write!(f, "forward after backward moves block {}", render_symbols(b)),
        }
    }
}

/// Checks `ψ∘φ = id` and `φ∘ψ = id` on every admissible block of length
/// `n_φ + n_ψ + 1`, which determines both composites.
pub fn verify_inverse_pair(phi: &BlockMap, psi: &BlockMap) -> Result<usize, InverseFailure> {
    if phi.target != psi.source || psi.target != phi.source {
        return Err(InverseFailure::ShiftMismatch);
    }
    let window = phi.window + psi.window - 1;
    for u in enumerate_words(&phi.source, window) {
        let v = phi.image_of_word(u.symbols()).unwrap();
        if psi.apply_block(&v) != Some(u.symbols()[0]) {
            return Err(InverseFailure::NotLeftInverse(u.0));
        }
    }
    for v in enumerate_words(&phi.target, window) {
        let u = psi.image_of_word(v.symbols()).unwrap();
        if phi.apply_block(&u) != Some(v.symbols()[0]) {
            return Err(InverseFailure::NotRightInverse(v.0));
        }
    }
    Ok(window)
}

/// Searches anticipation `0..=w_max` for a block map inverse of `phi`.
/// `None` means none was found within the bound, not that none exists.
pub fn find_sliding_inverse(phi: &BlockMap, w_max: usize) -> Option<BlockMap> {
    let n = phi.anticipation();
    'window: for a in 0..=w_max {
        let mut table: BTreeMap<Vec<Symbol>, Symbol> = BTreeMap::new();
        for u in enumerate_words(&phi.source, n + a + 1) {
            let v = phi.image_of_word(u.symbols()).unwrap();
            let first = u.symbols()[0];
            match table.get(&v) {
                Some(&s) if s != first => continue 'window,
                _ => {
                    table.insert(v, first);
                }
            }
        }
        if enumerate_words(&phi.target, a + 1)
            .iter()
            .any(|v| !table.contains_key(v.symbols()))
        {
            // Some target block has no preimage: phi is not onto.
            return None;
        }
        let Ok(psi) = BlockMap::new(phi.target.clone(), phi.source.clone(), a + 1, table) else {
            continue;
        };
        if verify_inverse_pair(phi, &psi).is_ok() {
            return Some(psi);
        }
    }
    None
}

/// `φ_Φ = h_{C2}^{-1} ∘ φ ∘ h_{C1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MovingBlockCode {
    source: CodedShift,
    target: CodedShift,
    phi: BlockMap,
}

impl MovingBlockCode {
    pub fn new(source: CodedShift, target: CodedShift, phi: BlockMap) -> Result<Self, BlockMapError> {
        if phi.source() != source.coded_matrix() || phi.target() != target.coded_matrix() {
            return Err(BlockMapError::ShiftMismatch);
        }
        Ok(MovingBlockCode { source, target, phi })
    }

    pub fn source(&self) -> &CodedShift {
        &self.source
    }

    pub fn target(&self) -> &CodedShift {
        &self.target
    }

    pub fn block_map(&self) -> &BlockMap {
        &self.phi
    }

    pub fn apply(&self, x: &EventuallyPeriodicPoint) -> Result<EventuallyPeriodicPoint, CodedError> {
        let y = self.source.encode(x)?;
        let z = apply_sliding_block(&self.phi, &y)?;
        self.target.decode(&z)
    }
}

pub fn apply_moving_block(m: &MovingBlockCode, x: &EventuallyPeriodicPoint) -> Result<EventuallyPeriodicPoint, CodedError> {
    m.apply(x)
}
