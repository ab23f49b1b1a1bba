//! Right Markov codes on one-sided topological Markov shifts.
//!
//! The crate decides the code conditions for a finite word set, builds the
//! coded shift `A(C)`, converts points through the standard coding
//! homeomorphism, searches for elementary coded equivalences, and produces
//! machine-checkable continuous orbit equivalence witnesses.

pub mod cli;
pub mod code;
pub mod coded;
pub mod equivalence;
pub mod format;
pub mod report;
pub mod shift;

pub use code::{
    check_code_irreducibility, check_factorization_complete, check_shift_invariance, enumerate_markov_codes,
    is_code, is_prefix_code, parse_word, verify_markov_code, CodeCandidate, CodeFailure, MarkovCode,
    ParseResult, ParseStatus, ShiftInvariance,
};
pub use coded::{
    apply_moving_block, apply_sliding_block, build_coded_matrix, decode_point, encode_point, encode_stream_step,
    find_sliding_inverse, BlockMap, CodedShift, MovingBlockCode,
};
pub use equivalence::{
    build_coe_witness, check_elementary_coded_equivalence, check_one_sided_conjugacy, find_coe_exponents,
    matrices_isomorphic, total_amalgamation, verify_certificate, verify_coe_witness, CoeWitness,
    ConjugacyResult, ConjugacyWitness, ElementaryResult, EquivalenceCertificate,
};
pub use report::{Check, Report};
pub use shift::{
    enumerate_words, is_admissible, point_in_cylinder, sample_points, shift_point, validate_matrix, CylinderSet,
    EventuallyPeriodicPoint, Symbol, TransitionMatrix, Word,
};
