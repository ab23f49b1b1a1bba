//! Acceptance criteria, one test each. Every test checks its own runtime
//! bound and prints a single PASS line with the measured time.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use markov_codes::code::{enumerate_markov_codes, CodeFailure};
use markov_codes::equivalence::{
    build_coe_witness, check_elementary_coded_equivalence, check_one_sided_conjugacy, total_amalgamation,
    verify_certificate, verify_coe_witness, CertificateStep, ConjugacyWitness, ElementaryResult,
    EquivalenceCertificate, VerifyOptions,
};
use markov_codes::format::Artifact;
use markov_codes::shift::MatrixError;
use markov_codes::{
    build_coded_matrix, is_code, is_prefix_code, matrices_isomorphic, sample_points, verify_markov_code,
    CodeCandidate, CodedShift, Symbol, TransitionMatrix, Word,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn timed(id: u32, limit: Duration, body: impl FnOnce() -> String) {
    let start = Instant::now();
    let detail = body();
    let elapsed = start.elapsed();
    assert!(elapsed < limit, "criterion {id}: took {elapsed:?}, limit {limit:?}");
    println!("criterion {id}: PASS in {elapsed:.2?} (limit {limit:?}) {detail}");
}

fn coded_rows(raw: &[&[i64]], words: &[&[Symbol]]) -> (Vec<Vec<u8>>, Vec<Vec<u8>>) {
    let built = build_coded_matrix(&matrix(raw), &code(raw, words)).unwrap();
    let words: Vec<Vec<Symbol>> = words.iter().map(|w| w.to_vec()).collect();
    (built.coded_matrix().to_rows(), coded_matrix_oracle(&rows(raw), &words))
}

#[test]
fn criterion_01_golden_mean_code_and_trivial_codes() {
    timed(1, Duration::from_secs(1), || {
        let c1 = verify_markov_code(&CodeCandidate::from_symbols(matrix(A1), C1).unwrap(), 8).unwrap();
        assert_eq!((c1.k0(), c1.min_l()), (2, 1));
        for a in [matrix(A1), matrix(A2), matrix(A3), full(2), full(3), full(4)] {
            let t = verify_markov_code(&CodeCandidate::trivial(a.clone()), 8).unwrap();
            assert!(t.is_trivial());
            assert_eq!(build_coded_matrix(&a, &t).unwrap().coded_matrix(), &a);
        }
        let (built, oracle) = coded_rows(A1, C1);
        assert_eq!(built, vec![vec![1, 1], vec![1, 1]]);
        assert_eq!(built, oracle);
        "A(C1) = [[1,1],[1,1]]".into()
    });
}

#[test]
fn criterion_02_coded_matrix_amalgamates_to_full_two() {
    timed(2, Duration::from_secs(1), || {
        let (built, oracle) = coded_rows(A2, C2);
        let expected = vec![vec![0, 0, 1, 1], vec![1, 1, 0, 0], vec![1, 1, 0, 0], vec![0, 0, 1, 1]];
        assert_eq!(built, expected);
        assert_eq!(built, oracle);
        let ac2 = build_coded_matrix(&matrix(A2), &code(A2, C2)).unwrap().coded_matrix().clone();
        let am = total_amalgamation(&ac2);
        assert!(matrices_isomorphic(&am.canonical, &full(2)).is_some());
        assert!(!am.moves.is_empty());
        for mv in &am.moves {
            ConjugacyWitness::new(mv.witness.forward().clone(), mv.witness.backward().clone()).unwrap();
        }
        let composite = am.witness();
        assert_eq!(composite.source(), &ac2);
        assert_eq!(composite.target(), &am.canonical);
        format!("{} verified moves", am.moves.len())
    });
}

#[test]
fn criterion_03_a3_elementary_equivalent_to_full_four() {
    timed(3, Duration::from_secs(5), || {
        let (built, oracle) = coded_rows(A3, C3);
        assert_eq!(built, vec![vec![1; 4]; 4]);
        assert_eq!(built, oracle);
        let cert = match check_elementary_coded_equivalence(&matrix(A3), &full(4), 4, 8, 4).unwrap() {
            ElementaryResult::Found(cert) => cert,
            other => panic!("not found: {other:?}"),
        };
        let report = verify_certificate(&cert, &VerifyOptions::default());
        assert!(report.passed(), "{report}");
        format!("certificate code {}", cert.steps[0].left)
    });
}

#[test]
fn criterion_04_full_shifts_have_only_trivial_codes() {
    timed(4, Duration::from_secs(60), || {
        for (n, max_len) in [(2, 4), (3, 3)] {
            let a = full(n);
            let codes = enumerate_markov_codes(&a, max_len, 8).unwrap();
            assert_eq!(codes.len(), 1, "full-{n}: {codes:?}");
            assert_eq!(codes[0].candidate(), &CodeCandidate::trivial(a));
        }
        "full-2 (max_len 4), full-3 (max_len 3)".into()
    });
}

#[test]
fn criterion_05_power_words_have_exponent_one() {
    timed(5, Duration::from_secs(60), || {
        let mut checked = 0;
        for (raw, max_len) in [(rows(A1), 4), (rows(A3), 4), (rows(&[&[1, 1], &[1, 1]]), 4), (rows(&[&[1, 1, 1], &[1, 1, 1], &[1, 1, 1]]), 3)] {
            let a = TransitionMatrix::new(&raw).unwrap();
            for c in enumerate_markov_codes(&a, max_len, 8).unwrap() {
                for w in c.words() {
                    let s = w.symbols();
                    let a0 = s[0];
                    if s.iter().all(|&x| x == a0) && allowed(&raw, a0, a0) {
                        assert_eq!(s.len(), 1, "code {c} has power word {w}");
                        checked += 1;
                    }
                }
            }
        }
        format!("{checked} power words")
    });
}

fn random_word(rng: &mut StdRng, raw: &[Vec<i64>], len: usize) -> Vec<Symbol> {
    let n = raw.len() as Symbol;
    let mut w = vec![rng.random_range(1..=n)];
    while w.len() < len {
        let last = *w.last().unwrap();
        let next: Vec<Symbol> = (1..=n).filter(|&b| allowed(raw, last, b)).collect();
        w.push(next[rng.random_range(0..next.len())]);
    }
    w
}

#[test]
fn criterion_06_prefix_and_code_checks_match_oracles() {
    timed(6, Duration::from_secs(60), || {
        let mut rng = StdRng::seed_from_u64(0x5eed);
        let mut non_codes = 0;
        for raw in [rows(A1), rows(A2), rows(&[&[1, 1], &[1, 1]])] {
            let a = TransitionMatrix::new(&raw).unwrap();
            let mut generated = 0;
            while generated < 1000 {
                let count = rng.random_range(1..=5);
                let mut words: Vec<Vec<Symbol>> = Vec::new();
                for _ in 0..count {
                    let len = rng.random_range(1..=4);
                    let w = random_word(&mut rng, &raw, len);
                    if !words.contains(&w) {
                        words.push(w);
                    }
                }
                generated += 1;
                let c = CodeCandidate::new(a.clone(), words.iter().cloned().map(Word).collect()).unwrap();
                let disjoint = words.iter().enumerate().all(|(i, u)| {
                    words.iter().enumerate().all(|(j, v)| i == j || !cylinders_intersect(u, v))
                });
                assert_eq!(is_prefix_code(&c).is_ok(), disjoint, "prefix disagreement on {words:?}");
                let ambiguous = double_factorization_oracle(&words, 4);
                assert_eq!(is_code(&c).is_err(), ambiguous, "code disagreement on {words:?}");
                if let Err(d) = is_code(&c) {
                    non_codes += 1;
                    assert_ne!(d.left, d.right);
                    assert_eq!(c.concat(&d.left), c.concat(&d.right));
                }
            }
        }
        format!("3000 word sets, {non_codes} not uniquely decipherable")
    });
}

#[test]
fn criterion_07_orbit_equivalence_identities() {
    timed(7, Duration::from_secs(10), || {
        let mut total = 0;
        for (raw, words) in [(A1, C1), (A2, C2), (A3, C3)] {
            let a = matrix(raw);
            let c = code(raw, words);
            let w = build_coe_witness(&a, &c).unwrap();
            let points = sample_points(&a, 120);
            assert!(points.len() >= 100);
            let report = verify_coe_witness(&w, &points, 256).unwrap();
            assert!(report.passed(), "{report}");
            let forward = report.checks.iter().filter(|c| c.name == "forward" && c.passed).count();
            let backward = report.checks.iter().filter(|c| c.name == "backward" && c.passed).count();
            assert_eq!((forward, backward), (points.len(), points.len()));
            total += points.len();
        }
        format!("{total} points, both directions")
    });
}

#[test]
fn criterion_08_chained_certificate_verifies_end_to_end() {
    timed(8, Duration::from_secs(30), || {
        let first = EquivalenceCertificate::new(vec![CertificateStep::from_witness(
            code(A1, C1).candidate().clone(),
            CodeCandidate::trivial(full(2)),
            &ConjugacyWitness::identity(&full(2)),
        )])
        .unwrap();
        let ac2 = build_coded_matrix(&matrix(A2), &code(A2, C2)).unwrap().coded_matrix().clone();
        let w = check_one_sided_conjugacy(&ac2, &full(2), 4).witness().cloned().unwrap();
        let second = EquivalenceCertificate::new(vec![CertificateStep::from_witness(
            code(A2, C2).candidate().clone(),
            CodeCandidate::trivial(full(2)),
            &w,
        )])
        .unwrap();
        let chain = first.chain(&second.reversed()).unwrap();
        assert_eq!(chain.source(), &matrix(A1));
        assert_eq!(chain.target(), &matrix(A2));
        let reparsed = EquivalenceCertificate::from_json(&chain.to_json()).unwrap();
        assert_eq!(reparsed, chain);
        let report = verify_certificate(&reparsed, &VerifyOptions::default());
        assert!(report.passed(), "{report}");
        let composite: Vec<_> = report.checks.iter().filter(|c| c.name.starts_with("composite.")).collect();
        assert_eq!(composite.len(), 2);
        composite.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; ")
    });
}

#[test]
fn criterion_09_encode_decode_round_trip_and_bounded_holdback() {
    timed(9, Duration::from_secs(10), || {
        let mut codes = vec![code(A1, C1), code(A2, C2), code(A3, C3)];
        for a in [matrix(A1), matrix(A2), matrix(A3), full(2)] {
            codes.push(verify_markov_code(&CodeCandidate::trivial(a), 8).unwrap());
        }
        codes.extend(enumerate_markov_codes(&matrix(A2), 4, 8).unwrap());
        let mut checked = 0;
        for c in codes {
            let k0 = c.k0();
            let words: Vec<Vec<Symbol>> = c.words().iter().map(|w| w.0.clone()).collect();
            let cs = CodedShift::new(c).unwrap();
            for x in sample_points(cs.base_matrix(), 200) {
                let y = cs.encode(&x).unwrap();
                assert_eq!(cs.decode(&y).unwrap(), x);
                let (oracle, _) = greedy_parse_oracle(&words, &expand(&x, 80));
                assert_eq!(expand(&y, 20), oracle[..20].to_vec(), "encode disagrees with oracle on {x}");
                for len in 0..=3 * k0 + 4 {
                    let buffer = expand(&x, len);
                    let (emitted, held) = cs.stream_step(&buffer).unwrap();
                    assert!(held.len() < k0, "holdback {held} for {buffer:?}");
                    let (parsed, used) = greedy_parse_oracle(&words, &buffer);
                    assert_eq!((emitted, held.symbols()), (parsed, &buffer[used..]));
                }
                checked += 1;
            }
            for y in sample_points(cs.coded_matrix(), 200) {
                assert_eq!(cs.encode(&cs.decode(&y).unwrap()).unwrap(), y);
            }
        }
        format!("{checked} base points")
    });
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_markov-codes")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn criterion_10_negative_controls() {
    timed(10, Duration::from_secs(1), || {
        let dir = tempfile::tempdir().unwrap();

        let mut w = build_coe_witness(&matrix(A1), &code(A1, C1)).unwrap();
        w.cells[1].k1 = 0;
        let report = verify_coe_witness(&w, &[point(&[2], &[1]), point(&[], &[2, 1])], 64).unwrap();
        assert!(report.has_reason("k1_mismatch"), "{report}");
        assert!(report.has_reason("forward_identity"), "{report}");
        let corrupted = dir.path().join("corrupted.json");
        std::fs::write(&corrupted, w.to_json()).unwrap();
        let (exit, out) = cli(&["coe", "verify", corrupted.to_str().unwrap(), &fixture("x2_1.json")]);
        assert_eq!(exit, 1);
        assert!(out.contains("FAIL forward k1_mismatch"), "{out}");

        let bad = CodeCandidate::from_symbols(full(2), &[&[1], &[1, 2], &[2, 2]]).unwrap();
        let failure = verify_markov_code(&bad, 8).unwrap_err();
        assert!(matches!(failure, CodeFailure::Prefix(_)));
        assert_eq!(failure.condition(), "prefix");
        let (exit, out) = cli(&["code", "verify", &fixture("full2.json"), &fixture("Cbad.json")]);
        assert_eq!((exit, out.trim()), (1, "prefix condition failed: (1, 12)"));

        for perm in [vec![vec![0, 1], vec![1, 0]], vec![vec![1, 0], vec![0, 1]]] {
            let e = TransitionMatrix::new(&perm).unwrap_err();
            assert_eq!(e, MatrixError::IsPermutation);
            assert_eq!(e.reason(), "is_permutation");
        }
        let (exit, out) = cli(&["--format", "json", "validate", &fixture("perm2.json")]);
        assert_eq!(exit, 1);
        assert!(out.contains("\"reason\": \"is_permutation\""), "{out}");
        let (exit, _) = cli(&["words", &fixture("perm2.json"), "-k", "2"]);
        assert_eq!(exit, 2);
        "corrupted k1, non-prefix code, permutation matrices".into()
    });
}
