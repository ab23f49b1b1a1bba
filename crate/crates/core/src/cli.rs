//! Command-line front end.
//!
//! Exit codes: 0 success, 1 property refuted or nothing found within the
//! bounds (reason on standard output), 2 usage or input error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::code::{
    enumerate_markov_codes, verify_markov_code, CodeCandidate, CodeFailure, EnumerationError, MarkovCode,
};
use crate::coded::CodedShift;
use crate::equivalence::{
    build_coe_witness, check_elementary_coded_equivalence, check_one_sided_conjugacy, total_amalgamation,
    verify_certificate, verify_coe_witness, CoeError, CoeWitness, ConjugacyResult, ElementaryResult,
    EquivalenceCertificate, VerifyOptions,
};
use crate::format::{block_map_to_file, Artifact, ConjugacyFile, FormatError, MatrixFile, PointList};
use crate::report::Report;
use crate::shift::{enumerate_words, render_symbols, EventuallyPeriodicPoint, TransitionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "markov-codes", version, about = "Right Markov codes on one-sided topological Markov shifts")]
struct Cli {
    /// Output format for reports and results.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Write the produced JSON artifact to this file (only on success).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a matrix is a 0-1, irreducible, non-permutation matrix.
    Validate { matrix: PathBuf },
    /// List the admissible words of length K.
    Words {
        matrix: PathBuf,
        #[arg(short)]
        k: usize,
    },
    /// Code verification and enumeration.
    #[command(subcommand)]
    Code(CodeCommand),
    /// Build the coded matrix A(C).
    BuildAc { matrix: PathBuf, code: PathBuf },
    /// Apply the coding homeomorphism h_C to a point.
    Encode { matrix: PathBuf, code: PathBuf, point: PathBuf },
    /// Apply h_C^{-1} to a point of the coded shift.
    Decode { matrix: PathBuf, code: PathBuf, point: PathBuf },
    /// Total column amalgamation with per-move conjugacy witnesses.
    Amalgamate { matrix: PathBuf },
    /// Search for a one-sided conjugacy between two shifts.
    Conjugacy {
        matrix_a: PathBuf,
        matrix_b: PathBuf,
        #[arg(long, default_value_t = 4)]
        wmax: usize,
    },
    /// Continuous orbit equivalence witnesses.
    #[command(subcommand)]
    Coe(CoeCommand),
    /// Elementary coded equivalence search.
    #[command(subcommand)]
    Equiv(EquivCommand),
    /// Equivalence certificate verification.
    #[command(subcommand)]
    Cert(CertCommand),
}

#[derive(Debug, Subcommand)]
enum CodeCommand {
    Verify {
        matrix: PathBuf,
        code: PathBuf,
        #[arg(long, default_value_t = 8)]
        lmax: usize,
    },
    Enumerate {
        matrix: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        #[arg(long, default_value_t = 8)]
        lmax: usize,
    },
}

#[derive(Debug, Subcommand)]
enum CoeCommand {
    Witness {
        matrix: PathBuf,
        code: PathBuf,
        #[arg(long, default_value_t = 8)]
        lmax: usize,
    },
    Verify {
        witness: PathBuf,
        points: PathBuf,
        /// Points with more than this many stored symbols fail.
        #[arg(long, default_value_t = 256)]
        budget: usize,
    },
}

#[derive(Debug, Subcommand)]
enum EquivCommand {
    Elementary {
        matrix_a: PathBuf,
        matrix_b: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        #[arg(long, default_value_t = 8)]
        lmax: usize,
        #[arg(long, default_value_t = 4)]
        wmax: usize,
    },
}

#[derive(Debug, Subcommand)]
enum CertCommand {
    Verify {
        certificate: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        lmax: usize,
    },
}

/// Result of a command that ran to completion.
struct Outcome {
    refuted: bool,
    text: String,
    json: Value,
    /// JSON artifact for `--output`.
    artifact: Option<String>,
}

impl Outcome {
    fn ok(text: impl Into<String>, json: Value) -> Self {
        Outcome {
            refuted: false,
            text: text.into(),
            json,
            artifact: None,
        }
    }

    fn refuted(reason: &str, message: impl Into<String>) -> Self {
        let message = message.into();
        Outcome {
            refuted: true,
            json: json!({ "reason": reason, "message": message }),
            text: message,
            artifact: None,
        }
    }

    fn with_artifact(mut self, artifact: String) -> Self {
        self.artifact = Some(artifact);
        self
    }

    fn report(report: Report) -> Self {
        let passed = report.passed();
        let mut text = report.to_string();
        text.push_str(if passed { "verified" } else { "refuted" });
        Outcome {
            refuted: !passed,
            json: json!({ "passed": passed, "checks": report.checks }),
            text,
            artifact: None,
        }
    }
}

/// An input or usage problem; exit code 2.
struct InputError(String);

impl From<FormatError> for InputError {
    fn from(e: FormatError) -> Self {
        InputError(e.to_string())
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(outcome) => {
            if let (false, Some(path), Some(artifact)) = (outcome.refuted, &cli.output, &outcome.artifact) {
                if let Err(e) = fs::write(path, format!("{artifact}\n")) {
                    let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                    return 2;
                }
            }
            let body = match cli.format {
                Format::Text => outcome.text,
                Format::Json => serde_json::to_string_pretty(&outcome.json).expect("values serialize"),
            };
            let _ = writeln!(out, "{}", body.trim_end());
            i32::from(outcome.refuted)
        }
        Err(InputError(message)) => {
            let _ = writeln!(err, "error: {message}");
            2
        }
    }
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))
}

fn load<T: Artifact>(path: &Path) -> Result<T, InputError> {
    T::from_json(&read(path)?).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn load_code(matrix: &Path, code: &Path) -> Result<CodeCandidate, InputError> {
    let a: TransitionMatrix = load(matrix)?;
    let c: CodeCandidate = load(code)?;
    if c.matrix() != &a {
        return Err(InputError(format!(
            "{}: code is defined over a different matrix than {}",
            code.display(),
            matrix.display()
        )));
    }
    Ok(c)
}

fn words_json(c: &CodeCandidate) -> Value {
    json!(c.words().iter().map(|w| w.0.clone()).collect::<Vec<_>>())
}

fn failure_json(f: &CodeFailure) -> Value {
    let witness = match f {
        CodeFailure::Prefix(v) => json!({
            "prefix_index": v.prefix,
            "word_index": v.word,
            "prefix": v.prefix_word.0,
            "word": v.longer_word.0,
        }),
        CodeFailure::Factorization { missing } => json!(missing.0),
        CodeFailure::ShiftInvariance { l_max, witness } => json!({ "l_max": l_max, "tuple": witness }),
        CodeFailure::Irreducibility => Value::Null,
    };
    json!({ "condition": f.condition(), "witness": witness, "message": f.to_string() })
}

fn verified_code(c: &CodeCandidate, l_max: usize) -> Result<MarkovCode, Outcome> {
    verify_markov_code(c, l_max).map_err(|f| Outcome {
        refuted: true,
        text: f.to_string(),
        json: failure_json(&f),
        artifact: None,
    })
}

fn budget_exceeded(e: EnumerationError) -> Outcome {
    Outcome::refuted("search_budget_exceeded", e.to_string())
}

fn dispatch(command: &Command) -> Result<Outcome, InputError> {
    Ok(match command {
        Command::Validate { matrix } => validate(matrix)?,
        Command::Words { matrix, k } => {
            let a: TransitionMatrix = load(matrix)?;
            let words = enumerate_words(&a, *k);
            let text = words.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("\n");
            Outcome::ok(text, json!(words.iter().map(|w| w.0.clone()).collect::<Vec<_>>()))
        }
        Command::Code(CodeCommand::Verify { matrix, code, lmax }) => {
            let c = load_code(matrix, code)?;
            match verified_code(&c, *lmax) {
                Ok(m) => {
                    let table: Vec<Value> = m
                        .shift_table()
                        .iter()
                        .map(|e| json!({ "tuple": e.tuple, "replacement": e.replacement }))
                        .collect();
                    Outcome::ok(
                        format!("right Markov code, K0={}, L={}", m.k0(), m.min_l()),
                        json!({ "markov": true, "K0": m.k0(), "L": m.min_l(), "words": words_json(&c), "table": table }),
                    )
                }
                Err(o) => o,
            }
        }
        Command::Code(CodeCommand::Enumerate { matrix, max_len, lmax }) => {
            let a: TransitionMatrix = load(matrix)?;
            match enumerate_markov_codes(&a, *max_len, *lmax) {
                Ok(codes) => {
                    let text = codes.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("\n");
                    let list: Vec<Value> = codes.iter().map(|c| words_json(c.candidate())).collect();
                    Outcome::ok(text, json!(list))
                }
                Err(e) => budget_exceeded(e),
            }
        }
        Command::BuildAc { matrix, code } => {
            let c = load_code(matrix, code)?;
            match verified_code(&c, 8) {
                Ok(m) => {
                    let cs = coded_shift(m)?;
                    let coded = cs.coded_matrix();
                    Outcome::ok(coded.to_string(), json!(coded.to_file())).with_artifact(coded.to_json())
                }
                Err(o) => o,
            }
        }
        Command::Encode { matrix, code, point } => transform(matrix, code, point, true)?,
        Command::Decode { matrix, code, point } => transform(matrix, code, point, false)?,
        Command::Amalgamate { matrix } => {
            let a: TransitionMatrix = load(matrix)?;
            let am = total_amalgamation(&a);
            let mut text = String::new();
            let mut moves = Vec::new();
            for mv in &am.moves {
                text.push_str(&format!(
                    "merge states {} and {} (inverse window {})\n",
                    mv.merged.0,
                    mv.merged.1,
                    mv.witness.backward().window()
                ));
                moves.push(json!({
                    "merged": [mv.merged.0, mv.merged.1],
                    "forward": block_map_to_file(mv.witness.forward()),
                    "backward": block_map_to_file(mv.witness.backward()),
                    "window": mv.witness.verified_window(),
                }));
            }
            text.push_str(&am.canonical.to_string());
            Outcome::ok(text.trim_end(), json!({ "canonical": am.canonical.to_file(), "moves": moves }))
                .with_artifact(am.canonical.to_json())
        }
        Command::Conjugacy { matrix_a, matrix_b, wmax } => {
            let a: TransitionMatrix = load(matrix_a)?;
            let b: TransitionMatrix = load(matrix_b)?;
            match check_one_sided_conjugacy(&a, &b, *wmax) {
                ConjugacyResult::Found(w) => {
                    let file = ConjugacyFile {
                        forward: block_map_to_file(w.forward()),
                        backward: block_map_to_file(w.backward()),
                        window: w.verified_window(),
                    };
                    let artifact = serde_json::to_string_pretty(&file).expect("files serialize");
                    Outcome::ok(
                        format!(
                            "conjugate: forward window {}, backward window {}, verified on all blocks of length {}",
                            w.forward().window(),
                            w.backward().window(),
                            w.verified_window()
                        ),
                        json!(file),
                    )
                    .with_artifact(artifact)
                }
                ConjugacyResult::NotFoundWithin { w_max } => Outcome::refuted(
                    "not_found_within",
                    format!("no conjugacy found within w_max={w_max} (not a disproof)"),
                ),
            }
        }
        Command::Coe(CoeCommand::Witness { matrix, code, lmax }) => {
            let c = load_code(matrix, code)?;
            match verified_code(&c, *lmax) {
                Ok(m) => {
                    let w = build_coe_witness(c.matrix(), &m).map_err(|e| InputError(e.to_string()))?;
                    Outcome::ok(witness_text(&w), serde_json::to_value(w.to_file()).expect("files serialize"))
                        .with_artifact(w.to_json())
                }
                Err(o) => o,
            }
        }
        Command::Coe(CoeCommand::Verify { witness, points, budget }) => {
            let w = match CoeWitness::from_json(&read(witness)?) {
                Ok(w) => w,
                Err(FormatError::Refuted { field, message }) => {
                    return Ok(Outcome::refuted("witness_invalid", format!("{field}: {message}")))
                }
                Err(e) => return Err(InputError(format!("{}: {e}", witness.display()))),
            };
            let PointList(pts) = load(points)?;
            match verify_coe_witness(&w, &pts, *budget) {
                Ok(report) => Outcome::report(report),
                Err(e @ CoeError::InvalidPoint { .. }) => return Err(InputError(format!("{}: {e}", points.display()))),
                Err(e) => Outcome::refuted("witness_invalid", e.to_string()),
            }
        }
        Command::Equiv(EquivCommand::Elementary { matrix_a, matrix_b, max_len, lmax, wmax }) => {
            let a: TransitionMatrix = load(matrix_a)?;
            let b: TransitionMatrix = load(matrix_b)?;
            match check_elementary_coded_equivalence(&a, &b, *max_len, *lmax, *wmax) {
                Ok(ElementaryResult::Found(cert)) => {
                    let step = &cert.steps[0];
                    let text = format!(
                        "elementary coded equivalence: C1 = {} on A, C2 = {} on B, conjugacy verified on blocks of length {}",
                        step.left, step.right, step.window
                    );
                    Outcome::ok(text, serde_json::to_value(cert.to_file()).expect("files serialize"))
                        .with_artifact(cert.to_json())
                }
                Ok(ElementaryResult::NotFoundWithin { max_len, l_max, w_max }) => Outcome::refuted(
                    "not_found_within",
                    format!(
                        "no elementary coded equivalence found within max_len={max_len}, lmax={l_max}, wmax={w_max} (not a disproof)"
                    ),
                ),
                Err(e) => budget_exceeded(e),
            }
        }
        Command::Cert(CertCommand::Verify { certificate, samples, lmax }) => {
            let cert = match EquivalenceCertificate::from_json(&read(certificate)?) {
                Ok(c) => c,
                Err(FormatError::Refuted { field, message }) => {
                    return Ok(Outcome::refuted("certificate_invalid", format!("{field}: {message}")))
                }
                Err(e) => return Err(InputError(format!("{}: {e}", certificate.display()))),
            };
            let opts = VerifyOptions {
                sample_count: *samples,
                l_max: *lmax,
                ..VerifyOptions::default()
            };
            Outcome::report(verify_certificate(&cert, &opts))
        }
    })
}

fn validate(path: &Path) -> Result<Outcome, InputError> {
    let file: MatrixFile =
        serde_json::from_str(&read(path)?).map_err(|e| InputError(format!("{}: malformed file: {e}", path.display())))?;
    if file.n != file.rows.len() {
        return Err(InputError(format!(
            "{}: invalid field `n`: n = {} but there are {} rows",
            path.display(),
            file.n,
            file.rows.len()
        )));
    }
    Ok(match TransitionMatrix::new(&file.rows) {
        Ok(m) => Outcome::ok(
            format!("valid matrix, n={}", m.size()),
            json!({ "valid": true, "n": m.size() }),
        ),
        Err(e) => Outcome {
            refuted: true,
            text: format!("invalid matrix: {e}"),
            json: json!({ "valid": false, "reason": e.reason(), "message": e.to_string() }),
            artifact: None,
        },
    })
}

fn coded_shift(m: MarkovCode) -> Result<CodedShift, InputError> {
    CodedShift::new(m).map_err(|e| InputError(e.to_string()))
}

fn transform(matrix: &Path, code: &Path, point: &Path, encode: bool) -> Result<Outcome, InputError> {
    let c = load_code(matrix, code)?;
    let x: EventuallyPeriodicPoint = load(point)?;
    let m = match verified_code(&c, 8) {
        Ok(m) => m,
        Err(o) => return Ok(o),
    };
    let cs = coded_shift(m)?;
    let y = if encode { cs.encode(&x) } else { cs.decode(&x) }
        .map_err(|e| InputError(format!("{}: {e}", point.display())))?;
    Ok(Outcome::ok(y.to_string(), json!(y.to_file())).with_artifact(y.to_json()))
}

fn witness_text(w: &CoeWitness) -> String {
    let mut lines = vec![format!("L={} k2={}", w.l, w.k2)];
    for cell in &w.cells {
        lines.push(format!(
            "cell {} k1={} replacement={}",
            render_symbols(&cell.word_indices),
            cell.k1,
            render_symbols(&cell.replacement)
        ));
    }
    let l2: Vec<String> = w.l2.iter().enumerate().map(|(i, v)| format!("{}:{v}", i + 1)).collect();
    lines.push(format!("l2 {}", l2.join(" ")));
    lines.join("\n")
}
