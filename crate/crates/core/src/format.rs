//! JSON file formats for matrices, codes, points, block maps, COE witnesses
//! and equivalence certificates.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{verify_markov_code, CodeCandidate, CodeFailure};
use crate::coded::{coded_matrix_of, BlockMap};
use crate::equivalence::{CertificateStep, CoeCell, CoeWitness, EquivalenceCertificate};
use crate::shift::{EventuallyPeriodicPoint, Symbol, TransitionMatrix, Word};

/// `l_max` used when a witness file's code is re-verified on load.
pub const WITNESS_CODE_LMAX: usize = 64;

#[derive(Debug, Error)]
pub enum FormatError {
    /// Not JSON, or JSON of the wrong shape. The message carries line and column.
    #[error("malformed file: {0}")]
    Json(#[from] serde_json::Error),
    /// Well-formed but an invalid value at `field`.
    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },
    /// Well-formed and valid as input, but the claimed object is not what the
    /// file says it is.
    #[error("{field}: {message}")]
    Refuted { field: String, message: String },
}

impl FormatError {
    fn field(field: impl Into<String>, message: impl ToString) -> Self {
        FormatError::Field {
            field: field.into(),
            message: message.to_string(),
        }
    }

    fn refuted(field: impl Into<String>, message: impl ToString) -> Self {
        FormatError::Refuted {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub n: usize,
    pub rows: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeFile {
    pub matrix: MatrixFile,
    pub words: Vec<Vec<Symbol>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointFile {
    pub preperiod: Vec<Symbol>,
    pub period: Vec<Symbol>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    pub block: Vec<Symbol>,
    pub out: Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockMapFile {
    pub window: usize,
    pub entries: Vec<BlockEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideFile {
    pub matrix: MatrixFile,
    pub code: Vec<Vec<Symbol>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugacyFile {
    pub forward: BlockMapFile,
    pub backward: BlockMapFile,
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepFile {
    pub left: SideFile,
    pub right: SideFile,
    pub conjugacy: ConjugacyFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub steps: Vec<StepFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellFile {
    pub word_indices: Vec<Symbol>,
    pub k1: usize,
    pub replacement: Vec<Symbol>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeWitnessFile {
    #[serde(rename = "L")]
    pub l: usize,
    pub cells: Vec<CellFile>,
    pub l2: BTreeMap<String, usize>,
    pub k2: usize,
    pub code: CodeFile,
}

/// A value with a JSON file representation; `from_json(to_json(x)) == x`.
pub trait Artifact: Sized {
    type File: Serialize + DeserializeOwned;

    fn to_file(&self) -> Self::File;
    fn from_file(file: Self::File) -> Result<Self, FormatError>;

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("artifact files serialize")
    }

    fn from_json(text: &str) -> Result<Self, FormatError> {
        Self::from_file(serde_json::from_str(text)?)
    }
}

impl Artifact for TransitionMatrix {
    type File = MatrixFile;

    fn to_file(&self) -> MatrixFile {
        MatrixFile {
            n: self.size(),
            rows: self
                .to_rows()
                .into_iter()
                .map(|r| r.into_iter().map(i64::from).collect())
                .collect(),
        }
    }

    fn from_file(file: MatrixFile) -> Result<Self, FormatError> {
        if file.n != file.rows.len() {
            return Err(FormatError::field(
                "n",
                format!("n = {} but there are {} rows", file.n, file.rows.len()),
            ));
        }
        TransitionMatrix::new(&file.rows).map_err(|e| FormatError::field("rows", e))
    }
}

fn words_from(matrix: TransitionMatrix, words: Vec<Vec<Symbol>>, field: &str) -> Result<CodeCandidate, FormatError> {
    CodeCandidate::new(matrix, words.into_iter().map(Word).collect()).map_err(|e| FormatError::field(field, e))
}

fn words_to(c: &CodeCandidate) -> Vec<Vec<Symbol>> {
    c.words().iter().map(|w| w.0.clone()).collect()
}

impl Artifact for CodeCandidate {
    type File = CodeFile;

    fn to_file(&self) -> CodeFile {
        CodeFile {
            matrix: self.matrix().to_file(),
            words: words_to(self),
        }
    }

    fn from_file(file: CodeFile) -> Result<Self, FormatError> {
        let matrix = TransitionMatrix::from_file(file.matrix).map_err(|e| nest("matrix", e))?;
        words_from(matrix, file.words, "words")
    }
}

impl Artifact for EventuallyPeriodicPoint {
    type File = PointFile;

    fn to_file(&self) -> PointFile {
        PointFile {
            preperiod: self.preperiod().to_vec(),
            period: self.period().to_vec(),
        }
    }

    fn from_file(file: PointFile) -> Result<Self, FormatError> {
        EventuallyPeriodicPoint::new(file.preperiod, file.period).map_err(|e| FormatError::field("period", e))
    }
}

/// A list of points; a single point object is also accepted on input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointList(pub Vec<EventuallyPeriodicPoint>);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointListFile {
    Many(Vec<PointFile>),
    One(PointFile),
}

impl Artifact for PointList {
    type File = PointListFile;

    fn to_file(&self) -> PointListFile {
        PointListFile::Many(self.0.iter().map(Artifact::to_file).collect())
    }

    fn from_file(file: PointListFile) -> Result<Self, FormatError> {
        let files = match file {
            PointListFile::Many(v) => v,
            PointListFile::One(p) => vec![p],
        };
        files
            .into_iter()
            .enumerate()
            .map(|(i, p)| EventuallyPeriodicPoint::from_file(p).map_err(|e| nest(&format!("[{i}]"), e)))
            .collect::<Result<_, _>>()
            .map(PointList)
    }
}

pub fn block_map_to_file(m: &BlockMap) -> BlockMapFile {
    BlockMapFile {
        window: m.window(),
        entries: m
            .table()
            .iter()
            .map(|(block, &out)| BlockEntry {
                block: block.clone(),
                out,
            })
            .collect(),
    }
}

/// Rebuilds a block map between known shifts. Invalid tables are refutations.
pub fn block_map_from_file(
    file: BlockMapFile,
    source: TransitionMatrix,
    target: TransitionMatrix,
    field: &str,
) -> Result<BlockMap, FormatError> {
    let mut table = BTreeMap::new();
    for (i, e) in file.entries.into_iter().enumerate() {
        if table.insert(e.block, e.out).is_some() {
            return Err(FormatError::field(format!("{field}.entries[{i}]"), "duplicate block"));
        }
    }
    BlockMap::new(source, target, file.window, table).map_err(|e| FormatError::refuted(field, e))
}

fn nest(prefix: &str, e: FormatError) -> FormatError {
    match e {
        FormatError::Field { field, message } => FormatError::Field {
            field: format!("{prefix}.{field}"),
            message,
        },
        FormatError::Refuted { field, message } => FormatError::Refuted {
            field: format!("{prefix}.{field}"),
            message,
        },
        e => e,
    }
}

impl Artifact for CoeWitness {
    type File = CoeWitnessFile;

    fn to_file(&self) -> CoeWitnessFile {
        CoeWitnessFile {
            l: self.l,
            cells: self
                .cells
                .iter()
                .map(|c| CellFile {
                    word_indices: c.word_indices.clone(),
                    k1: c.k1,
                    replacement: c.replacement.clone(),
                })
                .collect(),
            l2: self.l2.iter().enumerate().map(|(i, &v)| ((i + 1).to_string(), v)).collect(),
            k2: self.k2,
            code: self.code.candidate().to_file(),
        }
    }

    /// The code is re-verified; a code that is not a right Markov code makes
    /// the witness refuted rather than malformed.
    fn from_file(file: CoeWitnessFile) -> Result<Self, FormatError> {
        let candidate = CodeCandidate::from_file(file.code).map_err(|e| nest("code", e))?;
        let code = verify_markov_code(&candidate, WITNESS_CODE_LMAX)
            .map_err(|e: CodeFailure| FormatError::refuted("code", e))?;
        let mut l2 = vec![None; code.len()];
        for (key, value) in file.l2 {
            let i: usize = key
                .parse()
                .ok()
                .filter(|&i| (1..=code.len()).contains(&i))
                .ok_or_else(|| FormatError::field(format!("l2.{key}"), "not a coded symbol"))?;
            l2[i - 1] = Some(value);
        }
        let l2 = l2
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| FormatError::field("l2", format!("missing symbol {}", i + 1))))
            .collect::<Result<_, _>>()?;
        Ok(CoeWitness {
            l: file.l,
            cells: file
                .cells
                .into_iter()
                .map(|c| CoeCell {
                    word_indices: c.word_indices,
                    k1: c.k1,
                    replacement: c.replacement,
                })
                .collect(),
            l2,
            k2: file.k2,
            code,
        })
    }
}

fn side_from(file: SideFile, field: &str) -> Result<(CodeCandidate, TransitionMatrix), FormatError> {
    let matrix = TransitionMatrix::from_file(file.matrix).map_err(|e| nest(&format!("{field}.matrix"), e))?;
    let code = words_from(matrix, file.code, &format!("{field}.code"))?;
    let coded = coded_matrix_of(&code)
        .map_err(|e| FormatError::refuted(format!("{field}.code"), format!("A(C) is not a valid matrix: {e}")))?;
    Ok((code, coded))
}

impl Artifact for EquivalenceCertificate {
    type File = CertificateFile;

    fn to_file(&self) -> CertificateFile {
        CertificateFile {
            steps: self
                .steps
                .iter()
                .map(|s| StepFile {
                    left: SideFile {
                        matrix: s.left.matrix().to_file(),
                        code: words_to(&s.left),
                    },
                    right: SideFile {
                        matrix: s.right.matrix().to_file(),
                        code: words_to(&s.right),
                    },
                    conjugacy: ConjugacyFile {
                        forward: block_map_to_file(&s.forward),
                        backward: block_map_to_file(&s.backward),
                        window: s.window,
                    },
                })
                .collect(),
        }
    }

    fn from_file(file: CertificateFile) -> Result<Self, FormatError> {
        if file.steps.is_empty() {
            return Err(FormatError::field("steps", "certificate has no steps"));
        }
        let mut steps = Vec::new();
        for (i, s) in file.steps.into_iter().enumerate() {
            let prefix = format!("steps[{i}]");
            let (left, left_coded) = side_from(s.left, &format!("{prefix}.left"))?;
            let (right, right_coded) = side_from(s.right, &format!("{prefix}.right"))?;
            let forward = block_map_from_file(
                s.conjugacy.forward,
                left_coded.clone(),
                right_coded.clone(),
                &format!("{prefix}.conjugacy.forward"),
            )?;
            let backward = block_map_from_file(
                s.conjugacy.backward,
                right_coded,
                left_coded,
                &format!("{prefix}.conjugacy.backward"),
            )?;
            steps.push(CertificateStep {
                left,
                right,
                forward,
                backward,
                window: s.conjugacy.window,
            });
        }
        Ok(EquivalenceCertificate { steps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_and_field_errors() {
        let text = r#"{"n": 2, "rows": [[1, 1], [1, 0]]}"#;
        let m = TransitionMatrix::from_json(text).unwrap();
        assert_eq!(TransitionMatrix::from_json(&m.to_json()).unwrap(), m);
        assert!(matches!(
            TransitionMatrix::from_json(r#"{"n": 3, "rows": [[1, 1], [1, 0]]}"#),
            Err(FormatError::Field { field, .. }) if field == "n"
        ));
        let err = TransitionMatrix::from_json("{\"n\": 2,\n \"rowz\": []}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn point_list_accepts_single_point() {
        let list = PointList::from_json(r#"{"preperiod": [2], "period": [1]}"#).unwrap();
        assert_eq!(list.0.len(), 1);
        assert_eq!(PointList::from_json(&list.to_json()).unwrap(), list);
    }

    #[test]
    fn code_file_errors_name_the_field() {
        let err = CodeCandidate::from_json(r#"{"matrix": {"n": 2, "rows": [[1, 1], [1, 0]]}, "words": [[2, 2]]}"#)
            .unwrap_err();
        assert!(matches!(err, FormatError::Field { ref field, .. } if field == "words"), "{err}");
    }
}
