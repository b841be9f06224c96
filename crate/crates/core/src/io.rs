//! JSON documents for cones and programs.
//!
//! ```json
//! {"n": 2, "m": 3,
//!  "A": [[0, 0], [0, 1], [1, 0]], "b": [-1, 0, 0], "c": [1, 0],
//!  "cone": {"blocks": [{"type": "soc", "dim": 3}]}}
//! ```
//!
//! Block types are `orthant` and `soc` (with `dim`), `polyhedral` (with `B`)
//! and `generated` (with `G`); matrices are lists of rows. Numbers are read
//! and written as IEEE doubles, so `f64` programs survive a round trip
//! bit for bit.

use serde::{Deserialize, Serialize};

use crate::cones::{Cone, ConeBlock};
use crate::linalg::Matrix;
use crate::problem::{ConicProgram, ProblemError};
use crate::scalar::Scalar;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum BlockDoc {
    Orthant {
        dim: usize,
    },
    Soc {
        dim: usize,
    },
    Polyhedral {
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
    },
    Generated {
        #[serde(rename = "G")]
        g: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConeDoc {
    blocks: Vec<BlockDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    n: usize,
    m: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    cone: ConeDoc,
}

fn schema_error(e: serde_json::Error) -> ProblemError {
    ProblemError::Schema {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn to_vec<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn from_vec<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

fn to_matrix<T: Scalar>(what: &'static str, rows: &[Vec<f64>], cols: Option<usize>) -> Result<Matrix<T>, ProblemError> {
    let width = cols.unwrap_or_else(|| rows.first().map_or(0, Vec::len));
    for row in rows {
        if row.len() != width {
            return Err(ProblemError::Dimension {
                what,
                expected: width,
                found: row.len(),
            });
        }
    }
    let data = rows.iter().flatten().map(|&x| T::lit(x)).collect();
    Ok(Matrix::from_vec(rows.len(), width, data))
}

fn from_matrix<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| from_vec(m.row(i))).collect()
}

fn cone_from_doc<T: Scalar>(doc: &ConeDoc) -> Result<Cone<T>, ProblemError> {
    let mut blocks = Vec::with_capacity(doc.blocks.len());
    for blk in &doc.blocks {
        blocks.push(match blk {
            BlockDoc::Orthant { dim } => ConeBlock::Orthant { dim: *dim },
            BlockDoc::Soc { dim } => ConeBlock::SecondOrder { dim: *dim },
            BlockDoc::Polyhedral { b } => ConeBlock::PolyhedralH {
                b: to_matrix("polyhedral block row", b, None)?,
            },
            BlockDoc::Generated { g } => ConeBlock::GeneratedV {
                g: to_matrix("generated block row", g, None)?,
            },
        });
    }
    Ok(Cone::new(blocks)?)
}

fn cone_to_doc<T: Scalar>(cone: &Cone<T>) -> ConeDoc {
    let blocks = cone
        .blocks()
        .iter()
        .map(|blk| match blk {
            ConeBlock::Orthant { dim } => BlockDoc::Orthant { dim: *dim },
            ConeBlock::SecondOrder { dim } => BlockDoc::Soc { dim: *dim },
            ConeBlock::PolyhedralH { b } => BlockDoc::Polyhedral { b: from_matrix(b) },
            ConeBlock::GeneratedV { g } => BlockDoc::Generated { g: from_matrix(g) },
        })
        .collect();
    ConeDoc { blocks }
}

pub fn parse_cone<T: Scalar>(text: &str) -> Result<Cone<T>, ProblemError> {
    let doc: ConeDoc = serde_json::from_str(text).map_err(schema_error)?;
    cone_from_doc(&doc)
}

pub fn serialize_cone<T: Scalar>(cone: &Cone<T>) -> String {
    serde_json::to_string(&cone_to_doc(cone)).expect("cone documents always serialize")
}

pub fn parse_problem<T: Scalar>(text: &str) -> Result<ConicProgram<T>, ProblemError> {
    let doc: ProblemDoc = serde_json::from_str(text).map_err(schema_error)?;
    if doc.a.len() != doc.m {
        return Err(ProblemError::Dimension {
            what: "A (rows)",
            expected: doc.m,
            found: doc.a.len(),
        });
    }
    let a = to_matrix("A (row length)", &doc.a, Some(doc.n))?;
    let cone = cone_from_doc(&doc.cone)?;
    ConicProgram::new(a, to_vec(&doc.b), to_vec(&doc.c), cone)
}

/// Compact JSON text of a primal-form program.
pub fn serialize_problem<T: Scalar>(p: &ConicProgram<T>) -> String {
    let doc = ProblemDoc {
        n: p.n(),
        m: p.m(),
        a: from_matrix(p.a()),
        b: from_vec(p.b()),
        c: from_vec(p.c()),
        cone: cone_to_doc(p.cone()),
    };
    serde_json::to_string(&doc).expect("problem documents always serialize")
}
