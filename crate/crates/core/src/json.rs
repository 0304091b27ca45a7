//! JSON wire formats.
//!
//! Integers are JSON numbers when `|x| < 2^53` and decimal strings
//! otherwise; readers accept either form. Output goes through
//! [`to_canonical_string`], which sorts object keys.

use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::iso::GradedIso;
use crate::matrix::IntMatrix;
use crate::moves::{MoveKind, MoveSeq};
use crate::ring::{BottMatrix, Class2};

pub const CERTIFICATE_SCHEMA_VERSION: u32 = 1;

const SAFE_LIMIT: i64 = 1 << 53;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JsonInt(pub BigInt);

impl Serialize for JsonInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) if v.abs() < SAFE_LIMIT => s.serialize_i64(v),
            _ => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for JsonInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct IntVisitor;

        impl Visitor<'_> for IntVisitor {
            type Value = JsonInt;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or a decimal string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<JsonInt, E> {
                Ok(JsonInt(BigInt::from(v)))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<JsonInt, E> {
                Ok(JsonInt(BigInt::from(v)))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<JsonInt, E> {
                v.trim()
                    .parse::<BigInt>()
                    .map(JsonInt)
                    .map_err(|_| E::custom(format!("not an integer: {v:?}")))
            }
        }

        d.deserialize_any(IntVisitor)
    }
}

fn ints(v: &[BigInt]) -> Vec<JsonInt> {
    v.iter().cloned().map(JsonInt).collect()
}

fn bigs(v: &[JsonInt]) -> Vec<BigInt> {
    v.iter().map(|x| x.0.clone()).collect()
}

/// `{"n": 3, "rows": [[], [1], [1, 0]]}`; row `i` lists `a_{i,1..i-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub n: usize,
    pub rows: Vec<Vec<JsonInt>>,
}

impl MatrixDoc {
    pub fn to_matrix(&self) -> Result<BottMatrix> {
        BottMatrix::new(self.n, self.rows.iter().map(|r| bigs(r)).collect())
    }
}

impl From<&BottMatrix> for MatrixDoc {
    fn from(m: &BottMatrix) -> Self {
        MatrixDoc {
            n: m.n(),
            rows: m.rows().iter().map(|r| ints(r)).collect(),
        }
    }
}

/// `{"coeffs": [t_1, ..., t_n]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassDoc {
    pub coeffs: Vec<JsonInt>,
}

impl From<&Class2> for ClassDoc {
    fn from(c: &Class2) -> Self {
        ClassDoc {
            coeffs: ints(c.coeffs()),
        }
    }
}

impl ClassDoc {
    pub fn to_class(&self) -> Class2 {
        Class2::new(bigs(&self.coeffs))
    }
}

/// `{"C": [[c_11, ...], ...]}` with `phi(x_i) = sum_j c_ij y_j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsoDoc {
    #[serde(rename = "C")]
    pub c: Vec<Vec<JsonInt>>,
}

impl IsoDoc {
    pub fn to_matrix(&self) -> Result<IntMatrix> {
        IntMatrix::from_rows(self.c.iter().map(|r| bigs(r)).collect())
            .ok_or_else(|| Error::Shape("iso matrix must be square".into()))
    }
}

impl From<&IntMatrix> for IsoDoc {
    fn from(m: &IntMatrix) -> Self {
        IsoDoc {
            c: m.to_rows().iter().map(|r| ints(r)).collect(),
        }
    }
}

/// `{"kind":"switch","j":2}` or `{"kind":"twist","j":3,"v":[1,0,0]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MoveDoc {
    Switch { j: usize },
    Twist { j: usize, v: Vec<JsonInt> },
}

impl From<&MoveKind> for MoveDoc {
    fn from(k: &MoveKind) -> Self {
        match k {
            MoveKind::Switch { j } => MoveDoc::Switch { j: *j },
            MoveKind::Twist { j, v } => MoveDoc::Twist {
                j: *j,
                v: ints(v.coeffs()),
            },
        }
    }
}

impl MoveDoc {
    pub fn to_kind(&self) -> MoveKind {
        match self {
            MoveDoc::Switch { j } => MoveKind::Switch { j: *j },
            MoveDoc::Twist { j, v } => MoveKind::Twist {
                j: *j,
                v: Class2::new(bigs(v)),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveSeqDoc {
    pub start: MatrixDoc,
    pub moves: Vec<MoveDoc>,
    pub end: MatrixDoc,
    pub composite: IsoDoc,
}

impl From<&MoveSeq> for MoveSeqDoc {
    fn from(s: &MoveSeq) -> Self {
        MoveSeqDoc {
            start: (&s.start).into(),
            moves: s.moves.iter().map(|m| (&m.kind).into()).collect(),
            end: (&s.end).into(),
            composite: s.composite.matrix().into(),
        }
    }
}

impl MoveSeqDoc {
    /// Replays the recorded moves from `start` and checks the recorded
    /// end matrix and composite against the replay.
    pub fn rebuild(&self) -> std::result::Result<MoveSeq, String> {
        let start = self
            .start
            .to_matrix()
            .map_err(|e| format!("start matrix: {e}"))?;
        let kinds: Vec<MoveKind> = self.moves.iter().map(MoveDoc::to_kind).collect();
        let seq = MoveSeq::from_kinds(&start, &kinds).map_err(|e| format!("replay failed: {e}"))?;
        let end = self
            .end
            .to_matrix()
            .map_err(|e| format!("end matrix: {e}"))?;
        if end != seq.end {
            return Err("recorded end matrix differs from the replayed one".into());
        }
        let composite = self
            .composite
            .to_matrix()
            .map_err(|e| format!("composite: {e}"))?;
        if &composite != seq.composite.matrix() {
            return Err("recorded composite differs from the replayed one".into());
        }
        Ok(seq)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateDoc {
    pub schema_version: u32,
    #[serde(rename = "A")]
    pub a: MatrixDoc,
    #[serde(rename = "B")]
    pub b: MatrixDoc,
    pub phi: IsoDoc,
    pub f_seq: MoveSeqDoc,
    pub g_seq: MoveSeqDoc,
    pub phi_prime: IsoDoc,
    pub k_final: usize,
}

impl From<&GradedIso> for IsoDoc {
    fn from(phi: &GradedIso) -> Self {
        phi.matrix().into()
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_canonical_string<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serialisable");
    let mut s = serde_json::to_string_pretty(&v).expect("serialisable");
    s.push('\n');
    s
}
