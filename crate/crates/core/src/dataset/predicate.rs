use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AttributeKind, Column, Dataset, MISSING};
use crate::error::{Error, Result};

/// Threshold operand: a number for continuous attributes, a category for ordinal ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Value(f64),
    Level(String),
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Value(v) => write!(f, "{v}"),
            Threshold::Level(l) => f.write_str(l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PredicateOp {
    OneOf { values: Vec<String> },
    AtMost { threshold: Threshold },
    Above { threshold: Threshold },
}

/// One conjunct of a context: `attribute ∈ values`, `attribute <= t` or `attribute > t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextPredicate {
    pub attribute: String,
    #[serde(flatten)]
    pub op: PredicateOp,
}

impl ContextPredicate {
    pub fn one_of<S: Into<String>>(attribute: impl Into<String>, values: impl IntoIterator<Item = S>) -> Self {
        Self {
            attribute: attribute.into(),
            op: PredicateOp::OneOf {
                values: values.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn at_most(attribute: impl Into<String>, threshold: Threshold) -> Self {
        Self {
            attribute: attribute.into(),
            op: PredicateOp::AtMost { threshold },
        }
    }

    pub fn above(attribute: impl Into<String>, threshold: Threshold) -> Self {
        Self {
            attribute: attribute.into(),
            op: PredicateOp::Above { threshold },
        }
    }

    pub fn compile(&self, data: &Dataset) -> Result<CompiledPredicate> {
        let col = data.attribute(&self.attribute)?;
        let attr = data.attr(col);
        let mismatch = |reason: &str| Error::PredicateMismatch {
            attribute: self.attribute.clone(),
            reason: reason.to_string(),
        };
        match (&self.op, attr.kind) {
            (PredicateOp::OneOf { values }, AttributeKind::Categorical | AttributeKind::Ordinal) => {
                let mut allowed = vec![false; attr.categories.len()];
                for v in values {
                    let code = attr
                        .category_index(v)
                        .ok_or_else(|| mismatch(&format!("unknown category `{v}`")))?;
                    allowed[code as usize] = true;
                }
                Ok(CompiledPredicate::Levels { col, allowed })
            }
            (PredicateOp::OneOf { .. }, _) => Err(mismatch("value-set membership requires a categorical attribute")),
            (PredicateOp::AtMost { threshold } | PredicateOp::Above { threshold }, kind) => {
                let above = matches!(self.op, PredicateOp::Above { .. });
                match (kind, threshold) {
                    (AttributeKind::Continuous, Threshold::Value(t)) => Ok(CompiledPredicate::Numeric { col, threshold: *t, above }),
                    (AttributeKind::Ordinal, Threshold::Level(l)) => {
                        let code = attr
                            .category_index(l)
                            .ok_or_else(|| mismatch(&format!("unknown level `{l}`")))?;
                        Ok(CompiledPredicate::Rank { col, code, above })
                    }
                    (AttributeKind::Continuous | AttributeKind::Ordinal, _) => {
                        Err(mismatch("threshold operand does not match the attribute kind"))
                    }
                    _ => Err(mismatch("thresholds apply only to continuous or ordinal attributes")),
                }
            }
        }
    }
}

impl fmt::Display for ContextPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.op {
            PredicateOp::OneOf { values } if values.len() == 1 => write!(f, "{}: {}", self.attribute, values[0]),
            PredicateOp::OneOf { values } => write!(f, "{}: {{{}}}", self.attribute, values.join(", ")),
            PredicateOp::AtMost { threshold } => write!(f, "{} <= {threshold}", self.attribute),
            PredicateOp::Above { threshold } => write!(f, "{} > {threshold}", self.attribute),
        }
    }
}

/// A predicate resolved against a dataset's column indices and category codes.
#[derive(Clone, Debug)]
pub enum CompiledPredicate {
    Levels { col: usize, allowed: Vec<bool> },
    Numeric { col: usize, threshold: f64, above: bool },
    Rank { col: usize, code: u32, above: bool },
}

impl CompiledPredicate {
    /// Missing cells never match.
    pub fn matches(&self, data: &Dataset, row: usize) -> bool {
        match self {
            CompiledPredicate::Levels { col, allowed } => match data.column(*col) {
                Column::Coded(codes) => {
                    let c = codes[row];
                    c != MISSING && allowed[c as usize]
                }
                _ => false,
            },
            CompiledPredicate::Numeric { col, threshold, above } => match data.column(*col) {
                Column::Continuous(v) => {
                    let x = v[row];
                    !x.is_nan() && ((x > *threshold) == *above)
                }
                _ => false,
            },
            CompiledPredicate::Rank { col, code, above } => match data.column(*col) {
                Column::Coded(codes) => {
                    let c = codes[row];
                    c != MISSING && ((c > *code) == *above)
                }
                _ => false,
            },
        }
    }
}
