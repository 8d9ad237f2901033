use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeKind, AttributeSchema, Column, Dataset, Role, MISSING};
use crate::error::{Error, Result};

/// How a prediction is compared with the ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// `|prediction - truth|` for scalar outputs.
    Absolute,
    /// 1 on mismatch, 0 otherwise, for categorical outputs.
    ZeroOne,
}

impl ErrorKind {
    /// Absolute error for continuous outputs, zero-one loss otherwise.
    pub fn for_kind(kind: AttributeKind) -> Self {
        if kind == AttributeKind::Continuous {
            ErrorKind::Absolute
        } else {
            ErrorKind::ZeroOne
        }
    }
}

/// Per-row prediction error.
///
/// Absolute errors form a continuous column. Zero-one errors form a binary
/// column with categories `0`, `1`; categorical cells are compared by label,
/// so the two columns may list their categories in different orders.
/// Missing inputs give a missing error.
pub fn compute_error(data: &Dataset, predictions: &str, truth: &str, kind: ErrorKind) -> Result<(AttributeSchema, Column)> {
    let (p, t) = (data.attribute(predictions)?, data.attribute(truth)?);
    let (pa, ta) = (data.attr(p), data.attr(t));
    let name = format!("{predictions}_error");
    match kind {
        ErrorKind::Absolute => {
            let (Some(pv), Some(tv)) = (data.column(p).values(), data.column(t).values()) else {
                return Err(Error::TypeMismatch(format!(
                    "absolute error needs continuous columns, got `{}` ({}) and `{}` ({})",
                    pa.name,
                    pa.kind.as_str(),
                    ta.name,
                    ta.kind.as_str()
                )));
            };
            let err = pv.iter().zip(tv).map(|(a, b)| (a - b).abs()).collect();
            Ok((AttributeSchema::continuous(name, Role::Output), Column::Continuous(err)))
        }
        ErrorKind::ZeroOne => {
            let (Some(pc), Some(tc)) = (data.column(p).codes(), data.column(t).codes()) else {
                return Err(Error::TypeMismatch(format!(
                    "zero-one error needs categorical columns, got `{}` ({}) and `{}` ({})",
                    pa.name,
                    pa.kind.as_str(),
                    ta.name,
                    ta.kind.as_str()
                )));
            };
            // truth code -> prediction code of the same label
            let map: Vec<Option<u32>> = ta.categories.iter().map(|c| pa.category_index(c)).collect();
            let err = pc
                .iter()
                .zip(tc)
                .map(|(&a, &b)| match (a, b) {
                    (MISSING, _) | (_, MISSING) => MISSING,
                    (a, b) => u32::from(map[b as usize] != Some(a)),
                })
                .collect();
            Ok((AttributeSchema::categorical(name, Role::Output, ["0", "1"]), Column::Coded(err)))
        }
    }
}

/// Name of the indicator column for one label of a label-set output.
pub fn indicator_name(output: &str, label: &str) -> String {
    format!("{output}={label}")
}

/// Binary presence column (`0`, `1`) of `label` in the label-set column `output`.
pub(crate) fn label_indicator(data: &Dataset, output: usize, label: &str) -> Result<(AttributeSchema, Column)> {
    let attr = data.attr(output);
    let code = attr
        .category_index(label)
        .ok_or_else(|| Error::InvalidParameter(format!("`{label}` is not a label of `{}`", attr.name)))?;
    let sets = data
        .column(output)
        .label_sets()
        .ok_or_else(|| Error::TypeMismatch(format!("`{}` is not a label-set attribute", attr.name)))?;
    let codes = sets
        .iter()
        .map(|s| match s {
            None => MISSING,
            Some(set) => u32::from(set.contains(&code)),
        })
        .collect();
    Ok((
        AttributeSchema::categorical(indicator_name(&attr.name, label), Role::Output, ["0", "1"]),
        Column::Coded(codes),
    ))
}
