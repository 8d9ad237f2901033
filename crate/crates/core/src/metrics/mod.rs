//! Association metrics between a protected attribute and an output.
//!
//! | metric | protected | output  |
//! |--------|-----------|---------|
//! | DIFF   | binary    | binary  |
//! | RATIO  | binary    | binary  |
//! | NMI    | categorical | categorical |
//! | CORR   | scalar    | scalar  |
//! | REG    | binary    | label set |
//!
//! Any metric except REG may be conditioned on an explanatory attribute, in
//! which case it is evaluated per stratum and averaged (see [`conditional_metric`]).

mod binary;
mod correlation;
mod info;
mod logistic;
mod measure;
mod table;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use binary::{binary_difference, binary_ratio};
pub use correlation::pearson_correlation;
pub use info::mutual_information;
pub use logistic::{logistic_label_scores, RegressionScores, DEFAULT_L2};
pub use measure::{conditional_metric, BinaryRoles, ConditionalValue, Measure, Sample, StratumValue, DEFAULT_MIN_STRATUM};
pub use table::{contingency, ContingencyTable};

pub(crate) use binary::{diff_from_cells, ratio_from_cells};
pub(crate) use info::mi_from_cells;
pub(crate) use measure::Estimate;
pub(crate) use table::contingency_by_index;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Metric {
    Diff,
    Ratio,
    Nmi,
    Corr,
    Reg,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Diff => "DIFF",
            Metric::Ratio => "RATIO",
            Metric::Nmi => "NMI",
            Metric::Corr => "CORR",
            Metric::Reg => "REG",
        }
    }

    /// Signed metrics have "no association" at 0 and meaningful direction.
    pub fn is_signed(self) -> bool {
        matches!(self, Metric::Diff | Metric::Ratio | Metric::Corr)
    }

    pub fn is_categorical(self) -> bool {
        matches!(self, Metric::Diff | Metric::Ratio | Metric::Nmi)
    }

    /// Magnitude used for guidance and ranking.
    pub fn strength(self, value: f64) -> f64 {
        if self.is_signed() {
            value.abs()
        } else {
            value
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Metric {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DIFF" => Ok(Metric::Diff),
            "RATIO" => Ok(Metric::Ratio),
            "NMI" => Ok(Metric::Nmi),
            "CORR" => Ok(Metric::Corr),
            "REG" => Ok(Metric::Reg),
            other => Err(crate::Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

/// A metric, optionally conditioned on an explanatory attribute.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricKind {
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<String>,
}

impl MetricKind {
    pub fn plain(metric: Metric) -> Self {
        Self {
            metric,
            conditioning: None,
        }
    }

    pub fn conditioned(metric: Metric, on: impl Into<String>) -> Self {
        Self {
            metric,
            conditioning: Some(on.into()),
        }
    }

    /// `DIFF`, or `COND-DIFF` when conditioned.
    pub fn label(&self) -> String {
        match self.conditioning {
            Some(_) => format!("COND-{}", self.metric.label()),
            None => self.metric.label().to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub metric: Metric,
}

impl MetricValue {
    pub fn new(metric: Metric, value: f64) -> Self {
        Self { value, metric }
    }
}
