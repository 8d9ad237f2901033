use serde::{Deserialize, Serialize};

use crate::dataset::{Column, View, MISSING};
use crate::error::{Error, Result};

/// Cross-tabulation of an output attribute (rows) against a protected attribute (columns).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct ContingencyTable {
    output_labels: Vec<String>,
    protected_labels: Vec<String>,
    cells: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    output_labels: Vec<String>,
    protected_labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl TryFrom<TableRepr> for ContingencyTable {
    type Error = Error;

    fn try_from(r: TableRepr) -> Result<Self> {
        Self::new(r.output_labels, r.protected_labels, r.counts)
    }
}

impl From<ContingencyTable> for TableRepr {
    fn from(t: ContingencyTable) -> Self {
        let (rows, cols) = (t.rows(), t.cols());
        let counts = if cols == 0 {
            vec![Vec::new(); rows]
        } else {
            t.cells.chunks(cols).map(<[u64]>::to_vec).collect()
        };
        TableRepr {
            output_labels: t.output_labels,
            protected_labels: t.protected_labels,
            counts,
        }
    }
}

impl ContingencyTable {
    pub fn new(output_labels: Vec<String>, protected_labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != output_labels.len() || counts.iter().any(|r| r.len() != protected_labels.len()) {
            return Err(Error::Schema("contingency counts do not match label dimensions".into()));
        }
        Ok(Self {
            output_labels,
            protected_labels,
            cells: counts.into_iter().flatten().collect(),
        })
    }

    pub(crate) fn from_cells(output_labels: Vec<String>, protected_labels: Vec<String>, cells: Vec<u64>) -> Self {
        debug_assert_eq!(cells.len(), output_labels.len() * protected_labels.len());
        Self {
            output_labels,
            protected_labels,
            cells,
        }
    }

    pub fn rows(&self) -> usize {
        self.output_labels.len()
    }

    pub fn cols(&self) -> usize {
        self.protected_labels.len()
    }

    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    pub fn protected_labels(&self) -> &[String] {
        &self.protected_labels
    }

    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.cells[row * self.cols() + col]
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn n(&self) -> u64 {
        self.cells.iter().sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        (0..self.rows()).map(|i| (0..self.cols()).map(|j| self.count(i, j)).sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.cols()).map(|j| (0..self.rows()).map(|i| self.count(i, j)).sum()).collect()
    }

    /// Swaps the roles of the two variables.
    pub fn transpose(&self) -> Self {
        let (r, c) = (self.rows(), self.cols());
        let mut cells = vec![0; r * c];
        for i in 0..r {
            for j in 0..c {
                cells[j * r + i] = self.count(i, j);
            }
        }
        Self {
            output_labels: self.protected_labels.clone(),
            protected_labels: self.output_labels.clone(),
            cells,
        }
    }

    pub fn output_index(&self, label: &str) -> Result<usize> {
        self.output_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownAttribute(format!("output value `{label}`")))
    }

    pub fn protected_index(&self, label: &str) -> Result<usize> {
        self.protected_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownAttribute(format!("protected value `{label}`")))
    }
}

/// Counts rows of `view` by (output, protected) category. Rows missing either value are skipped.
pub fn contingency(view: &View, protected: &str, output: &str) -> Result<ContingencyTable> {
    let data = view.data();
    let (s, o) = (data.attribute(protected)?, data.attribute(output)?);
    contingency_by_index(view, s, o)
}

pub(crate) fn contingency_by_index(view: &View, s: usize, o: usize) -> Result<ContingencyTable> {
    let data = view.data();
    let (s_attr, o_attr) = (data.attr(s), data.attr(o));
    let (Column::Coded(s_codes), Column::Coded(o_codes)) = (data.column(s), data.column(o)) else {
        return Err(Error::MetricMismatch(format!(
            "contingency table needs categorical attributes, got `{}` ({}) and `{}` ({})",
            s_attr.name,
            s_attr.kind.as_str(),
            o_attr.name,
            o_attr.kind.as_str()
        )));
    };
    let c = s_attr.categories.len();
    let mut cells = vec![0u64; o_attr.categories.len() * c];
    for &r in view.rows() {
        let (sv, ov) = (s_codes[r as usize], o_codes[r as usize]);
        if sv != MISSING && ov != MISSING {
            cells[ov as usize * c + sv as usize] += 1;
        }
    }
    Ok(ContingencyTable::from_cells(o_attr.categories.clone(), s_attr.categories.clone(), cells))
}
