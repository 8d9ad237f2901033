//! Typed tabular data, attribute roles, row views and the budgeted holdout.
//!
//! A [`Dataset`] is immutable once built. Subsets of rows are expressed as
//! [`View`]s, which share the underlying columns and carry only a row index
//! list, so selecting a context never copies data.

mod csv_io;
mod predicate;
mod source;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, read_csv, read_schema_file, write_csv, write_schema_file, SchemaSpec};
pub use predicate::{CompiledPredicate, ContextPredicate, PredicateOp, Threshold};
pub use source::{make_datasource, DataSource, DEFAULT_TRAIN_FRACTION};

/// Sentinel code for a missing categorical cell.
pub const MISSING: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Categorical,
    /// Ordered categories; threshold predicates compare category positions.
    Ordinal,
    Continuous,
    /// Each cell holds a set of labels, written `a;b;c` in text form.
    Labels,
}

impl AttributeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeKind::Categorical => "categorical",
            AttributeKind::Ordinal => "ordinal",
            AttributeKind::Continuous => "continuous",
            AttributeKind::Labels => "labels",
        }
    }

    /// Kinds stored as category codes.
    pub fn is_coded(self) -> bool {
        matches!(self, AttributeKind::Categorical | AttributeKind::Ordinal)
    }
}

/// Default role of an attribute. Investigations may overlay their own roles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Protected,
    Contextual,
    Explanatory,
    Output,
    #[default]
    Ignored,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default)]
    pub role: Role,
    /// Ordered distinct values; empty for continuous attributes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl AttributeSchema {
    pub fn categorical<S: Into<String>>(name: impl Into<String>, role: Role, categories: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Categorical,
            role,
            categories: categories.into_iter().map(Into::into).collect(),
        }
    }

    pub fn ordinal<S: Into<String>>(name: impl Into<String>, role: Role, categories: impl IntoIterator<Item = S>) -> Self {
        Self {
            kind: AttributeKind::Ordinal,
            ..Self::categorical(name, role, categories)
        }
    }

    pub fn continuous(name: impl Into<String>, role: Role) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Continuous,
            role,
            categories: Vec::new(),
        }
    }

    pub fn labels<S: Into<String>>(name: impl Into<String>, role: Role, labels: impl IntoIterator<Item = S>) -> Self {
        Self {
            kind: AttributeKind::Labels,
            ..Self::categorical(name, role, labels)
        }
    }

    pub fn category_index(&self, value: &str) -> Option<u32> {
        self.categories.iter().position(|c| c == value).map(|i| i as u32)
    }

    pub fn is_binary(&self) -> bool {
        self.kind.is_coded() && self.categories.len() == 2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    /// Category codes into the schema's category list, [`MISSING`] for empty cells.
    Coded(Vec<u32>),
    /// `NaN` marks a missing cell.
    Continuous(Vec<f64>),
    /// Label codes per row, `None` for a missing cell.
    Labels(Vec<Option<Vec<u32>>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Coded(v) => v.len(),
            Column::Continuous(v) => v.len(),
            Column::Labels(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            Column::Coded(v) => v[row] == MISSING,
            Column::Continuous(v) => v[row].is_nan(),
            Column::Labels(v) => v[row].is_none(),
        }
    }

    pub fn codes(&self) -> Option<&[u32]> {
        match self {
            Column::Coded(v) => Some(v),
            _ => None,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match self {
            Column::Continuous(v) => Some(v),
            _ => None,
        }
    }

    pub fn label_sets(&self) -> Option<&[Option<Vec<u32>>]> {
        match self {
            Column::Labels(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Vec<AttributeSchema>,
    columns: Vec<Arc<Column>>,
    index: HashMap<String, usize>,
    n_rows: usize,
}

impl Dataset {
    pub fn new(schema: Vec<AttributeSchema>, columns: Vec<Column>) -> Result<Self> {
        if schema.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} attributes declared but {} columns supplied",
                schema.len(),
                columns.len()
            )));
        }
        let n_rows = columns.first().map_or(0, Column::len);
        let mut index = HashMap::with_capacity(schema.len());
        for (i, (attr, col)) in schema.iter().zip(&columns).enumerate() {
            if index.insert(attr.name.clone(), i).is_some() {
                return Err(Error::DuplicateColumn(attr.name.clone()));
            }
            if col.len() != n_rows {
                return Err(Error::Schema(format!(
                    "column `{}` has {} rows, expected {n_rows}",
                    attr.name,
                    col.len()
                )));
            }
            check_column(attr, col)?;
        }
        Ok(Self {
            schema,
            columns: columns.into_iter().map(Arc::new).collect(),
            index,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn schema(&self) -> &[AttributeSchema] {
        &self.schema
    }

    pub fn attribute(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn attr(&self, col: usize) -> &AttributeSchema {
        &self.schema[col]
    }

    pub fn column(&self, col: usize) -> &Column {
        &self.columns[col]
    }

    pub fn is_missing(&self, col: usize, row: usize) -> bool {
        self.columns[col].is_missing(row)
    }

    /// Returns a copy with one more column appended. Existing columns are shared.
    pub fn with_column(&self, attr: AttributeSchema, column: Column) -> Result<Self> {
        if self.index.contains_key(&attr.name) {
            return Err(Error::DuplicateColumn(attr.name));
        }
        if column.len() != self.n_rows {
            return Err(Error::Schema(format!(
                "column `{}` has {} rows, expected {}",
                attr.name,
                column.len(),
                self.n_rows
            )));
        }
        check_column(&attr, &column)?;
        let mut out = self.clone();
        out.index.insert(attr.name.clone(), out.schema.len());
        out.schema.push(attr);
        out.columns.push(Arc::new(column));
        Ok(out)
    }

    /// Text form of one cell, empty for a missing value.
    pub fn cell_text(&self, col: usize, row: usize) -> String {
        let attr = &self.schema[col];
        match &*self.columns[col] {
            Column::Coded(v) => match v[row] {
                MISSING => String::new(),
                c => attr.categories[c as usize].clone(),
            },
            Column::Continuous(v) if v[row].is_nan() => String::new(),
            Column::Continuous(v) => format!("{}", v[row]),
            Column::Labels(v) => match &v[row] {
                None => String::new(),
                Some(set) => set
                    .iter()
                    .map(|&c| attr.categories[c as usize].as_str())
                    .collect::<Vec<_>>()
                    .join(";"),
            },
        }
    }
}

fn check_column(attr: &AttributeSchema, col: &Column) -> Result<()> {
    let ok = match (attr.kind, col) {
        (AttributeKind::Categorical | AttributeKind::Ordinal, Column::Coded(codes)) => {
            let k = attr.categories.len() as u32;
            codes.iter().all(|&c| c == MISSING || c < k)
        }
        (AttributeKind::Continuous, Column::Continuous(_)) => attr.categories.is_empty(),
        (AttributeKind::Labels, Column::Labels(sets)) => {
            let k = attr.categories.len() as u32;
            sets.iter().flatten().flatten().all(|&c| c < k)
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Schema(format!(
            "column `{}` does not match its declared {} kind or category list",
            attr.name,
            attr.kind.as_str()
        )))
    }
}

/// An immutable subset of a dataset's rows, in ascending row order.
#[derive(Clone)]
pub struct View {
    data: Arc<Dataset>,
    rows: Arc<[u32]>,
}

impl View {
    pub fn full(data: Arc<Dataset>) -> Self {
        let rows: Arc<[u32]> = (0..data.n_rows() as u32).collect();
        Self { data, rows }
    }

    /// Rows must be valid indices of `data`; they are sorted and deduplicated.
    pub fn from_rows(data: Arc<Dataset>, rows: impl Into<Vec<u32>>) -> Self {
        let mut rows = rows.into();
        rows.sort_unstable();
        rows.dedup();
        debug_assert!(rows.last().map_or(true, |&r| (r as usize) < data.n_rows()));
        Self {
            data,
            rows: rows.into(),
        }
    }

    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Same rows over a dataset with identical row count (e.g. one with derived columns).
    pub fn rebase(&self, data: Arc<Dataset>) -> Result<Self> {
        if data.n_rows() != self.data.n_rows() {
            return Err(Error::Schema("rebased dataset has a different row count".into()));
        }
        Ok(Self {
            data,
            rows: self.rows.clone(),
        })
    }

    /// Rows satisfying every predicate. An empty list returns the whole view.
    pub fn select(&self, preds: &[ContextPredicate]) -> Result<View> {
        if preds.is_empty() {
            return Ok(self.clone());
        }
        let compiled = preds
            .iter()
            .map(|p| p.compile(&self.data))
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<u32> = self
            .rows
            .iter()
            .copied()
            .filter(|&r| compiled.iter().all(|p| p.matches(&self.data, r as usize)))
            .collect();
        Ok(View {
            data: self.data.clone(),
            rows: rows.into(),
        })
    }

    pub fn filter(&self, mut keep: impl FnMut(u32) -> bool) -> View {
        let rows: Vec<u32> = self.rows.iter().copied().filter(|&r| keep(r)).collect();
        View {
            data: self.data.clone(),
            rows: rows.into(),
        }
    }

    /// Drops rows with a missing value in any of `cols`; returns the count dropped.
    pub fn drop_missing(&self, cols: &[usize]) -> (View, usize) {
        let kept = self.filter(|r| cols.iter().all(|&c| !self.data.is_missing(c, r as usize)));
        let dropped = self.len() - kept.len();
        (kept, dropped)
    }
}

impl fmt::Debug for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("View")
            .field("rows", &self.rows.len())
            .field("of", &self.data.n_rows())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Arc<Dataset> {
        let text = "gender,state,price\nF,CA,high\nM,CA,low\nF,NY,low\nM,NY,high\nF,CA,low\n";
        Arc::new(read_csv(text.as_bytes(), None).unwrap())
    }

    #[test]
    fn empty_predicates_select_everything() {
        let v = View::full(small());
        assert_eq!(v.select(&[]).unwrap().rows(), v.rows());
    }

    #[test]
    fn conjunction_filter() {
        let v = View::full(small());
        let preds = [
            ContextPredicate::one_of("state", ["CA"]),
            ContextPredicate::one_of("gender", ["F"]),
        ];
        assert_eq!(v.select(&preds).unwrap().rows(), &[0, 4]);
    }

    #[test]
    fn with_column_rejects_duplicates_and_bad_lengths() {
        let d = small();
        let attr = AttributeSchema::continuous("state", Role::Ignored);
        assert!(matches!(
            d.with_column(attr, Column::Continuous(vec![0.0; 5])),
            Err(Error::DuplicateColumn(_))
        ));
        let attr = AttributeSchema::continuous("x", Role::Ignored);
        assert!(d.with_column(attr, Column::Continuous(vec![0.0; 4])).is_err());
    }

    #[test]
    fn drop_missing_counts_rows() {
        let text = "a,b\nx,1\n,2\ny,\nx,4\n";
        let d = Arc::new(read_csv(text.as_bytes(), None).unwrap());
        let (v, dropped) = View::full(d).drop_missing(&[0, 1]);
        assert_eq!(dropped, 2);
        assert_eq!(v.rows(), &[0, 3]);
    }

    #[test]
    fn new_rejects_out_of_range_codes() {
        let schema = vec![AttributeSchema::categorical("a", Role::Ignored, ["x", "y"])];
        assert!(Dataset::new(schema, vec![Column::Coded(vec![0, 2])]).is_err());
    }
}
