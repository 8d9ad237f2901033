use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AttributeKind, AttributeSchema, Column, Dataset, Role, MISSING};
use crate::error::{Error, Result};

/// Numeric columns with more distinct values than this are inferred continuous.
const CONTINUOUS_MIN_DISTINCT: usize = 10;

/// Sidecar schema entry: `{"kind": ..., "role": ..., "categories": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemaSpec {
    pub kind: AttributeKind,
    #[serde(default)]
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
}

pub fn read_schema_file(path: impl AsRef<Path>) -> Result<BTreeMap<String, SchemaSpec>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(file)?)
}

pub fn write_schema_file(path: impl AsRef<Path>, schema: &[AttributeSchema]) -> Result<()> {
    let path = path.as_ref();
    let map: BTreeMap<&str, SchemaSpec> = schema
        .iter()
        .map(|a| {
            let categories = (a.kind != AttributeKind::Continuous).then(|| a.categories.clone());
            (
                a.name.as_str(),
                SchemaSpec {
                    kind: a.kind,
                    role: a.role,
                    categories,
                },
            )
        })
        .collect();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(file, &map)?;
    Ok(())
}

/// Loads a headed CSV file. Without a schema, every column is inferred.
pub fn load_csv(path: impl AsRef<Path>, schema: Option<&BTreeMap<String, SchemaSpec>>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match read_csv(file, schema) {
        Err(Error::EmptyFile(_)) => Err(Error::EmptyFile(path.to_path_buf())),
        other => other,
    }
}

pub fn read_csv<R: Read>(reader: R, schema: Option<&BTreeMap<String, SchemaSpec>>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::EmptyFile("<input>".into()));
    }
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    if let Some(schema) = schema {
        if let Some(name) = schema.keys().find(|k| !seen.contains(k.as_str())) {
            return Err(Error::Schema(format!("schema attribute `{name}` is not a column of the data")));
        }
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for record in rdr.records() {
        let record = record?;
        for (col, cell) in cells.iter_mut().zip(record.iter()) {
            col.push(cell.trim().to_string());
        }
    }

    let mut attrs = Vec::with_capacity(headers.len());
    let mut columns = Vec::with_capacity(headers.len());
    for (name, raw) in headers.into_iter().zip(cells) {
        let (attr, col) = match schema.and_then(|s| s.get(&name)) {
            Some(spec) => parse_declared(name, spec, &raw)?,
            None => infer(name, &raw),
        };
        attrs.push(attr);
        columns.push(col);
    }
    Dataset::new(attrs, columns)
}

fn infer(name: String, raw: &[String]) -> (AttributeSchema, Column) {
    let parsed: Option<Vec<f64>> = raw
        .iter()
        .map(|c| if c.is_empty() { Some(f64::NAN) } else { c.parse::<f64>().ok() })
        .collect();
    if let Some(values) = parsed {
        let distinct: HashSet<u64> = values.iter().filter(|v| !v.is_nan()).map(|v| v.to_bits()).collect();
        if distinct.len() > CONTINUOUS_MIN_DISTINCT {
            return (AttributeSchema::continuous(name, Role::Ignored), Column::Continuous(values));
        }
    }
    let (categories, codes) = first_appearance_codes(raw);
    (AttributeSchema::categorical(name, Role::Ignored, categories), Column::Coded(codes))
}

fn first_appearance_codes(raw: &[String]) -> (Vec<String>, Vec<u32>) {
    let mut lookup: HashMap<&str, u32> = HashMap::new();
    let mut categories = Vec::new();
    let codes = raw
        .iter()
        .map(|c| {
            if c.is_empty() {
                return MISSING;
            }
            *lookup.entry(c.as_str()).or_insert_with(|| {
                categories.push(c.clone());
                (categories.len() - 1) as u32
            })
        })
        .collect();
    (categories, codes)
}

fn parse_declared(name: String, spec: &SchemaSpec, raw: &[String]) -> Result<(AttributeSchema, Column)> {
    let unparseable = |row: usize, value: &str, kind: AttributeKind| Error::UnparseableCell {
        column: name.clone(),
        row: row + 1,
        value: value.to_string(),
        kind: kind.as_str(),
    };
    match spec.kind {
        AttributeKind::Continuous => {
            if spec.categories.as_ref().is_some_and(|c| !c.is_empty()) {
                return Err(Error::Schema(format!("continuous attribute `{name}` cannot carry categories")));
            }
            let values = raw
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if c.is_empty() {
                        Ok(f64::NAN)
                    } else {
                        c.parse::<f64>().map_err(|_| unparseable(i, c, spec.kind))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((AttributeSchema::continuous(name.clone(), spec.role), Column::Continuous(values)))
        }
        AttributeKind::Categorical | AttributeKind::Ordinal => {
            let (categories, codes) = match &spec.categories {
                None => first_appearance_codes(raw),
                Some(declared) => {
                    if declared.len() < 2 {
                        return Err(Error::Schema(format!("categorical attribute `{name}` must declare at least 2 categories")));
                    }
                    let lookup: HashMap<&str, u32> =
                        declared.iter().enumerate().map(|(i, c)| (c.as_str(), i as u32)).collect();
                    let codes = raw
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            if c.is_empty() {
                                Ok(MISSING)
                            } else {
                                lookup.get(c.as_str()).copied().ok_or_else(|| unparseable(i, c, spec.kind))
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    (declared.clone(), codes)
                }
            };
            let attr = AttributeSchema {
                name: name.clone(),
                kind: spec.kind,
                role: spec.role,
                categories,
            };
            Ok((attr, Column::Coded(codes)))
        }
        AttributeKind::Labels => {
            let mut categories: Vec<String> = spec.categories.clone().unwrap_or_default();
            let mut lookup: HashMap<String, u32> =
                categories.iter().enumerate().map(|(i, c)| (c.clone(), i as u32)).collect();
            let fixed = spec.categories.is_some();
            let mut sets = Vec::with_capacity(raw.len());
            for (i, cell) in raw.iter().enumerate() {
                if cell.is_empty() {
                    sets.push(None);
                    continue;
                }
                let mut set = Vec::new();
                for label in cell.split(';').map(str::trim).filter(|l| !l.is_empty()) {
                    let code = match lookup.get(label) {
                        Some(&c) => c,
                        None if fixed => return Err(unparseable(i, label, spec.kind)),
                        None => {
                            categories.push(label.to_string());
                            let c = (categories.len() - 1) as u32;
                            lookup.insert(label.to_string(), c);
                            c
                        }
                    };
                    set.push(code);
                }
                set.sort_unstable();
                set.dedup();
                sets.push(Some(set));
            }
            Ok((AttributeSchema::labels(name, spec.role, categories), Column::Labels(sets)))
        }
    }
}

/// Writes a dataset as headed CSV; continuous values use the shortest exact representation.
pub fn write_csv<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(data.schema().iter().map(|a| a.name.as_str()))?;
    let mut record = Vec::with_capacity(data.schema().len());
    for row in 0..data.n_rows() {
        record.clear();
        record.extend((0..data.schema().len()).map(|c| data.cell_text(c, row)));
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
