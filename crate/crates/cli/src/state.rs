use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uatest_core::dataset::Dataset;
use uatest_core::investigations::{Investigation, ReportModel};
use uatest_core::Error;

use crate::CliError;

pub const STATE_VERSION: u32 = 1;

/// Everything a `debug` pass needs to rebuild the split and resume the budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub version: u32,
    pub data: PathBuf,
    pub schema: Option<PathBuf>,
    pub n_rows: usize,
    pub columns: Vec<String>,
    pub budget: usize,
    pub consumed: usize,
    pub train_fraction: f64,
    pub split_seed: u64,
    pub reports: Vec<ReportModel>,
    pub investigation: Investigation,
}

impl State {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let file = File::open(path).map_err(|_| CliError::MissingState(path.to_path_buf()))?;
        let state: State = serde_json::from_reader(BufReader::new(file)).map_err(Error::from)?;
        if state.version != STATE_VERSION {
            return Err(Error::Schema(format!("state file version {} is not supported", state.version)).into());
        }
        Ok(state)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self).map_err(Error::from)?;
        w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Fails unless `data` has the shape recorded when the investigation was trained.
    pub fn check_data(&self, data: &Dataset) -> Result<(), CliError> {
        let columns: Vec<&str> = data.schema().iter().map(|a| a.name.as_str()).collect();
        if data.n_rows() != self.n_rows || columns != self.columns {
            return Err(Error::Schema(format!(
                "{} no longer matches the saved investigation ({} rows, {} columns expected)",
                self.data.display(),
                self.n_rows,
                self.columns.len()
            ))
            .into());
        }
        Ok(())
    }
}
