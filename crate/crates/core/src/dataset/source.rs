use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, View};
use crate::error::{Error, Result};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.5;

/// A dataset split once into a training set and `budget` disjoint test sets.
///
/// Each adaptive investigation consumes one test set; once all are used,
/// further validation requires new data. Callers own the source exclusively
/// while drawing test sets.
#[derive(Clone, Debug)]
pub struct DataSource {
    data: Arc<Dataset>,
    train: View,
    tests: Vec<View>,
    consumed: usize,
    seed: u64,
    train_fraction: f64,
}

/// Seeded uniform partition of `data` into a train set (fraction `train_fraction`)
/// and `budget` test sets whose sizes differ by at most one row.
pub fn make_datasource(
    data: impl Into<Arc<Dataset>>,
    budget: usize,
    train_fraction: f64,
    seed: u64,
    min_size: usize,
) -> Result<DataSource> {
    let data = data.into();
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let n = data.n_rows();
    let n_train = (n as f64 * train_fraction).floor() as usize;
    let per_test = (n - n_train) / budget;
    if per_test < 2 * min_size {
        return Err(Error::InsufficientRows {
            per_test,
            required: 2 * min_size,
        });
    }

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let train = View::from_rows(data.clone(), order[..n_train].to_vec());
    let rest = &order[n_train..];
    let (base, extra) = (rest.len() / budget, rest.len() % budget);
    let mut tests = Vec::with_capacity(budget);
    let mut start = 0;
    for i in 0..budget {
        let len = base + usize::from(i < extra);
        tests.push(View::from_rows(data.clone(), rest[start..start + len].to_vec()));
        start += len;
    }
    Ok(DataSource {
        data,
        train,
        tests,
        consumed: 0,
        seed,
        train_fraction,
    })
}

impl DataSource {
    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn train(&self) -> &View {
        &self.train
    }

    pub fn budget(&self) -> usize {
        self.tests.len()
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn remaining(&self) -> usize {
        self.tests.len() - self.consumed
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn train_fraction(&self) -> f64 {
        self.train_fraction
    }

    /// Hands out the next unused test set.
    pub fn next_test_set(&mut self) -> Result<View> {
        let view = self
            .tests
            .get(self.consumed)
            .cloned()
            .ok_or(Error::BudgetExhausted {
                budget: self.tests.len(),
            })?;
        self.consumed += 1;
        Ok(view)
    }

    /// Marks the first `consumed` test sets as used, e.g. when resuming saved state.
    pub fn set_consumed(&mut self, consumed: usize) -> Result<()> {
        if consumed > self.tests.len() {
            return Err(Error::BudgetExhausted {
                budget: self.tests.len(),
            });
        }
        self.consumed = consumed;
        Ok(())
    }

    /// Swaps in a dataset with the same rows, typically one carrying derived columns.
    pub fn replace_data(&mut self, data: Arc<Dataset>) -> Result<()> {
        self.train = self.train.rebase(data.clone())?;
        for t in &mut self.tests {
            *t = t.rebase(data.clone())?;
        }
        self.data = data;
        Ok(())
    }

    /// Test set `i` without consuming budget; for inspection only.
    pub fn peek_test_set(&self, i: usize) -> Option<&View> {
        self.tests.get(i)
    }
}
