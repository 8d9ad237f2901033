use super::{ContingencyTable, Metric, MetricValue};
use crate::error::{Error, Result};

/// `Pr(target | group_a) - Pr(target | group_b)` on a 2x2 table.
pub fn binary_difference(table: &ContingencyTable, target_output: &str, group_a: &str, group_b: &str) -> Result<MetricValue> {
    let (t, a, b) = binary_indices(table, target_output, group_a, group_b)?;
    diff_from_cells(table.cols(), table.cells(), t, a, b)
        .map(|v| MetricValue::new(Metric::Diff, v))
        .map_err(|_| Error::EmptyGroup(if col_total(table, a) == 0 { group_a } else { group_b }.to_string()))
}

/// `Pr(target | group_a) / Pr(target | group_b) - 1` on a 2x2 table.
pub fn binary_ratio(table: &ContingencyTable, target_output: &str, group_a: &str, group_b: &str) -> Result<MetricValue> {
    let (t, a, b) = binary_indices(table, target_output, group_a, group_b)?;
    ratio_from_cells(table.cols(), table.cells(), t, a, b).map(|v| MetricValue::new(Metric::Ratio, v))
}

fn col_total(table: &ContingencyTable, col: usize) -> u64 {
    (0..table.rows()).map(|i| table.count(i, col)).sum()
}

fn binary_indices(table: &ContingencyTable, target: &str, a: &str, b: &str) -> Result<(usize, usize, usize)> {
    if table.rows() != 2 || table.cols() != 2 {
        return Err(Error::MetricMismatch(format!(
            "binary metrics need a 2x2 table, got {}x{}",
            table.rows(),
            table.cols()
        )));
    }
    let (a, b) = (table.protected_index(a)?, table.protected_index(b)?);
    if a == b {
        return Err(Error::InvalidParameter("the two groups must differ".into()));
    }
    Ok((table.output_index(target)?, a, b))
}

/// Proportions of the target row within columns `a` and `b`; `None` when a column is empty.
fn proportions(cols: usize, cells: &[u64], target: usize, a: usize, b: usize) -> Option<(f64, f64)> {
    let rows = cells.len() / cols;
    let total = |j: usize| (0..rows).map(|i| cells[i * cols + j]).sum::<u64>();
    let (na, nb) = (total(a), total(b));
    if na == 0 || nb == 0 {
        return None;
    }
    Some((
        cells[target * cols + a] as f64 / na as f64,
        cells[target * cols + b] as f64 / nb as f64,
    ))
}

pub(crate) fn diff_from_cells(cols: usize, cells: &[u64], target: usize, a: usize, b: usize) -> Result<f64> {
    let (pa, pb) = proportions(cols, cells, target, a, b).ok_or_else(|| Error::EmptyGroup("protected group".into()))?;
    Ok(pa - pb)
}

pub(crate) fn ratio_from_cells(cols: usize, cells: &[u64], target: usize, a: usize, b: usize) -> Result<f64> {
    let (pa, pb) = proportions(cols, cells, target, a, b).ok_or_else(|| Error::EmptyGroup("protected group".into()))?;
    if pb == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(pa / pb - 1.0)
}
