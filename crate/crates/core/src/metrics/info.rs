use super::{ContingencyTable, Metric, MetricValue};
use crate::error::{Error, Result};

/// Plug-in mutual information (nats) of a contingency table.
///
/// The normalized variant divides by `min(H(S), H(O))` and lies in `[0, 1]`.
/// Tables where either marginal entropy is zero have no variation to measure
/// and are rejected.
pub fn mutual_information(table: &ContingencyTable, normalized: bool) -> Result<MetricValue> {
    let (mi, h_out, h_prot) = mi_from_cells(table.rows(), table.cols(), table.cells())?;
    let value = if normalized { (mi / h_out.min(h_prot)).clamp(0.0, 1.0) } else { mi };
    Ok(MetricValue::new(Metric::Nmi, value))
}

/// Returns `(MI, H(rows), H(cols))`.
pub(crate) fn mi_from_cells(rows: usize, cols: usize, cells: &[u64]) -> Result<(f64, f64, f64)> {
    let n: u64 = cells.iter().sum();
    if n == 0 {
        return Err(Error::NoVariation("empty contingency table".into()));
    }
    let nf = n as f64;
    let mut row_tot = vec![0u64; rows];
    let mut col_tot = vec![0u64; cols];
    for i in 0..rows {
        for j in 0..cols {
            let c = cells[i * cols + j];
            row_tot[i] += c;
            col_tot[j] += c;
        }
    }
    let entropy = |tot: &[u64]| -> f64 {
        tot.iter()
            .filter(|&&t| t > 0)
            .map(|&t| {
                let p = t as f64 / nf;
                -p * p.ln()
            })
            .sum()
    };
    let (h_rows, h_cols) = (entropy(&row_tot), entropy(&col_tot));
    let nonempty = |tot: &[u64]| tot.iter().filter(|&&t| t > 0).count();
    if nonempty(&row_tot) < 2 || nonempty(&col_tot) < 2 {
        return Err(Error::NoVariation("a marginal distribution is concentrated on one value".into()));
    }
    let mut terms = Vec::with_capacity(cells.len());
    for i in 0..rows {
        for j in 0..cols {
            let c = cells[i * cols + j];
            if c > 0 {
                let c = c as f64;
                // p(o,s) ln(p(o,s) / (p(o) p(s))) with counts: (c/n) ln(c n / (r_i c_j))
                terms.push(c / nf * (c * nf / (row_tot[i] as f64 * col_tot[j] as f64)).ln());
            }
        }
    }
    // summation order independent of table orientation
    terms.sort_unstable_by(f64::total_cmp);
    let mi: f64 = terms.iter().sum();
    Ok((mi.max(0.0), h_rows, h_cols))
}
