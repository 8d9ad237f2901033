//! Text and JSON rendering of reports.
//!
//! The text layout puts a header naming the output and protected attribute,
//! then the global population followed by the ranked subpopulations. Each
//! block shows the corrected p-value and interval, then a contingency table
//! (categorical metrics) or output quartiles per protected-attribute decile
//! (CORR).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::investigations::{Breakdown, DecileSummary, Finding, ReportModel};
use crate::metrics::ContingencyTable;

/// Both renderings of one report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedReport {
    pub text: String,
    pub json: String,
}

pub fn render(rm: &ReportModel) -> Result<RenderedReport> {
    Ok(RenderedReport {
        text: render_text(rm),
        json: render_json(rm)?,
    })
}

pub fn render_text(rm: &ReportModel) -> String {
    let mut out = String::new();
    let echo = &rm.investigation;
    match &echo.metric.conditioning {
        Some(e) => {
            let _ = writeln!(out, "Report of associations of O={} on S={},", echo.output, echo.protected);
            let _ = writeln!(out, "conditioned on explanatory attribute E={e}:");
        }
        None => {
            let _ = writeln!(out, "Report of associations of O={} on S={}:", echo.output, echo.protected);
        }
    }
    let _ = writeln!(out, "Association metric: {}.", echo.metric.label());
    out.push('\n');

    let _ = writeln!(out, "Global Population of size {}", thousands(rm.global.size));
    finding_body(&mut out, &rm.global, "");
    if !rm.global_significant() {
        let _ = writeln!(out, "Not significant at confidence level {}.", rm.conf);
    }
    for f in &rm.subpopulations {
        out.push('\n');
        let _ = writeln!(out, "{}. Subpopulation of size {}", f.rank, thousands(f.size));
        let context: Vec<String> = f.context.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "Context = {}", context.join(", "));
        finding_body(&mut out, f, "");
    }
    out
}

/// Several reports separated by a blank line.
pub fn render_text_all(reports: &[ReportModel]) -> String {
    reports.iter().map(render_text).collect::<Vec<_>>().join("\n")
}

fn finding_body(out: &mut String, f: &Finding, indent: &str) {
    stat_line(out, indent, &f.metric.label(), f.tested.final_p(), f.tested.final_ci().lo, f.tested.final_ci().hi);
    out.push('\n');
    breakdown(out, &f.breakdown, indent);
    let e = f.metric.conditioning.as_deref().unwrap_or_default();
    for s in &f.strata {
        out.push('\n');
        let _ = writeln!(out, "{indent}* {e}={}: Population of size {}", s.stratum, thousands(s.size));
        let inner = format!("{indent}  ");
        let ci = s.tested.final_ci();
        stat_line(out, &inner, f.metric.metric.label(), s.tested.final_p(), ci.lo, ci.hi);
        out.push('\n');
        breakdown(out, &s.breakdown, &inner);
    }
}

fn stat_line(out: &mut String, indent: &str, metric: &str, p: f64, lo: f64, hi: f64) {
    let _ = writeln!(out, "{indent}p-value = {} ; {metric} = [{lo:.4}, {hi:.4}]", format_p(p));
}

/// Scientific notation with three significant figures and a signed two-digit exponent.
pub fn format_p(p: f64) -> String {
    if p < 1e-300 {
        return "<1e-300".into();
    }
    let s = format!("{p:.2e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn breakdown(out: &mut String, b: &Breakdown, indent: &str) {
    let rows = match b {
        Breakdown::Table(t) => table_rows(t),
        Breakdown::Deciles(d) => decile_rows(d),
    };
    if rows.is_empty() {
        return;
    }
    let ncol = rows[0].len();
    let widths: Vec<usize> = (0..ncol)
        .map(|j| rows.iter().filter_map(|r| r.get(j)).map(|c| c.chars().count()).max().unwrap_or(0))
        .collect();
    let rule: String = widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-");
    let total_row = matches!(b, Breakdown::Table(_)).then_some(rows.len() - 1);
    for (i, row) in rows.iter().enumerate() {
        if i == 1 || Some(i) == total_row {
            let _ = writeln!(out, "{indent}{rule}");
        }
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, c)| if j == 0 { format!("{c:<w$}", w = widths[j]) } else { format!("{c:>w$}", w = widths[j]) })
            .collect();
        let _ = writeln!(out, "{indent}{}", cells.join(" | ").trim_end());
    }
}

/// Header, one row per output value, and a totals row.
fn table_rows(t: &ContingencyTable) -> Vec<Vec<String>> {
    let (r, c) = (t.rows(), t.cols());
    let n = t.n();
    let col_totals = t.col_totals();
    let row_totals = t.row_totals();
    let col_pct: Vec<Vec<u64>> = (0..c).map(|j| percentages(&(0..r).map(|i| t.count(i, j)).collect::<Vec<_>>())).collect();
    let total_pct = percentages(&row_totals);
    let share_pct = percentages(&col_totals);
    let cell = |count: u64, pct: Option<u64>| match pct {
        Some(p) => format!("{count} ({p}%)"),
        None => format!("{count} (-)"),
    };
    let mut rows = Vec::with_capacity(r + 2);
    let mut header = vec![String::new()];
    header.extend(t.protected_labels().iter().cloned());
    header.push("Total".into());
    rows.push(header);
    for i in 0..r {
        let mut row = vec![t.output_labels()[i].clone()];
        for j in 0..c {
            row.push(cell(t.count(i, j), (col_totals[j] > 0).then(|| col_pct[j][i])));
        }
        row.push(cell(row_totals[i], (n > 0).then(|| total_pct[i])));
        rows.push(row);
    }
    let mut total = vec!["Total".to_string()];
    for j in 0..c {
        total.push(cell(col_totals[j], (n > 0).then(|| share_pct[j])));
    }
    total.push(cell(n, (n > 0).then_some(100)));
    rows.push(total);
    rows
}

/// Integer percentages summing to exactly 100 (largest remainder); all zero for a zero total.
pub fn percentages(counts: &[u64]) -> Vec<u64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0; counts.len()];
    }
    let mut pct: Vec<u64> = counts.iter().map(|&c| c * 100 / total).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(counts[i] * 100 % total), i));
    let missing = 100 - pct.iter().sum::<u64>();
    for &i in order.iter().take(missing as usize) {
        pct[i] += 1;
    }
    pct
}

fn decile_rows(bins: &[DecileSummary]) -> Vec<Vec<String>> {
    let mut rows = vec![["S range", "n", "min", "q1", "median", "q3", "max"].map(String::from).to_vec()];
    for b in bins {
        let mut row = vec![format!("[{}, {}]", num(b.protected_min), num(b.protected_max)), b.n.to_string()];
        row.extend(b.output.iter().map(|&v| num(v)));
        rows.push(row);
    }
    rows
}

fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Pretty-printed JSON mirroring the report model.
pub fn render_json(rm: &ReportModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(rm)?)
}

pub fn render_json_all(reports: &[ReportModel]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}

pub fn parse_json(text: &str) -> Result<ReportModel> {
    Ok(serde_json::from_str(text)?)
}
