//! Metric evaluation bound to concrete columns.
//!
//! A [`Measure`] names the protected, output and optional explanatory
//! columns plus the metric. [`Measure::sample`] extracts those columns for a
//! view into a compact [`Sample`]; every evaluation after that (tree splits,
//! permutations, bootstrap resamples) works on sample positions only.

use serde::{Deserialize, Serialize};

use super::{diff_from_cells, mi_from_cells, ratio_from_cells, Metric};
use crate::dataset::{AttributeKind, Column, Dataset, View};
use crate::error::{Error, Result};

/// Strata smaller than this are left out of conditional aggregates.
pub const DEFAULT_MIN_STRATUM: usize = 10;

/// Category codes defining a binary comparison: `Pr(target | a) - Pr(target | b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryRoles {
    pub target: u32,
    pub group_a: u32,
    pub group_b: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measure {
    pub metric: Metric,
    pub protected: usize,
    pub output: usize,
    pub explanatory: Option<usize>,
    pub roles: BinaryRoles,
    pub min_stratum: usize,
}

impl Measure {
    /// Validates attribute kinds against the metric.
    ///
    /// Binary roles default to the last output category as target, and the
    /// first versus second protected category.
    pub fn new(data: &Dataset, metric: Metric, protected: &str, output: &str, explanatory: Option<&str>) -> Result<Self> {
        let (s, o) = (data.attribute(protected)?, data.attribute(output)?);
        let (sa, oa) = (data.attr(s), data.attr(o));
        let mismatch = |what: &str| {
            Error::MetricMismatch(format!(
                "{} {what} (protected `{}` is {}, output `{}` is {})",
                metric.label(),
                sa.name,
                describe(sa.kind, sa.categories.len()),
                oa.name,
                describe(oa.kind, oa.categories.len())
            ))
        };
        let scalar_like = |kind: AttributeKind, k: usize| kind == AttributeKind::Continuous || (kind.is_coded() && k == 2);
        match metric {
            Metric::Diff | Metric::Ratio if !(sa.is_binary() && oa.is_binary()) => {
                return Err(mismatch("requires binary protected and output attributes"))
            }
            Metric::Nmi if !(sa.kind.is_coded() && oa.kind.is_coded()) => {
                return Err(mismatch("requires categorical protected and output attributes"))
            }
            Metric::Corr if !(scalar_like(sa.kind, sa.categories.len()) && scalar_like(oa.kind, oa.categories.len())) => {
                return Err(mismatch("requires scalar protected and output attributes"))
            }
            Metric::Reg => return Err(mismatch("ranks labels and is not evaluated per context")),
            _ => {}
        }
        let explanatory = match explanatory {
            None => None,
            Some(name) => {
                let e = data.attribute(name)?;
                if !data.attr(e).kind.is_coded() {
                    return Err(Error::MetricMismatch(format!("explanatory attribute `{name}` must be categorical")));
                }
                Some(e)
            }
        };
        let last = oa.categories.len().saturating_sub(1) as u32;
        Ok(Self {
            metric,
            protected: s,
            output: o,
            explanatory,
            roles: BinaryRoles {
                target: last,
                group_a: 0,
                group_b: 1,
            },
            min_stratum: DEFAULT_MIN_STRATUM,
        })
    }

    /// Overrides the binary comparison by category label.
    pub fn with_roles(mut self, data: &Dataset, target: Option<&str>, groups: Option<(&str, &str)>) -> Result<Self> {
        let lookup = |col: usize, label: &str| {
            data.attr(col)
                .category_index(label)
                .ok_or_else(|| Error::InvalidParameter(format!("`{label}` is not a category of `{}`", data.attr(col).name)))
        };
        if let Some(t) = target {
            self.roles.target = lookup(self.output, t)?;
        }
        if let Some((a, b)) = groups {
            self.roles.group_a = lookup(self.protected, a)?;
            self.roles.group_b = lookup(self.protected, b)?;
            if self.roles.group_a == self.roles.group_b {
                return Err(Error::InvalidParameter("the two protected groups must differ".into()));
            }
        }
        Ok(self)
    }

    pub fn conditioned_on(mut self, explanatory: Option<usize>) -> Self {
        self.explanatory = explanatory;
        self
    }

    /// Columns an investigation needs non-missing.
    pub fn columns(&self) -> Vec<usize> {
        let mut cols = vec![self.protected, self.output];
        cols.extend(self.explanatory);
        cols
    }

    /// Extracts the measured columns for `view`; rows missing any of them are skipped.
    pub fn sample(&self, view: &View) -> Sample {
        let data = view.data();
        let rows: Vec<u32> = view
            .rows()
            .iter()
            .copied()
            .filter(|&r| self.columns().iter().all(|&c| !data.is_missing(c, r as usize)))
            .collect();
        let (strata, n_strata) = match self.explanatory {
            Some(e) => {
                let codes = data.column(e).codes().expect("explanatory attribute is coded");
                (rows.iter().map(|&r| codes[r as usize]).collect(), data.attr(e).categories.len())
            }
            None => (Vec::new(), 1),
        };
        let values = if self.metric.is_categorical() {
            let codes = |c: usize| -> Vec<u32> {
                let col = data.column(c).codes().expect("categorical metric on coded columns");
                rows.iter().map(|&r| col[r as usize]).collect()
            };
            SampleValues::Coded {
                s: codes(self.protected),
                o: codes(self.output),
                ns: data.attr(self.protected).categories.len(),
                no: data.attr(self.output).categories.len(),
            }
        } else {
            let scalars = |c: usize| -> Vec<f64> {
                let mut v: Vec<f64> = match data.column(c) {
                    Column::Continuous(x) => rows.iter().map(|&r| x[r as usize]).collect(),
                    Column::Coded(x) => rows.iter().map(|&r| f64::from(x[r as usize])).collect(),
                    Column::Labels(_) => unreachable!("validated in Measure::new"),
                };
                // centre once so moment sums stay well conditioned
                let mean = if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
                v.iter_mut().for_each(|x| *x -= mean);
                v
            };
            SampleValues::Scalar {
                s: scalars(self.protected),
                o: scalars(self.output),
            }
        };
        Sample {
            rows,
            values,
            strata,
            n_strata,
        }
    }

    /// Metric over the whole sample (conditional aggregate when an explanatory attribute is set).
    pub fn evaluate(&self, sample: &Sample) -> Result<f64> {
        self.evaluate_pairs(sample, (0..sample.len()).map(|i| (i, i)))
    }

    /// Metric over a subset of sample positions.
    pub fn evaluate_positions(&self, sample: &Sample, positions: &[u32]) -> Result<f64> {
        self.evaluate_pairs(sample, positions.iter().map(|&i| (i as usize, i as usize)))
    }

    /// Metric over pairs `(i, j)`: output and stratum from position `i`, protected value
    /// from position `j`. Identity pairs give the observed statistic; permuted `j`s give
    /// permutation replicates; repeated identity pairs give bootstrap replicates.
    pub fn evaluate_pairs(&self, sample: &Sample, pairs: impl Iterator<Item = (usize, usize)>) -> Result<f64> {
        let acc = self.accumulate(sample, pairs);
        self.aggregate(sample, &acc).map(|c| c.aggregate)
    }

    pub fn conditional_pairs(&self, sample: &Sample, pairs: impl Iterator<Item = (usize, usize)>) -> Result<ConditionalValue> {
        let acc = self.accumulate(sample, pairs);
        self.aggregate(sample, &acc)
    }

    /// Observed cell counts of a categorical sample, laid out `[stratum][output][protected]`.
    pub(crate) fn cell_counts(&self, sample: &Sample) -> Option<CellCounts> {
        let SampleValues::Coded { ns, no, .. } = &sample.values else {
            return None;
        };
        let Accumulator::Cells { cells, .. } = self.accumulate(sample, (0..sample.len()).map(|i| (i, i))) else {
            unreachable!("coded sample accumulates cells")
        };
        Some(CellCounts {
            cells,
            n_output: *no,
            n_protected: *ns,
            n_strata: sample.n_strata,
        })
    }

    /// Aggregate metric from cell counts shaped like [`Measure::cell_counts`].
    pub(crate) fn evaluate_cells(&self, sample: &Sample, cells: Vec<u64>) -> Result<f64> {
        let width = cells.len() / sample.n_strata.max(1);
        let acc = Accumulator::Cells { cells, width };
        if self.explanatory.is_none() {
            return self.stratum_value(sample, &acc, 0).1;
        }
        self.aggregate(sample, &acc).map(|c| c.aggregate)
    }

    fn accumulate(&self, sample: &Sample, pairs: impl Iterator<Item = (usize, usize)>) -> Accumulator {
        let k = sample.n_strata;
        let stratum = |i: usize| if sample.strata.is_empty() { 0 } else { sample.strata[i] as usize };
        match &sample.values {
            SampleValues::Coded { s, o, ns, no } => {
                let width = ns * no;
                let mut cells = vec![0u64; k * width];
                for (i, j) in pairs {
                    cells[stratum(i) * width + o[i] as usize * ns + s[j] as usize] += 1;
                }
                Accumulator::Cells { cells, width }
            }
            SampleValues::Scalar { s, o } => {
                let mut moments = vec![Moments::default(); k];
                for (i, j) in pairs {
                    moments[stratum(i)].push(s[j], o[i]);
                }
                Accumulator::Moments(moments)
            }
        }
    }

    /// Point estimate over sample positions together with its sampling noise
    /// under no association, used to judge whether split parts really differ.
    pub(crate) fn estimate_positions(&self, sample: &Sample, positions: &[u32]) -> Estimate {
        let acc = self.accumulate(sample, positions.iter().map(|&i| (i as usize, i as usize)));
        let Ok(cond) = self.aggregate(sample, &acc) else {
            return Estimate::undefined();
        };
        let included: Vec<&StratumValue> = cond.strata.iter().filter(|s| s.included).collect();
        let total: u64 = included.iter().map(|s| s.size).sum();
        let mut est = Estimate {
            value: Some(cond.aggregate),
            variance: 0.0,
            g: 0.0,
            dof: 0,
        };
        for s in included {
            let w = s.size as f64 / total as f64;
            let (var, g, dof) = self.stratum_noise(sample, &acc, s.stratum as usize);
            est.variance += w * w * var;
            est.g += g;
            est.dof += dof;
        }
        est
    }

    /// `(null variance, G statistic, degrees of freedom)` of one stratum.
    fn stratum_noise(&self, sample: &Sample, acc: &Accumulator, k: usize) -> (f64, f64, usize) {
        match (acc, &sample.values) {
            (Accumulator::Cells { cells, width }, SampleValues::Coded { ns, no, .. }) => {
                let cells = &cells[k * width..(k + 1) * width];
                if self.metric == Metric::Nmi {
                    return match mi_from_cells(*no, *ns, cells) {
                        Ok((mi, _, _)) => {
                            let n: u64 = cells.iter().sum();
                            let rows = (0..*no).filter(|&i| (0..*ns).any(|j| cells[i * ns + j] > 0)).count();
                            let cols = (0..*ns).filter(|&j| (0..*no).any(|i| cells[i * ns + j] > 0)).count();
                            (f64::INFINITY, 2.0 * n as f64 * mi, (rows - 1) * (cols - 1))
                        }
                        Err(_) => (f64::INFINITY, 0.0, 0),
                    };
                }
                let BinaryRoles { target, group_a, group_b } = self.roles;
                let total = |j: u32| (0..*no).map(|i| cells[i * ns + j as usize]).sum::<u64>() as f64;
                let (na, nb) = (total(group_a), total(group_b));
                let x = cells[target as usize * ns + group_a as usize] + cells[target as usize * ns + group_b as usize];
                let p = x as f64 / (na + nb);
                let var = match self.metric {
                    _ if na == 0.0 || nb == 0.0 => f64::INFINITY,
                    Metric::Ratio if p == 0.0 => f64::INFINITY,
                    Metric::Ratio => (1.0 - p) / p * (1.0 / na + 1.0 / nb),
                    _ => p * (1.0 - p) * (1.0 / na + 1.0 / nb),
                };
                (var, 0.0, 0)
            }
            (Accumulator::Moments(m), _) if m[k].n > 1 => (1.0 / (m[k].n - 1) as f64, 0.0, 0),
            _ => (f64::INFINITY, 0.0, 0),
        }
    }

    fn stratum_value(&self, sample: &Sample, acc: &Accumulator, k: usize) -> (u64, Result<f64>) {
        match (acc, &sample.values) {
            (Accumulator::Cells { cells, width }, SampleValues::Coded { ns, no, .. }) => {
                let cells = &cells[k * width..(k + 1) * width];
                let n = cells.iter().sum();
                let BinaryRoles { target, group_a, group_b } = self.roles;
                let (t, a, b) = (target as usize, group_a as usize, group_b as usize);
                let v = match self.metric {
                    Metric::Diff => diff_from_cells(*ns, cells, t, a, b),
                    Metric::Ratio => ratio_from_cells(*ns, cells, t, a, b),
                    Metric::Nmi => mi_from_cells(*no, *ns, cells).map(|(mi, ho, hs)| (mi / ho.min(hs)).clamp(0.0, 1.0)),
                    _ => unreachable!("categorical sample for a scalar metric"),
                };
                (n, v)
            }
            (Accumulator::Moments(m), _) => (m[k].n as u64, m[k].correlation()),
            _ => unreachable!("accumulator matches sample kind"),
        }
    }

    fn aggregate(&self, sample: &Sample, acc: &Accumulator) -> Result<ConditionalValue> {
        if self.explanatory.is_none() {
            let (size, value) = self.stratum_value(sample, acc, 0);
            let value = value?;
            return Ok(ConditionalValue {
                aggregate: value,
                strata: vec![StratumValue {
                    stratum: 0,
                    size,
                    value: Some(value),
                    included: true,
                }],
            });
        }
        let mut strata = Vec::new();
        for k in 0..sample.n_strata {
            let (size, value) = self.stratum_value(sample, acc, k);
            if size == 0 {
                continue;
            }
            let value = value.ok();
            let included = size as usize >= self.min_stratum && value.is_some();
            strata.push(StratumValue {
                stratum: k as u32,
                size,
                value,
                included,
            });
        }
        let kept: Vec<&StratumValue> = strata.iter().filter(|s| s.included).collect();
        let aggregate = match kept.as_slice() {
            [] => {
                return Err(Error::NoValidStratum {
                    attribute: format!("#{}", self.explanatory.unwrap_or_default()),
                    min_stratum: self.min_stratum,
                })
            }
            [only] => only.value.unwrap_or_default(),
            many => {
                let total: u64 = many.iter().map(|s| s.size).sum();
                many.iter().map(|s| s.size as f64 * s.value.unwrap_or_default()).sum::<f64>() / total as f64
            }
        };
        Ok(ConditionalValue { aggregate, strata })
    }
}

fn describe(kind: AttributeKind, k: usize) -> String {
    match kind {
        AttributeKind::Continuous => "continuous".into(),
        AttributeKind::Labels => "a label set".into(),
        _ if k == 2 => "binary".into(),
        _ => format!("{}-valued {}", k, kind.as_str()),
    }
}

/// Conditional metric over `view`: per-stratum values and their size-weighted mean.
pub fn conditional_metric(view: &View, measure: &Measure) -> Result<ConditionalValue> {
    if measure.explanatory.is_none() {
        return Err(Error::InvalidParameter("conditional metric needs an explanatory attribute".into()));
    }
    let sample = measure.sample(view);
    measure.conditional_pairs(&sample, (0..sample.len()).map(|i| (i, i))).map_err(|e| match e {
        Error::NoValidStratum { min_stratum, .. } => Error::NoValidStratum {
            attribute: view.data().attr(measure.explanatory.unwrap_or_default()).name.clone(),
            min_stratum,
        },
        other => other,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalValue {
    pub aggregate: f64,
    pub strata: Vec<StratumValue>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumValue {
    /// Category code of the explanatory attribute.
    pub stratum: u32,
    pub size: u64,
    /// `None` when the metric is undefined within the stratum.
    pub value: Option<f64>,
    /// Whether the stratum counts toward the aggregate.
    pub included: bool,
}

/// Measured columns of a view, with positions `0..len()`.
#[derive(Clone, Debug)]
pub struct Sample {
    rows: Vec<u32>,
    values: SampleValues,
    strata: Vec<u32>,
    n_strata: usize,
}

#[derive(Clone, Debug)]
enum SampleValues {
    Coded { s: Vec<u32>, o: Vec<u32>, ns: usize, no: usize },
    Scalar { s: Vec<f64>, o: Vec<f64> },
}

impl Sample {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Dataset row of each position.
    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    /// Stratum code per position; empty when unconditioned.
    pub fn strata(&self) -> &[u32] {
        &self.strata
    }

    pub fn n_strata(&self) -> usize {
        self.n_strata
    }

    /// Positions grouped by stratum (a single group when unconditioned).
    pub fn stratum_groups(&self) -> Vec<Vec<usize>> {
        if self.strata.is_empty() {
            return vec![(0..self.len()).collect()];
        }
        let mut groups = vec![Vec::new(); self.n_strata];
        for (i, &k) in self.strata.iter().enumerate() {
            groups[k as usize].push(i);
        }
        groups
    }
}

/// Point estimate plus noise summaries: null variance (signed metrics) and
/// the G statistic with its degrees of freedom (NMI).
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Estimate {
    pub value: Option<f64>,
    pub variance: f64,
    pub g: f64,
    pub dof: usize,
}

impl Estimate {
    pub fn undefined() -> Self {
        Self {
            value: None,
            variance: f64::INFINITY,
            g: 0.0,
            dof: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct CellCounts {
    pub cells: Vec<u64>,
    pub n_output: usize,
    pub n_protected: usize,
    pub n_strata: usize,
}

impl CellCounts {
    pub fn width(&self) -> usize {
        self.n_output * self.n_protected
    }

    pub fn stratum(&self, k: usize) -> &[u64] {
        &self.cells[k * self.width()..(k + 1) * self.width()]
    }
}

enum Accumulator {
    Cells { cells: Vec<u64>, width: usize },
    Moments(Vec<Moments>),
}

#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: usize,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

impl Moments {
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }

    fn correlation(&self) -> Result<f64> {
        if self.n < 3 {
            return Err(Error::InvalidParameter("correlation needs at least 3 observations".into()));
        }
        let n = self.n as f64;
        let vxx = self.sxx - self.sx * self.sx / n;
        let vyy = self.syy - self.sy * self.sy / n;
        let vxy = self.sxy - self.sx * self.sy / n;
        let tiny = |v: f64, raw: f64| v <= 1e-12 * raw.max(f64::MIN_POSITIVE);
        if tiny(vxx, self.sxx) {
            return Err(Error::ConstantColumn("protected".into()));
        }
        if tiny(vyy, self.syy) {
            return Err(Error::ConstantColumn("output".into()));
        }
        Ok((vxy / (vxx.sqrt() * vyy.sqrt())).clamp(-1.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dataset::{AttributeSchema, Role};
    use crate::metrics::{binary_difference, contingency, pearson_correlation};

    fn dataset(rows: &[(u32, u32, u32)]) -> Arc<Dataset> {
        let schema = vec![
            AttributeSchema::categorical("gender", Role::Protected, ["F", "M"]),
            AttributeSchema::categorical("admit", Role::Output, ["No", "Yes"]),
            AttributeSchema::categorical("dept", Role::Explanatory, ["A", "B", "C"]),
        ];
        let col = |f: fn(&(u32, u32, u32)) -> u32| Column::Coded(rows.iter().map(f).collect());
        Arc::new(Dataset::new(schema, vec![col(|r| r.0), col(|r| r.1), col(|r| r.2)]).unwrap())
    }

    fn repeat(spec: &[((u32, u32, u32), usize)]) -> Vec<(u32, u32, u32)> {
        spec.iter().flat_map(|&(r, k)| std::iter::repeat(r).take(k)).collect()
    }

    #[test]
    fn unconditional_diff_matches_table_route() {
        let d = dataset(&repeat(&[((0, 1, 0), 30), ((0, 0, 0), 10), ((1, 1, 0), 20), ((1, 0, 0), 40)]));
        let view = View::full(d.clone());
        let m = Measure::new(&d, Metric::Diff, "gender", "admit", None).unwrap();
        let via_sample = m.evaluate(&m.sample(&view)).unwrap();
        let via_table = binary_difference(&contingency(&view, "gender", "admit").unwrap(), "Yes", "F", "M").unwrap().value;
        assert_eq!(via_sample, via_table);
        assert!((via_sample - (0.75 - 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn single_stratum_equals_unconditional() {
        let d = dataset(&repeat(&[((0, 1, 1), 30), ((0, 0, 1), 10), ((1, 1, 1), 20), ((1, 0, 1), 40)]));
        let view = View::full(d.clone());
        let plain = Measure::new(&d, Metric::Diff, "gender", "admit", None).unwrap();
        let cond = Measure::new(&d, Metric::Diff, "gender", "admit", Some("dept")).unwrap();
        let c = conditional_metric(&view, &cond).unwrap();
        assert_eq!(c.aggregate, plain.evaluate(&plain.sample(&view)).unwrap());
        assert_eq!(c.strata.len(), 1);
    }

    #[test]
    fn opposite_strata_cancel() {
        // dept A: F 0.8 vs M 0.4 (+0.4); dept B: F 0.4 vs M 0.8 (-0.4); equal sizes
        let d = dataset(&repeat(&[
            ((0, 1, 0), 8),
            ((0, 0, 0), 2),
            ((1, 1, 0), 4),
            ((1, 0, 0), 6),
            ((0, 1, 1), 4),
            ((0, 0, 1), 6),
            ((1, 1, 1), 8),
            ((1, 0, 1), 2),
        ]));
        let m = Measure::new(&d, Metric::Diff, "gender", "admit", Some("dept")).unwrap();
        let c = conditional_metric(&View::full(d), &m).unwrap();
        assert_eq!(c.aggregate, 0.0);
        assert!(c.strata.iter().all(|s| s.included));
    }

    #[test]
    fn small_strata_are_flagged_and_excluded() {
        let d = dataset(&repeat(&[
            ((0, 1, 0), 10),
            ((0, 0, 0), 10),
            ((1, 1, 0), 5),
            ((1, 0, 0), 15),
            ((0, 1, 1), 3),
            ((1, 0, 1), 2),
        ]));
        let m = Measure::new(&d, Metric::Diff, "gender", "admit", Some("dept")).unwrap();
        let c = conditional_metric(&View::full(d.clone()), &m).unwrap();
        assert_eq!(c.aggregate, 0.5 - 0.25);
        let small = c.strata.iter().find(|s| s.stratum == 1).unwrap();
        assert!(!small.included);

        let tiny = dataset(&repeat(&[((0, 1, 0), 3), ((1, 0, 0), 3)]));
        let m = Measure::new(&tiny, Metric::Diff, "gender", "admit", Some("dept")).unwrap();
        let err = conditional_metric(&View::full(tiny), &m).unwrap_err();
        assert!(matches!(err, Error::NoValidStratum { ref attribute, .. } if attribute == "dept"));
    }

    #[test]
    fn metric_kind_validation() {
        let d = dataset(&[(0, 0, 0), (1, 1, 2)]);
        assert!(Measure::new(&d, Metric::Diff, "gender", "dept", None).is_err());
        assert!(Measure::new(&d, Metric::Nmi, "gender", "dept", None).is_ok());
        assert!(Measure::new(&d, Metric::Reg, "gender", "admit", None).is_err());
    }

    #[test]
    fn moment_correlation_matches_two_pass() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 10.0 + 1e6).collect();
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.11).cos() + x[i] * 1e-6).collect();
        let schema = vec![AttributeSchema::continuous("x", Role::Protected), AttributeSchema::continuous("y", Role::Output)];
        let d = Arc::new(Dataset::new(schema, vec![Column::Continuous(x.clone()), Column::Continuous(y.clone())]).unwrap());
        let m = Measure::new(&d, Metric::Corr, "x", "y", None).unwrap();
        let r = m.evaluate(&m.sample(&View::full(d))).unwrap();
        assert!((r - pearson_correlation(&x, &y).unwrap().value).abs() < 1e-10);
    }
}
