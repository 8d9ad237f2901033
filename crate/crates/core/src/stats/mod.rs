//! p-values and confidence intervals for metric values, and multiple-testing
//! correction.
//!
//! Samples of at most [`StatConfig::small_sample`] rows (and every conditional
//! aggregate) get a permutation p-value and a percentile-bootstrap CI. Larger
//! samples use closed-form tests:
//!
//! | metric | test | interval |
//! |--------|------|----------|
//! | NMI    | G-test, `G = 2 N MI` | bootstrap |
//! | DIFF   | pooled two-proportion z | Wald |
//! | RATIO  | pooled two-proportion z | delta method on log risk ratio |
//! | CORR   | t-test | Fisher z |

mod resample;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

pub use resample::{
    bootstrap_ci, bootstrap_replicates, derive_seed, measure_bootstrap, measure_permutation_p, percentile_interval, permutation_p,
};

use crate::dataset::View;
use crate::error::{Error, Result};
use crate::metrics::{mi_from_cells, ContingencyTable, Measure, Metric, Sample};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatConfig {
    pub conf: f64,
    pub small_sample: usize,
    pub n_perm: usize,
    pub n_boot: usize,
    pub seed: u64,
}

impl Default for StatConfig {
    fn default() -> Self {
        Self {
            conf: 0.95,
            small_sample: 1000,
            n_perm: 1000,
            n_boot: 1000,
            seed: 0,
        }
    }
}

impl StatConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.conf > 0.0 && self.conf < 1.0) {
            return Err(Error::InvalidParameter(format!("confidence level {} outside (0, 1)", self.conf)));
        }
        if self.n_perm < 100 || self.n_boot < 100 {
            return Err(Error::InvalidParameter("permutation and bootstrap counts must be at least 100".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn covers(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Asymptotic,
    PermutationBootstrap,
}

/// What is needed to recompute an interval at another confidence level.
#[derive(Clone, Debug, Default)]
enum CiBasis {
    Wald {
        se: f64,
    },
    LogRatio {
        se: f64,
    },
    Fisher {
        n: usize,
    },
    Percentile(Arc<[f64]>),
    #[default]
    Fixed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestedMetric {
    pub metric: Metric,
    pub value: f64,
    /// Rows the statistic was computed on.
    pub n: usize,
    pub ci: Interval,
    pub p_value: f64,
    pub method: TestMethod,
    pub corrected_ci: Option<Interval>,
    pub corrected_p: Option<f64>,
    #[serde(skip)]
    basis: CiBasis,
}

impl PartialEq for TestedMetric {
    fn eq(&self, o: &Self) -> bool {
        (self.metric, self.value, self.n, self.ci, self.p_value, self.method, self.corrected_ci, self.corrected_p)
            == (o.metric, o.value, o.n, o.ci, o.p_value, o.method, o.corrected_ci, o.corrected_p)
    }
}

impl TestedMetric {
    fn new(metric: Metric, value: f64, n: usize, p_value: f64, method: TestMethod, basis: CiBasis, conf: f64) -> Self {
        let mut t = Self {
            metric,
            value,
            n,
            ci: Interval::new(value, value),
            p_value: p_value.clamp(0.0, 1.0),
            method,
            corrected_ci: None,
            corrected_p: None,
            basis,
        };
        t.ci = t.interval_at(conf);
        t
    }

    /// Interval at confidence `level` from the stored basis.
    pub fn interval_at(&self, level: f64) -> Interval {
        let v = self.value;
        let q = || z_quantile(1.0 - (1.0 - level) / 2.0);
        match &self.basis {
            CiBasis::Wald { se } => Interval::new((v - q() * se).max(-1.0), (v + q() * se).min(1.0)),
            CiBasis::LogRatio { se } => {
                let rr = v + 1.0;
                Interval::new(rr * (-q() * se).exp() - 1.0, rr * (q() * se).exp() - 1.0)
            }
            CiBasis::Fisher { n } => {
                let (z, se) = (v.atanh(), 1.0 / ((*n as f64) - 3.0).sqrt());
                Interval::new((z - q() * se).tanh(), (z + q() * se).tanh())
            }
            CiBasis::Percentile(reps) => {
                let ci = percentile_interval(reps, level);
                Interval::new(ci.lo.min(v), ci.hi.max(v))
            }
            CiBasis::Fixed => Interval::new(v, v),
        }
    }

    /// Corrected interval when available, raw otherwise.
    pub fn final_ci(&self) -> Interval {
        self.corrected_ci.unwrap_or(self.ci)
    }

    pub fn final_p(&self) -> f64 {
        self.corrected_p.unwrap_or(self.p_value)
    }

    /// Lower bound on the effect size implied by the final interval.
    pub fn effect_bound(&self) -> f64 {
        effect_lower_bound(self.metric, self.final_ci())
    }
}

/// Smallest association strength compatible with `ci`.
///
/// Signed metrics measure distance from zero: an interval straddling zero
/// bounds the effect at 0.
pub fn effect_lower_bound(metric: Metric, ci: Interval) -> f64 {
    if !metric.is_signed() {
        ci.lo
    } else if ci.lo > 0.0 {
        ci.lo
    } else if ci.hi < 0.0 {
        -ci.hi
    } else {
        0.0
    }
}

fn z_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

fn two_sided_normal(z: f64) -> f64 {
    2.0 * Normal::standard().sf(z.abs())
}

/// Tests the measure on `view` with the configured seed.
pub fn test_metric(view: &View, measure: &Measure, cfg: &StatConfig) -> Result<TestedMetric> {
    test_sample(measure, &measure.sample(view), cfg, cfg.seed)
}

/// Tests the measure on an extracted sample.
pub fn test_sample(measure: &Measure, sample: &Sample, cfg: &StatConfig, seed: u64) -> Result<TestedMetric> {
    let value = measure.evaluate(sample)?;
    let n = sample.len();
    if measure.explanatory.is_none() && n > cfg.small_sample {
        if let Some(t) = asymptotic(measure, sample, value, cfg, seed)? {
            return Ok(t);
        }
    }
    let p = measure_permutation_p(measure, sample, cfg.n_perm, derive_seed(seed, 0))?;
    let reps = measure_bootstrap(measure, sample, cfg.n_boot, derive_seed(seed, 1))?;
    Ok(TestedMetric::new(
        measure.metric,
        value,
        n,
        p,
        TestMethod::PermutationBootstrap,
        CiBasis::Percentile(reps.into()),
        cfg.conf,
    ))
}

/// Closed-form test; `None` when the approximation does not apply.
fn asymptotic(measure: &Measure, sample: &Sample, value: f64, cfg: &StatConfig, seed: u64) -> Result<Option<TestedMetric>> {
    let n = sample.len();
    let build = |p: f64, basis: CiBasis| Some(TestedMetric::new(measure.metric, value, n, p, TestMethod::Asymptotic, basis, cfg.conf));
    match measure.metric {
        Metric::Nmi => {
            let counts = measure.cell_counts(sample).expect("categorical sample");
            let (_, _, p) = g_test_cells(counts.n_output, counts.n_protected, &counts.cells)?;
            let reps = measure_bootstrap(measure, sample, cfg.n_boot, derive_seed(seed, 1))?;
            Ok(build(p, CiBasis::Percentile(reps.into())))
        }
        Metric::Diff | Metric::Ratio => {
            let counts = measure.cell_counts(sample).expect("categorical sample");
            let cols = counts.n_protected;
            let r = measure.roles;
            let (t, a, b) = (r.target as usize, r.group_a as usize, r.group_b as usize);
            let total = |j: usize| (0..counts.n_output).map(|i| counts.cells[i * cols + j]).sum::<u64>() as f64;
            let (na, nb) = (total(a), total(b));
            let (xa, xb) = (counts.cells[t * cols + a] as f64, counts.cells[t * cols + b] as f64);
            let (pa, pb) = (xa / na, xb / nb);
            let pooled = (xa + xb) / (na + nb);
            let se0 = (pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb)).sqrt();
            let p = if se0 > 0.0 { two_sided_normal((pa - pb) / se0) } else { 1.0 };
            if measure.metric == Metric::Diff {
                let se = (pa * (1.0 - pa) / na + pb * (1.0 - pb) / nb).sqrt();
                Ok(build(p, CiBasis::Wald { se }))
            } else if xa > 0.0 && xb > 0.0 {
                let se = (1.0 / xa - 1.0 / na + 1.0 / xb - 1.0 / nb).max(0.0).sqrt();
                Ok(build(p, CiBasis::LogRatio { se }))
            } else {
                Ok(None)
            }
        }
        Metric::Corr => {
            let df = (n - 2) as f64;
            let p = if value.abs() >= 1.0 {
                0.0
            } else {
                let t = value * (df / (1.0 - value * value)).sqrt();
                2.0 * StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom").sf(t.abs())
            };
            let basis = if value.abs() >= 1.0 { CiBasis::Fixed } else { CiBasis::Fisher { n } };
            Ok(build(p, basis))
        }
        Metric::Reg => Ok(None),
    }
}

/// G-test of independence: `(G, dof, p)` with `G = 2 N MI` and dof counted over non-empty rows and columns.
pub fn g_test(table: &ContingencyTable) -> Result<(f64, usize, f64)> {
    g_test_cells(table.rows(), table.cols(), table.cells())
}

fn g_test_cells(rows: usize, cols: usize, cells: &[u64]) -> Result<(f64, usize, f64)> {
    let (mi, _, _) = mi_from_cells(rows, cols, cells)?;
    let n: u64 = cells.iter().sum();
    let nonempty_rows = (0..rows).filter(|&i| (0..cols).any(|j| cells[i * cols + j] > 0)).count();
    let nonempty_cols = (0..cols).filter(|&j| (0..rows).any(|i| cells[i * cols + j] > 0)).count();
    let dof = (nonempty_rows - 1) * (nonempty_cols - 1);
    let g = 2.0 * n as f64 * mi;
    let p = ChiSquared::new(dof as f64).expect("positive degrees of freedom").sf(g);
    Ok((g, dof, p))
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_bonferroni(pvalues: &[f64]) -> Vec<f64> {
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        running = running.max(((m - rank) as f64 * pvalues[i]).min(1.0));
        adjusted[i] = running;
    }
    adjusted
}

/// Recomputes every interval at the Bonferroni level `1 - (1 - conf) / m`.
pub fn corrected_cis(tested: &mut [TestedMetric], conf: f64) {
    let m = tested.len().max(1) as f64;
    let level = 1.0 - (1.0 - conf) / m;
    for t in tested.iter_mut() {
        t.corrected_ci = Some(t.interval_at(level));
    }
}

/// Holm-adjusted p-values plus Bonferroni intervals across one family.
pub fn apply_corrections(tested: &mut [TestedMetric], conf: f64) {
    let raw: Vec<f64> = tested.iter().map(|t| t.p_value).collect();
    for (t, p) in tested.iter_mut().zip(holm_bonferroni(&raw)) {
        t.corrected_p = Some(p);
    }
    corrected_cis(tested, conf);
}
