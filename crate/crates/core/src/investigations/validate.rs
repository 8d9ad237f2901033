use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Hypothesis, Investigation, InvestigationKind};
use crate::dataset::{Column, ContextPredicate, Dataset, View};
use crate::error::{Error, Result};
use crate::metrics::{contingency_by_index, ContingencyTable, Measure, MetricKind};
use crate::stats::{apply_corrections, derive_seed, test_sample, StatConfig, TestedMetric};

/// What is shown beneath a finding's statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Breakdown {
    /// Output by protected counts, for categorical metrics.
    Table(ContingencyTable),
    /// Output distribution per protected-attribute decile, for CORR.
    Deciles(Vec<DecileSummary>),
}

/// Five-number summary of the output over one protected-attribute bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecileSummary {
    pub protected_min: f64,
    pub protected_max: f64,
    pub n: usize,
    /// Minimum, lower quartile, median, upper quartile, maximum.
    pub output: [f64; 5],
}

/// A validated association in one context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub hypothesis: usize,
    /// Index of the context in the hypothesis's tree; 0 is the global population.
    pub node: usize,
    pub context: Vec<ContextPredicate>,
    /// Test rows in the context.
    pub size: usize,
    pub protected: String,
    pub output: String,
    pub label: Option<String>,
    pub metric: MetricKind,
    pub tested: TestedMetric,
    pub breakdown: Breakdown,
    /// Per-stratum results when conditioned on an explanatory attribute.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strata: Vec<StratumFinding>,
    /// Position in the ranked report; 0 for the global population.
    pub rank: usize,
}

impl Finding {
    pub fn is_global(&self) -> bool {
        self.context.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumFinding {
    /// Explanatory attribute value.
    pub stratum: String,
    pub size: usize,
    pub tested: TestedMetric,
    pub breakdown: Breakdown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroppedContext {
    pub hypothesis: usize,
    pub node: usize,
    pub test_size: usize,
    pub reason: String,
}

/// Corrected findings of one validation pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub findings: Vec<Finding>,
    pub dropped: Vec<DroppedContext>,
    /// Number of tests in the correction family.
    pub family_size: usize,
}

/// Tests every trained context of `inv` on `test` and corrects across the family.
///
/// Contexts other than the global population with fewer than `MIN_SIZE / 2`
/// test rows are dropped, as are contexts where the metric is undefined.
pub fn validate(inv: &Investigation, test: &View) -> Result<Validation> {
    validate_with(inv, test, inv.spec.explanatory.as_deref())
}

/// Re-validates the trained contexts of `inv` on a fresh test set, conditioned on `explanatory`.
pub fn debug_with_explanatory(inv: &Investigation, explanatory: &str, fresh_test: &View) -> Result<Vec<ReportModel>> {
    let validation = validate_with(inv, fresh_test, Some(explanatory))?;
    Ok(filter_and_rank(inv, &validation, inv.spec.stats.conf))
}

fn validate_with(inv: &Investigation, test: &View, explanatory: Option<&str>) -> Result<Validation> {
    let spec = &inv.spec;
    let data = test.data();
    let mut used = spec.used_columns(data, explanatory)?;
    for h in &inv.hypotheses {
        let o = data.attribute(&h.output).map_err(|_| {
            Error::Schema(format!("test data lacks the derived column `{}`; materialize it first", h.output))
        })?;
        used.push(o);
    }
    let (test, dropped_rows) = test.drop_missing(&used);
    if dropped_rows > 0 {
        log::info!("dropped {dropped_rows} test rows with missing values");
    }
    let e = explanatory.map(|name| data.attribute(name)).transpose()?;
    let measures = inv
        .hypotheses
        .iter()
        .map(|h| Ok((h.measure(data, spec, explanatory)?, h.measure(data, spec, None)?)))
        .collect::<Result<Vec<_>>>()?;

    let tasks: Vec<(usize, usize)> = inv
        .hypotheses
        .iter()
        .enumerate()
        .flat_map(|(h, hyp)| (0..hyp.contexts.nodes.len()).map(move |c| (h, c)))
        .collect();
    let min_test = spec.tree.min_size / 2;
    let outcomes: Vec<std::result::Result<Finding, DroppedContext>> = tasks
        .par_iter()
        .map(|&(h, c)| {
            let hyp = &inv.hypotheses[h];
            let node = &hyp.contexts.nodes[c];
            let skip = |test_size: usize, reason: String| DroppedContext {
                hypothesis: h,
                node: c,
                test_size,
                reason,
            };
            let view = test.select(&node.predicates).map_err(|err| skip(0, err.to_string()))?;
            if view.is_empty() || (c > 0 && view.len() < min_test) {
                return Err(skip(view.len(), format!("{} test rows, below {min_test}", view.len())));
            }
            let seed = derive_seed(derive_seed(spec.stats.seed, h as u64), c as u64);
            let (measure, plain) = &measures[h];
            let (tested, strata) =
                test_context(data, measure, plain, e, &view, &spec.stats, seed).map_err(|err| skip(view.len(), err.to_string()))?;
            Ok(Finding {
                hypothesis: h,
                node: c,
                context: node.predicates.clone(),
                size: view.len(),
                protected: hyp.protected.clone(),
                output: hyp.output.clone(),
                label: hyp.label.clone(),
                metric: match explanatory {
                    Some(name) => MetricKind::conditioned(hyp.metric, name),
                    None => MetricKind::plain(hyp.metric),
                },
                tested,
                breakdown: breakdown(&view, plain),
                strata,
                rank: 0,
            })
        })
        .collect();

    let mut findings = Vec::new();
    let mut dropped = Vec::new();
    for o in outcomes {
        match o {
            Ok(f) => findings.push(f),
            Err(d) => {
                log::info!("context {} of hypothesis {} dropped: {}", d.node, d.hypothesis, d.reason);
                dropped.push(d);
            }
        }
    }
    if findings.is_empty() {
        return Err(Error::EmptyTestSet);
    }

    let mut family: Vec<TestedMetric> = Vec::new();
    for f in &findings {
        family.push(f.tested.clone());
        family.extend(f.strata.iter().map(|s| s.tested.clone()));
    }
    apply_corrections(&mut family, spec.stats.conf);
    let family_size = family.len();
    let mut corrected = family.into_iter();
    for f in &mut findings {
        f.tested = corrected.next().expect("one corrected test per finding");
        for s in &mut f.strata {
            s.tested = corrected.next().expect("one corrected test per stratum");
        }
    }
    Ok(Validation {
        findings,
        dropped,
        family_size,
    })
}

/// Tests one context. A conditional measure with at least two usable strata
/// also tests each stratum on its own; with fewer, the plain measure is used.
fn test_context(
    data: &Dataset,
    measure: &Measure,
    plain: &Measure,
    e: Option<usize>,
    view: &View,
    cfg: &StatConfig,
    seed: u64,
) -> Result<(TestedMetric, Vec<StratumFinding>)> {
    let Some(e) = e else {
        return Ok((test_sample(plain, &plain.sample(view), cfg, seed)?, Vec::new()));
    };
    let sample = measure.sample(view);
    let cond = measure.conditional_pairs(&sample, (0..sample.len()).map(|i| (i, i)))?;
    let included: Vec<u32> = cond.strata.iter().filter(|s| s.included).map(|s| s.stratum).collect();
    if included.len() < 2 {
        return Ok((test_sample(plain, &plain.sample(view), cfg, seed)?, Vec::new()));
    }
    let tested = test_sample(measure, &sample, cfg, seed)?;
    let codes = data.column(e).codes().expect("categorical explanatory attribute");
    let mut strata = Vec::new();
    for k in included {
        let sub = view.filter(|r| codes[r as usize] == k);
        match test_sample(plain, &plain.sample(&sub), cfg, derive_seed(seed, 2 + u64::from(k))) {
            Ok(t) => strata.push(StratumFinding {
                stratum: data.attr(e).categories[k as usize].clone(),
                size: sub.len(),
                tested: t,
                breakdown: breakdown(&sub, plain),
            }),
            Err(err) => log::info!("stratum {} not tested: {err}", data.attr(e).categories[k as usize]),
        }
    }
    Ok((tested, strata))
}

fn breakdown(view: &View, measure: &Measure) -> Breakdown {
    if measure.metric.is_categorical() {
        let table = contingency_by_index(view, measure.protected, measure.output).expect("categorical metric on coded columns");
        return Breakdown::Table(table);
    }
    let data = view.data();
    let scalar = |col: usize, r: u32| match data.column(col) {
        Column::Continuous(v) => v[r as usize],
        Column::Coded(v) => f64::from(v[r as usize]),
        Column::Labels(_) => f64::NAN,
    };
    let pairs: Vec<(f64, f64)> = view
        .rows()
        .iter()
        .map(|&r| (scalar(measure.protected, r), scalar(measure.output, r)))
        .collect();
    Breakdown::Deciles(decile_summaries(pairs))
}

/// Output summaries over protected-attribute bins split at the deciles; tied values share a bin.
pub(crate) fn decile_summaries(mut pairs: Vec<(f64, f64)>) -> Vec<DecileSummary> {
    if pairs.is_empty() {
        return Vec::new();
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    let mut edges: Vec<f64> = (1..10).map(|k| pairs[(k * n / 10).min(n - 1)].0).collect();
    edges.push(pairs[n - 1].0);
    edges.dedup();
    let mut out = Vec::new();
    let mut start = 0;
    for edge in edges {
        let end = start + pairs[start..].partition_point(|p| p.0 <= edge);
        if end > start {
            let mut ys: Vec<f64> = pairs[start..end].iter().map(|p| p.1).collect();
            ys.sort_by(f64::total_cmp);
            out.push(DecileSummary {
                protected_min: pairs[start].0,
                protected_max: pairs[end - 1].0,
                n: end - start,
                output: [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile(&ys, q)),
            });
        }
        start = end;
    }
    out
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let (lo, frac) = (h.floor() as usize, h - h.floor());
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// What a report is about.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvestigationEcho {
    pub kind: InvestigationKind,
    pub protected: String,
    pub output: String,
    pub label: Option<String>,
    pub contextual: Vec<String>,
    pub metric: MetricKind,
}

/// Filtered and ranked findings of one hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportModel {
    pub investigation: InvestigationEcho,
    pub conf: f64,
    pub global: Finding,
    /// Significant contexts by descending effect bound.
    pub subpopulations: Vec<Finding>,
    pub family_size: usize,
}

impl ReportModel {
    pub fn global_significant(&self) -> bool {
        self.global.tested.final_p() <= 1.0 - self.conf
    }
}

/// One report per hypothesis with a validated global population.
///
/// A context is reported when its corrected p-value is at most `1 - conf`
/// and its effect bound exceeds that of every reported ancestor. Reported
/// contexts are sorted by descending effect bound.
pub fn filter_and_rank(inv: &Investigation, validation: &Validation, conf: f64) -> Vec<ReportModel> {
    let alpha = 1.0 - conf;
    let mut reports = Vec::new();
    for (h, hyp) in inv.hypotheses.iter().enumerate() {
        let mut by_node: Vec<Option<&Finding>> = vec![None; hyp.contexts.nodes.len()];
        for f in validation.findings.iter().filter(|f| f.hypothesis == h) {
            by_node[f.node] = Some(f);
        }
        let Some(global) = by_node.first().copied().flatten() else {
            log::info!("hypothesis {h} has no validated global population");
            continue;
        };
        let kept = nested_survivors(hyp, &by_node, alpha);
        let mut subpopulations: Vec<Finding> = kept.into_iter().filter(|&c| c > 0).filter_map(|c| by_node[c].cloned()).collect();
        subpopulations.sort_by(|a, b| b.tested.effect_bound().total_cmp(&a.tested.effect_bound()).then(a.node.cmp(&b.node)));
        for (i, f) in subpopulations.iter_mut().enumerate() {
            f.rank = i + 1;
        }
        reports.push(ReportModel {
            investigation: InvestigationEcho {
                kind: inv.spec.kind,
                protected: hyp.protected.clone(),
                output: hyp.output.clone(),
                label: hyp.label.clone(),
                contextual: inv.spec.contextual.clone(),
                metric: global.metric.clone(),
            },
            conf,
            global: Finding { rank: 0, ..global.clone() },
            subpopulations,
            family_size: validation.family_size,
        });
    }
    reports
}

/// Significant nodes whose effect bound beats every significant ancestor.
fn nested_survivors(hyp: &Hypothesis, by_node: &[Option<&Finding>], alpha: f64) -> Vec<usize> {
    let nodes = &hyp.contexts.nodes;
    // best effect bound among surviving ancestors, nodes being in preorder
    let mut chain = vec![f64::NEG_INFINITY; nodes.len()];
    let mut kept = Vec::new();
    for c in 0..nodes.len() {
        let inherited = nodes[c].parent.map_or(f64::NEG_INFINITY, |p| chain[p]);
        chain[c] = inherited;
        let Some(f) = by_node[c] else { continue };
        let bound = f.tested.effect_bound();
        if f.tested.final_p() <= alpha && bound > inherited {
            chain[c] = bound;
            kept.push(c);
        }
    }
    kept
}
