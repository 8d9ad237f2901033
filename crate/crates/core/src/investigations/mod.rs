//! Testing, Discovery and ErrorProfiling investigations.
//!
//! An investigation runs in three steps: [`train`] grows a context tree per
//! hypothesis on the training set, [`validate`] tests every candidate
//! context on a held-out test set and corrects across the whole family,
//! and [`filter_and_rank`] turns the findings into one [`ReportModel`] per
//! hypothesis. [`debug_with_explanatory`] re-validates the same contexts on
//! a fresh test set, conditioned on an explanatory attribute.

mod derive;
mod validate;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use derive::{compute_error, indicator_name, ErrorKind};
pub use validate::{
    debug_with_explanatory, filter_and_rank, validate, Breakdown, DecileSummary, DroppedContext, Finding, InvestigationEcho,
    ReportModel, StratumFinding, Validation,
};

use crate::dataset::{AttributeKind, AttributeSchema, DataSource, Dataset, View};
use crate::error::{Error, Result};
use crate::metrics::{logistic_label_scores, Measure, Metric, DEFAULT_L2};
use crate::stats::StatConfig;
use crate::tree::{find_contexts, ContextTree, TreeParams};

pub const DEFAULT_TOP_K: usize = 35;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvestigationKind {
    Testing,
    Discovery,
    ErrorProfiling,
}

impl InvestigationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InvestigationKind::Testing => "Testing",
            InvestigationKind::Discovery => "Discovery",
            InvestigationKind::ErrorProfiling => "ErrorProfiling",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvestigationSpec {
    pub kind: InvestigationKind,
    pub protected: Vec<String>,
    pub contextual: Vec<String>,
    pub explanatory: Option<String>,
    pub output: String,
    /// Chosen from the attribute kinds when absent.
    pub metric: Option<Metric>,
    /// Output category counted by DIFF and RATIO.
    pub target: Option<String>,
    /// Protected categories compared by DIFF and RATIO, as `(a, b)`.
    pub groups: Option<(String, String)>,
    pub top_k: usize,
    pub ground_truth: Option<String>,
    /// Defaults to absolute error for continuous outputs and zero-one loss otherwise.
    pub error_kind: Option<ErrorKind>,
    pub tree: TreeParams,
    pub stats: StatConfig,
}

impl InvestigationSpec {
    fn new<S: Into<String>>(kind: InvestigationKind, protected: impl IntoIterator<Item = S>, output: impl Into<String>) -> Self {
        Self {
            kind,
            protected: protected.into_iter().map(Into::into).collect(),
            contextual: Vec::new(),
            explanatory: None,
            output: output.into(),
            metric: None,
            target: None,
            groups: None,
            top_k: DEFAULT_TOP_K,
            ground_truth: None,
            error_kind: None,
            tree: TreeParams::default(),
            stats: StatConfig::default(),
        }
    }

    pub fn testing<S: Into<String>>(protected: impl IntoIterator<Item = S>, output: impl Into<String>) -> Self {
        Self::new(InvestigationKind::Testing, protected, output)
    }

    pub fn discovery<S: Into<String>>(protected: impl IntoIterator<Item = S>, output: impl Into<String>, top_k: usize) -> Self {
        Self {
            top_k,
            ..Self::new(InvestigationKind::Discovery, protected, output)
        }
    }

    pub fn error_profiling<S: Into<String>>(
        protected: impl IntoIterator<Item = S>,
        output: impl Into<String>,
        ground_truth: impl Into<String>,
    ) -> Self {
        Self {
            ground_truth: Some(ground_truth.into()),
            ..Self::new(InvestigationKind::ErrorProfiling, protected, output)
        }
    }

    pub fn with_context<S: Into<String>>(mut self, contextual: impl IntoIterator<Item = S>) -> Self {
        self.contextual = contextual.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_explanatory(mut self, explanatory: impl Into<String>) -> Self {
        self.explanatory = Some(explanatory.into());
        self
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = Some(metric);
        self
    }

    pub fn with_tree(mut self, tree: TreeParams) -> Self {
        self.tree = tree;
        self
    }

    pub fn with_stats(mut self, stats: StatConfig) -> Self {
        self.stats = stats;
        self
    }

    /// Checks the spec against a schema.
    pub fn check(&self, data: &Dataset) -> Result<()> {
        self.tree.validate()?;
        self.stats.validate()?;
        if self.protected.is_empty() {
            return Err(Error::InvalidParameter("at least one protected attribute is required".into()));
        }
        let out = data.attr(data.attribute(&self.output)?);
        for s in &self.protected {
            if *s == self.output {
                return Err(Error::InvalidParameter(format!("`{s}` cannot be both protected and output")));
            }
            data.attribute(s)?;
        }
        for x in &self.contextual {
            if data.attr(data.attribute(x)?).kind == AttributeKind::Labels {
                return Err(Error::InvalidParameter(format!("label-set attribute `{x}` cannot be contextual")));
            }
        }
        if let Some(e) = &self.explanatory {
            if !data.attr(data.attribute(e)?).kind.is_coded() {
                return Err(Error::MetricMismatch(format!("explanatory attribute `{e}` must be categorical")));
            }
        }
        if self.metric == Some(Metric::Reg) {
            return Err(Error::MetricMismatch("REG only ranks labels inside a Discovery investigation".into()));
        }
        match self.kind {
            InvestigationKind::Testing => {
                if out.kind == AttributeKind::Labels {
                    return Err(Error::MetricMismatch(format!(
                        "output `{}` is a label set; use a Discovery investigation",
                        out.name
                    )));
                }
            }
            InvestigationKind::Discovery => {
                if out.kind != AttributeKind::Labels {
                    return Err(Error::MetricMismatch(format!("Discovery needs a label-set output, `{}` is {}", out.name, out.kind.as_str())));
                }
                if self.top_k == 0 {
                    return Err(Error::InvalidParameter("top_k must be at least 1".into()));
                }
                for s in &self.protected {
                    if !data.attr(data.attribute(s)?).is_binary() {
                        return Err(Error::MetricMismatch(format!("Discovery needs binary protected attributes, `{s}` is not")));
                    }
                }
                if matches!(self.metric, Some(Metric::Corr)) {
                    return Err(Error::MetricMismatch("label indicators are tested with DIFF, RATIO or NMI".into()));
                }
            }
            InvestigationKind::ErrorProfiling => {
                let truth = self
                    .ground_truth
                    .as_deref()
                    .ok_or_else(|| Error::InvalidParameter("ErrorProfiling needs a ground-truth column".into()))?;
                let ta = data.attr(data.attribute(truth)?);
                let same = (out.kind == AttributeKind::Continuous) == (ta.kind == AttributeKind::Continuous)
                    && out.kind != AttributeKind::Labels
                    && ta.kind != AttributeKind::Labels;
                if !same {
                    return Err(Error::TypeMismatch(format!(
                        "ground truth `{}` ({}) does not match output `{}` ({})",
                        ta.name,
                        ta.kind.as_str(),
                        out.name,
                        out.kind.as_str()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Columns whose missing values exclude a row from the investigation.
    fn used_columns(&self, data: &Dataset, explanatory: Option<&str>) -> Result<Vec<usize>> {
        let mut names: Vec<&str> = self.protected.iter().chain(&self.contextual).map(String::as_str).collect();
        names.push(&self.output);
        names.extend(self.ground_truth.as_deref());
        names.extend(explanatory);
        let mut cols = names.into_iter().map(|n| data.attribute(n)).collect::<Result<Vec<_>>>()?;
        cols.sort_unstable();
        cols.dedup();
        Ok(cols)
    }
}

/// Metric implied by the attribute kinds: DIFF for two binary attributes,
/// NMI for categorical ones, CORR for scalars.
pub fn select_metric(protected: &AttributeSchema, output: &AttributeSchema) -> Result<Metric> {
    let scalar = |a: &AttributeSchema| a.kind == AttributeKind::Continuous || a.is_binary();
    if protected.is_binary() && output.is_binary() {
        Ok(Metric::Diff)
    } else if protected.kind.is_coded() && output.kind.is_coded() {
        Ok(Metric::Nmi)
    } else if scalar(protected) && scalar(output) {
        Ok(Metric::Corr)
    } else {
        Err(Error::MetricMismatch(format!(
            "no metric relates protected `{}` ({}) and output `{}` ({})",
            protected.name,
            protected.kind.as_str(),
            output.name,
            output.kind.as_str()
        )))
    }
}

/// One protected attribute tested against one output (or one label).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub protected: String,
    /// Tested column; derived for error profiles and Discovery labels.
    pub output: String,
    pub label: Option<String>,
    /// Regression score `|beta| / stderr` that selected the label.
    pub label_score: Option<f64>,
    pub metric: Metric,
    pub contexts: ContextTree,
}

impl Hypothesis {
    /// Measure for this hypothesis over `data`, optionally conditioned.
    pub fn measure(&self, data: &Dataset, spec: &InvestigationSpec, explanatory: Option<&str>) -> Result<Measure> {
        let m = Measure::new(data, self.metric, &self.protected, &self.output, explanatory)?;
        if !self.metric.is_categorical() || self.metric == Metric::Nmi {
            return Ok(m);
        }
        let target = if self.label.is_none() { spec.target.as_deref() } else { None };
        let groups = spec.groups.as_ref().map(|(a, b)| (a.as_str(), b.as_str()));
        m.with_roles(data, target, groups)
    }
}

/// Trained state: the candidate contexts of every hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Investigation {
    pub spec: InvestigationSpec,
    pub hypotheses: Vec<Hypothesis>,
}

impl Investigation {
    /// `data` plus the derived columns the hypotheses test (error column, label indicators).
    pub fn materialize(&self, data: &Dataset) -> Result<Arc<Dataset>> {
        let mut out = with_error_column(&self.spec, data)?;
        let labels: Vec<&str> = self.hypotheses.iter().filter_map(|h| h.label.as_deref()).collect();
        out = with_indicators(out, &self.spec.output, &labels)?;
        Ok(Arc::new(out))
    }
}

fn with_error_column(spec: &InvestigationSpec, data: &Dataset) -> Result<Dataset> {
    if spec.kind != InvestigationKind::ErrorProfiling {
        return Ok(data.clone());
    }
    let truth = spec.ground_truth.as_deref().unwrap_or_default();
    let name = format!("{}_error", spec.output);
    if data.attribute(&name).is_ok() {
        return Ok(data.clone());
    }
    let out_kind = data.attr(data.attribute(&spec.output)?).kind;
    let kind = spec.error_kind.unwrap_or_else(|| ErrorKind::for_kind(out_kind));
    let (attr, col) = compute_error(data, &spec.output, truth, kind)?;
    data.with_column(attr, col)
}

fn with_indicators(mut data: Dataset, output: &str, labels: &[&str]) -> Result<Dataset> {
    let o = data.attribute(output)?;
    for label in labels {
        if data.attribute(&indicator_name(output, label)).is_err() {
            let (attr, col) = derive::label_indicator(&data, o, label)?;
            data = data.with_column(attr, col)?;
        }
    }
    Ok(data)
}

/// Grows candidate contexts for every hypothesis on the source's training set.
///
/// The source's dataset is replaced by one carrying the derived columns, so
/// later test sets can be validated directly.
pub fn train(spec: &InvestigationSpec, source: &mut DataSource) -> Result<Investigation> {
    spec.check(source.data())?;
    let data = with_error_column(spec, source.data())?;
    let output = match spec.kind {
        InvestigationKind::ErrorProfiling => format!("{}_error", spec.output),
        _ => spec.output.clone(),
    };
    let used = spec.used_columns(&data, spec.explanatory.as_deref())?;
    let data = Arc::new(data);
    source.replace_data(data.clone())?;
    let (train, dropped) = source.train().drop_missing(&used);
    if dropped > 0 {
        log::info!("dropped {dropped} training rows with missing values");
    }

    let mut plans: Vec<(String, String, Option<(String, f64)>, Metric)> = Vec::new();
    for s in &spec.protected {
        let sa = data.attr(data.attribute(s)?);
        if spec.kind == InvestigationKind::Discovery {
            let metric = spec.metric.unwrap_or(Metric::Diff);
            for (label, score) in top_labels(&train, s, &spec.output, spec.top_k)? {
                plans.push((s.clone(), indicator_name(&spec.output, &label), Some((label, score)), metric));
            }
        } else {
            let metric = match spec.metric {
                Some(m) => m,
                None => select_metric(sa, data.attr(data.attribute(&output)?))?,
            };
            plans.push((s.clone(), output.clone(), None, metric));
        }
    }

    let labels: Vec<&str> = plans.iter().filter_map(|p| p.2.as_ref().map(|(l, _)| l.as_str())).collect();
    let data = Arc::new(with_indicators((*data).clone(), &spec.output, &labels)?);
    source.replace_data(data.clone())?;
    let train = train.rebase(data.clone())?;

    let contextual = spec.contextual.iter().map(|x| data.attribute(x)).collect::<Result<Vec<_>>>()?;
    let mut hypotheses = Vec::with_capacity(plans.len());
    for (protected, output, label, metric) in plans {
        let mut h = Hypothesis {
            protected,
            output,
            label_score: label.as_ref().map(|l| l.1),
            label: label.map(|l| l.0),
            metric,
            contexts: ContextTree {
                nodes: Vec::new(),
                evaluations: 0,
            },
        };
        let measure = h.measure(&data, spec, spec.explanatory.as_deref())?;
        h.contexts = find_contexts(&train, &measure, &contextual, &spec.tree)?;
        log::info!(
            "{} on {}: {} candidate contexts from {} evaluations",
            h.output,
            h.protected,
            h.contexts.nodes.len(),
            h.contexts.evaluations
        );
        hypotheses.push(h);
    }
    Ok(Investigation {
        spec: spec.clone(),
        hypotheses,
    })
}

/// The `top_k` labels most associated with `protected` over the whole view, by regression score.
fn top_labels(view: &View, protected: &str, output: &str, top_k: usize) -> Result<Vec<(String, f64)>> {
    let data = view.data();
    let (s, o) = (data.attribute(protected)?, data.attribute(output)?);
    let codes = data.column(s).codes().expect("binary protected attribute");
    let sets = data.column(o).label_sets().expect("label-set output");
    let rows = view.rows();
    let labels: Vec<Vec<u32>> = rows.iter().map(|&r| sets[r as usize].clone().unwrap_or_default()).collect();
    let groups: Vec<bool> = rows.iter().map(|&r| codes[r as usize] == 1).collect();
    let names = &data.attr(o).categories;
    let fit = logistic_label_scores(&labels, names, &groups, DEFAULT_L2)?;
    let scores = fit.scores();
    Ok(fit
        .ranking()
        .into_iter()
        .take(top_k)
        .map(|i| (names[i].clone(), scores[i]))
        .collect())
}

/// Trains, validates on the next test set, and reports.
pub fn run(spec: &InvestigationSpec, source: &mut DataSource) -> Result<(Investigation, Vec<ReportModel>)> {
    let inv = train(spec, source)?;
    let test = source.next_test_set()?;
    let validation = validate(&inv, &test)?;
    let reports = filter_and_rank(&inv, &validation, spec.stats.conf);
    Ok((inv, reports))
}

#[cfg(test)]
mod tests;
