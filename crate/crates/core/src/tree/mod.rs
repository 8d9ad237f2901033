//! Association-guided context search.
//!
//! Starting from the whole training set, each node tries every contextual
//! attribute as a split (one part per category, or a binary threshold split
//! for numeric attributes) and keeps the split whose parts have the highest
//! mean association strength. A split qualifies only if some part is more
//! strongly associated than the node, and (unless `split_alpha` is 1) the
//! association differs significantly across its parts. Recursion stops at
//! small nodes, at the depth bound, or when no split qualifies.

mod itemsets;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub use itemsets::{exhaustive_contexts, Itemset, ItemsetSearch};

use crate::dataset::{AttributeKind, Column, ContextPredicate, Dataset, Threshold, View, MISSING};
use crate::error::{Error, Result};
use crate::metrics::{Estimate, Measure, Metric, Sample};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub min_size: usize,
    pub max_depth: usize,
    /// Threshold candidates per numeric attribute.
    pub quantiles: usize,
    /// Significance level for the across-parts heterogeneity test; 1 disables it.
    pub split_alpha: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            min_size: 100,
            max_depth: 5,
            quantiles: 8,
            split_alpha: 0.001,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_size < 10 {
            return Err(Error::InvalidParameter(format!("min size {} below 10", self.min_size)));
        }
        if self.quantiles < 2 {
            return Err(Error::InvalidParameter("at least 2 threshold quantiles are required".into()));
        }
        if !(self.split_alpha > 0.0 && self.split_alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("split alpha {} outside (0, 1]", self.split_alpha)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextNode {
    /// Conjunction defining the context; empty for the root.
    pub predicates: Vec<ContextPredicate>,
    pub train_size: usize,
    /// Training-set point estimate; `None` when undefined in this context.
    pub train_metric: Option<f64>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl ContextNode {
    pub fn depth(&self) -> usize {
        self.predicates.len()
    }
}

/// Registered contexts in depth-first preorder (root first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextTree {
    pub nodes: Vec<ContextNode>,
    /// Metric evaluations performed during the search.
    pub evaluations: usize,
}

/// One candidate split: parts in category or threshold order.
#[derive(Clone, Debug)]
pub struct Partition {
    pub attribute: usize,
    pub threshold: Option<f64>,
    pub parts: Vec<Part>,
}

#[derive(Clone, Debug)]
pub struct Part {
    pub predicate: ContextPredicate,
    /// Positions into the node's sample.
    pub positions: Vec<u32>,
}

/// Mean part strength, or 0 unless some part is stronger than the node.
///
/// Signed metrics are scored by magnitude; undefined parts contribute 0.
pub fn score_split(part_values: &[Option<f64>], metric: Metric, node_strength: f64) -> f64 {
    if part_values.is_empty() {
        return 0.0;
    }
    let strengths: Vec<f64> = part_values.iter().map(|v| v.map_or(0.0, |v| metric.strength(v))).collect();
    if !part_values.iter().flatten().any(|&v| metric.strength(v) > node_strength) {
        return 0.0;
    }
    strengths.iter().sum::<f64>() / strengths.len() as f64
}

/// Candidate partitions of `positions` (indices into `sample`) on `attribute`.
///
/// Categorical attributes give a single partition by value; numeric and
/// ordinal attributes give one binary partition per distinct within-node
/// quantile. Partitions with fewer than two parts, or with a part of fewer
/// than two rows, are dropped. Rows missing the attribute join no part.
pub fn enumerate_splits(data: &Dataset, sample: &Sample, positions: &[u32], attribute: usize, params: &TreeParams) -> Vec<Partition> {
    let attr = data.attr(attribute);
    let rows = sample.rows();
    let valid = |parts: &[Part]| parts.len() >= 2 && parts.iter().all(|p| p.positions.len() >= 2);
    match (attr.kind, data.column(attribute)) {
        (AttributeKind::Categorical, Column::Coded(codes)) => {
            let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); attr.categories.len()];
            for &p in positions {
                let c = codes[rows[p as usize] as usize];
                if c != MISSING {
                    buckets[c as usize].push(p);
                }
            }
            let parts: Vec<Part> = buckets
                .into_iter()
                .enumerate()
                .filter(|(_, b)| !b.is_empty())
                .map(|(c, b)| Part {
                    predicate: ContextPredicate::one_of(&attr.name, [attr.categories[c].clone()]),
                    positions: b,
                })
                .collect();
            if valid(&parts) {
                vec![Partition {
                    attribute,
                    threshold: None,
                    parts,
                }]
            } else {
                Vec::new()
            }
        }
        (AttributeKind::Ordinal, Column::Coded(codes)) => {
            let value = |p: u32| {
                let c = codes[rows[p as usize] as usize];
                (c != MISSING).then_some(f64::from(c))
            };
            threshold_splits(positions, value, params.quantiles)
                .into_iter()
                .map(|(t, lo, hi)| {
                    let level = Threshold::Level(attr.categories[t as usize].clone());
                    binary_partition(attribute, &attr.name, t, level, lo, hi)
                })
                .filter(|p| valid(&p.parts))
                .collect()
        }
        (AttributeKind::Continuous, Column::Continuous(values)) => {
            let value = |p: u32| {
                let v = values[rows[p as usize] as usize];
                (!v.is_nan()).then_some(v)
            };
            threshold_splits(positions, value, params.quantiles)
                .into_iter()
                .map(|(t, lo, hi)| binary_partition(attribute, &attr.name, t, Threshold::Value(t), lo, hi))
                .filter(|p| valid(&p.parts))
                .collect()
        }
        _ => Vec::new(),
    }
}

fn binary_partition(attribute: usize, name: &str, t: f64, threshold: Threshold, lo: Vec<u32>, hi: Vec<u32>) -> Partition {
    Partition {
        attribute,
        threshold: Some(t),
        parts: vec![
            Part {
                predicate: ContextPredicate::at_most(name, threshold.clone()),
                positions: lo,
            },
            Part {
                predicate: ContextPredicate::above(name, threshold),
                positions: hi,
            },
        ],
    }
}

/// `(threshold, at_most, above)` for each distinct `k / (q + 1)` quantile.
fn threshold_splits(positions: &[u32], value: impl Fn(u32) -> Option<f64>, q: usize) -> Vec<(f64, Vec<u32>, Vec<u32>)> {
    let present: Vec<(u32, f64)> = positions.iter().filter_map(|&p| value(p).map(|v| (p, v))).collect();
    if present.len() < 4 {
        return Vec::new();
    }
    let mut sorted: Vec<f64> = present.iter().map(|&(_, v)| v).collect();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let mut thresholds: Vec<f64> = (1..=q).map(|k| sorted[(k * n / (q + 1)).min(n - 1)]).collect();
    thresholds.dedup();
    thresholds
        .into_iter()
        .map(|t| {
            let (lo, hi): (Vec<(u32, f64)>, Vec<(u32, f64)>) = present.iter().partition(|&&(_, v)| v <= t);
            (t, lo.into_iter().map(|(p, _)| p).collect(), hi.into_iter().map(|(p, _)| p).collect())
        })
        .collect()
}

/// Whether the association differs across `parts` beyond sampling noise.
///
/// Signed metrics use Cochran's Q over inverse-variance weights; NMI uses the
/// increase of the G statistic over the node's.
fn parts_differ(parts: &[Estimate], node: &Estimate, metric: Metric, alpha: f64) -> bool {
    if alpha >= 1.0 {
        return true;
    }
    let sf = |stat: f64, df: usize| ChiSquared::new(df.max(1) as f64).expect("positive dof").sf(stat);
    if metric == Metric::Nmi {
        let g: f64 = parts.iter().map(|p| p.g).sum::<f64>() - node.g;
        let df = parts.iter().map(|p| p.dof).sum::<usize>().saturating_sub(node.dof);
        return g > 0.0 && sf(g, df) < alpha;
    }
    let valid: Vec<(f64, f64)> = parts
        .iter()
        .filter_map(|p| p.value.filter(|_| p.variance.is_finite() && p.variance > 0.0).map(|v| (v, 1.0 / p.variance)))
        .collect();
    if valid.len() < 2 {
        return false;
    }
    let wsum: f64 = valid.iter().map(|(_, w)| w).sum();
    let mean = valid.iter().map(|(v, w)| v * w).sum::<f64>() / wsum;
    let q: f64 = valid.iter().map(|(v, w)| w * (v - mean).powi(2)).sum();
    sf(q, valid.len() - 1) < alpha
}

struct Subtree {
    predicates: Vec<ContextPredicate>,
    size: usize,
    metric: Option<f64>,
    children: Vec<Subtree>,
    evaluations: usize,
}

struct Search<'a> {
    data: &'a Dataset,
    sample: &'a Sample,
    measure: &'a Measure,
    contextual: &'a [usize],
    params: &'a TreeParams,
}

impl Search<'_> {
    fn grow(&self, positions: Vec<u32>, predicates: Vec<ContextPredicate>, estimate: Estimate) -> Subtree {
        let mut node = Subtree {
            size: positions.len(),
            predicates,
            metric: estimate.value,
            children: Vec::new(),
            evaluations: 0,
        };
        if positions.len() < self.params.min_size || node.predicates.len() >= self.params.max_depth {
            return node;
        }
        let m = self.measure.metric;
        let strength = estimate.value.map_or(0.0, |v| m.strength(v));
        let candidates: Vec<Partition> = self
            .contextual
            .iter()
            .flat_map(|&a| enumerate_splits(self.data, self.sample, &positions, a, self.params))
            .collect();
        let scored: Vec<(f64, Vec<Estimate>)> = candidates
            .par_iter()
            .map(|c| {
                let parts: Vec<Estimate> = c
                    .parts
                    .iter()
                    .map(|p| self.measure.estimate_positions(self.sample, &p.positions))
                    .collect();
                let values: Vec<Option<f64>> = parts.iter().map(|e| e.value).collect();
                let score = score_split(&values, m, strength);
                let admissible = score > 0.0 && parts_differ(&parts, &estimate, m, self.params.split_alpha);
                (if admissible { score } else { 0.0 }, parts)
            })
            .collect();
        node.evaluations = scored.iter().map(|(_, p)| p.len()).sum();
        // candidates are in attribute then threshold order, so the first maximum wins ties
        let mut best: Option<usize> = None;
        for (i, (score, _)) in scored.iter().enumerate() {
            if *score > 0.0 && best.is_none_or(|b| *score > scored[b].0) {
                best = Some(i);
            }
        }
        let Some(best) = best else {
            return node;
        };
        let Partition { parts, .. } = candidates.into_iter().nth(best).expect("best index in range");
        let estimates = &scored[best].1;
        node.children = parts
            .into_par_iter()
            .zip(estimates.par_iter())
            .filter(|(p, _)| p.positions.len() >= self.params.min_size)
            .map(|(p, &e)| {
                let mut preds = node.predicates.clone();
                preds.push(p.predicate);
                self.grow(p.positions, preds, e)
            })
            .collect();
        node
    }
}

/// Guided search for contexts with strong associations on the training view.
pub fn find_contexts(train: &View, measure: &Measure, contextual: &[usize], params: &TreeParams) -> Result<ContextTree> {
    params.validate()?;
    let sample = measure.sample(train);
    measure.evaluate(&sample)?;
    let all: Vec<u32> = (0..sample.len() as u32).collect();
    let root_estimate = measure.estimate_positions(&sample, &all);
    let search = Search {
        data: train.data(),
        sample: &sample,
        measure,
        contextual,
        params,
    };
    let root = search.grow(all, Vec::new(), root_estimate);
    let mut tree = ContextTree {
        nodes: Vec::new(),
        evaluations: 1,
    };
    flatten(root, None, &mut tree);
    Ok(tree)
}

fn flatten(node: Subtree, parent: Option<usize>, tree: &mut ContextTree) {
    let index = tree.nodes.len();
    tree.evaluations += node.evaluations;
    tree.nodes.push(ContextNode {
        predicates: node.predicates,
        train_size: node.size,
        train_metric: node.metric,
        parent,
        children: Vec::new(),
    });
    if let Some(p) = parent {
        tree.nodes[p].children.push(index);
    }
    for child in node.children {
        flatten(child, Some(index), tree);
    }
}
