use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeKind, ContextPredicate, Dataset, View, MISSING};
use crate::error::{Error, Result};
use crate::metrics::{Measure, Sample};

/// A conjunction of `attribute = value` items and its training association.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Itemset {
    pub predicates: Vec<ContextPredicate>,
    pub train_size: usize,
    pub train_metric: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemsetSearch {
    /// Every frequent itemset, the empty one first.
    pub itemsets: Vec<Itemset>,
    /// One metric evaluation per itemset.
    pub evaluations: usize,
}

/// Unguided baseline: every conjunction of at most `max_depth` categorical
/// items (one per attribute) supported by at least `min_size` training rows.
pub fn exhaustive_contexts(train: &View, measure: &Measure, contextual: &[usize], min_size: usize, max_depth: usize) -> Result<ItemsetSearch> {
    let data = train.data();
    for &a in contextual {
        if data.attr(a).kind != AttributeKind::Categorical {
            return Err(Error::InvalidParameter(format!(
                "itemset enumeration needs categorical attributes, `{}` is {}",
                data.attr(a).name,
                data.attr(a).kind.as_str()
            )));
        }
    }
    let sample = measure.sample(train);
    let all: Vec<u32> = (0..sample.len() as u32).collect();
    let root = Itemset {
        predicates: Vec::new(),
        train_size: all.len(),
        train_metric: measure.evaluate(&sample).ok(),
    };
    let mut itemsets = vec![root];
    if max_depth > 0 && all.len() >= min_size {
        let enumerate = Enumerate {
            data,
            sample: &sample,
            measure,
            contextual,
            min_size,
            max_depth,
        };
        let nested: Vec<Vec<Itemset>> = (0..contextual.len())
            .into_par_iter()
            .map(|i| {
                let mut out = Vec::new();
                enumerate.extend_with(i, &all, &[], &mut out);
                out
            })
            .collect();
        itemsets.extend(nested.into_iter().flatten());
    }
    Ok(ItemsetSearch {
        evaluations: itemsets.len(),
        itemsets,
    })
}

struct Enumerate<'a> {
    data: &'a Dataset,
    sample: &'a Sample,
    measure: &'a Measure,
    contextual: &'a [usize],
    min_size: usize,
    max_depth: usize,
}

impl Enumerate<'_> {
    /// Adds items on attribute `contextual[i]` to `prefix`, then recurses on later attributes.
    fn extend_with(&self, i: usize, positions: &[u32], prefix: &[ContextPredicate], out: &mut Vec<Itemset>) {
        let a = self.contextual[i];
        let attr = self.data.attr(a);
        let codes = self.data.column(a).codes().expect("categorical column");
        let rows = self.sample.rows();
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); attr.categories.len()];
        for &p in positions {
            let c = codes[rows[p as usize] as usize];
            if c != MISSING {
                buckets[c as usize].push(p);
            }
        }
        for (c, bucket) in buckets.iter().enumerate() {
            if bucket.len() < self.min_size {
                continue;
            }
            let mut preds = prefix.to_vec();
            preds.push(ContextPredicate::one_of(&attr.name, [attr.categories[c].clone()]));
            out.push(Itemset {
                predicates: preds.clone(),
                train_size: bucket.len(),
                train_metric: self.measure.evaluate_positions(self.sample, bucket).ok(),
            });
            if preds.len() < self.max_depth {
                for j in i + 1..self.contextual.len() {
                    self.extend_with(j, bucket, &preds, out);
                }
            }
        }
    }
}
