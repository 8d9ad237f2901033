use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeSchema, Column, ContextPredicate, Dataset, Role, View};
use crate::error::Result;
use crate::metrics::Measure;
use crate::tree::{exhaustive_contexts, find_contexts, TreeParams};

pub const TREE_BENCH_ATTRIBUTES: usize = 15;

/// Population for comparing guided and exhaustive context search.
///
/// Fifteen fair binary contextual attributes `X01..X15`, a fair binary
/// protected `Group` and a `{0, 1}` output. Three disjoint contexts,
/// `X01=1 ∧ X02=1`, `X01=0 ∧ X03=1` and `X01=0 ∧ X03=0 ∧ X04=1`, carry
/// `Pr(output = 1 | Group = b) = 0.8` and `Pr(output = 1 | Group = a) = 0.2`;
/// everyone else gets a fair coin.
pub fn tree_benchmark(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<Vec<u32>> = vec![Vec::with_capacity(n); TREE_BENCH_ATTRIBUTES];
    let mut group = Vec::with_capacity(n);
    let mut output = Vec::with_capacity(n);
    let mut row = [false; TREE_BENCH_ATTRIBUTES];
    for _ in 0..n {
        for (v, x) in row.iter_mut().zip(xs.iter_mut()) {
            *v = rng.random_bool(0.5);
            x.push(u32::from(*v));
        }
        let hot = (row[0] && row[1]) || (!row[0] && row[2]) || (!row[0] && !row[2] && row[3]);
        let g = rng.random_bool(0.5);
        let delta = if hot { 0.3 } else { 0.0 };
        let p = if g { 0.5 + delta } else { 0.5 - delta };
        group.push(u32::from(g));
        output.push(u32::from(rng.random_bool(p)));
    }
    let mut schema: Vec<AttributeSchema> = (1..=TREE_BENCH_ATTRIBUTES)
        .map(|j| AttributeSchema::categorical(format!("X{j:02}"), Role::Contextual, ["0", "1"]))
        .collect();
    schema.push(AttributeSchema::categorical("Group", Role::Protected, ["a", "b"]));
    schema.push(AttributeSchema::categorical("Output", Role::Output, ["0", "1"]));
    let mut columns: Vec<Column> = xs.into_iter().map(Column::Coded).collect();
    columns.push(Column::Coded(group));
    columns.push(Column::Coded(output));
    Dataset::new(schema, columns).expect("consistent generated columns")
}

/// Outcome of one context-search strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub strategy: String,
    /// Metric evaluations spent on the training view.
    pub candidates_considered: usize,
    /// Mean held-out association strength of the three contexts strongest on training.
    pub top3_mean_association: f64,
}

/// Runs the guided tree and the exhaustive itemset baseline on `train`, and
/// scores each strategy's top three contexts (root excluded) on `test`.
pub fn tree_vs_itemsets(train: &View, test: &View, measure: &Measure, contextual: &[usize], params: &TreeParams) -> Result<[SearchOutcome; 2]> {
    let tree = find_contexts(train, measure, contextual, params)?;
    let tree_candidates: Vec<_> = tree.nodes.iter().skip(1).map(|n| (n.predicates.clone(), n.train_metric)).collect();
    let items = exhaustive_contexts(train, measure, contextual, params.min_size, params.max_depth)?;
    let item_candidates: Vec<_> = items.itemsets.iter().skip(1).map(|i| (i.predicates.clone(), i.train_metric)).collect();
    let score = |candidates: Vec<(Vec<ContextPredicate>, Option<f64>)>| -> Result<f64> {
        let mut ranked: Vec<_> = candidates
            .into_iter()
            .filter_map(|(p, m)| m.map(|m| (measure.metric.strength(m), p)))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut total = 0.0;
        let mut k = 0;
        for (_, preds) in ranked.iter().take(3) {
            let view = test.select(preds)?;
            if let Ok(v) = measure.evaluate(&measure.sample(&view)) {
                total += measure.metric.strength(v);
            }
            k += 1;
        }
        Ok(if k == 0 { 0.0 } else { total / k as f64 })
    };
    Ok([
        SearchOutcome {
            strategy: "tree".into(),
            candidates_considered: tree.evaluations,
            top3_mean_association: score(tree_candidates)?,
        },
        SearchOutcome {
            strategy: "itemsets".into(),
            candidates_considered: items.evaluations,
            top3_mean_association: score(item_candidates)?,
        },
    ])
}
