//! Synthetic populations with planted disparities, and detection scoring.
//!
//! A population draws independent categorical contextual attributes and a
//! binary protected attribute, then gives every user a fair-coin `{0, 1}`
//! output. Each plant overrides the coin inside its context so that
//! `Pr(output = 1 | S = 1) = 0.5 + Δ` and `Pr(output = 1 | S = 0) = 0.5 - Δ`.

mod berkeley;
mod tree_bench;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use berkeley::{berkeley, BERKELEY_COUNTS};
pub use tree_bench::{tree_benchmark, tree_vs_itemsets, SearchOutcome, TREE_BENCH_ATTRIBUTES};

use crate::dataset::{make_datasource, AttributeSchema, Column, ContextPredicate, Dataset, PredicateOp, Role, View};
use crate::error::{Error, Result};
use crate::investigations::{run, InvestigationSpec, ReportModel};
use crate::metrics::Metric;
use crate::stats::{derive_seed, StatConfig};
use crate::tree::TreeParams;

/// A categorical attribute with its category probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalSpec {
    pub name: String,
    pub categories: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl CategoricalSpec {
    pub fn new<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>, probabilities: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            categories: categories.into_iter().map(Into::into).collect(),
            probabilities,
        }
    }

    pub fn uniform<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        let categories: Vec<String> = categories.into_iter().map(Into::into).collect();
        let p = 1.0 / categories.len() as f64;
        Self {
            probabilities: vec![p; categories.len()],
            name: name.into(),
            categories,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.categories.is_empty() || self.categories.len() != self.probabilities.len() {
            return Err(Error::InvalidParameter(format!(
                "`{}` needs one probability per category ({} categories, {} probabilities)",
                self.name,
                self.categories.len(),
                self.probabilities.len()
            )));
        }
        let sum: f64 = self.probabilities.iter().sum();
        if self.probabilities.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("probabilities of `{}` must be non-negative and sum to 1 (sum {sum})", self.name)));
        }
        let distinct: BTreeSet<&String> = self.categories.iter().collect();
        if distinct.len() != self.categories.len() {
            return Err(Error::InvalidParameter(format!("`{}` lists a category twice", self.name)));
        }
        Ok(())
    }

    fn index(&self, value: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == value)
    }
}

pub const STATES: [&str; 50] = [
    "AL", "AK", "AZ", "AR", "CA", "CO", "CT", "DE", "FL", "GA", "HI", "ID", "IL", "IN", "IA", "KS", "KY", "LA", "ME", "MD", "MA", "MI", "MN", "MS", "MO",
    "MT", "NE", "NV", "NH", "NJ", "NM", "NY", "NC", "ND", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub n: usize,
    pub contextual: Vec<CategoricalSpec>,
    /// Binary; its second category is `S = 1`.
    pub protected: CategoricalSpec,
    /// Name of the `{0, 1}` output column.
    pub output: String,
}

impl PopulationSpec {
    /// 50 equally likely states, 5 races, binary gender and binary income (protected).
    pub fn census_like(n: usize) -> Self {
        Self {
            n,
            contextual: vec![
                CategoricalSpec::uniform("State", STATES),
                CategoricalSpec::new("Race", ["White", "Hispanic", "Black", "Asian", "Other"], vec![0.55, 0.2, 0.1, 0.1, 0.05]),
                CategoricalSpec::uniform("Gender", ["F", "M"]),
            ],
            protected: CategoricalSpec::uniform("Income", ["<50K", ">=50K"]),
            output: "Output".into(),
        }
    }

    pub fn contextual_names(&self) -> Vec<String> {
        self.contextual.iter().map(|a| a.name.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for a in self.contextual.iter().chain([&self.protected]) {
            a.validate()?;
        }
        if self.protected.categories.len() != 2 {
            return Err(Error::InvalidParameter(format!("protected attribute `{}` must be binary", self.protected.name)));
        }
        let mut names: BTreeSet<&str> = BTreeSet::new();
        for name in self.contextual.iter().map(|a| a.name.as_str()).chain([self.protected.name.as_str(), self.output.as_str()]) {
            if !names.insert(name) {
                return Err(Error::InvalidParameter(format!("attribute name `{name}` used twice")));
            }
        }
        Ok(())
    }

    /// Allowed categories per contextual attribute (`None` = unconstrained).
    fn constraints(&self, plant: &PlantSpec) -> Result<Vec<Option<Vec<bool>>>> {
        let mut out: Vec<Option<Vec<bool>>> = vec![None; self.contextual.len()];
        for p in &plant.predicates {
            let PredicateOp::OneOf { values } = &p.op else {
                return Err(Error::InvalidParameter(format!("plant predicate on `{}` must be a category list", p.attribute)));
            };
            let a = self
                .contextual
                .iter()
                .position(|c| c.name == p.attribute)
                .ok_or_else(|| Error::InvalidParameter(format!("plant refers to unknown contextual attribute `{}`", p.attribute)))?;
            let spec = &self.contextual[a];
            let mut allowed = vec![false; spec.categories.len()];
            for v in values {
                let k = spec
                    .index(v)
                    .ok_or_else(|| Error::InvalidParameter(format!("`{v}` is not a category of `{}`", spec.name)))?;
                allowed[k] = true;
            }
            out[a] = Some(match out[a].take() {
                Some(prev) => prev.iter().zip(&allowed).map(|(a, b)| *a && *b).collect(),
                None => allowed,
            });
        }
        Ok(out)
    }
}

/// A planted disparity of half-size `delta` inside a context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub predicates: Vec<ContextPredicate>,
    pub delta: f64,
}

/// Expected number of users inside `plant`.
pub fn expected_size(pop: &PopulationSpec, plant: &PlantSpec) -> Result<f64> {
    let constraints = pop.constraints(plant)?;
    let share: f64 = pop
        .contextual
        .iter()
        .zip(&constraints)
        .map(|(a, c)| match c {
            None => 1.0,
            Some(allowed) => a.probabilities.iter().zip(allowed).filter(|(_, &ok)| ok).map(|(p, _)| p).sum(),
        })
        .product();
    Ok(pop.n as f64 * share)
}

fn disjoint(a: &[Option<Vec<bool>>], b: &[Option<Vec<bool>>]) -> bool {
    a.iter().zip(b).any(|pair| match pair {
        (Some(x), Some(y)) => !x.iter().zip(y).any(|(p, q)| *p && *q),
        (Some(x), None) | (None, Some(x)) => !x.iter().any(|&v| v),
        (None, None) => false,
    })
}

/// Draws a population with the given plants.
///
/// Fails if the plants are not pairwise disjoint.
pub fn generate(pop: &PopulationSpec, plants: &[PlantSpec], seed: u64) -> Result<Dataset> {
    pop.validate()?;
    let constraints = plants.iter().map(|p| pop.constraints(p)).collect::<Result<Vec<_>>>()?;
    for (i, p) in plants.iter().enumerate() {
        if !(0.0..=0.5).contains(&p.delta) {
            return Err(Error::InvalidParameter(format!("plant delta {} outside [0, 0.5]", p.delta)));
        }
        for j in 0..i {
            if !disjoint(&constraints[i], &constraints[j]) {
                return Err(Error::InvalidParameter(format!("plants {j} and {i} overlap")));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = |a: &CategoricalSpec| WeightedIndex::new(&a.probabilities).map_err(|e| Error::InvalidParameter(format!("`{}`: {e}", a.name)));
    let dists = pop.contextual.iter().map(weights).collect::<Result<Vec<_>>>()?;
    let p_high = pop.protected.probabilities[1];

    let mut ctx: Vec<Vec<u32>> = vec![Vec::with_capacity(pop.n); pop.contextual.len()];
    let mut protected = Vec::with_capacity(pop.n);
    let mut output = Vec::with_capacity(pop.n);
    let mut row = vec![0usize; pop.contextual.len()];
    for _ in 0..pop.n {
        for (a, d) in dists.iter().enumerate() {
            row[a] = d.sample(&mut rng);
            ctx[a].push(row[a] as u32);
        }
        let s = rng.random_bool(p_high);
        protected.push(u32::from(s));
        let delta = constraints
            .iter()
            .position(|c| c.iter().zip(&row).all(|(allowed, &v)| allowed.as_ref().is_none_or(|m| m[v])))
            .map_or(0.0, |k| plants[k].delta);
        let p_one = if s { 0.5 + delta } else { 0.5 - delta };
        output.push(u32::from(rng.random_bool(p_one)));
    }

    let mut schema: Vec<AttributeSchema> = pop
        .contextual
        .iter()
        .map(|a| AttributeSchema::categorical(a.name.clone(), Role::Contextual, a.categories.clone()))
        .collect();
    schema.push(AttributeSchema::categorical(pop.protected.name.clone(), Role::Protected, pop.protected.categories.clone()));
    schema.push(AttributeSchema::categorical(pop.output.clone(), Role::Output, ["0", "1"]));
    let mut columns: Vec<Column> = ctx.into_iter().map(Column::Coded).collect();
    columns.push(Column::Coded(protected));
    columns.push(Column::Coded(output));
    Dataset::new(schema, columns)
}

/// `count` random pairwise-disjoint plants of expected size close to `target_size`.
///
/// Each plant fixes one category of the first contextual attribute and
/// optionally one category of each other attribute; among these shapes, the
/// ones whose expected size is closest to the target are eligible.
pub fn random_plants(pop: &PopulationSpec, count: usize, target_size: f64, delta: f64, seed: u64) -> Result<Vec<PlantSpec>> {
    pop.validate()?;
    let Some((first, rest)) = pop.contextual.split_first() else {
        return Err(Error::InvalidParameter("population has no contextual attributes".into()));
    };
    let mut cells: Vec<Vec<Option<usize>>> = (0..first.categories.len()).map(|c| vec![Some(c)]).collect();
    for a in rest {
        cells = cells
            .into_iter()
            .flat_map(|cell| {
                std::iter::once(None).chain((0..a.categories.len()).map(Some)).map(move |v| {
                    let mut next = cell.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    let share = |cell: &[Option<usize>]| -> f64 {
        pop.contextual
            .iter()
            .zip(cell)
            .map(|(a, v)| v.map_or(1.0, |k| a.probabilities[k]))
            .product()
    };
    let error = |cell: &[Option<usize>]| (pop.n as f64 * share(cell) / target_size).ln().abs();
    let best = cells.iter().map(|c| error(c)).fold(f64::INFINITY, f64::min);
    if best > 0.25f64.ln_1p() {
        return Err(Error::InvalidParameter(format!("no plant shape has expected size within 25% of {target_size}")));
    }
    let mut pool: Vec<&Vec<Option<usize>>> = cells.iter().filter(|c| error(c) <= best + 1e-9).collect();
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let to_plant = |cell: &[Option<usize>]| PlantSpec {
        predicates: pop
            .contextual
            .iter()
            .zip(cell)
            .filter_map(|(a, v)| v.map(|k| ContextPredicate::one_of(a.name.clone(), [a.categories[k].clone()])))
            .collect(),
        delta,
    };
    let mut chosen: Vec<PlantSpec> = Vec::with_capacity(count);
    let mut chosen_constraints: Vec<Vec<Option<Vec<bool>>>> = Vec::with_capacity(count);
    for cell in pool {
        if chosen.len() == count {
            break;
        }
        let plant = to_plant(cell);
        let c = pop.constraints(&plant)?;
        if chosen_constraints.iter().all(|other| disjoint(&c, other)) {
            chosen_constraints.push(c);
            chosen.push(plant);
        }
    }
    if chosen.len() < count {
        return Err(Error::InvalidParameter(format!("only {} disjoint plants of size {target_size} fit", chosen.len())));
    }
    Ok(chosen)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Share of plants discovered; NaN without plants.
    pub recall: f64,
    pub false_discoveries: usize,
    pub discovered: Vec<bool>,
}

/// Matches reported subpopulations against the plants on the test rows.
///
/// A plant is discovered by a context whose predicate set contains, or is
/// contained in, the plant's, and whose test rows overlap the plant's by at
/// least half of each. A reported context is a false discovery when its
/// overlap with every plant is under 10% of the smaller of the two.
pub fn score_detection(report: &ReportModel, plants: &[PlantSpec], test: &View) -> Result<Detection> {
    let data = test.data();
    let mut plant_of = vec![usize::MAX; data.n_rows()];
    let mut plant_size = vec![0usize; plants.len()];
    for (k, p) in plants.iter().enumerate() {
        let rows = test.select(&p.predicates)?;
        plant_size[k] = rows.len();
        for &r in rows.rows() {
            plant_of[r as usize] = k;
        }
    }
    let mut discovered = vec![false; plants.len()];
    let mut false_discoveries = 0;
    for f in &report.subpopulations {
        let rows = test.select(&f.context)?;
        let mut inter = vec![0usize; plants.len()];
        for &r in rows.rows() {
            if let Some(c) = inter.get_mut(plant_of[r as usize]) {
                *c += 1;
            }
        }
        let c_size = rows.len();
        for (k, p) in plants.iter().enumerate() {
            let nested = is_subset(&f.context, &p.predicates) || is_subset(&p.predicates, &f.context);
            if nested && 2 * inter[k] >= c_size && 2 * inter[k] >= plant_size[k] && inter[k] > 0 {
                discovered[k] = true;
            }
        }
        let touches = (0..plants.len()).any(|k| 10 * inter[k] >= c_size.min(plant_size[k]) && inter[k] > 0);
        if !touches {
            false_discoveries += 1;
        }
    }
    let recall = if plants.is_empty() {
        f64::NAN
    } else {
        discovered.iter().filter(|&&d| d).count() as f64 / plants.len() as f64
    };
    Ok(Detection {
        recall,
        false_discoveries,
        discovered,
    })
}

fn is_subset(a: &[ContextPredicate], b: &[ContextPredicate]) -> bool {
    a.iter().all(|p| b.contains(p))
}

/// One microbenchmark run: plants of one size and strength, scored after a Testing investigation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n: usize,
    pub plants: usize,
    pub plant_size: f64,
    pub delta: f64,
    pub metric: Metric,
    pub train_fraction: f64,
    pub tree: TreeParams,
    pub stats: StatConfig,
}

impl BenchConfig {
    pub fn new(n: usize, plants: usize, plant_size: f64, delta: f64) -> Self {
        Self {
            n,
            plants,
            plant_size,
            delta,
            metric: Metric::Nmi,
            train_fraction: 0.5,
            tree: TreeParams::default(),
            stats: StatConfig::default(),
        }
    }
}

/// CSV row of a benchmark run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub delta: f64,
    pub size: f64,
    pub recall: f64,
    pub false_discoveries: usize,
    pub seed: u64,
}

/// Generates, investigates and scores one seeded microbenchmark population.
pub fn run_bench(config: &BenchConfig, seed: u64) -> Result<(BenchRow, ReportModel)> {
    let pop = PopulationSpec::census_like(config.n);
    let plants = if config.plants == 0 {
        Vec::new()
    } else {
        random_plants(&pop, config.plants, config.plant_size, config.delta, derive_seed(seed, 0))?
    };
    let data = Arc::new(generate(&pop, &plants, derive_seed(seed, 1))?);
    let mut source = make_datasource(data, 1, config.train_fraction, derive_seed(seed, 2), config.tree.min_size)?;
    let spec = InvestigationSpec::testing([pop.protected.name.clone()], pop.output.clone())
        .with_context(pop.contextual_names())
        .with_metric(config.metric)
        .with_tree(config.tree.clone())
        .with_stats(StatConfig {
            seed: derive_seed(seed, 3),
            ..config.stats.clone()
        });
    let (_, mut reports) = run(&spec, &mut source)?;
    let report = reports.remove(0);
    let test = source.peek_test_set(0).expect("one test set").clone();
    let detection = score_detection(&report, &plants, &test)?;
    let row = BenchRow {
        delta: config.delta,
        size: config.plant_size,
        recall: detection.recall,
        false_discoveries: detection.false_discoveries,
        seed,
    };
    Ok((row, report))
}

/// Empirical `Pr(output = 1 | S = 1) - Pr(output = 1 | S = 0)` over `rows` (all rows if `None`).
pub fn empirical_gap(data: &Dataset, pop: &PopulationSpec, rows: Option<&[u32]>) -> Result<f64> {
    let s = data.column(data.attribute(&pop.protected.name)?).codes().expect("coded protected column");
    let o = data.column(data.attribute(&pop.output)?).codes().expect("coded output column");
    let mut ones = [0u64; 2];
    let mut totals = [0u64; 2];
    let mut add = |r: usize| {
        totals[s[r] as usize] += 1;
        ones[s[r] as usize] += u64::from(o[r]);
    };
    match rows {
        Some(rows) => rows.iter().for_each(|&r| add(r as usize)),
        None => (0..data.n_rows()).for_each(add),
    }
    if totals.contains(&0) {
        return Err(Error::InvalidParameter("a protected group is empty".into()));
    }
    Ok(ones[1] as f64 / totals[1] as f64 - ones[0] as f64 / totals[0] as f64)
}

/// Groups rows of `data` by their category in `attribute`.
pub fn marginal_counts(data: &Dataset, attribute: &str) -> Result<BTreeMap<String, usize>> {
    let col = data.attribute(attribute)?;
    let attr = data.attr(col);
    let codes = data
        .column(col)
        .codes()
        .ok_or_else(|| Error::TypeMismatch(format!("`{attribute}` is not coded")))?;
    let mut counts: BTreeMap<String, usize> = attr.categories.iter().map(|c| (c.clone(), 0)).collect();
    for &c in codes {
        if let Some(n) = attr.categories.get(c as usize).and_then(|name| counts.get_mut(name)) {
            *n += 1;
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests;
