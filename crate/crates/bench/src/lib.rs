//! Shared fixtures for the criterion benchmarks.

use std::sync::Arc;

use uatest_core::dataset::{ContextPredicate, Dataset, View};
use uatest_core::synth::{generate, tree_benchmark, PlantSpec, PopulationSpec};

/// Census-like users with one planted gap among Black users.
pub fn census(n: usize, seed: u64) -> Arc<Dataset> {
    let pop = PopulationSpec::census_like(n);
    let plant = PlantSpec {
        predicates: vec![ContextPredicate::one_of("Race", ["Black"])],
        delta: 0.15,
    };
    Arc::new(generate(&pop, &[plant], seed).expect("valid population"))
}

/// The hotspot population split in half by row order.
pub fn hotspot_halves(n: usize, seed: u64) -> (View, View) {
    let data = Arc::new(tree_benchmark(n, seed));
    let rows: Vec<u32> = (0..n as u32).collect();
    let half = n / 2;
    (View::from_rows(data.clone(), rows[..half].to_vec()), View::from_rows(data, rows[half..].to_vec()))
}
