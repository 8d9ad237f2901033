use std::sync::Arc;

use super::*;
use crate::investigations::{Breakdown, Finding, InvestigationEcho, InvestigationKind};
use crate::metrics::{ContingencyTable, MetricKind};
use crate::stats::TestedMetric;

fn binomial_sd(n: usize, p: f64) -> f64 {
    (n as f64 * p * (1.0 - p)).sqrt()
}

fn finding(context: Vec<ContextPredicate>, rank: usize) -> Finding {
    let tested: TestedMetric = serde_json::from_value(serde_json::json!({
        "metric": Metric::Nmi, "value": 0.1, "n": 100,
        "ci": {"lo": 0.05, "hi": 0.2}, "p_value": 1e-6, "method": "asymptotic",
        "corrected_ci": {"lo": 0.05, "hi": 0.2}, "corrected_p": 1e-6
    }))
    .unwrap();
    let table = ContingencyTable::new(vec!["0".into(), "1".into()], vec!["a".into(), "b".into()], vec![vec![1, 1], vec![1, 1]]).unwrap();
    Finding {
        hypothesis: 0,
        node: rank,
        context,
        size: 4,
        protected: "Income".into(),
        output: "Output".into(),
        label: None,
        metric: MetricKind::plain(Metric::Nmi),
        tested,
        breakdown: Breakdown::Table(table),
        strata: Vec::new(),
        rank,
    }
}

fn report(contexts: Vec<Vec<ContextPredicate>>) -> ReportModel {
    ReportModel {
        investigation: InvestigationEcho {
            kind: InvestigationKind::Testing,
            protected: "Income".into(),
            output: "Output".into(),
            label: None,
            contextual: vec!["State".into(), "Race".into(), "Gender".into()],
            metric: MetricKind::plain(Metric::Nmi),
        },
        conf: 0.95,
        global: finding(Vec::new(), 0),
        subpopulations: contexts.into_iter().enumerate().map(|(i, c)| finding(c, i + 1)).collect(),
        family_size: 1,
    }
}

#[test]
fn marginals_within_three_binomial_sd() {
    let pop = PopulationSpec::census_like(50_000);
    let data = generate(&pop, &[], 11).unwrap();
    assert_eq!(data.n_rows(), 50_000);
    for spec in pop.contextual.iter().chain([&pop.protected]) {
        let counts = marginal_counts(&data, &spec.name).unwrap();
        for (c, p) in spec.categories.iter().zip(&spec.probabilities) {
            let expected = pop.n as f64 * p;
            assert!((counts[c] as f64 - expected).abs() <= 3.0 * binomial_sd(pop.n, *p), "{}={c}", spec.name);
        }
    }
}

#[test]
fn null_population_has_no_gap() {
    let pop = PopulationSpec::census_like(40_000);
    let data = generate(&pop, &[], 5).unwrap();
    let gap = empirical_gap(&data, &pop, None).unwrap();
    let sd = (0.5f64 / 20_000.0).sqrt();
    assert!(gap.abs() < 3.0 * sd, "gap {gap}");
}

#[test]
fn plant_covering_everyone_doubles_delta() {
    let pop = PopulationSpec::census_like(20_000);
    let plant = PlantSpec { predicates: Vec::new(), delta: 0.25 };
    let data = generate(&pop, &[plant], 3).unwrap();
    let gap = empirical_gap(&data, &pop, None).unwrap();
    assert!((gap - 0.5).abs() < 0.04, "gap {gap}");
}

#[test]
fn ten_plants_at_one_million_users() {
    let pop = PopulationSpec::census_like(1_000_000);
    let plants = random_plants(&pop, 10, 20_000.0, 0.1, 8).unwrap();
    let data = Arc::new(generate(&pop, &plants, 9).unwrap());
    let all = View::full(data.clone());
    for p in &plants {
        let rows = all.select(&p.predicates).unwrap();
        let n = rows.len();
        assert!((n as f64 - 20_000.0).abs() < 4.0 * binomial_sd(pop.n, 0.02));
        let gap = empirical_gap(&data, &pop, Some(rows.rows())).unwrap();
        let sd = (0.24 * 4.0 / n as f64).sqrt();
        assert!((gap - 0.2).abs() < 4.0 * sd, "gap {gap} in {:?}", p.predicates);
    }
    let mut planted = vec![false; pop.n];
    for p in &plants {
        for &r in all.select(&p.predicates).unwrap().rows() {
            planted[r as usize] = true;
        }
    }
    let outside = all.filter(|r| !planted[r as usize]);
    let gap = empirical_gap(&data, &pop, Some(outside.rows())).unwrap();
    assert!(gap.abs() < 4.0 * (1.0 / outside.len() as f64).sqrt(), "gap {gap} outside plants");
}

#[test]
fn overlapping_plants_are_rejected() {
    let pop = PopulationSpec::census_like(1000);
    let a = PlantSpec {
        predicates: vec![ContextPredicate::one_of("State", ["CA"])],
        delta: 0.1,
    };
    let b = PlantSpec {
        predicates: vec![ContextPredicate::one_of("Race", ["White"])],
        delta: 0.1,
    };
    let c = PlantSpec {
        predicates: vec![ContextPredicate::one_of("State", ["NY"]), ContextPredicate::one_of("Race", ["White"])],
        delta: 0.1,
    };
    assert!(generate(&pop, &[a.clone(), b], 1).is_err());
    assert!(generate(&pop, &[a.clone(), c], 1).is_ok());
    let bad_delta = PlantSpec { delta: 0.6, ..a.clone() };
    assert!(generate(&pop, &[bad_delta], 1).is_err());
    let unknown = PlantSpec {
        predicates: vec![ContextPredicate::one_of("State", ["XX"])],
        delta: 0.1,
    };
    assert!(generate(&pop, &[unknown], 1).is_err());
}

#[test]
fn random_plants_hit_target_sizes() {
    let pop = PopulationSpec::census_like(100_000);
    let plants = random_plants(&pop, 10, 2000.0, 0.15, 4).unwrap();
    assert_eq!(plants.len(), 10);
    for p in &plants {
        assert!((expected_size(&pop, p).unwrap() - 2000.0).abs() < 1e-6);
    }
    let pop = PopulationSpec::census_like(1_000_000);
    for p in random_plants(&pop, 10, 500.0, 0.025, 4).unwrap() {
        assert!((expected_size(&pop, &p).unwrap() - 500.0).abs() < 1e-6);
        assert_eq!(p.predicates.len(), 3);
    }
    assert_eq!(random_plants(&pop, 10, 500.0, 0.025, 4).unwrap(), random_plants(&pop, 10, 500.0, 0.025, 4).unwrap());
    assert!(random_plants(&pop, 60, 20_000.0, 0.1, 4).is_err());
}

#[test]
fn generation_is_seeded() {
    let pop = PopulationSpec::census_like(2000);
    let plants = random_plants(&pop, 3, 40.0, 0.2, 1).unwrap();
    assert_eq!(generate(&pop, &plants, 7).unwrap(), generate(&pop, &plants, 7).unwrap());
    assert_ne!(generate(&pop, &plants, 7).unwrap(), generate(&pop, &plants, 8).unwrap());
}

#[test]
fn scoring_exact_empty_and_spurious_reports() {
    let pop = PopulationSpec::census_like(100_000);
    let plants = random_plants(&pop, 10, 2000.0, 0.15, 2).unwrap();
    let data = Arc::new(generate(&pop, &plants, 2).unwrap());
    let test = View::full(data);

    let exact = report(plants.iter().map(|p| p.predicates.clone()).collect());
    let d = score_detection(&exact, &plants, &test).unwrap();
    assert_eq!(d.recall, 1.0);
    assert_eq!(d.false_discoveries, 0);

    let empty = report(Vec::new());
    let d = score_detection(&empty, &plants, &test).unwrap();
    assert_eq!(d.recall, 0.0);
    assert_eq!(d.false_discoveries, 0);

    let planted: Vec<&str> = plants
        .iter()
        .map(|p| match &p.predicates[0].op {
            PredicateOp::OneOf { values } => values[0].as_str(),
            _ => unreachable!(),
        })
        .collect();
    let free = STATES.iter().find(|s| !planted.contains(s)).unwrap();
    let mut narrower = plants[0].predicates.clone();
    narrower.push(ContextPredicate::one_of("Race", ["White"]));
    let mut tiny = plants[1].predicates.clone();
    tiny.push(ContextPredicate::one_of("Race", ["Other"]));
    let mixed = report(vec![vec![ContextPredicate::one_of("State", [*free])], narrower, tiny]);
    let d = score_detection(&mixed, &plants, &test).unwrap();
    assert_eq!(d.false_discoveries, 1);
    assert!(d.discovered[0]);
    assert!(!d.discovered[1]);
    assert!((d.recall - 0.1).abs() < 1e-12);
}

#[test]
fn berkeley_table_expands_to_applicants() {
    let d = berkeley();
    assert_eq!(d.n_rows(), 4526);
    let g = d.column(0).codes().unwrap();
    let a = d.column(2).codes().unwrap();
    let rate = |gender: u32| {
        let rows: Vec<usize> = (0..d.n_rows()).filter(|&r| g[r] == gender).collect();
        rows.iter().filter(|&&r| a[r] == 1).count() as f64 / rows.len() as f64
    };
    assert!((rate(0) - 557.0 / 1835.0).abs() < 1e-12);
    assert!((rate(1) - 1198.0 / 2691.0).abs() < 1e-12);
}

#[test]
fn tree_benchmark_hotspots() {
    let d = tree_benchmark(40_000, 1);
    assert_eq!(d.schema().len(), TREE_BENCH_ATTRIBUTES + 2);
    let all = View::full(Arc::new(d));
    let pop = PopulationSpec {
        n: 0,
        contextual: Vec::new(),
        protected: CategoricalSpec::uniform("Group", ["a", "b"]),
        output: "Output".into(),
    };
    let gap = |preds: &[(&str, &str)]| {
        let preds: Vec<ContextPredicate> = preds.iter().map(|(a, v)| ContextPredicate::one_of(*a, [*v])).collect();
        let rows = all.select(&preds).unwrap();
        empirical_gap(all.data(), &pop, Some(rows.rows())).unwrap()
    };
    for hot in [&[("X01", "1"), ("X02", "1")][..], &[("X01", "0"), ("X03", "1")], &[("X01", "0"), ("X03", "0"), ("X04", "1")]] {
        assert!((gap(hot) - 0.6).abs() < 0.06, "{hot:?}");
    }
    assert!(gap(&[("X01", "1"), ("X02", "0")]).abs() < 0.06);
    assert!(gap(&[("X01", "0"), ("X03", "0"), ("X04", "0")]).abs() < 0.06);
}

#[test]
fn guided_search_spends_fewer_evaluations() {
    let data = Arc::new(tree_benchmark(8000, 2));
    let rows: Vec<u32> = (0..8000).collect();
    let (train, test) = (View::from_rows(data.clone(), rows[..4000].to_vec()), View::from_rows(data.clone(), rows[4000..].to_vec()));
    let measure = crate::metrics::Measure::new(&data, Metric::Diff, "Group", "Output", None).unwrap();
    let ctx: Vec<usize> = (0..TREE_BENCH_ATTRIBUTES).collect();
    let params = TreeParams {
        min_size: 250,
        max_depth: 3,
        ..TreeParams::default()
    };
    let [tree, items] = tree_vs_itemsets(&train, &test, &measure, &ctx, &params).unwrap();
    assert_eq!((tree.strategy.as_str(), items.strategy.as_str()), ("tree", "itemsets"));
    assert!(tree.candidates_considered * 4 <= items.candidates_considered);
    assert!(tree.top3_mean_association > 0.4 && items.top3_mean_association > 0.4);
}
