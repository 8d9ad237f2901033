use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dataset::{make_datasource, AttributeSchema, Column, ContextPredicate, Role};
use crate::metrics::{Metric, MetricKind};
use crate::stats::{derive_seed, test_sample, TestedMetric};
use crate::tree::ContextNode;

/// Binary s, o and three binary contexts; inside x0 = 1 and x1 = 1 the
/// output rate is 0.5 + delta for s = 0 and 0.5 - delta for s = 1.
fn planted(n: usize, delta: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = vec![Vec::with_capacity(n); 5];
    for _ in 0..n {
        let s = rng.random_range(0..2u32);
        let x: Vec<u32> = (0..3).map(|_| rng.random_range(0..2u32)).collect();
        let p = if x[0] == 1 && x[1] == 1 {
            0.5 + if s == 0 { delta } else { -delta }
        } else {
            0.5
        };
        let o = u32::from(rng.random_bool(p));
        for (c, v) in cols.iter_mut().zip([s, o, x[0], x[1], x[2]]) {
            c.push(v);
        }
    }
    let schema = vec![
        AttributeSchema::categorical("s", Role::Protected, ["a", "b"]),
        AttributeSchema::categorical("o", Role::Output, ["0", "1"]),
        AttributeSchema::categorical("x0", Role::Contextual, ["0", "1"]),
        AttributeSchema::categorical("x1", Role::Contextual, ["0", "1"]),
        AttributeSchema::categorical("x2", Role::Contextual, ["0", "1"]),
    ];
    Dataset::new(schema, cols.into_iter().map(Column::Coded).collect()).unwrap()
}

fn spec() -> InvestigationSpec {
    InvestigationSpec::testing(["s"], "o").with_context(["x0", "x1", "x2"])
}

fn tested(metric: Metric, value: f64, ci: (f64, f64), p: f64) -> TestedMetric {
    serde_json::from_value(serde_json::json!({
        "metric": metric, "value": value, "n": 1000,
        "ci": {"lo": ci.0, "hi": ci.1}, "p_value": p, "method": "asymptotic",
        "corrected_ci": {"lo": ci.0, "hi": ci.1}, "corrected_p": p
    }))
    .unwrap()
}

/// A hand-built investigation whose tree is root -> 1 -> 2 plus root -> 3.
fn fake(findings: &[(usize, TestedMetric)]) -> (Investigation, Validation) {
    let node = |preds: Vec<ContextPredicate>, parent: Option<usize>, children: Vec<usize>| ContextNode {
        predicates: preds,
        train_size: 1000,
        train_metric: Some(0.1),
        parent,
        children,
    };
    let p = |a: &str| ContextPredicate::one_of(a, ["1"]);
    let nodes = vec![
        node(vec![], None, vec![1, 3]),
        node(vec![p("x0")], Some(0), vec![2]),
        node(vec![p("x0"), p("x1")], Some(1), vec![]),
        node(vec![p("x2")], Some(0), vec![]),
    ];
    let inv = Investigation {
        spec: spec(),
        hypotheses: vec![Hypothesis {
            protected: "s".into(),
            output: "o".into(),
            label: None,
            label_score: None,
            metric: Metric::Diff,
            contexts: ContextTree { nodes: nodes.clone(), evaluations: 9 },
        }],
    };
    let findings = findings
        .iter()
        .map(|(c, t)| Finding {
            hypothesis: 0,
            node: *c,
            context: nodes[*c].predicates.clone(),
            size: 1000,
            protected: "s".into(),
            output: "o".into(),
            label: None,
            metric: MetricKind::plain(Metric::Diff),
            tested: t.clone(),
            breakdown: Breakdown::Deciles(Vec::new()),
            strata: Vec::new(),
            rank: 0,
        })
        .collect::<Vec<_>>();
    let family_size = findings.len();
    (
        inv,
        Validation {
            findings,
            dropped: Vec::new(),
            family_size,
        },
    )
}

#[test]
fn metric_selection_follows_attribute_kinds() {
    let bin = AttributeSchema::categorical("b", Role::Protected, ["0", "1"]);
    let cat = AttributeSchema::categorical("c", Role::Output, ["x", "y", "z"]);
    let num = AttributeSchema::continuous("n", Role::Output);
    let labels = AttributeSchema::labels("l", Role::Output, ["p", "q"]);
    assert_eq!(select_metric(&bin, &bin).unwrap(), Metric::Diff);
    assert_eq!(select_metric(&bin, &cat).unwrap(), Metric::Nmi);
    assert_eq!(select_metric(&num, &num).unwrap(), Metric::Corr);
    assert_eq!(select_metric(&bin, &num).unwrap(), Metric::Corr);
    assert!(select_metric(&cat, &num).is_err());
    assert!(select_metric(&bin, &labels).is_err());
}

#[test]
fn spec_checks_reject_mismatched_investigations() {
    let d = planted(100, 0.0, 1);
    assert!(spec().check(&d).is_ok());
    assert!(InvestigationSpec::discovery(["s"], "o", 3).check(&d).is_err());
    assert!(InvestigationSpec::error_profiling(["s"], "o", "x0").check(&d).is_ok());
    assert!(InvestigationSpec::testing(Vec::<String>::new(), "o").check(&d).is_err());
    assert!(InvestigationSpec::testing(["s"], "s").check(&d).is_err());
    assert!(spec().with_metric(Metric::Reg).check(&d).is_err());
    assert!(InvestigationSpec::testing(["nope"], "o").check(&d).is_err());
}

#[test]
fn planted_context_is_validated_and_reported() {
    let mut source = make_datasource(planted(40_000, 0.15, 3), 1, 0.5, 11, 100).unwrap();
    let (inv, reports) = run(&spec(), &mut source).unwrap();
    assert_eq!(inv.hypotheses[0].metric, Metric::Diff);
    assert_eq!(reports.len(), 1);
    let r = &reports[0];
    assert!(r.global.context.is_empty());
    let planted = [ContextPredicate::one_of("x0", ["1"]), ContextPredicate::one_of("x1", ["1"])];
    let hit = r
        .subpopulations
        .iter()
        .find(|f| planted.iter().all(|p| f.context.contains(p)))
        .expect("planted context reported");
    assert!(hit.tested.final_p() < 0.05);
    assert!(hit.tested.value > 0.2);
    for w in r.subpopulations.windows(2) {
        assert!(w[0].tested.effect_bound() >= w[1].tested.effect_bound());
    }
    assert!(r.subpopulations.iter().enumerate().all(|(i, f)| f.rank == i + 1));
}

#[test]
fn findings_use_only_test_rows() {
    let mut source = make_datasource(planted(20_000, 0.15, 4), 2, 0.5, 5, 100).unwrap();
    let inv = train(&spec(), &mut source).unwrap();
    let test = source.next_test_set().unwrap();
    let v = validate(&inv, &test).unwrap();
    let data = source.data().clone();
    let measure = inv.hypotheses[0].measure(&data, &inv.spec, None).unwrap();
    for f in &v.findings {
        let view = test.select(&f.context).unwrap();
        assert_eq!(f.size, view.len());
        let seed = derive_seed(derive_seed(inv.spec.stats.seed, 0), f.node as u64);
        let direct = test_sample(&measure, &measure.sample(&view), &inv.spec.stats, seed).unwrap();
        assert_eq!(direct.value, f.tested.value);
        assert_eq!(direct.p_value, f.tested.p_value);
        let train_rows: std::collections::HashSet<u32> = source.train().rows().iter().copied().collect();
        assert!(view.rows().iter().all(|r| !train_rows.contains(r)));
    }
    // reported contexts come from the trained tree
    for r in filter_and_rank(&inv, &v, 0.95) {
        for f in r.subpopulations {
            assert!(inv.hypotheses[0].contexts.nodes.iter().any(|n| n.predicates == f.context));
        }
    }
}

#[test]
fn pipeline_is_deterministic() {
    let go = || {
        let mut source = make_datasource(planted(20_000, 0.1, 6), 1, 0.5, 2, 100).unwrap();
        run(&spec(), &mut source).unwrap().1
    };
    assert_eq!(go(), go());
}

#[test]
fn nested_weaker_child_is_dropped() {
    let (inv, v) = fake(&[
        (0, tested(Metric::Diff, 0.01, (-0.01, 0.03), 0.4)),
        (1, tested(Metric::Diff, 0.12, (0.08, 0.16), 0.001)),
        (2, tested(Metric::Diff, 0.10, (0.05, 0.15), 0.001)),
        (3, tested(Metric::Diff, -0.2, (-0.3, -0.1), 0.001)),
    ]);
    let r = &filter_and_rank(&inv, &v, 0.95)[0];
    let nodes: Vec<usize> = r.subpopulations.iter().map(|f| f.node).collect();
    // node 3 has bound 0.1 > node 1's 0.08; node 2 (0.05) sits under node 1 (0.08)
    assert_eq!(nodes, [3, 1]);
    assert!(!r.global_significant());
}

#[test]
fn child_stronger_than_significant_parent_is_kept() {
    let (inv, v) = fake(&[
        (0, tested(Metric::Diff, 0.05, (0.02, 0.08), 0.001)),
        (1, tested(Metric::Diff, 0.06, (0.01, 0.11), 0.01)),
        (2, tested(Metric::Diff, 0.3, (0.2, 0.4), 0.001)),
        (3, tested(Metric::Diff, 0.3, (0.2, 0.4), 0.2)),
    ]);
    let r = &filter_and_rank(&inv, &v, 0.95)[0];
    // node 1 is not above the global bound; node 2 beats both; node 3 is not significant
    assert_eq!(r.subpopulations.iter().map(|f| f.node).collect::<Vec<_>>(), [2]);
    assert!(r.global_significant());
}

#[test]
fn nothing_significant_leaves_only_the_global_entry() {
    let (inv, v) = fake(&[
        (0, tested(Metric::Diff, 0.01, (-0.01, 0.03), 0.4)),
        (1, tested(Metric::Diff, 0.05, (-0.01, 0.11), 0.2)),
        (2, tested(Metric::Diff, 0.05, (-0.01, 0.11), 0.06)),
    ]);
    let r = &filter_and_rank(&inv, &v, 0.95)[0];
    assert!(r.subpopulations.is_empty());
    assert!(!r.global_significant());
    assert_eq!(r.global.node, 0);
}

#[test]
fn ranking_orders_by_lower_bound() {
    // two NMI subpopulations with bounds 0.0040 and 0.0051, listed strongest first
    let (mut inv, v) = fake(&[
        (0, tested(Metric::Nmi, 0.0003, (0.0001, 0.0005), 3.34e-10)),
        (1, tested(Metric::Nmi, 0.04, (0.0040, 0.0975), 1e-4)),
        (3, tested(Metric::Nmi, 0.01, (0.0051, 0.0203), 1e-6)),
    ]);
    inv.hypotheses[0].metric = Metric::Nmi;
    let r = &filter_and_rank(&inv, &v, 0.95)[0];
    let bounds: Vec<f64> = r.subpopulations.iter().map(|f| f.tested.final_ci().lo).collect();
    assert_eq!(bounds, [0.0051, 0.0040]);
}

#[test]
fn small_test_contexts_are_dropped() {
    let mut source = make_datasource(planted(4_000, 0.2, 8), 1, 0.5, 3, 100).unwrap();
    let mut s = spec();
    s.tree.min_size = 400;
    let inv = train(&s, &mut source).unwrap();
    let test = source.next_test_set().unwrap();
    let v = validate(&inv, &test).unwrap();
    for f in &v.findings {
        assert!(f.node == 0 || f.size >= 200);
    }
    for d in &v.dropped {
        assert!(d.test_size < 200);
    }
    assert_eq!(v.findings.len() + v.dropped.len(), inv.hypotheses[0].contexts.nodes.len());
}

#[test]
fn family_size_one_is_uncorrected() {
    let mut source = make_datasource(planted(4_000, 0.0, 9), 1, 0.5, 3, 100).unwrap();
    let s = spec().with_context(Vec::<String>::new());
    let (_, reports) = run(&s, &mut source).unwrap();
    let g = &reports[0].global;
    assert_eq!(reports[0].family_size, 1);
    assert_eq!(g.tested.corrected_p, Some(g.tested.p_value));
    assert_eq!(g.tested.corrected_ci, Some(g.tested.ci));
}

fn with_constant(d: &Dataset) -> Dataset {
    let n = d.n_rows();
    d.with_column(AttributeSchema::categorical("k", Role::Explanatory, ["only"]), Column::Coded(vec![0; n]))
        .unwrap()
}

#[test]
fn constant_explanatory_matches_plain_revalidation() {
    let d = with_constant(&planted(20_000, 0.15, 10));
    let mut source = make_datasource(d, 2, 0.5, 4, 100).unwrap();
    let inv = train(&spec(), &mut source).unwrap();
    let _first = source.next_test_set().unwrap();
    let fresh = source.next_test_set().unwrap();
    let debugged = debug_with_explanatory(&inv, "k", &fresh).unwrap();
    let plain = filter_and_rank(&inv, &validate(&inv, &fresh).unwrap(), 0.95);
    assert_eq!(debugged.len(), plain.len());
    for (a, b) in debugged.iter().zip(&plain) {
        assert_eq!(a.investigation.metric.label(), "COND-DIFF");
        assert_eq!(a.family_size, b.family_size);
        assert_eq!(a.global.tested, b.global.tested);
        let pa: Vec<_> = a.subpopulations.iter().map(|f| (&f.context, &f.tested)).collect();
        let pb: Vec<_> = b.subpopulations.iter().map(|f| (&f.context, &f.tested)).collect();
        assert_eq!(pa, pb);
    }
}

#[test]
fn debug_consumes_budget() {
    let d = with_constant(&planted(20_000, 0.0, 12));
    let mut source = make_datasource(d, 2, 0.5, 4, 100).unwrap();
    let (inv, _) = run(&spec(), &mut source).unwrap();
    let fresh = source.next_test_set().unwrap();
    assert!(debug_with_explanatory(&inv, "k", &fresh).is_ok());
    assert!(matches!(source.next_test_set(), Err(Error::BudgetExhausted { budget: 2 })));
}

#[test]
fn conditioning_tests_each_stratum() {
    // the association reverses between the two strata of e
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 8000;
    let (mut s, mut o, mut e) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let k = rng.random_range(0..2u32);
        let g = rng.random_range(0..2u32);
        let p = if (k == 0) == (g == 0) { 0.7 } else { 0.3 };
        s.push(g);
        e.push(k);
        o.push(u32::from(rng.random_bool(p)));
    }
    let d = Dataset::new(
        vec![
            AttributeSchema::categorical("s", Role::Protected, ["a", "b"]),
            AttributeSchema::categorical("o", Role::Output, ["0", "1"]),
            AttributeSchema::categorical("e", Role::Explanatory, ["u", "v"]),
        ],
        vec![Column::Coded(s), Column::Coded(o), Column::Coded(e)],
    )
    .unwrap();
    let mut source = make_datasource(d, 1, 0.5, 1, 100).unwrap();
    let inv = train(&InvestigationSpec::testing(["s"], "o"), &mut source).unwrap();
    let test = source.next_test_set().unwrap();
    let r = &debug_with_explanatory(&inv, "e", &test).unwrap()[0];
    let strata = &r.global.strata;
    assert_eq!(strata.iter().map(|s| s.stratum.as_str()).collect::<Vec<_>>(), ["u", "v"]);
    assert!(strata[0].tested.value > 0.3 && strata[1].tested.value < -0.3);
    assert!(strata.iter().all(|s| s.tested.final_p() < 0.01));
    assert_eq!(r.family_size, 3);
    assert!(r.global.tested.value.abs() < 0.06);
    assert_eq!(strata.iter().map(|s| s.size).sum::<usize>(), r.global.size);
}

#[test]
fn error_profiling_correlates_absolute_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 6000;
    let age: Vec<f64> = (0..n).map(|_| rng.random_range(20.0..80.0)).collect();
    let truth: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
    // errors grow with age
    let pred: Vec<f64> = age
        .iter()
        .zip(&truth)
        .map(|(a, t)| t + rng.random_range(-1.0..1.0) * a / 20.0)
        .collect();
    let d = Dataset::new(
        vec![
            AttributeSchema::continuous("age", Role::Protected),
            AttributeSchema::continuous("visits", Role::Output),
            AttributeSchema::continuous("actual", Role::Ignored),
        ],
        vec![Column::Continuous(age), Column::Continuous(pred), Column::Continuous(truth)],
    )
    .unwrap();
    let mut source = make_datasource(d, 1, 0.5, 1, 100).unwrap();
    let s = InvestigationSpec::error_profiling(["age"], "visits", "actual");
    let (inv, reports) = run(&s, &mut source).unwrap();
    assert_eq!(inv.hypotheses[0].metric, Metric::Corr);
    assert_eq!(inv.hypotheses[0].output, "visits_error");
    let g = &reports[0].global;
    assert!(g.tested.value > 0.3);
    assert!(reports[0].global_significant());
    let Breakdown::Deciles(bins) = &g.breakdown else { panic!("CORR shows deciles") };
    assert_eq!(bins.len(), 10);
    assert_eq!(bins.iter().map(|b| b.n).sum::<usize>(), g.size);
    assert!(bins[9].output[2] > bins[0].output[2]);
}

fn label_data(n: usize, seed: u64) -> Dataset {
    // labels l0..l5; l0 is much more frequent for s = 1, l1 for x = 1 and s = 0
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s, mut x, mut tags) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let g = rng.random_range(0..2u32);
        let c = rng.random_range(0..2u32);
        let mut set = Vec::new();
        for l in 0..6u32 {
            let p = match l {
                0 if g == 1 => 0.6,
                1 if c == 1 && g == 0 => 0.5,
                _ => 0.2,
            };
            if rng.random_bool(p) {
                set.push(l);
            }
        }
        s.push(g);
        x.push(c);
        tags.push(Some(set));
    }
    Dataset::new(
        vec![
            AttributeSchema::categorical("race", Role::Protected, ["w", "b"]),
            AttributeSchema::categorical("x", Role::Contextual, ["0", "1"]),
            AttributeSchema::labels("tags", Role::Output, ["l0", "l1", "l2", "l3", "l4", "l5"]),
        ],
        vec![Column::Coded(s), Column::Coded(x), Column::Labels(tags)],
    )
    .unwrap()
}

#[test]
fn discovery_ranks_labels_then_tests_each() {
    let mut source = make_datasource(label_data(10_000, 3), 1, 0.5, 2, 100).unwrap();
    let s = InvestigationSpec::discovery(["race"], "tags", 2).with_context(["x"]);
    let (inv, reports) = run(&s, &mut source).unwrap();
    let labels: Vec<&str> = inv.hypotheses.iter().map(|h| h.label.as_deref().unwrap()).collect();
    assert_eq!(labels, ["l0", "l1"]);
    assert!(inv.hypotheses.iter().all(|h| h.metric == Metric::Diff && h.output.starts_with("tags=")));
    assert_eq!(reports.len(), 2);
    assert!(reports[0].global_significant());
    assert!(reports[0].global.tested.value < -0.3);
    // l1 is associated only where x = 1
    assert!(reports[1]
        .subpopulations
        .iter()
        .any(|f| f.context == [ContextPredicate::one_of("x", ["1"])]));

    let mut source = make_datasource(label_data(4_000, 4), 1, 0.5, 2, 100).unwrap();
    let all = train(&InvestigationSpec::discovery(["race"], "tags", 50), &mut source).unwrap();
    assert_eq!(all.hypotheses.len(), 6);
    let mut source = make_datasource(label_data(4_000, 4), 1, 0.5, 2, 100).unwrap();
    let one = train(&InvestigationSpec::discovery(["race"], "tags", 1), &mut source).unwrap();
    assert_eq!(one.hypotheses.len(), 1);
}

#[test]
fn materialize_restores_derived_columns() {
    let raw = label_data(4_000, 6);
    let mut source = make_datasource(raw.clone(), 1, 0.5, 2, 100).unwrap();
    let inv = train(&InvestigationSpec::discovery(["race"], "tags", 2), &mut source).unwrap();
    let again = inv.materialize(&raw).unwrap();
    assert_eq!(again.schema(), source.data().schema());
    let json = serde_json::to_string(&inv).unwrap();
    let back: Investigation = serde_json::from_str(&json).unwrap();
    assert_eq!(back, inv);
}

#[test]
fn missing_derived_columns_are_reported() {
    let raw = label_data(4_000, 6);
    let mut source = make_datasource(raw.clone(), 1, 0.5, 2, 100).unwrap();
    let inv = train(&InvestigationSpec::discovery(["race"], "tags", 2), &mut source).unwrap();
    let bare = View::full(Arc::new(raw));
    assert!(matches!(validate(&inv, &bare), Err(Error::Schema(_))));
}

#[test]
fn decile_bins_share_ties() {
    let pairs: Vec<(f64, f64)> = (0..100).map(|i| (f64::from(i % 2), f64::from(i))).collect();
    let bins = validate::decile_summaries(pairs);
    assert_eq!(bins.len(), 2);
    assert_eq!(bins[0].n, 50);
    assert_eq!(bins[0].output[0], 0.0);
    assert_eq!(bins[1].output[4], 99.0);
    assert_eq!(bins[0].protected_min, bins[0].protected_max);
}
