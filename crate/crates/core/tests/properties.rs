mod oracle;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use fairdex_core::{
    bias_report, fairness_scores, interpolate, kendall_tau, kl_divergence, laplace_smooth,
    minmax_normalize, r_precision, tau_b, BiasConfig, CategoricalDistribution, CategorySource,
    Cutoff, EvalConfig, Evaluator, Interpolation, InterpolationKind, NamedTarget, Qrels, Run,
    RunEntry,
};
use proptest::prelude::*;

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

fn counts_strategy() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..50, 2..=10)
}

proptest! {
    #[test]
    fn smoothing_is_a_positive_distribution(counts in counts_strategy()) {
        let cats = labels(counts.len());
        let d = laplace_smooth(cats.iter().cloned().zip(counts.iter().copied()), &cats).unwrap();
        let total: f64 = d.mass().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(d.mass().iter().all(|&p| p > 0.0));
        for (got, want) in d.mass().iter().zip(oracle::smooth_direct(&counts)) {
            prop_assert!((got - want).abs() <= 1e-15);
        }
    }

    #[test]
    fn kl_matches_direct_summation(
        (a, b) in (2usize..=10).prop_flat_map(|n| (
            prop::collection::vec(0u64..40, n),
            prop::collection::vec(0u64..40, n),
        ))
    ) {
        let cats = labels(a.len());
        let p = CategoricalDistribution::smoothed(cats.clone(), &a).unwrap();
        let q = CategoricalDistribution::smoothed(cats, &b).unwrap();
        let kl = kl_divergence(&p, &q).unwrap();
        prop_assert!(kl >= 0.0);
        prop_assert!((kl - oracle::kl_direct(p.mass(), q.mass())).abs() <= 1e-10);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn minmax_is_monotone(values in prop::collection::vec(-100.0f64..100.0, 1..30)) {
        let n = minmax_normalize(&values).unwrap();
        for i in 0..values.len() {
            prop_assert!((0.0..=1.0).contains(&n.values[i]));
            for j in 0..values.len() {
                if values[i] < values[j] {
                    prop_assert!(n.values[i] <= n.values[j]);
                }
            }
        }
    }

    #[test]
    fn fairness_is_affine_invariant(
        kl in prop::collection::vec(0.0f64..3.0, 2..20),
        scale in 0.1f64..10.0,
        shift in -1.0f64..1.0,
    ) {
        let base = fairness_scores(&kl).unwrap();
        let moved: Vec<f64> = kl.iter().map(|v| v * scale + shift).collect();
        let moved = fairness_scores(&moved).unwrap();
        let bits: Vec<f64> = kl.iter().map(|v| v / std::f64::consts::LN_2).collect();
        let bits = fairness_scores(&bits).unwrap();
        for i in 0..kl.len() {
            prop_assert!((base.values[i] - moved.values[i]).abs() <= 1e-12);
            prop_assert!((base.values[i] - bits.values[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn mean_and_gmean_properties(r in 0.0f64..=1.0, f in 0.0f64..=1.0) {
        let m = interpolate(r, f, &Interpolation::mean()).unwrap();
        let g = interpolate(r, f, &Interpolation::gmean()).unwrap();
        prop_assert_eq!(m, interpolate(f, r, &Interpolation::mean()).unwrap());
        prop_assert_eq!(g, interpolate(f, r, &Interpolation::gmean()).unwrap());
        prop_assert!(g <= m + 1e-15);
        prop_assert_eq!(interpolate(0.0, f, &Interpolation::gmean()).unwrap(), 0.0);
    }

    #[test]
    fn gmean_peaks_at_balance(sum in 0.0f64..=2.0, split in 0.0f64..=1.0) {
        // for a fixed r + f, gmean is largest when r = f
        let half = sum / 2.0;
        let lo = (sum - 1.0).max(0.0);
        let hi = sum.min(1.0);
        let r = lo + (hi - lo) * split;
        let f = (sum - r).clamp(0.0, 1.0);
        let balanced = interpolate(half, half, &Interpolation::gmean()).unwrap();
        let other = interpolate(r, f, &Interpolation::gmean()).unwrap();
        prop_assert!(other <= balanced + 1e-12);
    }

    #[test]
    fn weighted_interpolation_stays_in_unit_range(
        r in 0.0f64..=1.0, f in 0.0f64..=1.0, w in 0.0f64..=1.0,
    ) {
        for kind in [InterpolationKind::ArithmeticMean, InterpolationKind::GeometricMean] {
            let v = Interpolation::new(kind, w).unwrap().apply(r, f).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn r_precision_matches_brute_force(
        n_docs in 1usize..60,
        relevant_mask in prop::collection::vec(any::<bool>(), 60),
        retrieved in prop::collection::vec(0usize..80, 0..60),
    ) {
        let relevant: BTreeSet<String> = (0..n_docs)
            .filter(|&i| relevant_mask[i])
            .map(|i| format!("d{i}"))
            .collect();
        prop_assume!(!relevant.is_empty());
        let mut seen = HashSet::new();
        let ranked: Vec<String> = retrieved
            .into_iter()
            .map(|i| format!("d{i}"))
            .filter(|d| seen.insert(d.clone()))
            .collect();
        let got = r_precision(&ranked, &relevant).unwrap();
        let rel: HashSet<String> = relevant.iter().cloned().collect();
        prop_assert_eq!(got, oracle::r_precision_brute(&ranked, &rel));
    }

    #[test]
    fn tau_b_matches_pair_counting_with_ties(
        xs in prop::collection::vec(0u8..5, 2..40),
        seed in prop::collection::vec(0u8..5, 40),
    ) {
        let x: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = (0..x.len()).map(|i| seed[i] as f64).collect();
        match oracle::tau_b_brute(&x, &y) {
            Some(want) => prop_assert_eq!(tau_b(&x, &y).unwrap(), want),
            None => prop_assert!(tau_b(&x, &y).is_err()),
        }
    }
}

#[test]
fn tau_b_matches_pair_counting_on_all_small_permutations() {
    for n in 2..=6 {
        let base: Vec<f64> = (0..n).map(|i| i as f64).collect();
        for perm in oracle::permutations(n) {
            let y: Vec<f64> = perm.iter().map(|&i| i as f64).collect();
            assert_eq!(
                tau_b(&base, &y).unwrap(),
                oracle::tau_b_brute(&base, &y).unwrap()
            );
        }
    }
}

fn three_category_source() -> CategorySource {
    CategorySource::prefix_rules([("a-", "a"), ("b-", "b"), ("c-", "c")]).unwrap()
}

/// Deterministic xorshift so the statistical tests do not depend on an RNG crate.
struct XorShift(u64);

impl XorShift {
    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

fn random_qrels(rng: &mut XorShift, topics: usize) -> Qrels {
    let mut judgments = Vec::new();
    for t in 0..topics {
        for d in 0..rng.below(30) {
            let cat = ["a", "b", "c"][rng.below(3) as usize];
            judgments.push((
                format!("t{t}"),
                format!("{cat}-{t}-{d}"),
                rng.below(3) as u32,
            ));
        }
    }
    Qrels::from_judgments(judgments).unwrap()
}

#[test]
fn bias_global_counts_are_topic_sums() {
    let src = three_category_source();
    let mut rng = XorShift(0x9e3779b97f4a7c15);
    for _ in 0..50 {
        let qrels = random_qrels(&mut rng, 8);
        let report = bias_report(&qrels, &src, &BiasConfig::default()).unwrap();
        let mut sums: BTreeMap<String, u64> = BTreeMap::new();
        for row in report.per_topic_counts.values() {
            for (c, n) in row {
                *sums.entry(c.clone()).or_default() += n;
            }
        }
        assert_eq!(sums, report.global_counts);
    }
}

#[test]
fn uniform_sampling_from_balanced_collection_approaches_zero_kl() {
    // every topic holds 600 docs, 200 per category; a run lists them in random
    // order, so the top-k category mix converges to uniform as k grows
    let src = three_category_source();
    let mut judgments = Vec::new();
    let mut rng = XorShift(42);
    let mut runs = Vec::new();
    for t in 0..10 {
        let mut docs: Vec<String> = (0..600)
            .map(|i| format!("{}-{t}-{i}", ["a", "b", "c"][i % 3]))
            .collect();
        for d in docs.iter().step_by(7) {
            judgments.push((format!("t{t}"), d.clone(), 1));
        }
        for i in (1..docs.len()).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            docs.swap(i, j);
        }
        runs.push((format!("t{t}"), docs));
    }
    let qrels = Qrels::from_judgments(judgments).unwrap();
    let mut entries = Vec::new();
    for (topic, docs) in &runs {
        for (i, d) in docs.iter().enumerate() {
            entries.push(RunEntry {
                topic_id: topic.clone(),
                doc_id: d.clone(),
                rank: i as u32 + 1,
                score: -(i as f64),
                system_tag: "random".into(),
            });
        }
    }
    let run = Run::from_entries("random", entries).unwrap();
    let kl_at = |k: usize| {
        let cfg = EvalConfig {
            cutoff: Cutoff::Depth(k),
            ..EvalConfig::default()
        };
        let ev = Evaluator::new(&qrels, &src, cfg).unwrap();
        ev.score_system(&run).unwrap().mean_kl_by_target["uniform"]
    };
    let shallow = kl_at(10);
    let deep = kl_at(600);
    assert!(deep < shallow);
    assert!(deep < 1e-3, "kl at full depth = {deep}");
}

#[test]
fn raw_and_normalized_relevance_induce_the_same_ranking() {
    let values = [0.31, 0.12, 0.77, 0.45, 0.05, 0.6];
    let normalized = minmax_normalize(&values).unwrap().values;
    let a: Vec<(String, f64)> = values
        .iter()
        .enumerate()
        .map(|(i, v)| (format!("s{i}"), *v))
        .collect();
    let b: Vec<(String, f64)> = normalized
        .iter()
        .enumerate()
        .map(|(i, v)| (format!("s{i}"), *v))
        .collect();
    assert_eq!(kendall_tau(&a, &b).unwrap(), 1.0);
}

#[test]
fn batch_columns_span_unit_interval() {
    let src = three_category_source();
    let mut rng = XorShift(7);
    let qrels = random_qrels(&mut rng, 6);
    let mut runs = Vec::new();
    for s in 0..5 {
        let mut entries = Vec::new();
        for t in 0..6 {
            for d in 0..20 {
                let cat = ["a", "b", "c"][rng.below(3) as usize];
                let doc = format!("{cat}-{t}-{}", rng.below(30));
                if entries
                    .iter()
                    .any(|e: &RunEntry| e.topic_id == format!("t{t}") && e.doc_id == doc)
                {
                    continue;
                }
                entries.push(RunEntry {
                    topic_id: format!("t{t}"),
                    doc_id: doc,
                    rank: d + 1,
                    score: -(d as f64),
                    system_tag: format!("s{s}"),
                });
            }
        }
        runs.push(Run::from_entries(format!("s{s}"), entries).unwrap());
    }
    let cfg = EvalConfig {
        targets: vec![NamedTarget::uniform(), NamedTarget::population()],
        ..EvalConfig::default()
    };
    let report = Evaluator::new(&qrels, &src, cfg)
        .unwrap()
        .evaluate_batch(&runs)
        .unwrap();
    for col in ["n_r_prec", "fair_uniform", "fair_population"] {
        let values: Vec<f64> = report
            .column(col)
            .unwrap()
            .iter()
            .map(|(_, v)| *v)
            .collect();
        assert!(values.contains(&1.0), "{col}");
        assert!(values.contains(&0.0), "{col}");
        assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
    for s in &report.systems {
        assert!(s.combined.values().all(|v| (0.0..=1.0).contains(v)));
    }
}
