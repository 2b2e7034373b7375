use ldr_core::harness::{derive_seed, run_batch, ExperimentConfig, InstanceSource, RegretMode};
use ldr_core::ingest::{fit_instance, ClickRecord};
use ldr_core::oracle::{brute_force_optimal, greedy_optimal_list};
use ldr_core::policies::PolicySpec;
use ldr_core::{toy_instance, Instance};
use proptest::prelude::*;
use proptest::sample::subsequence;

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=3, 2usize..=7)
        .prop_flat_map(|(m, n)| {
            (
                proptest::collection::vec(0..m, n),
                proptest::collection::vec(0.0f64..=1.0, n),
                proptest::collection::vec(0.05f64..1.0, m),
                1..=n.min(4),
            )
        })
        .prop_map(|(topic_of, ctr, weights, slots)| {
            let total: f64 = weights.iter().sum();
            let mut phi: Vec<f64> = weights.iter().map(|w| w / total).collect();
            let rest: f64 = phi[1..].iter().sum();
            phi[0] = 1.0 - rest;
            Instance::new(topic_of, ctr, phi, slots).unwrap()
        })
}

fn instance_and_list() -> impl Strategy<Value = (Instance, Vec<usize>)> {
    instance().prop_flat_map(|inst| {
        let n = inst.n_items();
        let l = inst.n_slots();
        (Just(inst), subsequence((0..n).collect::<Vec<_>>(), l).prop_shuffle())
    })
}

/// Reward computed per topic as one minus the chance that nobody clicks.
fn reward_by_topic(inst: &Instance, list: &[usize]) -> f64 {
    (0..inst.n_topics())
        .map(|m| {
            let miss: f64 = list
                .iter()
                .filter(|&&k| inst.topic_of(k) == m)
                .map(|&k| 1.0 - inst.ctr(k))
                .product();
            inst.topic_dist()[m] * (1.0 - miss)
        })
        .sum()
}

proptest! {
    #[test]
    fn reward_decomposes_over_slots_and_topics((inst, list) in instance_and_list()) {
        let mu = inst.expected_reward(&list).unwrap();
        let by_slot: f64 = (0..list.len()).map(|l| inst.success_rate(&list, l).unwrap()).sum();
        prop_assert!((mu - by_slot).abs() < 1e-12);
        prop_assert!((mu - reward_by_topic(&inst, &list)).abs() < 1e-12);
    }

    #[test]
    fn success_rate_ignores_lower_slots((inst, list) in instance_and_list()) {
        for l in 0..list.len() {
            let prefix = &list[..=l];
            prop_assert_eq!(
                inst.success_rate(&list, l).unwrap().to_bits(),
                inst.success_rate(prefix, l).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn reward_is_invariant_to_item_relabelling((inst, list) in instance_and_list(), shift in 1usize..7) {
        let n = inst.n_items();
        let relabel = |k: usize| (k + shift) % n;
        let mut topic_of = vec![0; n];
        let mut ctr = vec![0.0; n];
        for k in 0..n {
            topic_of[relabel(k)] = inst.topic_of(k);
            ctr[relabel(k)] = inst.ctr(k);
        }
        let renamed = Instance::new(topic_of, ctr, inst.topic_dist().to_vec(), inst.n_slots()).unwrap();
        let mapped: Vec<usize> = list.iter().map(|&k| relabel(k)).collect();
        prop_assert!((inst.expected_reward(&list).unwrap() - renamed.expected_reward(&mapped).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn greedy_prefixes_are_optimal_and_gains_shrink(inst in instance()) {
        let full = greedy_optimal_list(&inst, inst.n_slots()).unwrap();
        for l in 1..=inst.n_slots() {
            let (_, best) = brute_force_optimal(&inst, l).unwrap();
            let prefix = &full[..l];
            prop_assert!((inst.expected_reward(prefix).unwrap() - best).abs() < 1e-12);
        }
        let gains: Vec<f64> = (0..full.len()).map(|l| inst.success_rate(&full, l).unwrap()).collect();
        for w in gains.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15);
        }
    }
}

fn toy_config(policies: Vec<PolicySpec>, mode: RegretMode) -> ExperimentConfig {
    ExperimentConfig {
        source: InstanceSource::Toy,
        policies,
        horizon: 4000,
        runs: 6,
        master_seed: 23,
        mode,
        checkpoints: None,
    }
}

#[test]
fn batches_are_deterministic_and_order_free() {
    let specs = vec![PolicySpec::Ldr, PolicySpec::PieStar, PolicySpec::Rba];
    let a = run_batch(&toy_config(specs.clone(), RegretMode::Pseudo)).unwrap();
    let b = run_batch(&toy_config(specs, RegretMode::Pseudo)).unwrap();
    assert_eq!(a.runs_csv(), b.runs_csv());
    assert_eq!(a.aggregate_csv(), b.aggregate_csv());

    let reordered = run_batch(&toy_config(vec![PolicySpec::Rba, PolicySpec::Ldr], RegretMode::Pseudo)).unwrap();
    for name in ["ldr", "rba"] {
        let x: Vec<_> = a.runs_of(name).collect();
        let y: Vec<_> = reordered.runs_of(name).collect();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn optimal_static_list_has_no_pseudo_regret() {
    let batch = run_batch(&toy_config(vec![PolicySpec::Static(vec![0, 2])], RegretMode::Pseudo)).unwrap();
    for row in &batch.aggregate {
        assert_eq!((row.mean, row.q05, row.q95), (0.0, 0.0, 0.0));
    }
}

#[test]
fn realized_regret_averages_to_pseudo_regret() {
    // A fixed suboptimal list: pseudo regret is exactly n * 0.135 and the
    // realized regret of one round has variance at most 1/4.
    let spec = vec![PolicySpec::Static(vec![0, 1])];
    let mut cfg = toy_config(spec.clone(), RegretMode::Realized);
    cfg.runs = 40;
    let realized = run_batch(&cfg).unwrap();
    let pseudo = run_batch(&ExperimentConfig {
        mode: RegretMode::Pseudo,
        ..cfg.clone()
    })
    .unwrap();
    let last = |b: &ldr_core::BatchResult| b.mean_curve("static:1,2").last().unwrap().1;
    let expected = 0.135 * cfg.horizon as f64;
    assert!((last(&pseudo) - expected).abs() < 1e-6);
    let se = (0.25 * cfg.horizon as f64 / cfg.runs as f64).sqrt();
    assert!(
        (last(&realized) - expected).abs() < 4.0 * se,
        "{} vs {expected}",
        last(&realized)
    );
}

#[test]
fn every_policy_keeps_lists_valid_on_generated_instances() {
    for i in 0..3 {
        let batch = run_batch(&ExperimentConfig {
            source: InstanceSource::Artificial {
                n_items: 9,
                n_slots: 4,
                n_topics: 3,
                seed: derive_seed(3, "instance", i),
            },
            policies: vec![
                PolicySpec::Ldr,
                PolicySpec::LdrRandomized,
                PolicySpec::PieStar,
                PolicySpec::Rba,
            ],
            horizon: 2000,
            runs: 2,
            master_seed: 1,
            mode: RegretMode::Pseudo,
            checkpoints: None,
        })
        .unwrap();
        for t in &batch.trajectories {
            assert!(
                t.cumulative_regret.windows(2).all(|w| w[1] >= w[0] - 1e-9),
                "{}",
                t.policy
            );
            let list = t.final_list.as_ref().unwrap();
            batch.instance.check_list(list).unwrap();
        }
    }
}

fn record(item: &str, position: u32, topic: &str) -> ClickRecord {
    ClickRecord {
        item: item.into(),
        position,
        topic: topic.into(),
    }
}

#[test]
fn fit_ignores_record_order_and_rewards_extra_clicks() {
    let mut log = vec![
        record("a", 1, "x"),
        record("a", 1, "x"),
        record("b", 2, "x"),
        record("c", 1, "y"),
        record("b", 3, "x"),
        record("d", 2, "y"),
    ];
    let fitted = fit_instance(&log, 0.2, 2).unwrap();
    log.reverse();
    assert_eq!(fit_instance(&log, 0.2, 2).unwrap(), fitted);
    assert_eq!(fitted.instance.topic_dist().iter().sum::<f64>(), 1.0);

    let b = fitted.items.iter().position(|s| s == "b").unwrap();
    log.push(record("b", 2, "x"));
    let more = fit_instance(&log, 0.2, 2).unwrap();
    let b_more = more.items.iter().position(|s| s == "b").unwrap();
    assert!(more.instance.ctr(b_more) >= fitted.instance.ctr(b));
}

#[test]
fn toy_optimum_is_stable() {
    let inst = toy_instance();
    let best = greedy_optimal_list(&inst, 2).unwrap();
    assert_eq!(best.items(), &[0, 2]);
    assert_eq!(reward_by_topic(&inst, &best), 0.625);
}
