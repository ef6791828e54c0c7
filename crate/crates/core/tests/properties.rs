use proptest::prelude::*;

use xtopk::harness::{ProgressiveStats, MultiLabelDataset};
use xtopk::hierarchy::{beam_search, EffectiveArm, EffectiveArmSet};
use xtopk::sampling::{
    boltzmann_distribution, epsilon_greedy_distribution, igw_distribution, select_topk, top_n,
    Gamma,
};
use xtopk::{
    AugmentedWeights, LabelTree, Rng, RoutingBank, SparseVector, StrategyConfig, StrategyKind,
};

fn routing_for(tree: &LabelTree, dim: usize, seed: u64) -> RoutingBank {
    let mut rng = Rng::new(seed);
    let mut scorers = vec![None];
    for _ in 1..tree.num_nodes() {
        let w: Vec<f64> = (0..dim).map(|_| rng.uniform() - 0.5).collect();
        scorers.push(Some(AugmentedWeights::new(SparseVector::from_dense(&w).unwrap(), 0.5)));
    }
    RoutingBank::new(dim, scorers).unwrap()
}

fn kind() -> impl Strategy<Value = StrategyKind> {
    prop::sample::select(StrategyKind::ALL.to_vec())
}

proptest! {
    #[test]
    fn beam_partitions_arms(num_arms in 1usize..300, m in 1usize..12, b in 1usize..6, seed in any::<u64>()) {
        let tree = LabelTree::balanced(num_arms, m).unwrap();
        let routing = routing_for(&tree, 5, seed);
        let x: Vec<f64> = { let mut r = Rng::new(seed ^ 1); (0..5).map(|_| r.uniform() - 0.5).collect() };
        let set = beam_search(&tree, &routing, &SparseVector::from_dense(&x).unwrap(), b).unwrap();
        let mut count = vec![0; num_arms];
        for e in set.entries() {
            match *e {
                EffectiveArm::Node(n) => tree.subtree_arms(n).iter().for_each(|&a| count[a as usize] += 1),
                EffectiveArm::Arm(a) => count[a as usize] += 1,
            }
        }
        prop_assert!(count.iter().all(|&c| c == 1));
        prop_assert!(set.len() <= EffectiveArmSet::size_bound(&tree, b));
        prop_assert!(set.nodes().iter().all(|e| e.is_node()));
        prop_assert!(set.singletons().windows(2).all(|w| w[0].bank_id(num_arms) < w[1].bank_id(num_arms)));
    }

    #[test]
    fn distributions_are_normalized(scores in prop::collection::vec(0.0f64..1.0, 1..40), gamma in 0.0f64..1e6,
                                    beta in 0.0f64..5.0, n_prev in 0u64..100_000, eps in 0.0f64..=1.0) {
        for d in [
            igw_distribution(&scores, gamma).unwrap(),
            boltzmann_distribution(&scores, beta, n_prev).unwrap(),
            epsilon_greedy_distribution(&scores, eps).unwrap(),
        ] {
            prop_assert!(d.probs().iter().all(|&p| p >= 0.0));
            prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let d = igw_distribution(&scores, gamma).unwrap();
        let best = top_n(&scores, 1)[0];
        prop_assert!(d.prob_of(best) >= 1.0 / scores.len() as f64 - 1e-12);
        let shifted: Vec<f64> = scores.iter().map(|s| s + 0.25).collect();
        let e = igw_distribution(&shifted, gamma).unwrap();
        for (p, q) in d.probs().iter().zip(e.probs()) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn slates_are_distinct_with_greedy_prefix(scores in prop::collection::vec(0.0f64..1.0, 5..30),
                                              k in 1usize..5, r in 0usize..5, kind in kind(),
                                              n_prev in 0u64..1000, seed in any::<u64>()) {
        let r = r.min(k);
        let config = StrategyConfig { kind, k, r, ..StrategyConfig::default() };
        let gamma = Gamma::Practical { c: 1.0, n_prev };
        let slate = select_topk(&scores, &config, gamma, n_prev, &Rng::new(seed)).unwrap();
        prop_assert_eq!(slate.len(), k);
        let mut sorted = slate.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), k);
        let greedy = k - config.explore_slots();
        prop_assert_eq!(&slate[..greedy], &top_n(&scores, greedy)[..]);
    }

    #[test]
    fn progressive_stats_invariants(rewards in prop::collection::vec(0.0f64..=5.0, 1..300),
                                    regrets in prop::collection::vec(0.0f64..1.0, 300)) {
        let n = rewards.len();
        let stats = ProgressiveStats::from_steps(rewards, Some(regrets[..n].to_vec()));
        prop_assert_eq!(stats.checkpoints.last().unwrap().t, n as u64);
        for w in stats.checkpoints.windows(2) {
            prop_assert!(w[1].cumulative_reward >= w[0].cumulative_reward);
            prop_assert!(w[1].cumulative_regret.unwrap() >= w[0].cumulative_regret.unwrap());
        }
        prop_assert!(stats.checkpoints.iter().all(|c| (0.0..=5.0 + 1e-12).contains(&c.progressive_mean)));
    }

    #[test]
    fn dataset_round_trip(seed in any::<u64>(), n in 1usize..30, dim in 1usize..20, labels in 1usize..15) {
        let mut rng = Rng::new(seed);
        let rows: Vec<SparseVector> = (0..n).map(|_| {
            let mut pairs = Vec::new();
            for i in 0..dim as u32 {
                if rng.uniform() < 0.4 {
                    pairs.push((i, (rng.uniform() - 0.5) * 1e3));
                }
            }
            SparseVector::from_pairs(dim, pairs).unwrap()
        }).collect();
        let ys: Vec<Vec<u32>> = (0..n).map(|_| (0..labels as u32).filter(|_| rng.uniform() < 0.3).collect()).collect();
        let data = MultiLabelDataset::new(dim, labels, rows, ys).unwrap();
        let mut buf = Vec::new();
        data.write_to(&mut buf).unwrap();
        let back = MultiLabelDataset::read_from(buf.as_slice(), "mem").unwrap();
        prop_assert_eq!(back, data);
    }
}
