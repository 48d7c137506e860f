//! Property suites over the public API.

use alkit::bench::{aggregate_win_tie_loss, compute_alc, paired_t_test, LearningCurve, Outcome, RunRecord};
use alkit::data::seed::rng_from_seed;
use alkit::data::{apply_preprocess, fit_preprocess, stratified_kfold, RawDataset};
use alkit::env::{begin_episode, ActionFeatures, EpisodeConfig, StateVector};
use alkit::models::ModelKind;
use alkit::rl::{
    epsilon_value, tabular_q_update, EpsilonSchedule, Experience, NetworkShape, QNetwork, QTable,
    ReplayBuffer,
};
use alkit::strategies::{margin, select_margin, PolicyArtifact, StrategyKind, FEATURE_SCHEMA};
use alkit::synth;
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

fn experience(tag: f64) -> Experience {
    let a = ActionFeatures {
        score: tag,
        mean_dist_labelled: 0.0,
        mean_dist_unlabelled: 0.0,
    };
    Experience {
        state: StateVector(vec![tag; 3]),
        action: a,
        reward: -1.0,
        next_state: StateVector(vec![tag; 3]),
        next_actions: vec![a],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = rng_from_seed(seed);
        let shape = NetworkShape { state_dim: 6, hidden1: 4, action_dim: 3, hidden2: 3 };
        let net = QNetwork::init(shape, &mut rng);
        let samples: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..n)
            .map(|_| {
                (
                    (0..6).map(|_| rng.gen::<f64>()).collect(),
                    (0..3).map(|_| rng.gen::<f64>()).collect(),
                    rng.gen_range(-10.0..0.0),
                )
            })
            .collect();
        let loss = |net: &QNetwork| {
            samples.iter().map(|(s, a, y)| (net.forward_raw(s, a).unwrap() - y).powi(2)).sum::<f64>()
                / (2.0 * n as f64)
        };
        let batch: Vec<(&[f64], &[f64], f64)> =
            samples.iter().map(|(s, a, y)| (s.as_slice(), a.as_slice(), *y)).collect();
        let grad = net.backward_raw(&batch).unwrap();
        prop_assert_eq!(grad.len(), shape.param_count());
        let h = 1e-5;
        for j in 0..grad.len() {
            let (mut p, mut m) = (net.clone(), net.clone());
            p.theta[j] += h;
            m.theta[j] -= h;
            let fd = (loss(&p) - loss(&m)) / (2.0 * h);
            prop_assert!((grad[j] - fd).abs() <= 1e-4 * grad[j].abs().max(fd.abs()).max(1e-6));
        }
    }

    #[test]
    fn q_values_agree_with_forward(seed in any::<u64>(), k in 1usize..8) {
        let mut rng = rng_from_seed(seed);
        let net = QNetwork::init(NetworkShape::default(), &mut rng);
        let s = StateVector::from_scores((0..30).map(|_| rng.gen()).collect());
        let actions: Vec<ActionFeatures> = (0..k)
            .map(|_| ActionFeatures { score: rng.gen(), mean_dist_labelled: rng.gen(), mean_dist_unlabelled: rng.gen() })
            .collect();
        let q = net.q_values(&s, &actions).unwrap();
        for (a, v) in actions.iter().zip(&q) {
            prop_assert_eq!(net.forward(&s, a).unwrap(), *v);
        }
    }

    #[test]
    fn policy_artifact_round_trips_bit_exactly(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let artifact = PolicyArtifact {
            network: QNetwork::init(NetworkShape::default(), &mut rng),
            v_size: 30,
            feature_schema: FEATURE_SCHEMA,
            hyperparameters: serde_json::json!({ "seed": seed }),
            corpus_hash: "abc".into(),
        };
        let back = PolicyArtifact::from_bytes(&artifact.to_bytes().unwrap()).unwrap();
        let bits = |a: &PolicyArtifact| a.network.theta.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&artifact), bits(&back));
    }

    #[test]
    fn replay_invariants(
        capacity in 1usize..20,
        pushes in 1usize..50,
        floor in 0.0f64..0.1,
        exponent in 0.0f64..4.0,
        deltas in proptest::collection::vec(-5.0f64..5.0, 1..10),
    ) {
        let mut b = ReplayBuffer::new(capacity, exponent, floor).unwrap();
        for k in 0..pushes {
            b.push(experience(k as f64));
        }
        prop_assert_eq!(b.len(), pushes.min(capacity));
        let idx: Vec<usize> = (0..deltas.len()).map(|i| i % b.len()).collect();
        b.update_priorities(&idx, &deltas).unwrap();
        let mut last = std::collections::HashMap::new();
        for (i, d) in idx.iter().zip(&deltas) {
            last.insert(*i, *d);
        }
        for (i, d) in last {
            prop_assert_eq!(b.priority(i).unwrap(), d.abs() + floor);
        }
        let max = b.priorities().iter().copied().fold(0.0, f64::max);
        prop_assert_eq!(b.max_priority(), max);
        let p = b.probabilities();
        if p.iter().all(|x| x.is_finite()) {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
        }
        b.push(experience(-1.0));
        let newest = b.priorities().iter().copied().fold(0.0, f64::max);
        prop_assert_eq!(newest, max);
    }

    #[test]
    fn epsilon_is_monotone_and_bounded(start in 0.5f64..1.0, end in 0.0f64..0.5, steps in 1u64..2000, t in 0u64..5000) {
        let s = EpsilonSchedule { start, end, steps };
        let (a, b) = (epsilon_value(t, &s), epsilon_value(t + 1, &s));
        prop_assert!(b <= a);
        prop_assert!(a <= start && a >= end);
    }

    #[test]
    fn tabular_update_moves_toward_target(
        q0 in -5.0f64..5.0, next in -5.0f64..5.0, r in -2.0f64..2.0,
        alpha in 0.001f64..1.0, gamma in 0.0f64..0.99,
    ) {
        let mut q = QTable::zeros(&[1, 1]);
        q.values[0][0] = q0;
        q.values[1][0] = next;
        tabular_q_update(&mut q, 0, 0, r, 1, alpha, gamma).unwrap();
        let gap = (r + gamma * next - q0).abs();
        prop_assert!((q.values[0][0] - q0).abs() <= alpha * gap + 1e-12);
    }

    #[test]
    fn kfold_partitions_rows(n in 10usize..200, k in 2usize..6, seed in any::<u64>()) {
        let labels: Vec<u8> = (0..n).map(|i| (i % 3 == 0) as u8).collect();
        prop_assume!(labels.iter().filter(|&&y| y == 1).count() >= k);
        let split = stratified_kfold(&labels, k, seed).unwrap();
        let mut seen = vec![0; n];
        for f in 0..k {
            let test = split.test_rows(f);
            let train = split.train_rows(f);
            prop_assert_eq!(test.len() + train.len(), n);
            for &r in &test {
                seen[r] += 1;
            }
            let ones = test.iter().filter(|&&r| labels[r] == 1).count();
            let total = labels.iter().filter(|&&y| y == 1).count();
            prop_assert!((ones as f64 - total as f64 / k as f64).abs() <= 1.0);
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn preprocessing_ignores_rows_outside_the_fit_set(seed in any::<u64>(), shift in 1.0f64..100.0) {
        let mut rng = rng_from_seed(seed);
        let x = Array2::from_shape_fn((40, 3), |_| rng.gen::<f64>());
        let labels: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let fit_rows: Vec<usize> = (0..30).collect();
        let base = RawDataset::from_numeric("p", &x, labels.clone()).unwrap();
        let mut moved = x.clone();
        for r in 30..40 {
            for c in 0..3 {
                moved[[r, c]] += shift;
            }
        }
        let perturbed = RawDataset::from_numeric("p", &moved, labels).unwrap();
        let a = apply_preprocess(&fit_preprocess(&base, &fit_rows).unwrap(), &base).unwrap();
        let b = apply_preprocess(&fit_preprocess(&perturbed, &fit_rows).unwrap(), &perturbed).unwrap();
        for r in 0..30 {
            prop_assert_eq!(a.features.row(r), b.features.row(r));
        }
    }

    #[test]
    fn t_test_is_antisymmetric(a in proptest::collection::vec(0.0f64..100.0, 2..12), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let b: Vec<f64> = a.iter().map(|x| x + rng.gen_range(-5.0..5.0)).collect();
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        prop_assert_eq!(ab.t, -ba.t);
        prop_assert_eq!(ab.p, ba.p);
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }

    #[test]
    fn alc_is_a_percentage(accs in proptest::collection::vec(0.0f64..=1.0, 1..300)) {
        let curve = LearningCurve {
            dataset: "d".into(),
            model: ModelKind::Logistic,
            strategy: StrategyKind::Random,
            fold: 0,
            repeat: 0,
            seed: 0,
            budgets: (2..2 + accs.len()).collect(),
            accuracies: accs.clone(),
            initial: None,
            queries: Vec::new(),
            truncated_at: None,
        };
        let alc = compute_alc(&curve).unwrap();
        let lo = accs.iter().copied().fold(f64::INFINITY, f64::min) * 100.0;
        let hi = accs.iter().copied().fold(0.0, f64::max) * 100.0;
        prop_assert!(alc >= lo - 1e-9 && alc <= hi + 1e-9);
    }

    #[test]
    fn win_tie_loss_accounts_for_every_dataset(seed in any::<u64>(), datasets in 1usize..5) {
        let mut rng = rng_from_seed(seed);
        let mut runs = Vec::new();
        for d in 0..datasets {
            for strategy in [StrategyKind::Random, StrategyKind::Margin, StrategyKind::Learned] {
                let offset = rng.gen_range(0.0..5.0);
                for fold in 0..5 {
                    runs.push(RunRecord {
                        dataset: format!("d{d}"),
                        model: ModelKind::Forest,
                        strategy,
                        fold,
                        repeat: 0,
                        seed: 0,
                        alc: 70.0 + offset + rng.gen_range(0.0..1.0),
                        truncated_at: None,
                    });
                }
            }
        }
        let report = aggregate_win_tie_loss(&runs).unwrap();
        let mut wins = 0;
        for s in [StrategyKind::Random, StrategyKind::Margin, StrategyKind::Learned] {
            let [w, t, l] = report.win_tie_loss(ModelKind::Forest, s);
            prop_assert_eq!(w + t + l, datasets);
            wins += w;
        }
        prop_assert!(wins <= datasets);
        for d in &report.datasets {
            let cells: Vec<_> = report.cells.iter().filter(|c| &c.dataset == d).collect();
            let best = cells.iter().map(|c| c.mean_alc).fold(f64::NEG_INFINITY, f64::max);
            for c in cells {
                if c.mean_alc == best {
                    prop_assert_ne!(c.outcome, Outcome::Loss);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn episodes_keep_evaluation_rows_apart(seed in any::<u64>(), steps in 1usize..6) {
        let raw = synth::gaussian_blobs("b", 150, 3, 2.0, seed);
        let config = EpisodeConfig::default();
        let mut state = begin_episode(&raw, &config, seed).unwrap();
        let n_total = state.labelled().len() + state.unlabelled().len();
        for _ in 0..steps {
            if state.terminal_reason().is_some() {
                break;
            }
            let row = select_margin(&state).unwrap();
            let scores = state.candidate_scores().unwrap();
            let best = scores.iter().map(|&p| margin(p)).fold(f64::INFINITY, f64::min);
            let pos = state.unlabelled().iter().position(|&r| r == row).unwrap();
            prop_assert_eq!(margin(scores[pos]), best);
            state.step(row).unwrap();
            prop_assert!(state.labelled().contains(&row));
            prop_assert!(!state.unlabelled().contains(&row));
        }
        prop_assert_eq!(state.labelled().len() + state.unlabelled().len(), n_total);
        let mut all: Vec<usize> = state
            .labelled()
            .iter()
            .chain(state.unlabelled())
            .chain(state.v_set())
            .chain(state.test_rows())
            .copied()
            .collect();
        let len = all.len();
        all.sort_unstable();
        all.dedup();
        prop_assert_eq!(all.len(), len);
        let s = state.compute_state().unwrap();
        prop_assert_eq!(s.len(), 30);
        prop_assert!(s.as_slice().windows(2).all(|w| w[0] >= w[1]));
        if state.unlabelled().is_empty() {
            return Ok(());
        }
        for a in state.all_action_features().unwrap() {
            prop_assert!((0.0..=1.0).contains(&a.score));
            prop_assert!((0.0..=2.0 + 1e-12).contains(&a.mean_dist_labelled));
            prop_assert!((0.0..=2.0 + 1e-12).contains(&a.mean_dist_unlabelled));
        }
    }
}
