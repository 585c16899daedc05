use anticoord::bandit::{BanditState, BanditVariant};
use anticoord::game::{resolve_step, Action, Play};
use anticoord::metrics::{jain_index, jain_index_counts};
use anticoord::sim::{run_instance, AgentKind, SimOptions};
use anticoord::theory::{build_chain, hitting_probability, hitting_probability_lower_bound, ChainVariant, DtmcSpec};
use anticoord::GameConfig;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn variant() -> impl Strategy<Value = BanditVariant> {
    prop_oneof![
        Just(BanditVariant::Exp3),
        Just(BanditVariant::Cexp3),
        Just(BanditVariant::Exp4),
        Just(BanditVariant::Exp4P),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jain_is_bounded_and_scale_free(x in prop::collection::vec(0.0f64..100.0, 1..40), c in 0.01f64..1e3) {
        prop_assume!(x.iter().any(|&v| v > 0.0));
        let j = jain_index(&x).unwrap();
        let n = x.len() as f64;
        prop_assert!(j >= 1.0 / n - 1e-12 && j <= 1.0 + 1e-12);
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        prop_assert!((jain_index(&scaled).unwrap() - j).abs() < 1e-9);
    }

    #[test]
    fn jain_of_equal_counts_is_one(v in 1u64..1000, n in 1usize..50) {
        prop_assert!((jain_index_counts(&vec![v; n]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bandit_probabilities_stay_on_the_simplex(
        v in variant(),
        r in 1usize..6,
        k in 1usize..5,
        seed in any::<u64>(),
        steps in 1usize..200,
    ) {
        let mut b = BanditState::new(v, r, k, 1_000, -1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in 0..steps {
            let ctx = t % k + 1;
            let p = b.probabilities(ctx).unwrap();
            prop_assert_eq!(p.len(), r + 1);
            prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let arm = b.select_arm(ctx, &mut rng);
            let payoff = if rand::Rng::gen_bool(&mut rng, 0.5) { 1.0 } else { -1.0 };
            let payoff = if arm == Action::Yield { 0.0 } else { payoff };
            b.update(ctx, arm, payoff).unwrap();
        }
    }

    #[test]
    fn stage_payoffs_follow_the_accessor_count(
        targets in prop::collection::vec(0usize..5, 1..12),
        zeta in -5.0f64..-0.01,
    ) {
        let cfg = GameConfig::custom(targets.len(), 4, 3, zeta, 0.9, 0.5, 10, 0).unwrap();
        let plays: Vec<Play> = targets
            .iter()
            .map(|&r| if r == 0 { Play::idle() } else { Play::access(r) })
            .collect();
        let out = resolve_step(&cfg, 0, &plays, &vec![true; plays.len()]).unwrap();
        for (o, &r) in out.agents.iter().zip(&targets) {
            let expected = match r {
                0 => 0.0,
                r if out.accessor_counts[r - 1] == 1 => 1.0,
                _ => zeta,
            };
            prop_assert_eq!(o.payoff, expected);
        }
        let used = out.singly_accessed() + out.colliding_resources() + out.idle_resources();
        prop_assert_eq!(used, 4);
    }

    #[test]
    fn chain_rows_are_stochastic(n in 1usize..60, p in 0.01f64..0.99, y in any::<bool>()) {
        let spec = DtmcSpec::new(if y { ChainVariant::Y } else { ChainVariant::X }, n, p).unwrap();
        let m = build_chain(&spec).unwrap();
        for i in 0..m.nrows() {
            let row = m.row(i);
            prop_assert!(row.iter().all(|&x| x >= 0.0));
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn hitting_probability_respects_the_lower_bound(n in 2usize..128, p in 0.01f64..0.99) {
        let spec = DtmcSpec::new(ChainVariant::Y, n, p).unwrap();
        let h = hitting_probability(&spec, &[1]).unwrap();
        let bound = hitting_probability_lower_bound(p);
        prop_assert!(h[1..].iter().all(|&x| x >= bound - 1e-10));
        prop_assert!((h[2] - bound).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn runs_are_reproducible(seed in any::<u64>(), bandit in any::<bool>(), r in 1usize..5, extra in 0usize..6) {
        let cfg = GameConfig::new(r + extra, r, 400, seed).unwrap();
        let kind = if bandit { AgentKind::Bandit(BanditVariant::Cexp3) } else { AgentKind::Convention };
        let a = run_instance(&cfg, kind, &SimOptions::default()).unwrap();
        let b = run_instance(&cfg, kind, &SimOptions::default()).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.max_successes_per_episode <= 1);
    }
}
