use proptest::prelude::*;

use guesswhat::analysis::{change_table, count_repeats, logistic_fit, repetition_stats, with_intercept, LogitConfig, Scope};
use guesswhat::checkpoint::{Checkpoint, ModuleId, Persist};
use guesswhat::data::{filter_games, toyworld_generate, Answer, ToyConfig, Vocab};
use guesswhat::decider::DmVariant;
use guesswhat::game::{GameResult, PlayMode, Turn};
use guesswhat::oracle::Oracle;
use guesswhat::profile::Profile;
use guesswhat::trainer::{EarlyStopping, StopSignal};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn result(id: i64, mode: PlayMode, questions: &[String], success: bool) -> GameResult {
    GameResult {
        game_id: id,
        mode,
        success,
        decided: true,
        n_questions: questions.len(),
        guessed_object_id: 0,
        transcript: questions
            .iter()
            .map(|q| Turn {
                question: q.clone(),
                answer: Answer::Yes,
                decision: None,
            })
            .collect(),
    }
}

fn question_pool() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "is it a dog ?", "is it red ?", "is it the man ?", "is it on the left ?", "is it a cup ?", "is it big ?",
    ])
    .prop_map(str::to_string)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn toy_world_is_a_function_of_the_seed(seed in 0u64..1000, n in 1usize..30) {
        let a = toyworld_generate(seed, n, &ToyConfig::default()).unwrap();
        let b = toyworld_generate(seed, n, &ToyConfig::default()).unwrap();
        prop_assert_eq!(&a, &b);
        let (kept, report) = filter_games(a.games.clone());
        prop_assert_eq!(report.dropped, 0);
        let (again, _) = filter_games(kept.clone());
        prop_assert_eq!(again, kept);
    }

    #[test]
    fn vocabulary_ignores_question_order(mut qs in prop::collection::vec(question_pool(), 1..20)) {
        let a = Vocab::build(qs.iter().map(String::as_str), 1).unwrap();
        qs.reverse();
        let b = Vocab::build(qs.iter().map(String::as_str), 1).unwrap();
        prop_assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn duplicate_raises_within_rate(qs in prop::collection::vec(question_pool(), 1..10), pick in 0usize..10) {
        let dup = qs[pick % qs.len()].clone();
        let mut more = qs.clone();
        more.push(dup);
        let m = PlayMode::BaselineFixed(5);
        let before = repetition_stats(&[result(1, m, &qs, true)], Scope::Overall).within_game;
        let after = repetition_stats(&[result(1, m, &more, true)], Scope::Overall).within_game;
        prop_assert!(after > before);
        prop_assert!(count_repeats(&more, Scope::ObjectsOnly) <= count_repeats(&more, Scope::Overall));
    }

    #[test]
    fn distinct_order_does_not_matter(perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
        let base: Vec<String> = (0..6).map(|i| format!("is it number {i} ?")).collect();
        let shuffled: Vec<String> = perm.iter().map(|&i| base[i].clone()).collect();
        let m = PlayMode::BaselineFixed(6);
        let a = repetition_stats(&[result(1, m, &base, true)], Scope::Overall);
        let b = repetition_stats(&[result(1, m, &shuffled, true)], Scope::Overall);
        prop_assert_eq!(a.within_game, b.within_game);
        prop_assert_eq!(a.across_games, b.across_games);
    }

    #[test]
    fn change_table_partitions(games in prop::collection::vec((1usize..11, any::<bool>(), any::<bool>(), any::<bool>()), 1..30)) {
        let dm_mode = PlayMode::DmGated(DmVariant::Dm2, 10);
        let q = |k: usize| (0..k).map(|i| format!("q{i} ?")).collect::<Vec<_>>();
        let mut dm = Vec::new();
        let mut base = Vec::new();
        for (i, &(n, s_dm, s_base, decided)) in games.iter().enumerate() {
            let mut r = result(i as i64, dm_mode, &q(n), s_dm);
            r.decided = decided;
            dm.push(r);
            base.push(result(i as i64, PlayMode::BaselineFixed(5), &q(5), s_base));
        }
        let t = change_table(&dm, &base).unwrap();
        for block in [&t.all, &t.decided] {
            let sum = block.fewer.total() + block.equal.total() + block.more.total();
            prop_assert_eq!(sum, block.denominator);
            let fr = block.frac(block.fewer.plus) + block.frac(block.fewer.minus) + block.frac(block.fewer.none);
            prop_assert_eq!(fr, block.frac(block.fewer.total()));
        }
        prop_assert_eq!(t.all.denominator, games.len());
    }

    #[test]
    fn early_stopping_keeps_the_minimum(losses in prop::collection::vec(0.0f64..10.0, 1..40), patience in 1usize..6) {
        let mut s = EarlyStopping::new(patience);
        let mut seen = Vec::new();
        for &l in &losses {
            seen.push(l);
            if s.observe(l) == StopSignal::Stop {
                break;
            }
        }
        let min = seen.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(s.best_loss, min);
        prop_assert_eq!(seen[s.best_epoch - 1], min);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn logistic_scaling_and_monotone_likelihood(seed in 0u64..500, c in 0.2f64..5.0) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..120).map(|_| vec![rng.random_range(-2.0..2.0)]).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| {
                let p = 1.0 / (1.0 + (-(0.3 + 0.8 * r[0])).exp());
                if rng.random::<f64>() < p { 1.0 } else { 0.0 }
            })
            .collect();
        let fit = logistic_fit(&with_intercept(&rows), &y, &["i", "x"], LogitConfig::default()).unwrap();
        prop_assume!(fit.converged);
        prop_assert!(fit.log_likelihoods.windows(2).all(|w| w[1] >= w[0]));
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| vec![c * r[0]]).collect();
        let fs = logistic_fit(&with_intercept(&scaled), &y, &["i", "x"], LogitConfig::default()).unwrap();
        prop_assert!((fs.coefficients[1] - fit.coefficients[1] / c).abs() < 1e-6);
        prop_assert!((fs.coefficients[0] - fit.coefficients[0]).abs() < 1e-6);
        prop_assert!(fit.p_values.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn checkpoint_round_trip(seed in 0u64..1000) {
        let o: Oracle<f32> = Oracle::new(Profile::Toy.oracle(17, 11), &mut ChaCha8Rng::seed_from_u64(seed));
        let ck = o.to_checkpoint(Profile::Toy, "h");
        let back = Checkpoint::from_reader(&ck.to_bytes()[..]).unwrap();
        let o2 = Oracle::from_checkpoint(back, ModuleId::Oracle, Profile::Toy, "h").unwrap();
        prop_assert_eq!(o2.store, o.store);
    }
}
