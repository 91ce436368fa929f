use pkde_nn::HyperParams;
use pkde_tuner::bench::{analytic_objective, grid_quantile, sharp_objective};
use pkde_tuner::*;
use proptest::prelude::*;

fn run(objective: fn(&HyperParams) -> f64, cfg: &SearchConfig) -> SearchResult {
    search(&SearchSpace::default(), cfg, Vec::new(), |hp| Ok(Outcome::Completed(objective(hp))), |_| Ok(())).unwrap()
}

#[test]
fn fifty_trials_reach_the_top_five_percent() {
    let space = SearchSpace::default();
    let threshold = grid_quantile(&space, 1000, 0.05, analytic_objective);
    for seed in 0..5 {
        let r = run(analytic_objective, &SearchConfig::new(50, 60, seed));
        let best = r.trials[r.best_index].validation_mae.unwrap();
        assert!(best <= threshold, "seed {seed}: best {best} threshold {threshold}");
    }
}

#[test]
fn suggestions_concentrate_near_a_sharp_optimum() {
    let space = SearchSpace::default();
    // warmup plus a few surrogate steps
    let mut history = run(sharp_objective, &SearchConfig::new(12, 60, 3)).trials;
    let mut near = 0;
    for _ in 0..20 {
        let hp = suggest(&history, &space, 3);
        if (hp.learning_rate.log10() + 4.0).abs() <= 1.0 {
            near += 1;
        }
        let i = history.len();
        history.push(Trial::completed(i, hp, sharp_objective(&hp), 0.0));
    }
    assert!(near >= 12, "{near} of 20 within a decade");
}

#[test]
fn seeded_rerun_repeats_the_trial_sequence() {
    let cfg = SearchConfig::new(20, 60, 11);
    let a = run(analytic_objective, &cfg);
    let b = run(analytic_objective, &cfg);
    let hp = |r: &SearchResult| r.trials.iter().map(|t| t.hp).collect::<Vec<_>>();
    assert_eq!(hp(&a), hp(&b));
}

#[test]
fn random_mode_is_a_usable_baseline() {
    let mut cfg = SearchConfig::new(30, 60, 2);
    cfg.random = true;
    let r = run(analytic_objective, &cfg);
    assert_eq!(r.trials.len(), 30);
    assert!(r.trials.iter().all(|t| SearchSpace::default().contains(&t.hp)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn best_is_invariant_to_monotone_rescaling(
        scores in prop::collection::vec(prop::option::weighted(0.8, 0.001f64..1.0), 1..30),
        a in 0.1f64..10.0,
        b in -1.0f64..1.0,
    ) {
        let hp = HyperParams::default();
        let make = |f: &dyn Fn(f64) -> f64| -> Vec<Trial> {
            scores.iter().enumerate().map(|(i, s)| match s {
                Some(v) => Trial::completed(i, hp, f(*v), 0.0),
                None => Trial::diverged(i, hp, 0.0),
            }).collect()
        };
        let base = best_trial(&make(&|v| v));
        prop_assert_eq!(base, best_trial(&make(&|v| a * v + b)));
        prop_assert_eq!(base, best_trial(&make(&|v| v.ln())));
    }

    #[test]
    fn every_suggestion_is_in_the_space(seed in 0u64..1000, n in 0usize..16) {
        let space = SearchSpace::default();
        let history: Vec<Trial> = (0..n)
            .map(|i| {
                let hp = random_suggestion(&space, seed, i, 60);
                Trial::completed(i, hp, analytic_objective(&hp), 0.0)
            })
            .collect();
        prop_assert!(space.contains(&suggest(&history, &space, seed)));
    }
}
