use smoothsearch::algorithms::{iterate, AdaptiveSearch, AlgorithmKind, AlgorithmSpec, Mode, RandomSearch, Sampler, Ucb};
use smoothsearch::problems::{CountingObjective, DeterministicObjective, ObjectiveModel, PoissonOrderSize};
use smoothsearch::simulation::{simulate, Budget, RegimeSchedule, RunOptions, RunStreams};
use smoothsearch::strategy::{ExplorationRule, StepRule};
use smoothsearch::SeedScheme;

fn spec(kind: AlgorithmKind, mode: Mode) -> AlgorithmSpec {
    AlgorithmSpec {
        kind,
        mode,
        exploration: ExplorationRule::Constant(0.1),
    }
}

#[test]
fn evaluation_budget_per_iteration() {
    for (kind, per_iter) in [
        (AlgorithmKind::AdaptiveSearch, 1),
        (AlgorithmKind::RandomSearch, 2),
        (AlgorithmKind::Ucb, 1),
    ] {
        for mode in [Mode::Static, Mode::Adaptive { mu: 0.01 }] {
            let seeds = SeedScheme::new(8);
            let mut streams = RunStreams::new(&seeds, 0);
            let mut obj = CountingObjective::new(PoissonOrderSize::new(vec![1.0], 11).unwrap());
            let mut sampler = spec(kind, mode).build(11, &mut streams.algorithm).unwrap();
            assert_eq!(sampler.evaluations_per_iteration(), per_iter);
            for n in 1..=500u64 {
                let before = obj.evaluations();
                let rec = iterate(sampler.as_mut(), &mut streams.algorithm, |s| obj.sample(s, 0, &mut streams.objective))
                    .unwrap();
                assert_eq!(obj.evaluations() - before, per_iter as u64);
                assert_eq!(rec.evaluations, per_iter);
                assert_eq!(obj.evaluations(), n * per_iter as u64);
            }
        }
    }
}

#[test]
fn runs_are_deterministic_in_seed() {
    for kind in [AlgorithmKind::AdaptiveSearch, AlgorithmKind::RandomSearch, AlgorithmKind::Ucb] {
        let run = |seed: u64| {
            let seeds = SeedScheme::new(seed);
            let mut streams = RunStreams::new(&seeds, 4);
            let mut obj = PoissonOrderSize::new(vec![1.0], 11).unwrap();
            let mut s = spec(kind, Mode::Static).build(11, &mut streams.algorithm).unwrap();
            let mut opts = RunOptions::new(Budget::Iterations(2000), StepRule::Harmonic);
            opts.checkpoints = (1..=2000).collect();
            simulate(s.as_mut(), &mut obj, &mut RegimeSchedule::Fixed(0), &opts, &mut streams).unwrap()
        };
        assert_eq!(run(1), run(1));
        assert_ne!(run(1).records, run(2).records);
    }
}

#[test]
fn adaptive_search_concentrates_on_the_minimizer() {
    let seeds = SeedScheme::new(12);
    let mut streams = RunStreams::new(&seeds, 0);
    let mut a = AdaptiveSearch::constant(2, 0.01, 0.1).unwrap();
    let means = [-1.0, 0.0];
    let mut hits = 0;
    for n in 1..=10_000 {
        let rec = iterate(&mut a, &mut streams.algorithm, |s| means[s]).unwrap();
        if n > 5000 && rec.sampled == 0 {
            hits += 1;
        }
    }
    assert!(hits as f64 / 5000.0 >= 0.99, "{hits}");
    assert_eq!(a.estimate(), 0);
    // every distribution used was interior
    assert!(a.distribution().min_prob() > 0.0);
}

#[test]
fn random_search_settles_on_two_state_minimizer() {
    let mut obj = DeterministicObjective::new(vec![vec![0.3, -0.4]]).unwrap();
    for start in 0..2 {
        let mut rs = RandomSearch::starting_at(2, Mode::Static, start);
        let seeds = SeedScheme::new(0);
        let mut streams = RunStreams::new(&seeds, 0);
        for _ in 0..50 {
            iterate(&mut rs, &mut streams.algorithm, |s| obj.sample(s, 0, &mut streams.objective)).unwrap();
            assert_eq!(rs.current(), 1);
        }
    }
}

#[test]
fn adaptive_random_search_weights_sum_geometrically() {
    let mu = 0.05;
    let mut rs = RandomSearch::starting_at(5, Mode::Adaptive { mu }, 0);
    let seeds = SeedScheme::new(2);
    let mut streams = RunStreams::new(&seeds, 0);
    let mut obj = PoissonOrderSize::new(vec![2.0], 5).unwrap();
    for n in 1..=300 {
        iterate(&mut rs, &mut streams.algorithm, |s| obj.sample(s, 0, &mut streams.objective)).unwrap();
        let total: f64 = rs.weights().iter().sum();
        assert!((total - (1.0 - (1.0 - mu).powi(n))).abs() < 1e-12);
    }
}

#[test]
fn ucb_prefers_the_minimizer_without_noise() {
    let means = [-1.0, 0.0];
    let mut u = Ucb::new(2, Mode::Static).unwrap();
    let seeds = SeedScheme::new(0);
    let mut streams = RunStreams::new(&seeds, 0);
    let mut best = 0;
    for _ in 0..10_000 {
        let rec = iterate(&mut u, &mut streams.algorithm, |s| means[s]).unwrap();
        best += usize::from(rec.sampled == 0);
    }
    assert!(best as f64 / 10_000.0 >= 0.95);
    assert_eq!(u.estimate(), 0);
}
