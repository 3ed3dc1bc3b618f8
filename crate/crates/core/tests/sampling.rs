use qpt_core::channel::{gates, kraus_to_chi, KrausSet};
use qpt_core::protocol::cube_protocol;
use qpt_core::record::SamplingMode;
use qpt_core::simulator::{
    born_probabilities, exact_counts, sample_counts, simulate_counts, trial_seed, SpamScenario,
};

fn hadamard() -> KrausSet {
    KrausSet::unitary(gates::hadamard()).unwrap()
}

fn true_probabilities(scenario: &SpamScenario) -> Vec<f64> {
    let truth = scenario.true_protocol(1).unwrap();
    born_probabilities(&kraus_to_chi(&hadamard()), &truth).unwrap()
}

/// Mean of `k / t` over many seeds stays within five standard errors of `p`.
fn check_sampler_means(mode: SamplingMode) {
    let proto = cube_protocol(1).unwrap();
    let probs = true_probabilities(&SpamScenario::benchmark());
    let (n, seeds) = (100u64, 500u64);
    let mut sums = vec![0.0; probs.len()];
    for s in 0..seeds {
        let rec = sample_counts(&probs, &proto, n, mode, trial_seed(123, s)).unwrap();
        for (acc, row) in sums.iter_mut().zip(&rec.rows) {
            *acc += row.events / row.trials;
        }
    }
    for (row, (&p, sum)) in probs.iter().zip(sums).enumerate() {
        let mean = sum / seeds as f64;
        let var = match mode {
            SamplingMode::PoissonIndependent => p / n as f64,
            SamplingMode::MultinomialPerScheme => p * (1.0 - p) / n as f64,
        };
        let se = (var / seeds as f64).sqrt();
        if se == 0.0 {
            assert_eq!(mean, p, "row {row}");
        } else {
            assert!((mean - p).abs() <= 5.0 * se, "row {row}: mean {mean} vs p {p} (se {se})");
        }
    }
}

#[test]
fn multinomial_sampler_is_unbiased() {
    check_sampler_means(SamplingMode::MultinomialPerScheme);
}

#[test]
fn poisson_sampler_is_unbiased() {
    check_sampler_means(SamplingMode::PoissonIndependent);
}

#[test]
fn multinomial_schemes_sum_to_repetitions() {
    let proto = cube_protocol(2).unwrap();
    let cnot = KrausSet::unitary(gates::cnot()).unwrap();
    let rec = simulate_counts(&cnot, &SpamScenario::benchmark(), &proto, 250, 8).unwrap();
    let mut per_scheme = vec![0.0; proto.scheme_count()];
    for row in &rec.rows {
        per_scheme[proto.scheme_of(row.prep, row.effect)] += row.events;
    }
    assert!(per_scheme.iter().all(|&k| k == 250.0));
    assert!(!rec.has_fictitious());
}

#[test]
fn noiseless_frequencies_stay_within_three_sigma() {
    let proto = cube_protocol(1).unwrap();
    let n = 1_000_000u64;
    let probs = born_probabilities(&kraus_to_chi(&hadamard()), &proto).unwrap();
    for mode in [SamplingMode::PoissonIndependent, SamplingMode::MultinomialPerScheme] {
        let scenario = SpamScenario {
            sampling: mode,
            ..SpamScenario::ideal()
        };
        let rec = simulate_counts(&hadamard(), &scenario, &proto, n, 4).unwrap();
        for (row, &p) in rec.rows.iter().zip(&probs) {
            let sigma = (p / n as f64).sqrt();
            assert!((row.events / row.trials - p).abs() <= 3.0 * sigma);
        }
    }
}

#[test]
fn records_are_reproducible_from_the_seed() {
    let proto = cube_protocol(1).unwrap();
    let scenario = SpamScenario::benchmark();
    let a = simulate_counts(&hadamard(), &scenario, &proto, 1000, 31).unwrap();
    let b = simulate_counts(&hadamard(), &scenario, &proto, 1000, 31).unwrap();
    let c = simulate_counts(&hadamard(), &scenario, &proto, 1000, 32).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn exact_counts_are_scaled_probabilities() {
    let proto = cube_protocol(1).unwrap();
    let scenario = SpamScenario::benchmark();
    let rec = exact_counts(&hadamard(), &scenario, &proto, 700).unwrap();
    for (row, p) in rec.rows.iter().zip(true_probabilities(&scenario)) {
        assert_eq!(row.trials, 700.0);
        assert!((row.events - 700.0 * p).abs() < 1e-9);
    }
    assert!(exact_counts(&hadamard(), &scenario, &proto, 0).is_err());
}
