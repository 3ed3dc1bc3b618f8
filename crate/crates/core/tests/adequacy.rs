use qpt_core::channel::{gates, kraus_to_chi, KrausSet};
use qpt_core::mle::{reconstruct_at_rank, SolverOptions};
use qpt_core::protocol::cube_protocol;
use qpt_core::record::{CountRow, MeasurementRecord, SamplingMode};
use qpt_core::selection::{adequacy, chi2_statistic, chi2_survival, select_rank};
use qpt_core::simulator::{exact_counts, simulate_counts, trial_seed, SpamScenario};

/// Γ(ν/2) for integer ν by the half-integer recursion.
fn gamma_half(nu: u64) -> f64 {
    let (mut value, mut x) = if nu % 2 == 0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    while x < nu as f64 / 2.0 - 1e-12 {
        value *= x;
        x += 1.0;
    }
    value
}

/// `P(X > x)` by Simpson quadrature of the density after substituting `t = u²`.
fn survival_oracle(x: f64, nu: u64) -> f64 {
    let k = nu as f64;
    let norm = 2.0f64.powf(k / 2.0) * gamma_half(nu);
    let f = |u: f64| 2.0 * u.powf(k - 1.0) * (-u * u / 2.0).exp() / norm;
    let steps = 20_000;
    let b = x.sqrt();
    let h = b / steps as f64;
    let mut sum = f(0.0) + f(b);
    for i in 1..steps {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    1.0 - sum * h / 3.0
}

#[test]
fn survival_matches_quadrature() {
    for nu in [1, 2, 3, 5, 10, 30, 50] {
        for x in [0.1, 1.0, 4.0, nu as f64, 2.0 * nu as f64 + 3.0] {
            let oracle = survival_oracle(x, nu);
            let got = chi2_survival(x, nu);
            assert!((got - oracle).abs() < 1e-8, "nu {nu} x {x}: {got} vs {oracle}");
        }
    }
}

#[test]
fn survival_at_the_mean_is_near_half_for_large_dof() {
    for nu in [30, 40, 75, 200] {
        let p = chi2_survival(nu as f64, nu);
        assert!((p - 0.5).abs() < 0.05, "nu {nu}: {p}");
        assert!((p - survival_oracle(nu as f64, nu)).abs() < 1e-8);
    }
    let mut last = 1.0;
    for i in 0..50 {
        let p = chi2_survival(i as f64, 7);
        assert!(p <= last);
        last = p;
    }
}

#[test]
fn statistic_arithmetic() {
    let proto = cube_protocol(1).unwrap();
    let identity = kraus_to_chi(&KrausSet::identity(2));
    // |0> read out in z: E = 10 exactly
    let rec = MeasurementRecord::new(vec![CountRow::real(4, 4, 10.0, 12.0)], SamplingMode::PoissonIndependent).unwrap();
    assert!((chi2_statistic(&rec, &proto, &identity).unwrap() - 0.4).abs() < 1e-12);

    let exact = exact_counts(&KrausSet::identity(2), &SpamScenario::ideal(), &proto, 100).unwrap();
    let positive: Vec<CountRow> = exact.rows.iter().copied().filter(|r| r.events > 1e-9).collect();
    let rec = MeasurementRecord::new(positive, exact.sampling).unwrap();
    assert!(chi2_statistic(&rec, &proto, &identity).unwrap().abs() < 1e-20);
}

#[test]
fn zero_expectation_is_reported() {
    let proto = cube_protocol(1).unwrap();
    let identity = kraus_to_chi(&KrausSet::identity(2));
    let rec = MeasurementRecord::new(vec![CountRow::real(4, 5, 10.0, 0.0)], SamplingMode::PoissonIndependent).unwrap();
    assert!(chi2_statistic(&rec, &proto, &identity).is_err());
}

#[test]
fn statistic_ignores_row_order() {
    let proto = cube_protocol(1).unwrap();
    let h = KrausSet::unitary(gates::hadamard()).unwrap();
    let rec = simulate_counts(&h, &SpamScenario::benchmark(), &proto, 1000, 2).unwrap();
    let chi = reconstruct_at_rank(&rec, &proto, 2, &SolverOptions::default()).unwrap().chi;
    let mut shuffled = rec.clone();
    shuffled.rows.reverse();
    shuffled.rows.rotate_left(7);
    let a = chi2_statistic(&rec, &proto, &chi).unwrap();
    let b = chi2_statistic(&shuffled, &proto, &chi).unwrap();
    assert!((a - b).abs() < 1e-9 * a);
    let ra = adequacy(&rec, &proto, &chi, 2, 0.05).unwrap();
    let rb = adequacy(&shuffled, &proto, &chi, 2, 0.05).unwrap();
    assert!((ra.chi2_stat - rb.chi2_stat).abs() < 1e-9 * ra.chi2_stat);
    assert_eq!(ra.dof, rb.dof);
}

#[test]
fn statistic_follows_chi_square_under_the_true_model() {
    let proto = cube_protocol(1).unwrap();
    let scenario = SpamScenario::benchmark();
    let fuzzy = scenario.true_protocol(1).unwrap();
    let h = KrausSet::unitary(gates::hadamard()).unwrap();
    let opts = SolverOptions::default();
    let seeds = 500;
    let (mut stat, mut dof) = (0.0, 0.0);
    for s in 0..seeds {
        let rec = simulate_counts(&h, &scenario, &proto, 1000, trial_seed(900, s)).unwrap();
        let chi = reconstruct_at_rank(&rec, &fuzzy, 1, &opts).unwrap().chi;
        let report = adequacy(&rec, &fuzzy, &chi, 1, 0.05).unwrap();
        stat += report.chi2_stat;
        dof += report.dof as f64;
    }
    let (mean_stat, mean_dof) = (stat / seeds as f64, dof / seeds as f64);
    assert!((mean_stat - mean_dof).abs() <= 0.1 * mean_dof, "mean {mean_stat} vs dof {mean_dof}");
}

#[test]
fn ladder_stops_at_first_adequate_rank() {
    let proto = cube_protocol(1).unwrap();
    let scenario = SpamScenario::benchmark();
    let h = KrausSet::unitary(gates::hadamard()).unwrap();
    let rec = simulate_counts(&h, &scenario, &proto, 1000, 5).unwrap();
    let opts = SolverOptions::default();

    let fuzzy = select_rank(&rec, &scenario.true_protocol(1).unwrap(), 0.05, &opts).unwrap();
    assert!(fuzzy.estimable);
    assert_eq!(fuzzy.chosen_rank, 1);
    assert_eq!(fuzzy.reports.len(), 1);

    let standard = select_rank(&rec, &proto, 0.05, &opts).unwrap();
    assert!(standard.chosen_rank > 1);
    let (last, earlier) = standard.reports.split_last().unwrap();
    assert!(earlier.iter().all(|r| !r.significant));
    assert_eq!(last.significant, standard.estimable);
    for r in &standard.reports {
        assert_eq!(r.nu_k, 18);
        assert_eq!(r.nu_k_bases, 3);
    }
}

#[test]
fn tiny_records_are_untestable() {
    let proto = cube_protocol(1).unwrap();
    let rows = (0..6).map(|j| CountRow::real(4, j, 100.0, if j % 2 == 0 { 100.0 } else { 0.0 })).collect::<Vec<_>>();
    let rec = MeasurementRecord::new(rows, SamplingMode::PoissonIndependent).unwrap();
    // the empty |1> bin of the z readout merges into its sibling
    let report = adequacy(&rec, &proto, &kraus_to_chi(&KrausSet::identity(2)), 4, 0.05).unwrap();
    assert_eq!(report.merged_rows, 1);
    assert!(report.dof <= 0);
    assert!(!report.significant);
    assert!(select_rank(&rec, &proto, 1.5, &SolverOptions::default()).is_err());
}
