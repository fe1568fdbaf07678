use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use screening_core::oracle::{oracle_solve, verify_structure, OracleInstance};
use screening_core::sim::sample_population;
use screening_core::solver::fixed_point_solve;
use screening_core::{Budgets, RiskDistribution, SolverOptions};

#[test]
fn structure_holds_on_random_uniform_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..3000 {
        let scores: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
        let k = 1 + trial % 3;
        let budget = [2.0, 4.0][(trial / 3) % 2];
        let inst = OracleInstance::new(scores, k, budget).unwrap();
        let report = verify_structure(&inst).unwrap();
        assert!(report.passed, "{inst:?}: {report:?}");
    }
}

#[test]
fn structure_holds_with_fractional_budgets_and_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let n = rng.random_range(3..=12);
        // coarse grid of scores so ties are common
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..=5) as f64 / 5.0).collect();
        let k = rng.random_range(0..=n / 2);
        let budget = rng.random_range(0.5..(n as f64 - 0.5));
        let inst = OracleInstance::new(scores, k, budget).unwrap();
        let report = verify_structure(&inst).unwrap();
        assert!(report.passed, "{inst:?}: {report:?}");
    }
}

#[test]
fn returns_need_not_diminish_at_discrete_scale() {
    // Five evenly spaced scores, budget of two units:
    // k=0 -> 0.9 + 0.7 = 1.60
    // k=1 -> screen 0.7: 0.7 + 0.9 + 0.3 * 0.5 = 1.75
    // k=2 -> screen {0.5, 0.7}: 1.2 + 0.8 * 0.9 = 1.92
    let scores = vec![0.1, 0.3, 0.5, 0.7, 0.9];
    let best = |k| oracle_solve(&OracleInstance::new(scores.clone(), k, 2.0).unwrap()).unwrap().best_value;
    let v: Vec<f64> = (0..=2).map(best).collect();
    assert!((v[0] - 1.60).abs() < 1e-12);
    assert!((v[1] - 1.75).abs() < 1e-12);
    assert!((v[2] - 1.92).abs() < 1e-12);
    assert!(v[2] - v[1] > v[1] - v[0]);
}

#[test]
fn band_policy_is_near_oracle_optimum() {
    let opts = SolverOptions::default();
    let suite =
        [RiskDistribution::uniform(), RiskDistribution::beta(2.0).unwrap(), RiskDistribution::beta(0.5).unwrap()];
    let n = 12;
    let mut exact = 0;
    let mut total = 0;
    for (i, d) in suite.iter().enumerate() {
        for seed in 0..200u64 {
            let pop = sample_population(d, n, seed * 3 + i as u64).unwrap();
            let scores: Vec<f64> = pop.units().iter().map(|u| u.mu).collect();
            for k in 1..=3 {
                for budget_units in [3, 6] {
                    let b = Budgets::new(k as f64 / n as f64, budget_units as f64 / n as f64).unwrap();
                    let e = pop.scores().as_empirical().unwrap();
                    let (p, _) = fixed_point_solve(pop.scores(), b, &opts).unwrap();
                    let (lo, hi) = p.band_ranks(n).unwrap();
                    let band: Vec<usize> = (lo..hi).map(|r| e.original_index(r)).collect();
                    let inst = OracleInstance::new(scores.clone(), k, budget_units as f64).unwrap();
                    let best = oracle_solve(&inst).unwrap().best_value;
                    let gap = best - inst.value(&band);
                    // within one unit of mass, i.e. 1/n of the population
                    assert!((-1e-12..=1.0).contains(&gap), "{scores:?} k={k}: gap {gap}");
                    total += 1;
                    exact += usize::from(gap < 1e-12);
                }
            }
        }
    }
    assert!(exact * 2 > total, "{exact}/{total} exact");
}

proptest! {
    #[test]
    fn value_grows_with_capacity(
        scores in prop::collection::vec(0.0f64..=1.0, 4..11),
        budget_frac in 0.1f64..0.9,
    ) {
        let n = scores.len();
        let budget = budget_frac * n as f64;
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=n.min(4) {
            let v = oracle_solve(&OracleInstance::new(scores.clone(), k, budget).unwrap()).unwrap().best_value;
            prop_assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn equal_scores_tie_everywhere(c in 0.05f64..=1.0, n in 3usize..9, k in 0usize..3) {
        let budget = n as f64 / 2.0;
        let inst = OracleInstance::new(vec![c; n], k, budget).unwrap();
        let sol = oracle_solve(&inst).unwrap();
        let screened = k as f64 * c;
        let fill = (budget - screened).min((n - k) as f64);
        let expected = if screened >= budget { budget } else { screened + fill * c };
        prop_assert!((sol.best_value - expected).abs() < 1e-12);
        let subsets = (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1));
        prop_assert_eq!(sol.best_sets.len(), subsets);
        prop_assert!(verify_structure(&inst).unwrap().passed);
    }
}
