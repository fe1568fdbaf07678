use proptest::prelude::*;
use screening_core::oracle::{oracle_solve, OracleInstance};
use screening_core::policy::{no_screening_threshold, uniform_closed_form};
use screening_core::solver::{contraction_constant, fixed_point_solve, iteration_bound, root_find_solve, update_map};
use screening_core::{Budgets, RiskDistribution, SolverOptions};

fn suite() -> Vec<RiskDistribution> {
    let mut d = vec![RiskDistribution::uniform()];
    for t in [0.1, 0.5, 2.0, 10.0, 100.0] {
        d.push(RiskDistribution::beta(t).unwrap());
    }
    d
}

/// Scores within this distance of 1 are too coarse in `f64` to check
/// threshold-space residuals to 1e-9; bimodal Beta at small budgets puts
/// the whole band there.
const RESOLVABLE: f64 = 1e-6;

fn regime_grid() -> Vec<Budgets> {
    let mut out = Vec::new();
    for bi in 1..=9 {
        let beta = bi as f64 * 0.1 - 0.05;
        for ai in 1..=8 {
            let alpha = beta * ai as f64 / 9.0;
            if alpha + beta < 1.0 {
                out.push(Budgets::new(alpha, beta).unwrap());
            }
        }
    }
    out
}

#[test]
fn fixed_point_and_root_find_agree() {
    let opts = SolverOptions::default();
    for d in suite() {
        for b in regime_grid() {
            let (fp, _) = fixed_point_solve(&d, b, &opts).unwrap();
            if 1.0 - fp.q_beta < RESOLVABLE {
                continue;
            }
            let rf = root_find_solve(&d, b, opts.tol).unwrap();
            assert!(
                (fp.q_beta - rf.q_beta).abs() <= 10.0 * opts.tol && (fp.q_alpha - rf.q_alpha).abs() <= 10.0 * opts.tol,
                "{d:?} {b:?}: fp ({}, {}) rf ({}, {})",
                fp.q_alpha,
                fp.q_beta,
                rf.q_alpha,
                rf.q_beta
            );
        }
    }
}

#[test]
fn most_of_the_grid_is_resolvable() {
    let opts = SolverOptions::default();
    let mut skipped = 0;
    for d in suite() {
        for b in regime_grid() {
            let (p, _) = fixed_point_solve(&d, b, &opts).unwrap();
            skipped += usize::from(1.0 - p.q_beta < RESOLVABLE);
        }
    }
    assert!(skipped * 10 < suite().len() * regime_grid().len(), "{skipped} skipped");
}

#[test]
fn uniform_solvers_match_closed_form() {
    let opts = SolverOptions::default();
    for b in regime_grid() {
        let closed = uniform_closed_form(b);
        let (fp, _) = fixed_point_solve(&RiskDistribution::uniform(), b, &opts).unwrap();
        assert!((fp.q_beta - closed.q_beta).abs() <= 1e-9);
        assert!((fp.rho_star - closed.rho_star).abs() <= 1e-9);
    }
}

#[test]
fn policies_satisfy_band_invariants() {
    let opts = SolverOptions::default();
    for d in suite() {
        for b in regime_grid() {
            let (p, _) = fixed_point_solve(&d, b, &opts).unwrap();
            let q_tilde = no_screening_threshold(&d, b).unwrap();
            assert!(0.0 <= p.q_alpha && p.q_alpha <= q_tilde && q_tilde <= p.q_beta && p.q_beta <= 1.0);
            assert!(p.in_guaranteed_regime && p.converged);
            if 1.0 - p.q_beta < RESOLVABLE {
                continue;
            }
            let (screen, alloc) = p.constraint_residuals(&d).unwrap();
            assert!(screen.abs() < 1e-9 && alloc.abs() < 1e-9, "{d:?} {b:?}: {screen:e} {alloc:e}");
            let covered = p.mass_direct + p.mass_residual + p.mass_screen;
            assert!((covered - d.survival(p.q_alpha).unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn geometric_convergence_bound() {
    let opts = SolverOptions::default();
    for d in suite() {
        for b in regime_grid() {
            let (p, trace) = fixed_point_solve(&d, b, &opts).unwrap();
            let c = contraction_constant(&d, b).unwrap();
            assert!((0.0..1.0).contains(&c));
            let start = (trace.rho_sequence[0] - p.rho_star).abs();
            for (k, rho) in trace.rho_sequence.iter().enumerate() {
                let bound = c.powi(k as i32) * start;
                assert!((rho - p.rho_star).abs() <= bound + 1e-12, "{d:?} {b:?} k={k}");
            }
            let gaps = trace.gaps();
            for w in gaps.windows(2).skip(1) {
                assert!(w[1] <= w[0] + 1e-15);
            }
            if let Some(bound) = iteration_bound(c, opts.tol) {
                assert!(trace.iterations() <= bound + 3, "{d:?} {b:?}: {} > {bound}", trace.iterations());
            }
        }
    }
}

#[test]
fn thresholds_move_outward_with_alpha() {
    let opts = SolverOptions::default();
    for d in suite() {
        for beta in [0.2, 0.35, 0.5] {
            let q_tilde = no_screening_threshold(&d, Budgets::new(0.0, beta).unwrap()).unwrap();
            let mut prev = (q_tilde, q_tilde);
            for i in 1..=20 {
                let alpha = beta * i as f64 / 20.0;
                let b = Budgets::new(alpha, beta).unwrap();
                let (p, _) = fixed_point_solve(&d, b, &opts).unwrap();
                assert!(p.q_alpha <= prev.0 + 1e-12 && p.q_beta >= prev.1 - 1e-12, "{d:?} a={alpha}");
                assert!(p.q_alpha <= q_tilde && q_tilde <= p.q_beta);
                prev = (p.q_alpha, p.q_beta);
            }
        }
    }
}

#[test]
fn point_mass_converges_in_one_step() {
    let d = RiskDistribution::point_mass(0.5).unwrap();
    let (p, trace) = fixed_point_solve(&d, Budgets::new(0.1, 0.35).unwrap(), &SolverOptions::default()).unwrap();
    assert_eq!(trace.rho_sequence, [0.0, 0.5, 0.5]);
    assert_eq!(trace.contraction, 0.0);
    assert_eq!(p.q_alpha, 0.5);
}

#[test]
fn outside_regime_is_flagged() {
    let d = RiskDistribution::uniform();
    let b = Budgets::new(0.45, 0.6).unwrap();
    let (p, _) = fixed_point_solve(&d, b, &SolverOptions::default()).unwrap();
    assert!(!p.in_guaranteed_regime);
    let b = Budgets::new(0.35, 0.35).unwrap();
    let (p, _) = fixed_point_solve(&d, b, &SolverOptions::default()).unwrap();
    assert!(!p.in_guaranteed_regime);
    assert!((p.q_beta - uniform_closed_form(b).q_beta).abs() < 1e-9);
}

#[test]
fn four_point_band_is_an_oracle_optimum() {
    let scores = [0.1, 0.4, 0.6, 0.9];
    let d = RiskDistribution::empirical(&scores).unwrap();
    let b = Budgets::new(0.25, 0.5).unwrap();
    let (p, _) = fixed_point_solve(&d, b, &SolverOptions::default()).unwrap();
    let (lo, hi) = p.band_ranks(4).unwrap();
    let e = d.as_empirical().unwrap();
    let band: Vec<usize> = (lo..hi).map(|r| e.original_index(r)).collect();
    assert_eq!(band, [1]);

    let inst = OracleInstance::new(scores.to_vec(), 1, 2.0).unwrap();
    let sol = oracle_solve(&inst).unwrap();
    // screening 0.4: 0.4 + 0.9 + 0.6 * 0.6; screening 0.6: 0.6 + 0.9 + 0.4 * 0.4
    assert!((sol.best_value - 1.66).abs() < 1e-12);
    assert_eq!(sol.best_sets, vec![vec![1], vec![2]]);
    assert!((inst.value(&band) - sol.best_value).abs() < 1e-12);
}

#[test]
fn empirical_iteration_terminates_exactly() {
    let scores: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
    let d = RiskDistribution::empirical(&scores).unwrap();
    let (p, trace) = fixed_point_solve(&d, Budgets::new(0.2, 0.35).unwrap(), &SolverOptions::default()).unwrap();
    assert_eq!(trace.last_gap(), Some(0.0));
    let uniform = uniform_closed_form(Budgets::new(0.2, 0.35).unwrap());
    assert!((p.q_beta - uniform.q_beta).abs() < 5e-3);
    assert!((p.q_alpha - uniform.q_alpha).abs() < 5e-3);
}

proptest! {
    #[test]
    fn update_map_is_monotone(
        t in 0.05f64..50.0,
        beta in 0.05f64..0.6,
        frac in 0.01f64..1.0,
        mut rhos in prop::array::uniform2(0.0f64..=1.0),
    ) {
        rhos.sort_by(f64::total_cmp);
        let alpha = beta * frac;
        prop_assume!(alpha + beta < 1.0);
        let b = Budgets::new(alpha, beta).unwrap();
        let d = RiskDistribution::beta(t).unwrap();
        let g0 = update_map(&d, b, rhos[0]).unwrap();
        let g1 = update_map(&d, b, rhos[1]).unwrap();
        prop_assert!(g0 <= g1 + 1e-12);
    }

    #[test]
    fn empirical_update_map_is_monotone(
        scores in prop::collection::vec(0.0f64..=1.0, 20..200),
        frac in 0.1f64..1.0,
        mut rhos in prop::array::uniform2(0.0f64..=1.0),
    ) {
        rhos.sort_by(f64::total_cmp);
        let b = Budgets::new(0.3 * frac, 0.3).unwrap();
        let d = RiskDistribution::empirical(&scores).unwrap();
        prop_assume!(b.screen_units(scores.len()) > 0);
        prop_assert!(update_map(&d, b, rhos[0]).unwrap() <= update_map(&d, b, rhos[1]).unwrap());
    }
}
