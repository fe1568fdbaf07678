//! Budgets, the screening policy record and realized two-stage evaluation.

use alloc::vec;

use crate::dist::RiskDistribution;
use crate::error::{Error, Result};
use crate::math::{ceil_count, floor_count};
use crate::sim::Population;

/// Screening budget `alpha` and allocation budget `beta`, as population
/// fractions with `0 <= alpha <= beta < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Budgets {
    alpha: f64,
    beta: f64,
}

impl Budgets {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let ok = alpha.is_finite() && beta.is_finite() && 0.0 <= alpha && alpha <= beta && 0.0 < beta && beta < 1.0;
        if !ok {
            return Err(Error::InvalidBudgets { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `alpha + beta < 1`.
    pub fn is_strict(&self) -> bool {
        self.alpha + self.beta < 1.0
    }

    /// `alpha < beta` and `alpha + beta < 1`: the budgets under which the
    /// band structure and the contraction of the fixed-point map are proved.
    pub fn in_guaranteed_regime(&self) -> bool {
        self.alpha < self.beta && self.is_strict()
    }

    /// Units screened out of `n`: `⌊alpha n⌋`.
    pub fn screen_units(&self, n: usize) -> usize {
        floor_count(self.alpha * n as f64)
    }

    /// Units allocatable out of `n`: `⌊beta n⌋`.
    pub fn budget_units(&self, n: usize) -> usize {
        floor_count(self.beta * n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SolverKind {
    ClosedFormUniform,
    RootFind,
    FixedPoint,
}

/// Optimal two-stage policy: allocate directly above `q_beta`, screen the
/// band `(q_alpha, q_beta]`, and spend what screening saves on the next
/// units in line.
///
/// Masses are population fractions: the direct band holds `beta - alpha`,
/// the residual band `alpha (1 - rho_star)` and the screening band `alpha`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScreeningPolicy {
    pub q_alpha: f64,
    pub q_beta: f64,
    pub q_tilde_beta: f64,
    pub rho_star: f64,
    pub mass_direct: f64,
    pub mass_residual: f64,
    pub mass_screen: f64,
    pub solver: SolverKind,
    pub iterations: usize,
    pub converged: bool,
    pub in_guaranteed_regime: bool,
}

impl ScreeningPolicy {
    pub fn alpha(&self) -> f64 {
        self.mass_screen
    }

    pub fn beta(&self) -> f64 {
        self.mass_direct + self.mass_screen
    }

    /// Cumulative mass below the top of the screening band, `F(q_beta)`.
    pub fn upper_level(&self) -> f64 {
        (1.0 - self.mass_direct - self.mass_residual).clamp(0.0, 1.0)
    }

    /// Cumulative mass below the screening band, `F(q_alpha)`.
    pub fn lower_level(&self) -> f64 {
        (self.upper_level() - self.mass_screen).max(0.0)
    }

    /// Builds the policy whose screening band has average risk `rho`.
    pub(crate) fn from_rho(
        d: &RiskDistribution,
        budgets: Budgets,
        rho: f64,
        solver: SolverKind,
        iterations: usize,
        converged: bool,
    ) -> Result<Self> {
        let (alpha, beta) = (budgets.alpha(), budgets.beta());
        let mut policy = ScreeningPolicy {
            q_alpha: 0.0,
            q_beta: 0.0,
            q_tilde_beta: no_screening_threshold(d, budgets)?,
            rho_star: rho,
            mass_direct: beta - alpha,
            mass_residual: alpha * (1.0 - rho),
            mass_screen: alpha,
            solver,
            iterations,
            converged,
            in_guaranteed_regime: budgets.in_guaranteed_regime(),
        };
        match d {
            RiskDistribution::Empirical(e) => {
                let n = e.len();
                let (lo, hi) = band_ranks(n, budgets, policy.mass_direct + policy.mass_residual)?;
                policy.q_beta = d.quantile(hi as f64 / n as f64)?;
                policy.q_alpha = d.quantile(lo as f64 / n as f64)?;
            }
            _ => {
                let upper = (1.0 - beta + alpha * rho).clamp(0.0, 1.0);
                let lower = (1.0 - beta - alpha + alpha * rho).clamp(0.0, 1.0);
                policy.q_beta = d.quantile(upper)?;
                policy.q_alpha = d.quantile(lower)?;
            }
        }
        Ok(policy)
    }

    /// Ranks `lo..hi` (ascending, 0-based) of the screening band among `n`
    /// units.
    pub fn band_ranks(&self, n: usize) -> Result<(usize, usize)> {
        let budgets = Budgets::new(self.alpha(), self.beta().min(1.0 - f64::EPSILON))?;
        band_ranks(n, budgets, self.mass_direct + self.mass_residual)
    }

    /// Residuals of the screening and allocation budget constraints,
    /// `F(q_beta) - F(q_alpha) - alpha` and
    /// `∫_{q_alpha}^{q_beta} μ dF + 1 - F(q_beta) - beta`.
    pub fn constraint_residuals(&self, d: &RiskDistribution) -> Result<(f64, f64)> {
        let screening = d.mass(self.q_alpha, self.q_beta)? - self.alpha();
        let allocation = d.partial_expectation(self.q_alpha, self.q_beta)? + d.survival(self.q_beta)? - self.beta();
        Ok((screening, allocation))
    }
}

/// Screening-band ranks for `n` units when the bands above it hold
/// `upper_mass`: the top `min(⌈upper_mass n⌉, ⌊beta n⌋)` units sit above
/// the band and the band holds `⌊alpha n⌋` units.
pub(crate) fn band_ranks(n: usize, budgets: Budgets, upper_mass: f64) -> Result<(usize, usize)> {
    let budget = budgets.budget_units(n);
    let k = budgets.screen_units(n);
    let n_top = ceil_count(upper_mass * n as f64).min(budget);
    if n_top + k > n {
        return Err(Error::Infeasible("screening and allocation bands exceed the population"));
    }
    let hi = n - n_top;
    Ok((hi - k, hi))
}

/// Purely algorithmic threshold: the `(1 - beta)`-quantile of the risk.
pub fn no_screening_threshold(d: &RiskDistribution, budgets: Budgets) -> Result<f64> {
    d.quantile(1.0 - budgets.beta())
}

/// Policy with an empty screening band at the no-screening threshold.
pub(crate) fn no_screening_policy(
    d: &RiskDistribution,
    budgets: Budgets,
    solver: SolverKind,
) -> Result<ScreeningPolicy> {
    let q = no_screening_threshold(d, budgets)?;
    Ok(ScreeningPolicy {
        q_alpha: q,
        q_beta: q,
        q_tilde_beta: q,
        rho_star: q,
        mass_direct: budgets.beta(),
        mass_residual: 0.0,
        mass_screen: 0.0,
        solver,
        iterations: 0,
        converged: true,
        in_guaranteed_regime: budgets.in_guaranteed_regime(),
    })
}

/// Closed-form thresholds under uniform risk:
/// `q_beta = (1 - beta - alpha²/2) / (1 - alpha)`, `q_alpha = q_beta - alpha`.
pub fn uniform_closed_form(budgets: Budgets) -> ScreeningPolicy {
    let (alpha, beta) = (budgets.alpha(), budgets.beta());
    let q_beta = (1.0 - beta - 0.5 * alpha * alpha) / (1.0 - alpha);
    let q_alpha = q_beta - alpha;
    let rho = if alpha > 0.0 { 0.5 * (q_alpha + q_beta) } else { q_beta };
    ScreeningPolicy {
        q_alpha,
        q_beta,
        q_tilde_beta: 1.0 - beta,
        rho_star: rho,
        mass_direct: beta - alpha,
        mass_residual: alpha * (1.0 - rho),
        mass_screen: alpha,
        solver: SolverKind::ClosedFormUniform,
        iterations: 0,
        converged: true,
        in_guaranteed_regime: budgets.in_guaranteed_regime(),
    }
}

/// Realized outcome of applying an allocation rule to a population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationResult {
    pub allocated: usize,
    pub true_positives: usize,
    pub screened: usize,
    /// Allocation budget in units, `⌊beta n⌋`.
    pub budget: usize,
    /// `true_positives / budget`.
    pub precision: f64,
}

/// Applies a band policy to a population with realized outcomes.
///
/// The screening band is taken by rank (see [`ScreeningPolicy::band_ranks`]),
/// so ties and atoms split deterministically. Screened units with `y = 1`
/// are allocated first, by descending score, up to the budget; the rest of
/// the budget goes to unscreened units by descending score. In expectation
/// this fills exactly the direct and residual bands; in a finite sample,
/// leftover budget reaches below the band and an excess of confirmed
/// positives crowds out the lowest direct units.
pub fn evaluate_two_stage(policy: &ScreeningPolicy, pop: &Population) -> Result<AllocationResult> {
    let n = pop.len();
    let budget = floor_count(policy.beta() * n as f64);
    if budget == 0 {
        return Err(Error::Infeasible("allocation budget rounds to zero units"));
    }
    let (lo, hi) = policy.band_ranks(n)?;
    let mut screened = vec![false; n];
    screened[lo..hi].iter_mut().for_each(|s| *s = true);
    Ok(allocate(pop, &screened, budget))
}

/// Screened positives first, then unscreened units by descending score.
/// `screened_by_rank[r]` marks the unit at ascending rank `r`.
pub(crate) fn allocate(pop: &Population, screened_by_rank: &[bool], budget: usize) -> AllocationResult {
    let ranked = pop.outcomes_by_rank();
    let n = ranked.len();
    let mut allocated = 0;
    let mut tp = 0;
    for r in (0..n).rev() {
        if allocated == budget {
            break;
        }
        if screened_by_rank[r] && ranked[r] {
            allocated += 1;
            tp += 1;
        }
    }
    for r in (0..n).rev() {
        if allocated == budget {
            break;
        }
        if !screened_by_rank[r] {
            allocated += 1;
            tp += usize::from(ranked[r]);
        }
    }
    AllocationResult {
        allocated,
        true_positives: tp,
        screened: screened_by_rank.iter().filter(|&&s| s).count(),
        budget,
        precision: tp as f64 / budget as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Population, PopulationSource, Unit};
    use alloc::string::String;
    use alloc::vec::Vec;

    fn pop(mus: &[f64], ys: &[bool]) -> Population {
        let units = mus.iter().zip(ys).enumerate().map(|(i, (&mu, &y))| Unit { id: i as u64, mu, y }).collect();
        Population::new(units, 0, PopulationSource::Loaded(String::from("test"))).unwrap()
    }

    #[test]
    fn budgets_validation() {
        assert!(Budgets::new(0.0, 0.35).is_ok());
        assert!(Budgets::new(0.35, 0.35).is_ok());
        assert!(Budgets::new(0.4, 0.35).is_err());
        assert!(Budgets::new(-0.1, 0.35).is_err());
        assert!(Budgets::new(0.1, 1.0).is_err());
        assert!(Budgets::new(0.0, 0.0).is_err());
        let b = Budgets::new(0.35, 0.35).unwrap();
        assert!(b.is_strict());
        assert!(!b.in_guaranteed_regime());
        let b = Budgets::new(0.4, 0.7).unwrap();
        assert!(!b.is_strict());
        assert!(Budgets::new(0.1, 0.35).unwrap().in_guaranteed_regime());
    }

    #[test]
    fn no_screening_threshold_examples() {
        let b = Budgets::new(0.0, 0.35).unwrap();
        let q = no_screening_threshold(&RiskDistribution::uniform(), b).unwrap();
        assert!((q - 0.65).abs() < 1e-15);
        let pm = RiskDistribution::point_mass(0.5).unwrap();
        assert_eq!(no_screening_threshold(&pm, b).unwrap(), 0.5);
        let e = RiskDistribution::empirical(&[0.1, 0.4, 0.6, 0.9]).unwrap();
        let b = Budgets::new(0.0, 0.5).unwrap();
        assert_eq!(no_screening_threshold(&e, b).unwrap(), 0.4);
    }

    #[test]
    fn uniform_closed_form_examples() {
        let p = uniform_closed_form(Budgets::new(0.35, 0.35).unwrap());
        assert!((p.q_beta - 0.588_75 / 0.65).abs() < 1e-15);
        assert!((p.q_beta - 0.9058).abs() < 1e-4);
        assert!((p.q_alpha - 0.5558).abs() < 1e-4);
        let p = uniform_closed_form(Budgets::new(0.0, 0.35).unwrap());
        assert!((p.q_beta - 0.65).abs() < 1e-15);
        assert_eq!(p.q_alpha, p.q_beta);
        let p = uniform_closed_form(Budgets::new(0.1, 0.35).unwrap());
        assert!((p.q_beta - 0.645 / 0.9).abs() < 1e-15);
        assert!((p.q_alpha - (0.645 / 0.9 - 0.1)).abs() < 1e-15);
    }

    #[test]
    fn uniform_closed_form_satisfies_constraints_by_direct_integration() {
        let u = RiskDistribution::uniform();
        for &(a, b) in &[(0.35, 0.35), (0.1, 0.35), (0.05, 0.2), (0.3, 0.6)] {
            let p = uniform_closed_form(Budgets::new(a, b).unwrap());
            let (s, alloc) = p.constraint_residuals(&u).unwrap();
            assert!(s.abs() < 1e-12 && alloc.abs() < 1e-12, "({a},{b}): {s:e} {alloc:e}");
            // midpoint quadrature of the allocation constraint
            let m = 100_000;
            let h = (p.q_beta - p.q_alpha) / m as f64;
            let quad: f64 = (0..m).map(|i| (p.q_alpha + (i as f64 + 0.5) * h) * h).sum();
            assert!((quad + 1.0 - p.q_beta - b).abs() < 1e-10);
            let total = p.mass_direct + p.mass_residual + p.mass_screen;
            assert!((total - (1.0 - p.q_alpha)).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluation_with_all_negative_outcomes() {
        let mus: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let p = pop(&mus, &[false; 20]);
        let policy = uniform_closed_form(Budgets::new(0.35, 0.35).unwrap());
        let r = evaluate_two_stage(&policy, &p).unwrap();
        assert_eq!(r.true_positives, 0);
        assert_eq!(r.precision, 0.0);
        assert_eq!(r.screened, 7);
        // nothing allocated out of the band; the budget spills to unscreened units
        assert_eq!(r.allocated, 7);
    }

    #[test]
    fn alpha_zero_reproduces_threshold_rule() {
        let mus = [0.05, 0.9, 0.3, 0.7, 0.5, 0.2, 0.8, 0.65];
        let ys = [false, true, false, true, true, false, false, true];
        let p = pop(&mus, &ys);
        let d = RiskDistribution::empirical(&mus).unwrap();
        let b = Budgets::new(0.0, 0.5).unwrap();
        let policy = no_screening_policy(&d, b, SolverKind::FixedPoint).unwrap();
        let r = evaluate_two_stage(&policy, &p).unwrap();
        let q = no_screening_threshold(&d, b).unwrap();
        let rule_tp = mus.iter().zip(&ys).filter(|(&m, &y)| m > q && y).count();
        let rule_count = mus.iter().filter(|&&m| m > q).count();
        assert_eq!(r.allocated, rule_count);
        assert_eq!(r.true_positives, rule_tp);
        assert_eq!(r.screened, 0);
    }

    #[test]
    fn excess_positives_are_capped_at_budget() {
        // 10 units, alpha = beta = 0.3: band of 3 screened units, all positive,
        // while the policy expects a band mean of 0.5.
        let mus: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let mut ys = [false; 10];
        ys[4] = true;
        ys[5] = true;
        ys[6] = true;
        let p = pop(&mus, &ys);
        let policy = ScreeningPolicy {
            q_alpha: 0.3,
            q_beta: 0.6,
            q_tilde_beta: 0.6,
            rho_star: 0.2,
            mass_direct: 0.0,
            mass_residual: 0.3 * 0.8,
            mass_screen: 0.3,
            solver: SolverKind::FixedPoint,
            iterations: 1,
            converged: true,
            in_guaranteed_regime: false,
        };
        let (lo, hi) = policy.band_ranks(10).unwrap();
        assert_eq!((lo, hi), (4, 7));
        let r = evaluate_two_stage(&policy, &p).unwrap();
        assert_eq!(r.allocated, 3);
        assert_eq!(r.true_positives, 3);
        assert!(r.allocated <= r.budget);
    }
}
