//! Solvers for the optimal screening band.
//!
//! [`fixed_point_solve`] iterates the band-mean map `ρ ↦ g(ρ)` from
//! `ρ = 0`; [`root_find_solve`] bisects the allocation constraint in
//! `q_beta` directly. Both produce a [`ScreeningPolicy`].

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::dist::RiskDistribution;
use crate::error::{Error, Result};
use crate::math::{fabs, log};
use crate::policy::{
    band_ranks, no_screening_policy, no_screening_threshold, uniform_closed_form, Budgets, ScreeningPolicy, SolverKind,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once successive iterates differ by less than this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000 }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::domain("tolerance", self.tol));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter", 0.0));
        }
        Ok(())
    }
}

/// Iterates of the band-mean map, starting from `ρ⁰ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointTrace {
    pub rho_sequence: Vec<f64>,
    /// `F⁻¹(1-β+α) - F⁻¹(1-β-α)`, with levels clamped to `[0, 1]`.
    pub contraction: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl FixedPointTrace {
    /// Number of map evaluations performed.
    pub fn iterations(&self) -> usize {
        self.rho_sequence.len().saturating_sub(1)
    }

    pub fn last(&self) -> f64 {
        *self.rho_sequence.last().unwrap_or(&0.0)
    }

    /// `|ρ^{k+1} - ρ^k|` for each step.
    pub fn gaps(&self) -> Vec<f64> {
        self.rho_sequence.windows(2).map(|w| fabs(w[1] - w[0])).collect()
    }

    pub fn last_gap(&self) -> Option<f64> {
        let n = self.rho_sequence.len();
        (n >= 2).then(|| fabs(self.rho_sequence[n - 1] - self.rho_sequence[n - 2]))
    }

    pub fn converged(&self) -> bool {
        self.last_gap().is_some_and(|g| g < self.tolerance)
    }
}

/// One step of the band-mean map: the mean risk of the band that the
/// budgets would screen if that band's mean were `rho`.
///
/// Analytic distributions use the cumulative-mass levels
/// `[1-β-α+αρ, 1-β+αρ]`; empirical ones cut the sorted units by rank.
pub fn update_map(d: &RiskDistribution, budgets: Budgets, rho: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain("band mean", rho));
    }
    let (alpha, beta) = (budgets.alpha(), budgets.beta());
    match d {
        RiskDistribution::Empirical(e) => {
            let upper_mass = (beta - alpha) + alpha * (1.0 - rho);
            let (lo, hi) = band_ranks(e.len(), budgets, upper_mass)?;
            if hi == lo {
                return Err(Error::DegenerateBand { lo: lo as f64, hi: hi as f64 });
            }
            Ok(e.rank_sum(lo, hi) / (hi - lo) as f64)
        }
        _ => {
            let upper = (1.0 - beta + alpha * rho).clamp(0.0, 1.0);
            let lower = (1.0 - beta - alpha + alpha * rho).clamp(0.0, 1.0);
            if upper <= lower {
                return Err(Error::DegenerateBand { lo: lower, hi: upper });
            }
            let mean = d.quantile_integral(lower, upper)? / (upper - lower);
            Ok(mean.clamp(0.0, 1.0))
        }
    }
}

fn raw_contraction(d: &RiskDistribution, budgets: Budgets) -> Result<f64> {
    let (alpha, beta) = (budgets.alpha(), budgets.beta());
    let hi = d.quantile((1.0 - beta + alpha).min(1.0))?;
    let lo = d.quantile((1.0 - beta - alpha).max(0.0))?;
    Ok(hi - lo)
}

/// Lipschitz constant of the band-mean map,
/// `F⁻¹(1-β+α) - F⁻¹(1-β-α)`; lies in `[0, 1)` when `α < β` and `α + β < 1`.
pub fn contraction_constant(d: &RiskDistribution, budgets: Budgets) -> Result<f64> {
    if !budgets.in_guaranteed_regime() {
        return Err(Error::Regime { alpha: budgets.alpha(), beta: budgets.beta() });
    }
    raw_contraction(d, budgets)
}

/// `⌈ln(tol) / ln(c)⌉` iterations suffice to shrink the initial error
/// below `tol`; `None` when `c >= 1`.
pub fn iteration_bound(contraction: f64, tol: f64) -> Option<usize> {
    if !(0.0..1.0).contains(&contraction) || !(tol > 0.0 && tol < 1.0) {
        return None;
    }
    if contraction == 0.0 {
        return Some(1);
    }
    Some(libm::ceil(log(tol) / log(contraction)) as usize)
}

/// Iterates `ρ^{k+1} = g(ρ^k)` from `ρ⁰ = 0` until successive iterates
/// differ by less than `opts.tol`.
///
/// Requires `α > 0`. Outside `α < β, α + β < 1` the iteration still runs but
/// carries no convergence guarantee; the policy records this.
pub fn fixed_point_solve(
    d: &RiskDistribution,
    budgets: Budgets,
    opts: &SolverOptions,
) -> Result<(ScreeningPolicy, FixedPointTrace)> {
    opts.validate()?;
    if budgets.alpha() <= 0.0 {
        return Err(Error::domain("screening budget for the fixed-point iteration", budgets.alpha()));
    }
    let mut trace = FixedPointTrace {
        rho_sequence: vec![0.0],
        contraction: raw_contraction(d, budgets)?,
        tolerance: opts.tol,
        max_iterations: opts.max_iter,
    };
    let mut rho = 0.0;
    for _ in 0..opts.max_iter {
        let next = update_map(d, budgets, rho)?;
        trace.rho_sequence.push(next);
        let gap = fabs(next - rho);
        rho = next;
        if gap < opts.tol {
            let policy = ScreeningPolicy::from_rho(d, budgets, rho, SolverKind::FixedPoint, trace.iterations(), true)?;
            return Ok((policy, trace));
        }
    }
    Err(Error::NotConverged(Box::new(trace)))
}

/// Bisection on `q_beta ∈ [q̃_β, 1]` of
/// `G(q_β) = ∫_{q_α}^{q_β} μ dF + 1 - F(q_β) - β` with
/// `q_α = F⁻¹(F(q_β) - α)`.
///
/// Needs a continuous distribution unless `α = 0`, where the band is empty
/// and both thresholds equal `q̃_β`. Bisection stops once the bracket is
/// narrower than `tol / 1024` or cannot be split further.
pub fn root_find_solve(d: &RiskDistribution, budgets: Budgets, tol: f64) -> Result<ScreeningPolicy> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::domain("tolerance", tol));
    }
    if budgets.alpha() == 0.0 {
        return no_screening_policy(d, budgets, SolverKind::RootFind);
    }
    if !d.is_continuous() {
        return Err(Error::Unsupported("root finding needs a continuous distribution"));
    }
    let (alpha, beta) = (budgets.alpha(), budgets.beta());
    let lower_threshold = |q_beta: f64| -> Result<f64> {
        let level = (d.cdf(q_beta)? - alpha).max(0.0);
        d.quantile(level)
    };
    let constraint = |q_beta: f64| -> Result<f64> {
        let q_alpha = lower_threshold(q_beta)?;
        Ok(d.partial_expectation(q_alpha, q_beta)? + d.survival(q_beta)? - beta)
    };

    let mut lo = no_screening_threshold(d, budgets)?;
    let mut hi = 1.0;
    let g_lo = constraint(lo)?;
    let g_hi = constraint(hi)?;
    if g_lo == 0.0 {
        hi = lo;
    } else if g_hi == 0.0 {
        lo = hi;
    } else if (g_lo > 0.0) == (g_hi > 0.0) {
        return Err(Error::BracketFailure { lo, g_lo, hi, g_hi });
    }
    let width = tol / 1024.0;
    let mut steps = 0;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        steps += 1;
        let g = constraint(mid)?;
        if g == 0.0 {
            lo = mid;
            hi = mid;
        } else if (g > 0.0) == (g_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q_beta = 0.5 * (lo + hi);
    let q_alpha = lower_threshold(q_beta)?;
    let rho = (d.partial_expectation(q_alpha, q_beta)? / alpha).clamp(0.0, 1.0);
    Ok(ScreeningPolicy {
        q_alpha,
        q_beta,
        q_tilde_beta: no_screening_threshold(d, budgets)?,
        rho_star: rho,
        mass_direct: beta - alpha,
        mass_residual: alpha * (1.0 - rho),
        mass_screen: alpha,
        solver: SolverKind::RootFind,
        iterations: steps,
        converged: true,
        in_guaranteed_regime: budgets.in_guaranteed_regime(),
    })
}

/// Optimal policy with the requested solver. `α = 0` short-circuits to the
/// no-screening threshold for every solver.
pub fn solve(
    d: &RiskDistribution,
    budgets: Budgets,
    kind: SolverKind,
    opts: &SolverOptions,
) -> Result<ScreeningPolicy> {
    if budgets.alpha() == 0.0 {
        return no_screening_policy(d, budgets, kind);
    }
    match kind {
        SolverKind::ClosedFormUniform => match d {
            RiskDistribution::Uniform => Ok(uniform_closed_form(budgets)),
            _ => Err(Error::Unsupported("the closed form holds for uniform risk only")),
        },
        SolverKind::RootFind => root_find_solve(d, budgets, opts.tol),
        SolverKind::FixedPoint => fixed_point_solve(d, budgets, opts).map(|(p, _)| p),
    }
}

/// Best available solver: the closed form for uniform risk, the fixed
/// point otherwise.
pub fn optimal_policy(d: &RiskDistribution, budgets: Budgets, opts: &SolverOptions) -> Result<ScreeningPolicy> {
    let kind = match d {
        RiskDistribution::Uniform => SolverKind::ClosedFormUniform,
        _ => SolverKind::FixedPoint,
    };
    solve(d, budgets, kind, opts)
}
