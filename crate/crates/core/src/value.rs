//! Value of screening as a function of the screening budget.

use alloc::vec::Vec;

use crate::dist::RiskDistribution;
use crate::error::{Error, Result};
use crate::policy::{no_screening_policy, no_screening_threshold, Budgets, ScreeningPolicy, SolverKind};
use crate::solver::{optimal_policy, SolverOptions};

/// Expected mass of vulnerable units reached by `policy`:
/// `∫_{q_alpha}^1 μ dF(μ)`.
///
/// Evaluated from the policy's cumulative-mass level `F(q_alpha)`, which
/// splits atoms and stays exact when `q_alpha` rounds; empirical samples are
/// cut by rank, matching how the policy is applied.
pub fn allocation_value(d: &RiskDistribution, policy: &ScreeningPolicy) -> Result<f64> {
    match d {
        RiskDistribution::Empirical(e) => {
            let n = e.len();
            let (lo, _) = policy.band_ranks(n)?;
            Ok(e.rank_sum(lo, n) / n as f64)
        }
        RiskDistribution::Uniform => d.partial_expectation(policy.q_alpha, 1.0),
        _ => d.quantile_integral(policy.lower_level(), 1.0),
    }
}

/// `q_α (1 - q_β) / (1 - q_β + q_α)`, zero when both factors vanish.
pub fn marginal_from_thresholds(q_alpha: f64, q_beta: f64) -> f64 {
    let denom = 1.0 - q_beta + q_alpha;
    if denom <= 0.0 {
        return 0.0;
    }
    q_alpha * (1.0 - q_beta) / denom
}

fn analytic_policy(d: &RiskDistribution, budgets: Budgets, opts: &SolverOptions) -> Result<ScreeningPolicy> {
    if d.as_empirical().is_some() {
        return Err(Error::Unsupported(
            "closed-form derivatives need an analytic distribution; use finite differences along a curve",
        ));
    }
    optimal_policy(d, budgets, opts)
}

/// `dV*/dα` at the optimal thresholds for `budgets`.
pub fn marginal_value(d: &RiskDistribution, budgets: Budgets, opts: &SolverOptions) -> Result<f64> {
    let p = analytic_policy(d, budgets, opts)?;
    Ok(marginal_from_thresholds(p.q_alpha, p.q_beta))
}

/// `d²V*/dα²` at the optimal thresholds:
/// `-[(1-q_β)³ f(q_β) + q_α³ f(q_α)] / [f(q_α) f(q_β) (1-q_β+q_α)³]`.
pub fn second_derivative(d: &RiskDistribution, budgets: Budgets, opts: &SolverOptions) -> Result<f64> {
    if !d.is_continuous() {
        return Err(Error::Unsupported("the second derivative needs a density"));
    }
    let p = analytic_policy(d, budgets, opts)?;
    let (qa, qb) = (p.q_alpha, p.q_beta);
    let fa = d.density(qa).ok_or(Error::Unsupported("no density"))?;
    let fb = d.density(qb).ok_or(Error::Unsupported("no density"))?;
    let gap = 1.0 - qb + qa;
    let cube = |x: f64| x * x * x;
    let num = cube(1.0 - qb) * fb + cube(qa) * fa;
    Ok(-num / (fa * fb * cube(gap)))
}

/// How the `marginal` column of a curve was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MarginalMethod {
    ClosedForm,
    FiniteDifference,
}

impl MarginalMethod {
    pub fn name(self) -> &'static str {
        match self {
            MarginalMethod::ClosedForm => "closed_form",
            MarginalMethod::FiniteDifference => "finite_difference",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub alpha: f64,
    pub q_alpha: f64,
    pub q_beta: f64,
    pub q_tilde_beta: f64,
    pub value: f64,
    /// `value / beta`.
    pub precision: f64,
    pub marginal: f64,
    /// `value - V*(0)`.
    pub utility_gap: f64,
    pub in_guaranteed_regime: bool,
    /// Set when the solver failed at this grid point; numeric fields are NaN.
    pub failure: Option<Error>,
}

impl CurveRow {
    fn failed(alpha: f64, budgets: Option<Budgets>, err: Error) -> Self {
        CurveRow {
            alpha,
            q_alpha: f64::NAN,
            q_beta: f64::NAN,
            q_tilde_beta: f64::NAN,
            value: f64::NAN,
            precision: f64::NAN,
            marginal: f64::NAN,
            utility_gap: f64::NAN,
            in_guaranteed_regime: budgets.is_some_and(|b| b.in_guaranteed_regime()),
            failure: Some(err),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueCurve {
    pub beta: f64,
    pub marginal_method: MarginalMethod,
    pub rows: Vec<CurveRow>,
}

impl ValueCurve {
    pub fn successful_rows(&self) -> impl Iterator<Item = &CurveRow> {
        self.rows.iter().filter(|r| r.is_ok())
    }
}

fn check_grid(beta: f64, alpha_grid: &[f64]) -> Result<()> {
    for w in alpha_grid.windows(2) {
        if w[0].is_nan() || w[1].is_nan() || w[0] > w[1] {
            return Err(Error::domain("alpha grid must be sorted ascending", w[1]));
        }
    }
    if let Some(&bad) = alpha_grid.iter().find(|&&a| !(0.0..=beta).contains(&a)) {
        return Err(Error::domain("alpha grid point outside [0, beta]", bad));
    }
    Ok(())
}

/// Value of screening along a grid of screening budgets at fixed `beta`.
///
/// Each row solves its own policy (no screening at `α = 0`, the best
/// available solver otherwise). A solver failure marks that row and leaves
/// the others intact. The `marginal` column is the closed form for analytic
/// distributions and a finite difference along the grid for empirical ones.
pub fn value_curve(d: &RiskDistribution, beta: f64, alpha_grid: &[f64], opts: &SolverOptions) -> Result<ValueCurve> {
    let base = Budgets::new(0.0, beta)?;
    check_grid(beta, alpha_grid)?;
    let baseline_policy = no_screening_policy(d, base, SolverKind::FixedPoint)?;
    let baseline = allocation_value(d, &baseline_policy)?;
    let q_tilde = no_screening_threshold(d, base)?;
    let empirical = d.as_empirical().is_some();

    let mut rows: Vec<CurveRow> = alpha_grid
        .iter()
        .map(|&alpha| {
            let budgets = match Budgets::new(alpha, beta) {
                Ok(b) => b,
                Err(e) => return CurveRow::failed(alpha, None, e),
            };
            let row = optimal_policy(d, budgets, opts).and_then(|p| {
                let value = allocation_value(d, &p)?;
                Ok(CurveRow {
                    alpha,
                    q_alpha: p.q_alpha,
                    q_beta: p.q_beta,
                    q_tilde_beta: q_tilde,
                    value,
                    precision: value / beta,
                    marginal: if empirical { f64::NAN } else { marginal_from_thresholds(p.q_alpha, p.q_beta) },
                    utility_gap: value - baseline,
                    in_guaranteed_regime: budgets.in_guaranteed_regime(),
                    failure: None,
                })
            });
            row.unwrap_or_else(|e| CurveRow::failed(alpha, Some(budgets), e))
        })
        .collect();

    if empirical {
        fill_finite_differences(&mut rows);
    }
    Ok(ValueCurve {
        beta,
        marginal_method: if empirical { MarginalMethod::FiniteDifference } else { MarginalMethod::ClosedForm },
        rows,
    })
}

/// Central differences between successful neighbours, one-sided at the ends.
fn fill_finite_differences(rows: &mut [CurveRow]) {
    let ok: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].is_ok()).collect();
    if ok.len() < 2 {
        return;
    }
    for (j, &i) in ok.iter().enumerate() {
        let left = ok[j.saturating_sub(1)];
        let right = ok[(j + 1).min(ok.len() - 1)];
        let da = rows[right].alpha - rows[left].alpha;
        if da > 0.0 {
            rows[i].marginal = (rows[right].value - rows[left].value) / da;
        }
    }
}
