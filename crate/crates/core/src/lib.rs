//! Optimal screening and allocation for two-stage resource allocation.
//!
//! A decision-maker ranks units by a risk score `μ = P(Y = 1 | X)`, may
//! physically verify (screen) a fraction `α` of the population to observe
//! `Y`, and allocates a resource to a fraction `β`. The optimal policy
//! directly allocates the highest-risk units, screens a contiguous band
//! just below them, and spends the budget saved on confirmed negatives on
//! the next units in line.
//!
//! Modules:
//! - [`dist`]: risk-score distributions (uniform, symmetric Beta, point
//!   mass, empirical samples) with CDF, quantile and partial expectation.
//! - [`policy`]: budgets, the policy record, the no-screening threshold,
//!   the uniform closed form and realized two-stage evaluation.
//! - [`solver`]: fixed-point and bisection solvers for the band thresholds.
//! - [`value`]: allocation value, its first and second derivative in `α`,
//!   and `α`-sweep curves.
//! - [`sim`]: seeded synthetic populations, baseline policies and
//!   replicated experiments.
//! - [`oracle`]: exhaustive search over screening sets on small instances.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dist;
mod error;
mod math;
pub mod oracle;
pub mod policy;
pub mod sim;
pub mod solver;
mod special;
pub mod value;

pub use dist::{Empirical, RiskDistribution};
pub use error::{Error, Result};
pub use policy::{AllocationResult, Budgets, ScreeningPolicy, SolverKind};
pub use sim::{ExperimentReport, PolicyKind, Population, Unit};
pub use solver::{FixedPointTrace, SolverOptions};
pub use value::{CurveRow, ValueCurve};
