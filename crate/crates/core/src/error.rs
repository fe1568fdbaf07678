use alloc::boxed::Box;
use core::fmt;

use crate::solver::FixedPointTrace;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    Domain { what: &'static str, value: f64 },
    /// A distribution could not be constructed from its parameters.
    InvalidDistribution(&'static str),
    /// Budgets violate `0 <= alpha <= beta < 1`.
    InvalidBudgets { alpha: f64, beta: f64 },
    /// A band `(lo, hi]` carries no probability mass.
    DegenerateBand { lo: f64, hi: f64 },
    /// The fixed-point iteration hit its iteration cap.
    NotConverged(Box<FixedPointTrace>),
    /// The constraint map does not change sign on the bracket.
    BracketFailure { lo: f64, g_lo: f64, hi: f64, g_hi: f64 },
    /// The budgets fall outside the hypotheses an operation requires.
    Regime { alpha: f64, beta: f64 },
    /// The operation is not defined for this distribution kind.
    Unsupported(&'static str),
    /// The policy or budgets cannot be applied to a population of this size.
    Infeasible(&'static str),
    /// Exhaustive enumeration would visit more subsets than allowed.
    EnumerationCap { subsets: u128, cap: u128 },
    /// An oracle instance violates its invariants.
    InvalidInstance(&'static str),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::InvalidDistribution(msg) => write!(f, "invalid distribution: {msg}"),
            Error::InvalidBudgets { alpha, beta } => {
                write!(f, "invalid budgets alpha={alpha}, beta={beta}: need 0 <= alpha <= beta < 1")
            }
            Error::DegenerateBand { lo, hi } => {
                write!(f, "band ({lo}, {hi}] has zero probability mass")
            }
            Error::NotConverged(trace) => write!(
                f,
                "fixed point did not converge after {} iterations (last gap {:e})",
                trace.iterations(),
                trace.last_gap().unwrap_or(f64::NAN)
            ),
            Error::BracketFailure { lo, g_lo, hi, g_hi } => {
                write!(f, "no sign change of the budget constraint on [{lo}, {hi}] (G = {g_lo:e}, {g_hi:e})")
            }
            Error::Regime { alpha, beta } => {
                write!(f, "alpha={alpha}, beta={beta} outside the regime 0 <= alpha < beta, alpha + beta < 1")
            }
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::Infeasible(msg) => write!(f, "infeasible: {msg}"),
            Error::EnumerationCap { subsets, cap } => {
                write!(f, "{subsets} screening sets exceed the enumeration cap of {cap}")
            }
            Error::InvalidInstance(msg) => write!(f, "invalid oracle instance: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
