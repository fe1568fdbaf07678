//! Exhaustive search over screening sets for small populations.
//!
//! Budgets are taken in expectation: screening a unit costs its risk `μ`
//! out of the allocation budget and yields `μ` vulnerable units reached,
//! and the remaining budget fills unscreened units by descending risk with
//! the last unit taken fractionally. Screened positives beyond the budget
//! go unserved, so a set whose risks sum past the budget is worth exactly
//! the budget.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::fabs;

/// Largest number of screening sets [`oracle_solve`] will visit.
pub const ENUMERATION_CAP: u128 = 2_000_000;

/// Most units an instance may hold.
pub const MAX_UNITS: usize = 20;

const TIE_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleInstance {
    scores: Vec<f64>,
    screen_capacity: usize,
    alloc_budget: f64,
    /// Unit indices by descending score, ties by ascending index.
    descending: Vec<usize>,
}

impl OracleInstance {
    pub fn new(scores: Vec<f64>, screen_capacity: usize, alloc_budget: f64) -> Result<Self> {
        let n = scores.len();
        if n == 0 || n > MAX_UNITS {
            return Err(Error::InvalidInstance("instance must hold between 1 and 20 units"));
        }
        if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidInstance("scores must lie in [0, 1]"));
        }
        if screen_capacity > n {
            return Err(Error::InvalidInstance("screening capacity exceeds the number of units"));
        }
        if !(alloc_budget > 0.0 && alloc_budget < n as f64) {
            return Err(Error::InvalidInstance("allocation budget must lie strictly between 0 and n"));
        }
        let mut descending: Vec<usize> = (0..n).collect();
        descending.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
        Ok(Self { scores, screen_capacity, alloc_budget, descending })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn screen_capacity(&self) -> usize {
        self.screen_capacity
    }

    pub fn alloc_budget(&self) -> f64 {
        self.alloc_budget
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Allocation fraction per unit when `screened` units are screened.
    /// Screened units report their risk, the expected allocation they draw.
    pub fn allocation(&self, screened: &[usize]) -> Vec<f64> {
        let mut share = vec![0.0; self.len()];
        let mut is_screened = vec![false; self.len()];
        let mut spent = 0.0;
        for &i in screened {
            is_screened[i] = true;
            share[i] = self.scores[i];
            spent += self.scores[i];
        }
        let mut remaining = self.alloc_budget - spent;
        for &i in &self.descending {
            if remaining <= 0.0 {
                break;
            }
            if !is_screened[i] {
                let take = remaining.min(1.0);
                share[i] = take;
                remaining -= take;
            }
        }
        share
    }

    /// Expected vulnerable units reached when screening `screened`.
    pub fn value(&self, screened: &[usize]) -> f64 {
        let mut is_screened = vec![false; self.len()];
        let mut total = 0.0;
        for &i in screened {
            is_screened[i] = true;
            total += self.scores[i];
        }
        if total >= self.alloc_budget {
            return self.alloc_budget;
        }
        let mut remaining = self.alloc_budget - total;
        for &i in &self.descending {
            if remaining <= 0.0 {
                break;
            }
            if !is_screened[i] {
                let take = remaining.min(1.0);
                total += take * self.scores[i];
                remaining -= take;
            }
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub best_value: f64,
    /// Every optimal screening set, as ascending unit indices, in
    /// lexicographic order.
    pub best_sets: Vec<Vec<usize>>,
    pub sets_visited: u64,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Maximizes [`OracleInstance::value`] over all screening sets of exactly
/// `screen_capacity` units. Values within a relative `1e-12` of the best
/// count as ties and are all reported.
pub fn oracle_solve(inst: &OracleInstance) -> Result<OracleSolution> {
    oracle_solve_with_cap(inst, ENUMERATION_CAP)
}

pub fn oracle_solve_with_cap(inst: &OracleInstance, cap: u128) -> Result<OracleSolution> {
    let n = inst.len();
    let k = inst.screen_capacity;
    let subsets = binomial(n, k);
    if subsets > cap {
        return Err(Error::EnumerationCap { subsets, cap });
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_sets: Vec<Vec<usize>> = Vec::new();
    let mut visited = 0;
    let mut set: Vec<usize> = (0..k).collect();
    loop {
        visited += 1;
        let v = inst.value(&set);
        let slack = TIE_REL * best.abs().max(1.0);
        if best_sets.is_empty() || v > best + slack {
            best = v;
            best_sets.clear();
            best_sets.push(set.clone());
        } else if fabs(v - best) <= slack {
            best_sets.push(set.clone());
        }
        if !next_combination(&mut set, n) {
            break;
        }
    }
    Ok(OracleSolution { best_value: best, best_sets, sets_visited: visited })
}

/// Advances `set` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(set: &mut [usize], n: usize) -> bool {
    let k = set.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if set[i] < n - k + i {
            set[i] += 1;
            for j in i + 1..k {
                set[j] = set[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// A screening set fails contiguity when an unscreened unit's score lies
/// strictly between two screened scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapWitness {
    pub unscreened: usize,
    pub below: usize,
    pub above: usize,
}

/// A fully allocated unscreened unit scoring below a screened unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginWitness {
    pub allocated: usize,
    pub screened: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub passed: bool,
    pub best_value: f64,
    pub argmax_count: usize,
    /// First optimal set that is contiguous with every full allocation above it.
    pub witness_set: Option<Vec<usize>>,
    /// Violations found in the first optimal set, reported on failure.
    pub gap: Option<GapWitness>,
    pub margin: Option<MarginWitness>,
}

/// Checks that some optimal screening set is contiguous in score order and
/// that, under it, every fully allocated unscreened unit scores at least as
/// high as every screened one.
pub fn verify_structure(inst: &OracleInstance) -> Result<StructureReport> {
    let sol = oracle_solve(inst)?;
    let mut report = StructureReport {
        passed: false,
        best_value: sol.best_value,
        argmax_count: sol.best_sets.len(),
        witness_set: None,
        gap: None,
        margin: None,
    };
    for set in &sol.best_sets {
        let gap = find_gap(inst, set);
        let margin = find_margin_violation(inst, set);
        if gap.is_none() && margin.is_none() {
            report.passed = true;
            report.witness_set = Some(set.clone());
            report.gap = None;
            report.margin = None;
            return Ok(report);
        }
        if report.gap.is_none() && report.margin.is_none() {
            report.gap = gap;
            report.margin = margin;
        }
    }
    Ok(report)
}

fn find_gap(inst: &OracleInstance, set: &[usize]) -> Option<GapWitness> {
    let s = inst.scores();
    let (&below, &above) =
        (set.iter().min_by(|&&i, &&j| s[i].total_cmp(&s[j]))?, set.iter().max_by(|&&i, &&j| s[i].total_cmp(&s[j]))?);
    (0..inst.len())
        .filter(|i| !set.contains(i))
        .find(|&i| s[below] < s[i] && s[i] < s[above])
        .map(|unscreened| GapWitness { unscreened, below, above })
}

fn find_margin_violation(inst: &OracleInstance, set: &[usize]) -> Option<MarginWitness> {
    let s = inst.scores();
    let &top = set.iter().max_by(|&&i, &&j| s[i].total_cmp(&s[j]))?;
    let share = inst.allocation(set);
    (0..inst.len())
        .filter(|i| !set.contains(i))
        .find(|&i| share[i] >= 1.0 && s[i] < s[top])
        .map(|allocated| MarginWitness { allocated, screened: top })
}
