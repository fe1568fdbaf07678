//! Synthetic populations, baseline screening rules and replicated
//! experiments.
//!
//! Every unit draws from its own ChaCha8 stream keyed by `(seed, index)`,
//! so a population is the same whether it is generated in one pass or in
//! parallel chunks.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::dist::{Empirical, RiskDistribution};
use crate::error::{Error, Result};
use crate::math::{exp, log, sqrt};
use crate::policy::{allocate, evaluate_two_stage, no_screening_policy, AllocationResult, Budgets, SolverKind};
use crate::solver::{fixed_point_solve, SolverOptions};

/// One member of a population: true risk and realized outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Unit {
    pub id: u64,
    pub mu: f64,
    pub y: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PopulationSource {
    Sampled(RiskDistribution),
    /// Units read from a file; holds its path.
    Loaded(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    units: Vec<Unit>,
    seed: u64,
    source: PopulationSource,
    scores: RiskDistribution,
    outcomes_by_rank: Vec<bool>,
}

impl Population {
    pub fn new(units: Vec<Unit>, seed: u64, source: PopulationSource) -> Result<Self> {
        let mus: Vec<f64> = units.iter().map(|u| u.mu).collect();
        let ranking = Empirical::new(&mus)?;
        let outcomes_by_rank = ranking.rank_order().iter().map(|&i| units[i].y).collect();
        Ok(Self { units, seed, source, scores: RiskDistribution::Empirical(ranking), outcomes_by_rank })
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> &PopulationSource {
        &self.source
    }

    /// Empirical distribution of the units' risk scores.
    pub fn scores(&self) -> &RiskDistribution {
        &self.scores
    }

    /// Outcomes ordered by ascending risk rank.
    pub fn outcomes_by_rank(&self) -> &[bool] {
        &self.outcomes_by_rank
    }

    pub fn prevalence(&self) -> f64 {
        self.units.iter().filter(|u| u.y).count() as f64 / self.len() as f64
    }
}

/// SplitMix64 finalizer, used to derive independent child seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Log of a Gamma(shape, 1) variate. Small shapes use
/// `G(shape) = G(shape + 1) U^{1/shape}` in log space, since the variate
/// itself underflows for shapes near zero.
fn ln_gamma_variate<R: Rng>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("positive shape");
        log(g.sample(rng))
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("positive shape");
        let u = 1.0 - rng.random::<f64>();
        log(g.sample(rng)) + log(u) / shape
    }
}

fn draw_mu<R: Rng>(d: &RiskDistribution, rng: &mut R) -> f64 {
    match d {
        RiskDistribution::Uniform => rng.random::<f64>(),
        RiskDistribution::Beta(b) => {
            let lx = ln_gamma_variate(b.t(), rng);
            let ly = ln_gamma_variate(b.t(), rng);
            (1.0 / (1.0 + exp(ly - lx))).clamp(0.0, 1.0)
        }
        RiskDistribution::PointMass(p) => p.c(),
        RiskDistribution::Empirical(e) => {
            let scores = e.sorted_scores();
            scores[rng.random_range(0..scores.len())]
        }
    }
}

/// Units `range` of the population that [`sample_population`] would draw.
pub fn sample_units(d: &RiskDistribution, seed: u64, range: Range<usize>) -> Vec<Unit> {
    let base = ChaCha8Rng::seed_from_u64(seed);
    range
        .map(|i| {
            let mut rng = base.clone();
            rng.set_stream(i as u64);
            let mu = draw_mu(d, &mut rng);
            let y = rng.random::<f64>() < mu;
            Unit { id: i as u64, mu, y }
        })
        .collect()
}

/// `n` units with `mu` drawn from `d` and `y ~ Bernoulli(mu)`.
pub fn sample_population(d: &RiskDistribution, n: usize, seed: u64) -> Result<Population> {
    if n == 0 {
        return Err(Error::domain("population size", 0.0));
    }
    Population::new(sample_units(d, seed, 0..n), seed, PopulationSource::Sampled(d.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PolicyKind {
    /// Band policy solved on the population's own scores.
    OptimalScreening,
    /// Threshold rule at the `(1-β)`-quantile.
    NoScreening,
    /// `⌊αn⌋` units screened uniformly at random.
    RandomScreening,
    /// The `⌊αn⌋` units just below the no-screening threshold.
    HeuristicTopAdjacent,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::OptimalScreening,
        PolicyKind::NoScreening,
        PolicyKind::RandomScreening,
        PolicyKind::HeuristicTopAdjacent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::OptimalScreening => "optimal",
            PolicyKind::NoScreening => "none",
            PolicyKind::RandomScreening => "random",
            PolicyKind::HeuristicTopAdjacent => "heuristic",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Applies one screening rule to `pop` and realizes the allocation.
///
/// Every kind shares the same allocation step: screened positives first,
/// then unscreened units by descending score. `seed` drives the random
/// baseline only.
pub fn run_policy(
    pop: &Population,
    budgets: Budgets,
    kind: PolicyKind,
    seed: u64,
    opts: &SolverOptions,
) -> Result<AllocationResult> {
    let n = pop.len();
    let budget = budgets.budget_units(n);
    if budget == 0 {
        return Err(Error::Infeasible("allocation budget rounds to zero units"));
    }
    let k = budgets.screen_units(n);
    if budget + k > n {
        return Err(Error::Infeasible("screening and allocation budgets exceed the population"));
    }
    match kind {
        PolicyKind::OptimalScreening => {
            let policy = if budgets.alpha() == 0.0 {
                no_screening_policy(pop.scores(), budgets, SolverKind::FixedPoint)?
            } else {
                fixed_point_solve(pop.scores(), budgets, opts)?.0
            };
            evaluate_two_stage(&policy, pop)
        }
        PolicyKind::NoScreening => Ok(allocate(pop, &vec![false; n], budget)),
        PolicyKind::RandomScreening => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut screened = vec![false; n];
            for r in rand::seq::index::sample(&mut rng, n, k) {
                screened[r] = true;
            }
            Ok(allocate(pop, &screened, budget))
        }
        PolicyKind::HeuristicTopAdjacent => {
            let hi = n - budget;
            let mut screened = vec![false; n];
            screened[hi - k..hi].iter_mut().for_each(|s| *s = true);
            Ok(allocate(pop, &screened, budget))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dist: RiskDistribution,
    pub beta: f64,
    pub alpha_grid: Vec<f64>,
    pub kinds: Vec<PolicyKind>,
    pub n: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub solver: SolverOptions,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("population size", 0.0));
        }
        if self.reps == 0 {
            return Err(Error::domain("replications", 0.0));
        }
        if self.kinds.is_empty() || self.alpha_grid.is_empty() {
            return Err(Error::InvalidInstance("experiment needs at least one policy kind and grid point"));
        }
        Budgets::new(0.0, self.beta)?;
        Ok(())
    }

    /// Seed of replication `rep`'s population.
    pub fn population_seed(&self, rep: usize) -> u64 {
        derive_seed(self.master_seed, rep as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub kind: PolicyKind,
    pub alpha: f64,
    pub rep: usize,
    pub outcome: Result<AllocationResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub kind: PolicyKind,
    pub alpha: f64,
    /// Mean precision over successful replications.
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); zero for one replication.
    pub std: f64,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// Ordered by kind, then grid point, then replication.
    pub rows: Vec<ExperimentRow>,
    /// One row per `(kind, alpha)` in the same order.
    pub aggregates: Vec<AggregateRow>,
}

impl ExperimentReport {
    /// Assembles a report from per-replication cell lists as produced by
    /// [`run_replication`], indexed by replication.
    pub fn from_replications(config: &ExperimentConfig, replications: Vec<Vec<ExperimentRow>>) -> Self {
        let cells = config.kinds.len() * config.alpha_grid.len();
        let mut slots: Vec<Option<ExperimentRow>> = vec![None; cells * replications.len()];
        let reps = replications.len();
        for (rep, rows) in replications.into_iter().enumerate() {
            for (cell, row) in rows.into_iter().enumerate() {
                slots[cell * reps + rep] = Some(row);
            }
        }
        let rows: Vec<ExperimentRow> = slots.into_iter().flatten().collect();
        let aggregates = rows.chunks(reps.max(1)).map(aggregate).collect();
        Self { rows, aggregates }
    }

    pub fn aggregate(&self, kind: PolicyKind, alpha: f64) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| a.kind == kind && a.alpha == alpha)
    }
}

fn aggregate(rows: &[ExperimentRow]) -> AggregateRow {
    let values: Vec<f64> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).map(|o| o.precision).collect();
    let m = values.len();
    let mean = if m == 0 { f64::NAN } else { values.iter().sum::<f64>() / m as f64 };
    let std = match m {
        0 => f64::NAN,
        1 => 0.0,
        _ => sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64),
    };
    AggregateRow { kind: rows[0].kind, alpha: rows[0].alpha, mean, std, successes: m }
}

/// All `(kind, alpha)` cells of replication `rep`, evaluated on one shared
/// population. Cells are ordered by kind, then grid point.
pub fn run_replication(config: &ExperimentConfig, rep: usize) -> Result<Vec<ExperimentRow>> {
    let pop = sample_population(&config.dist, config.n, config.population_seed(rep))?;
    Ok(evaluate_cells(config, &pop, rep))
}

/// Evaluates every `(kind, alpha)` cell of `config` on a given population.
pub fn evaluate_cells(config: &ExperimentConfig, pop: &Population, rep: usize) -> Vec<ExperimentRow> {
    let mut rows = Vec::with_capacity(config.kinds.len() * config.alpha_grid.len());
    for &kind in &config.kinds {
        for (ai, &alpha) in config.alpha_grid.iter().enumerate() {
            let outcome = Budgets::new(alpha, config.beta)
                .and_then(|b| run_policy(pop, b, kind, derive_seed(pop.seed(), ai as u64), &config.solver));
            rows.push(ExperimentRow { kind, alpha, rep, outcome });
        }
    }
    rows
}

/// Replicated experiment: one fresh population per replication, every cell
/// evaluated on it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let replications = (0..config.reps).map(|rep| run_replication(config, rep)).collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport::from_replications(config, replications))
}
