//! Rayon drivers for the core experiment loop.
//!
//! Populations are sampled in chunks and cells evaluated concurrently, but
//! every random draw is keyed by `(seed, index)` and results are collected
//! in index order, so reports match the sequential core functions exactly.

use rayon::prelude::*;
use screening_core::sim::{derive_seed, run_policy, sample_units, ExperimentConfig, ExperimentRow, PopulationSource};
use screening_core::{Budgets, Error, ExperimentReport, Population, Result, RiskDistribution};

use crate::error::CliError;

const CHUNK: usize = 1 << 14;

/// Same population as [`screening_core::sim::sample_population`].
pub fn sample_population(d: &RiskDistribution, n: usize, seed: u64) -> Result<Population> {
    if n == 0 {
        return Err(Error::Domain { what: "population size", value: 0.0 });
    }
    let units = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| sample_units(d, seed, c * CHUNK..((c + 1) * CHUNK).min(n)))
        .collect();
    Population::new(units, seed, PopulationSource::Sampled(d.clone()))
}

/// Same rows as [`screening_core::sim::evaluate_cells`].
pub fn evaluate_cells(config: &ExperimentConfig, pop: &Population, rep: usize) -> Vec<ExperimentRow> {
    let cells: Vec<_> = config
        .kinds
        .iter()
        .flat_map(|&kind| config.alpha_grid.iter().enumerate().map(move |(ai, &alpha)| (kind, ai, alpha)))
        .collect();
    cells
        .into_par_iter()
        .map(|(kind, ai, alpha)| {
            let outcome = Budgets::new(alpha, config.beta)
                .and_then(|b| run_policy(pop, b, kind, derive_seed(pop.seed(), ai as u64), &config.solver));
            ExperimentRow { kind, alpha, rep, outcome }
        })
        .collect()
}

/// Same report as [`screening_core::sim::run_experiment`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let replications = (0..config.reps)
        .into_par_iter()
        .map(|rep| {
            let pop = sample_population(&config.dist, config.n, config.population_seed(rep))?;
            Ok(evaluate_cells(config, &pop, rep))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport::from_replications(config, replications))
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> std::result::Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::invalid("--threads must be at least 1")),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f)),
    }
}
