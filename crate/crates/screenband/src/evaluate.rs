//! Evaluation of the optimal policy on externally produced scores with
//! known outcomes.
//!
//! The scores define an empirical risk distribution; each screening budget
//! gets its own optimal band, and realized precision is measured against
//! the labels, screened units revealing theirs. Random screening and no
//! screening run on the same units for comparison.

use std::collections::HashMap;
use std::path::Path;

use screening_core::sim::{ExperimentConfig, PopulationSource, Unit};
use screening_core::value::{value_curve, ValueCurve};
use screening_core::{ExperimentReport, PolicyKind, Population, SolverOptions};

use crate::error::{CliError, Result};
use crate::io::{read_labels, read_scores};
use crate::parallel::evaluate_cells;

/// Policies compared by [`evaluate_external`], in report order.
pub const EVALUATED_KINDS: [PolicyKind; 3] =
    [PolicyKind::OptimalScreening, PolicyKind::RandomScreening, PolicyKind::NoScreening];

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Expected value of the optimal policy under the score distribution.
    pub curve: ValueCurve,
    /// One replication: realized outcomes on the labelled units.
    pub report: ExperimentReport,
}

/// Joins the score and label files by id, keeping the score file's order.
pub fn load_population(scores_path: &Path, labels_path: &Path, seed: u64) -> Result<Population> {
    let scores = read_scores(scores_path)?;
    let mut labels: HashMap<String, bool> = read_labels(labels_path)?.into_iter().collect();
    let mut units = Vec::with_capacity(scores.len());
    for (i, (id, mu)) in scores.into_iter().enumerate() {
        let y = labels.remove(&id).ok_or_else(|| CliError::invalid(format!("id `{id}` has a score but no label")))?;
        units.push(Unit { id: i as u64, mu, y });
    }
    if let Some(id) = labels.keys().min() {
        return Err(CliError::invalid(format!("id `{id}` has a label but no score")));
    }
    Ok(Population::new(units, seed, PopulationSource::Loaded(scores_path.display().to_string()))?)
}

pub fn evaluate_population(
    pop: &Population,
    beta: f64,
    alpha_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Evaluation> {
    let curve = value_curve(pop.scores(), beta, alpha_grid, opts)?;
    let config = ExperimentConfig {
        dist: pop.scores().clone(),
        beta,
        alpha_grid: alpha_grid.to_vec(),
        kinds: EVALUATED_KINDS.to_vec(),
        n: pop.len(),
        reps: 1,
        master_seed: pop.seed(),
        solver: *opts,
    };
    config.validate()?;
    let rows = evaluate_cells(&config, pop, 0);
    Ok(Evaluation { curve, report: ExperimentReport::from_replications(&config, vec![rows]) })
}

/// Optimal screening against held-out labels across a grid of screening
/// budgets, with random screening and no screening as baselines.
pub fn evaluate_external(
    scores_path: &Path,
    labels_path: &Path,
    beta: f64,
    alpha_grid: &[f64],
    seed: u64,
    opts: &SolverOptions,
) -> Result<Evaluation> {
    let pop = load_population(scores_path, labels_path, seed)?;
    evaluate_population(&pop, beta, alpha_grid, opts)
}
