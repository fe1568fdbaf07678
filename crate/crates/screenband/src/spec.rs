//! Parsing of distribution specs, screening grids and policy lists.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use screening_core::{PolicyKind, RiskDistribution};

use crate::error::{CliError, Result};
use crate::io::read_scores;

/// `uniform`, `beta:t=<t>`, `pointmass:c=<c>` or `scores:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum DistSpec {
    Uniform,
    Beta(f64),
    PointMass(f64),
    Scores(PathBuf),
}

impl DistSpec {
    /// Builds the distribution, reading the score file if there is one.
    pub fn load(&self) -> Result<RiskDistribution> {
        Ok(match self {
            DistSpec::Uniform => RiskDistribution::uniform(),
            DistSpec::Beta(t) => RiskDistribution::beta(*t)?,
            DistSpec::PointMass(c) => RiskDistribution::point_mass(*c)?,
            DistSpec::Scores(path) => {
                let scores: Vec<f64> = read_scores(path)?.into_iter().map(|(_, s)| s).collect();
                RiskDistribution::empirical(&scores)?
            }
        })
    }
}

fn named_param(body: &str, name: &str, spec: &str) -> std::result::Result<f64, String> {
    let value = body
        .strip_prefix(name)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| format!("expected `{name}=<value>` in `{spec}`"))?;
    value.parse().map_err(|_| format!("`{value}` is not a number in `{spec}`"))
}

impl FromStr for DistSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (head, body) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "uniform" if body.is_empty() => Ok(DistSpec::Uniform),
            "beta" => {
                let t = named_param(body, "t", s)?;
                if !(t > 0.0 && t.is_finite()) {
                    return Err(format!("beta shape must be positive and finite, got {t}"));
                }
                Ok(DistSpec::Beta(t))
            }
            "pointmass" => {
                let c = named_param(body, "c", s)?;
                if !(0.0..=1.0).contains(&c) {
                    return Err(format!("point mass must lie in [0, 1], got {c}"));
                }
                Ok(DistSpec::PointMass(c))
            }
            "scores" if !body.is_empty() => Ok(DistSpec::Scores(PathBuf::from(body))),
            _ => Err(format!(
                "unknown distribution `{s}`; expected uniform, beta:t=<t>, pointmass:c=<c> or scores:<path>"
            )),
        }
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistSpec::Uniform => f.write_str("uniform"),
            DistSpec::Beta(t) => write!(f, "beta:t={t}"),
            DistSpec::PointMass(c) => write!(f, "pointmass:c={c}"),
            DistSpec::Scores(p) => write!(f, "scores:{}", p.display()),
        }
    }
}

/// Screening budgets to sweep: `start:stop:steps` (`steps` equal intervals,
/// both ends included) or a comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrid {
    text: String,
    values: Vec<f64>,
}

impl AlphaGrid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Rejects points outside `[0, beta]`.
    pub fn check(&self, beta: f64) -> Result<()> {
        match self.values.iter().find(|&&a| !(0.0..=beta).contains(&a)) {
            Some(a) => Err(CliError::invalid(format!("alpha grid point {a} outside [0, {beta}]"))),
            None => Ok(()),
        }
    }
}

impl FromStr for AlphaGrid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let number = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("`{x}` is not a number"));
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [start, stop, steps] = parts[..] else {
                return Err(format!("expected start:stop:steps, got `{s}`"));
            };
            let (start, stop) = (number(start)?, number(stop)?);
            let steps: usize = steps.trim().parse().map_err(|_| format!("`{steps}` is not a step count"))?;
            if steps == 0 || stop < start {
                return Err(format!("need stop >= start and at least one step in `{s}`"));
            }
            // snap to 1e-12 so 0:0.35:7 reads 0.05 rather than 0.049999999999999996
            let point = |i: usize| ((start + (stop - start) * i as f64 / steps as f64) * 1e12).round() / 1e12;
            let mut v: Vec<f64> = (0..steps).map(point).collect();
            v.push(stop);
            v
        } else {
            s.split(',').map(number).collect::<std::result::Result<_, _>>()?
        };
        if values.iter().any(|v: &f64| !v.is_finite()) {
            return Err(format!("non-finite value in alpha grid `{s}`"));
        }
        Ok(AlphaGrid { text: s.to_string(), values })
    }
}

impl fmt::Display for AlphaGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Optimal screening followed by the requested baselines, without repeats.
pub fn policy_kinds(baselines: &[String]) -> Result<Vec<PolicyKind>> {
    let mut kinds = vec![PolicyKind::OptimalScreening];
    for name in baselines.iter().filter(|n| !n.is_empty()) {
        let kind = PolicyKind::from_name(name)
            .ok_or_else(|| CliError::invalid(format!("unknown policy `{name}`; expected none, random or heuristic")))?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    Ok(kinds)
}
