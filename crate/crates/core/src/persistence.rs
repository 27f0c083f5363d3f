//! Rank persistence across training budgets.
//!
//! For a direction (top or bottom) and a percentile `n`, the rank set at a
//! budget holds the `ceil(n/100 * pop)` best (or worst) models. Persistence
//! from `b_ref` to `b` is the share of the reference set still present at
//! `b`, in percent.
//!
//! The population is the set of models evaluated at *every* budget under
//! analysis, so rank sets have the same size at all budgets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::{Budget, FitnessTable};

pub const DEFAULT_REFERENCE_BUDGET: Budget = 4;
pub const DEFAULT_NMAX: u32 = 25;
pub const CURVE_CSV_HEADER: &str = "n_percent,persistence_percent";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    Top,
    Bottom,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Top => "TOP",
            Direction::Bottom => "BOTTOM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PersistenceError {
    #[error(
        "EMPTY_POPULATION: no model of source {source_name} is evaluated at all of {budgets:?}"
    )]
    EmptyPopulation {
        source_name: String,
        budgets: Vec<Budget>,
    },
    #[error("n_percent must be in (0, 100], got {0}")]
    BadPercent(f64),
    #[error("budget {0} is not among the analysed budgets")]
    UnknownBudget(Budget),
    #[error("n_max must be at least 1")]
    BadNmax,
}

impl PersistenceError {
    pub fn code(&self) -> &'static str {
        match self {
            PersistenceError::EmptyPopulation { .. } => "EMPTY_POPULATION",
            PersistenceError::BadPercent(_) | PersistenceError::BadNmax => "BAD_ARGUMENT",
            PersistenceError::UnknownBudget(_) => "UNKNOWN_BUDGET",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSnapshot {
    pub source: String,
    pub budget: Budget,
    pub direction: Direction,
    pub n_percent: f64,
    pub member_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceCurve {
    pub direction: Direction,
    pub b_ref: Budget,
    pub b: Budget,
    /// `(n_percent, persistence_percent)` on the integer grid `1..=n_max`.
    pub points: Vec<(f64, f64)>,
}

impl PersistenceCurve {
    /// Normalized trapezoidal area of the curve as a fraction: 1.0 for
    /// perfect persistence, 0.0 for none. A single-point curve returns that
    /// point.
    pub fn auc(&self) -> f64 {
        let fr: Vec<f64> = self.points.iter().map(|(_, p)| p / 100.0).collect();
        match fr.len() {
            0 => 0.0,
            1 => fr[0],
            len => {
                let area: f64 = fr.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
                area / (len - 1) as f64
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CURVE_CSV_HEADER);
        out.push('\n');
        for (n, p) in &self.points {
            let _ = writeln!(out, "{n},{p}");
        }
        out
    }
}

/// Summary JSON: `{schema_version, source, direction, b_ref, b, n_max, auc, p_at_nmax}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceSummary {
    pub schema_version: u32,
    pub source: String,
    pub direction: Direction,
    pub b_ref: Budget,
    pub b: Budget,
    pub n_max: u32,
    pub auc: f64,
    pub p_at_nmax: f64,
}

/// The intersection population of one source over a set of budgets, with
/// the rankings at each budget precomputed.
#[derive(Debug, Clone)]
pub struct Population {
    source: String,
    models: BTreeSet<String>,
    // ids ordered best first, ties by model id
    top_order: BTreeMap<Budget, Vec<String>>,
    bottom_order: BTreeMap<Budget, Vec<String>>,
}

impl Population {
    pub fn new(
        table: &FitnessTable,
        source: &str,
        budgets: &[Budget],
    ) -> Result<Self, PersistenceError> {
        let models = if budgets.is_empty() {
            BTreeSet::new()
        } else {
            table.models_at_all(source, budgets)
        };
        if models.is_empty() {
            return Err(PersistenceError::EmptyPopulation {
                source_name: source.to_string(),
                budgets: budgets.to_vec(),
            });
        }
        let mut top_order = BTreeMap::new();
        let mut bottom_order = BTreeMap::new();
        for &b in budgets {
            let mut scored: Vec<(&str, f64)> = table
                .slice(source, b)
                .filter(|r| models.contains(&r.model_id))
                .map(|r| (r.model_id.as_str(), r.fitness_test))
                .collect();
            scored.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(y.0)));
            top_order.insert(b, scored.iter().map(|(m, _)| m.to_string()).collect());
            scored.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(y.0)));
            bottom_order.insert(b, scored.iter().map(|(m, _)| m.to_string()).collect());
        }
        Ok(Population {
            source: source.to_string(),
            models,
            top_order,
            bottom_order,
        })
    }

    pub fn size(&self) -> usize {
        self.models.len()
    }

    pub fn models(&self) -> &BTreeSet<String> {
        &self.models
    }

    /// `ceil(n_percent / 100 * size)`.
    pub fn set_size(&self, n_percent: f64) -> Result<usize, PersistenceError> {
        if !(n_percent > 0.0 && n_percent <= 100.0) {
            return Err(PersistenceError::BadPercent(n_percent));
        }
        // integer percentages of integer populations divide exactly here
        let raw = n_percent * self.size() as f64 / 100.0;
        let k = (raw - 1e-9).ceil().max(1.0) as usize;
        Ok(k.min(self.size()))
    }

    fn ordered(&self, budget: Budget, direction: Direction) -> Result<&[String], PersistenceError> {
        let map = match direction {
            Direction::Top => &self.top_order,
            Direction::Bottom => &self.bottom_order,
        };
        map.get(&budget)
            .map(Vec::as_slice)
            .ok_or(PersistenceError::UnknownBudget(budget))
    }

    pub fn rank_set(
        &self,
        budget: Budget,
        n_percent: f64,
        direction: Direction,
    ) -> Result<RankSnapshot, PersistenceError> {
        let k = self.set_size(n_percent)?;
        let order = self.ordered(budget, direction)?;
        Ok(RankSnapshot {
            source: self.source.clone(),
            budget,
            direction,
            n_percent,
            member_ids: order[..k].iter().cloned().collect(),
        })
    }

    pub fn persistence(
        &self,
        n_percent: f64,
        b_ref: Budget,
        b: Budget,
        direction: Direction,
    ) -> Result<f64, PersistenceError> {
        let k = self.set_size(n_percent)?;
        let reference: BTreeSet<&String> = self.ordered(b_ref, direction)?[..k].iter().collect();
        let kept = self.ordered(b, direction)?[..k]
            .iter()
            .filter(|m| reference.contains(m))
            .count();
        Ok(100.0 * kept as f64 / k as f64)
    }

    pub fn curve(
        &self,
        b_ref: Budget,
        b: Budget,
        direction: Direction,
        n_max: u32,
    ) -> Result<PersistenceCurve, PersistenceError> {
        if n_max == 0 || n_max > 100 {
            return Err(PersistenceError::BadNmax);
        }
        let points = (1..=n_max)
            .map(|n| {
                let n = n as f64;
                self.persistence(n, b_ref, b, direction).map(|p| (n, p))
            })
            .collect::<Result<_, _>>()?;
        Ok(PersistenceCurve {
            direction,
            b_ref,
            b,
            points,
        })
    }

    pub fn summary(
        &self,
        b_ref: Budget,
        b: Budget,
        direction: Direction,
        n_max: u32,
    ) -> Result<(PersistenceCurve, PersistenceSummary), PersistenceError> {
        let curve = self.curve(b_ref, b, direction, n_max)?;
        let summary = PersistenceSummary {
            schema_version: crate::SCHEMA_VERSION,
            source: self.source.clone(),
            direction,
            b_ref,
            b,
            n_max,
            auc: curve.auc(),
            p_at_nmax: curve.points.last().map(|p| p.1).unwrap_or(0.0),
        };
        Ok((curve, summary))
    }
}

/// Rank set over the population evaluated at both `budget` and every budget
/// in `budgets`.
pub fn rank_set(
    table: &FitnessTable,
    source: &str,
    budgets: &[Budget],
    budget: Budget,
    n_percent: f64,
    direction: Direction,
) -> Result<RankSnapshot, PersistenceError> {
    Population::new(table, source, &with_budgets(budgets, &[budget]))?
        .rank_set(budget, n_percent, direction)
}

/// Persistence over the population evaluated at `b_ref` and `b`.
pub fn persistence(
    table: &FitnessTable,
    source: &str,
    n_percent: f64,
    b_ref: Budget,
    b: Budget,
    direction: Direction,
) -> Result<f64, PersistenceError> {
    Population::new(table, source, &with_budgets(&[], &[b_ref, b]))?
        .persistence(n_percent, b_ref, b, direction)
}

pub fn persistence_auc(
    table: &FitnessTable,
    source: &str,
    b_ref: Budget,
    b: Budget,
    direction: Direction,
    n_max: u32,
) -> Result<f64, PersistenceError> {
    let pop = Population::new(table, source, &with_budgets(&[], &[b_ref, b]))?;
    Ok(pop.curve(b_ref, b, direction, n_max)?.auc())
}

fn with_budgets(base: &[Budget], extra: &[Budget]) -> Vec<Budget> {
    let set: BTreeSet<Budget> = base.iter().chain(extra).copied().collect();
    set.into_iter().collect()
}
