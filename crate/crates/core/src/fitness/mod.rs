//! Fitness sources.
//!
//! A source plays the role of one sensor setting: it maps a genotype and a
//! training budget (epochs) to a fitness value. Fused sensors are just
//! another source name; nothing here combines sources arithmetically.

mod kappa;
mod nk;
mod table;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cellspace::{Genotype, GENOTYPE_BITS};

pub use kappa::{cohen_kappa, KappaError};
pub use nk::{component_value, nk_fitness, NkConfig, NkError};
pub use table::{
    load_table, query, write_table, EvalRecord, FitnessTable, ModelKey, TableError, TableSource,
    CSV_HEADER,
};

/// Training budget in epochs.
pub type Budget = u32;

/// Budgets conventionally used for tabular NAS benchmarks.
pub const CONVENTIONAL_BUDGETS: [Budget; 4] = [4, 12, 36, 108];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SourceKind {
    Tabular,
    Nk,
    Ones,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceId {
    pub name: String,
    pub kind: SourceKind,
}

impl SourceId {
    pub fn new(name: impl Into<String>, kind: SourceKind) -> Self {
        SourceId {
            name: name.into(),
            kind,
        }
    }

    pub fn tabular(name: impl Into<String>) -> Self {
        Self::new(name, SourceKind::Tabular)
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("EVAL_MISS: source {source_name} has no fitness for {key} at {budget} epochs")]
pub struct EvalMiss {
    pub source_name: String,
    pub key: String,
    pub budget: Budget,
}

pub trait FitnessSource: Send + Sync {
    fn id(&self) -> &SourceId;
    fn fitness(&self, genotype: &Genotype, budget: Budget) -> Result<f64, EvalMiss>;
}

/// Fraction of set bits in the genotype. Budget-independent.
#[derive(Debug, Clone)]
pub struct OnesSource {
    id: SourceId,
}

impl OnesSource {
    pub fn new(name: impl Into<String>) -> Self {
        OnesSource {
            id: SourceId::new(name, SourceKind::Ones),
        }
    }
}

impl FitnessSource for OnesSource {
    fn id(&self) -> &SourceId {
        &self.id
    }

    fn fitness(&self, genotype: &Genotype, _budget: Budget) -> Result<f64, EvalMiss> {
        Ok(genotype.popcount() as f64 / GENOTYPE_BITS as f64)
    }
}

/// NK landscape over the 289 genotype bits.
///
/// With `budget_noise = 0` the value ignores the budget. Otherwise a second,
/// budget-keyed NK landscape is blended in with weight
/// `min(1, budget_noise / sqrt(budget))`, so short budgets give noisier
/// rankings that settle as the budget grows. Values stay in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct NkSource {
    id: SourceId,
    config: NkConfig,
    budget_noise: f64,
}

impl NkSource {
    pub fn new(
        name: impl Into<String>,
        k: usize,
        seed: u64,
        budget_noise: f64,
    ) -> Result<Self, NkError> {
        if !(budget_noise.is_finite() && budget_noise >= 0.0) {
            return Err(NkError::BadNoise(budget_noise));
        }
        Ok(NkSource {
            id: SourceId::new(name, SourceKind::Nk),
            config: NkConfig::new(GENOTYPE_BITS, k, seed)?,
            budget_noise,
        })
    }

    pub fn config(&self) -> &NkConfig {
        &self.config
    }

    pub fn noise_weight(&self, budget: Budget) -> f64 {
        if self.budget_noise == 0.0 {
            0.0
        } else {
            (self.budget_noise / (budget.max(1) as f64).sqrt()).min(1.0)
        }
    }
}

impl FitnessSource for NkSource {
    fn id(&self) -> &SourceId {
        &self.id
    }

    fn fitness(&self, genotype: &Genotype, budget: Budget) -> Result<f64, EvalMiss> {
        let base = nk_fitness(&self.config, genotype).expect("genotype length matches config");
        let w = self.noise_weight(budget);
        if w == 0.0 {
            return Ok(base);
        }
        let noise_cfg = self
            .config
            .reseeded(crate::seed::mix(self.config.seed ^ budget as u64));
        let noise = nk_fitness(&noise_cfg, genotype).expect("genotype length matches config");
        Ok((1.0 - w) * base + w * noise)
    }
}
