//! Run configuration (JSON).
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "seed": 7,
//!   "budgets": [4, 12, 36, 108],
//!   "sources": [
//!     {"kind": "NK", "name": "rugged", "k": 8, "seed": 3, "budget_noise": 0.5},
//!     {"kind": "TABULAR", "name": "s2", "path": "evals.csv"},
//!     {"kind": "ONES", "name": "ones"}
//!   ],
//!   "n_samples": 100,
//!   "walk_steps": 100,
//!   "b_ref": 4,
//!   "nmax": 25,
//!   "window": 5,
//!   "output_dir": "fla-out"
//! }
//! ```
//!
//! Tabular paths are resolved against the directory of the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use fla_core::fitness::{Budget, NkSource, OnesSource, SourceId, SourceKind};
use fla_core::{FitnessSource, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "FLA_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum SourceDecl {
    Nk {
        name: String,
        k: usize,
        seed: u64,
        #[serde(default)]
        budget_noise: f64,
    },
    Tabular {
        name: String,
        path: PathBuf,
        /// Value of the table's `source` column; defaults to `name`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        column: Option<String>,
    },
    Ones {
        name: String,
    },
}

impl SourceDecl {
    pub fn name(&self) -> &str {
        match self {
            SourceDecl::Nk { name, .. }
            | SourceDecl::Tabular { name, .. }
            | SourceDecl::Ones { name } => name,
        }
    }

    pub fn id(&self) -> SourceId {
        let kind = match self {
            SourceDecl::Nk { .. } => SourceKind::Nk,
            SourceDecl::Tabular { .. } => SourceKind::Tabular,
            SourceDecl::Ones { .. } => SourceKind::Ones,
        };
        SourceId::new(self.name(), kind)
    }

    /// The callable source for synthetic kinds; `None` for tabular ones.
    pub fn synthetic(&self) -> CliResult<Option<Box<dyn FitnessSource>>> {
        Ok(match self {
            SourceDecl::Nk {
                name,
                k,
                seed,
                budget_noise,
            } => Some(Box::new(
                NkSource::new(name.clone(), *k, *seed, *budget_noise)
                    .map_err(|e| CliError::Input(format!("source {name}: {e}")))?,
            )),
            SourceDecl::Ones { name } => Some(Box::new(OnesSource::new(name.clone()))),
            SourceDecl::Tabular { .. } => None,
        })
    }
}

fn default_n_samples() -> usize {
    100
}
fn default_walk_steps() -> usize {
    100
}
fn default_b_ref() -> Budget {
    4
}
fn default_nmax() -> u32 {
    25
}
fn default_window() -> usize {
    5
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("fla-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub budgets: Vec<Budget>,
    pub sources: Vec<SourceDecl>,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_walk_steps")]
    pub walk_steps: usize,
    #[serde(default = "default_b_ref")]
    pub b_ref: Budget,
    #[serde(default = "default_nmax")]
    pub nmax: u32,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn path_safe(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, validates and resolves tabular paths against the config's
    /// directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for s in &mut cfg.sources {
            if let SourceDecl::Tabular { path, .. } = s {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Input(format!("config: {m}")));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.budgets.is_empty() {
            return bad("budgets must not be empty".into());
        }
        let distinct: BTreeSet<Budget> = self.budgets.iter().copied().collect();
        if distinct.len() != self.budgets.len() || distinct.contains(&0) {
            return bad("budgets must be distinct and positive".into());
        }
        if !distinct.contains(&self.b_ref) {
            return bad(format!("b_ref {} is not among the budgets", self.b_ref));
        }
        if self.sources.is_empty() {
            return bad("no sources".into());
        }
        let mut names = BTreeSet::new();
        for s in &self.sources {
            if !path_safe(s.name()) {
                return bad(format!(
                    "source name {:?} must use only [A-Za-z0-9_.-]",
                    s.name()
                ));
            }
            if !names.insert(s.name()) {
                return bad(format!("duplicate source name {}", s.name()));
            }
            s.synthetic()?;
        }
        if self.n_samples < 8 {
            return bad("n_samples must be at least 8".into());
        }
        if !(1..=100).contains(&self.nmax) {
            return bad("nmax must be in 1..=100".into());
        }
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if self.walk_steps < 2 {
            return bad("walk_steps must be at least 2".into());
        }
        Ok(())
    }

    /// Budgets in ascending order.
    pub fn sorted_budgets(&self) -> Vec<Budget> {
        let mut b = self.budgets.clone();
        b.sort_unstable();
        b
    }

    /// Flag, then config, then `FLA_SEED`, then 0.
    pub fn effective_seed(&self, flag: Option<u64>) -> CliResult<u64> {
        if let Some(s) = flag.or(self.seed) {
            return Ok(s);
        }
        env_seed().map(|s| s.unwrap_or(0))
    }
}

pub fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            v.trim().parse().map(Some).map_err(|_| {
                CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
            })
        }
        Err(_) => Ok(None),
    }
}
