//! Tabular fitness records and their CSV form.
//!
//! ```text
//! model_id,genotype_hex,source,budget_epochs,fitness_test,fitness_val
//! m001,<74 hex chars>,s1,36,0.4712,
//! ```
//!
//! `genotype_hex` may be empty when `model_id` is the join key, and
//! `fitness_val` may be empty. A model id is bound to at most one genotype
//! and vice versa.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Budget, EvalMiss, FitnessSource, SourceId};
use crate::cellspace::{decode, Genotype};

pub const CSV_HEADER: [&str; 6] = [
    "model_id",
    "genotype_hex",
    "source",
    "budget_epochs",
    "fitness_test",
    "fitness_val",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub model_id: String,
    pub genotype: Option<Genotype>,
    pub source: String,
    pub budget: Budget,
    pub fitness_test: f64,
    pub fitness_val: Option<f64>,
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("PARSE_ERROR at line {line}, column {column}: {reason}")]
    Parse {
        line: u64,
        column: String,
        reason: String,
    },
    #[error("DUPLICATE_KEY ({model_id}, {source_name}, {budget}) at lines {first_line} and {second_line}")]
    DuplicateKey {
        model_id: String,
        source_name: String,
        budget: Budget,
        first_line: u64,
        second_line: u64,
    },
    #[error("BAD_GENOTYPE at line {line}: {reason}")]
    BadGenotype { line: u64, reason: String },
    #[error("cannot read table: {0}")]
    Io(#[from] std::io::Error),
}

impl TableError {
    pub fn code(&self) -> &'static str {
        match self {
            TableError::Parse { .. } | TableError::Io(_) => "PARSE_ERROR",
            TableError::DuplicateKey { .. } => "DUPLICATE_KEY",
            TableError::BadGenotype { .. } => "BAD_GENOTYPE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKey<'a> {
    Id(&'a str),
    Genotype(&'a Genotype),
}

/// Immutable-after-load collection of evaluation records.
///
/// Records keep their insertion order; every lookup is keyed by
/// `(model, source, budget)`. Line numbers are 1-based file lines (the header
/// is line 1), or 0 for records inserted programmatically.
#[derive(Debug, Clone, Default)]
pub struct FitnessTable {
    records: Vec<EvalRecord>,
    lines: Vec<u64>,
    index: HashMap<(String, String, Budget), usize>,
    genotype_of: HashMap<String, Genotype>,
    model_of: HashMap<Genotype, String>,
}

impl FitnessTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub fn insert(&mut self, record: EvalRecord) -> Result<(), TableError> {
        self.insert_at(record, 0)
    }

    fn insert_at(&mut self, record: EvalRecord, line: u64) -> Result<(), TableError> {
        let key = (
            record.model_id.clone(),
            record.source.clone(),
            record.budget,
        );
        if let Some(&prev) = self.index.get(&key) {
            return Err(TableError::DuplicateKey {
                model_id: key.0,
                source_name: key.1,
                budget: key.2,
                first_line: self.lines[prev],
                second_line: line,
            });
        }
        if let Some(g) = record.genotype {
            decode(&g).map_err(|e| TableError::BadGenotype {
                line,
                reason: e.to_string(),
            })?;
            match self.genotype_of.get(&record.model_id) {
                Some(bound) if *bound != g => {
                    return Err(TableError::BadGenotype {
                        line,
                        reason: format!(
                            "model {} already bound to genotype {bound}",
                            record.model_id
                        ),
                    })
                }
                _ => {}
            }
            match self.model_of.get(&g) {
                Some(other) if *other != record.model_id => {
                    return Err(TableError::BadGenotype {
                        line,
                        reason: format!("genotype {g} already bound to model {other}"),
                    })
                }
                _ => {}
            }
            self.genotype_of.insert(record.model_id.clone(), g);
            self.model_of.insert(g, record.model_id.clone());
        }
        self.index.insert(key, self.records.len());
        self.records.push(record);
        self.lines.push(line);
        Ok(())
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, TableError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
        if header.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(TableError::Parse {
                line: 1,
                column: "header".into(),
                reason: format!("expected {}", CSV_HEADER.join(",")),
            });
        }
        let mut table = FitnessTable::new();
        for row in rdr.records() {
            let row = row.map_err(|e| csv_error(e, 0))?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            if row.len() != CSV_HEADER.len() {
                return Err(TableError::Parse {
                    line,
                    column: "row".into(),
                    reason: format!("expected {} fields, got {}", CSV_HEADER.len(), row.len()),
                });
            }
            let record = parse_row(&row, line)?;
            table.insert_at(record, line)?;
        }
        Ok(table)
    }

    pub fn get(&self, key: ModelKey<'_>, source: &str, budget: Budget) -> Option<&EvalRecord> {
        let model_id = match key {
            ModelKey::Id(id) => id,
            ModelKey::Genotype(g) => self.model_of.get(g)?.as_str(),
        };
        self.index
            .get(&(model_id.to_string(), source.to_string(), budget))
            .map(|&i| &self.records[i])
    }

    pub fn genotype_of(&self, model_id: &str) -> Option<&Genotype> {
        self.genotype_of.get(model_id)
    }

    pub fn model_of(&self, genotype: &Genotype) -> Option<&str> {
        self.model_of.get(genotype).map(String::as_str)
    }

    /// Records for one `(source, budget)` in insertion order.
    pub fn slice<'a>(
        &'a self,
        source: &'a str,
        budget: Budget,
    ) -> impl Iterator<Item = &'a EvalRecord> + 'a {
        self.records
            .iter()
            .filter(move |r| r.source == source && r.budget == budget)
    }

    pub fn sources(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.source.as_str()).collect()
    }

    pub fn budgets(&self, source: &str) -> BTreeSet<Budget> {
        self.records
            .iter()
            .filter(|r| r.source == source)
            .map(|r| r.budget)
            .collect()
    }

    /// Row count per source.
    pub fn per_source_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.source.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Models of `source` that have a record at every budget in `budgets`.
    pub fn models_at_all(&self, source: &str, budgets: &[Budget]) -> BTreeSet<String> {
        let mut per_model: BTreeMap<&str, BTreeSet<Budget>> = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.source == source) {
            per_model.entry(&r.model_id).or_default().insert(r.budget);
        }
        per_model
            .into_iter()
            .filter(|(_, have)| budgets.iter().all(|b| have.contains(b)))
            .map(|(m, _)| m.to_string())
            .collect()
    }

    pub fn source<'a>(&'a self, name: &str) -> TableSource<'a> {
        TableSource {
            id: SourceId::tabular(name),
            table: self,
        }
    }
}

fn csv_error(e: csv::Error, fallback_line: u64) -> TableError {
    let line = e.position().map(|p| p.line()).unwrap_or(fallback_line);
    TableError::Parse {
        line,
        column: "row".into(),
        reason: e.to_string(),
    }
}

fn parse_row(row: &csv::StringRecord, line: u64) -> Result<EvalRecord, TableError> {
    let field = |i: usize| row.get(i).unwrap_or("");
    let parse_err = |col: usize, reason: String| TableError::Parse {
        line,
        column: CSV_HEADER[col].to_string(),
        reason,
    };

    let model_id = field(0).to_string();
    if model_id.is_empty() {
        return Err(parse_err(0, "empty model id".into()));
    }
    let genotype = match field(1) {
        "" => None,
        hex => Some(
            Genotype::from_hex(hex).map_err(|e| TableError::BadGenotype {
                line,
                reason: e.to_string(),
            })?,
        ),
    };
    let source = field(2).to_string();
    if source.is_empty() {
        return Err(parse_err(2, "empty source".into()));
    }
    let budget: Budget = field(3).parse().map_err(|e| parse_err(3, format!("{e}")))?;
    if budget == 0 {
        return Err(parse_err(3, "budget must be positive".into()));
    }
    let fitness_test = parse_fitness(field(4)).map_err(|r| parse_err(4, r))?;
    let fitness_val = match field(5) {
        "" => None,
        s => Some(parse_fitness(s).map_err(|r| parse_err(5, r))?),
    };
    Ok(EvalRecord {
        model_id,
        genotype,
        source,
        budget,
        fitness_test,
        fitness_val,
    })
}

fn parse_fitness(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
        return Err(format!("fitness {v} outside [-1, 1]"));
    }
    Ok(v)
}

pub fn load_table(path: impl AsRef<Path>) -> Result<FitnessTable, TableError> {
    FitnessTable::from_reader(File::open(path)?)
}

/// Writes the canonical CSV form: header, then records in insertion order,
/// floats in shortest round-trip notation.
pub fn write_table<W: Write>(table: &FitnessTable, out: W) -> Result<(), TableError> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    let to_io = |e: csv::Error| TableError::Io(e.into());
    w.write_record(CSV_HEADER).map_err(to_io)?;
    for r in &table.records {
        w.write_record([
            r.model_id.clone(),
            r.genotype.map(|g| g.to_hex()).unwrap_or_default(),
            r.source.clone(),
            r.budget.to_string(),
            r.fitness_test.to_string(),
            r.fitness_val.map(|v| v.to_string()).unwrap_or_default(),
        ])
        .map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn query(
    table: &FitnessTable,
    key: ModelKey<'_>,
    source: &str,
    budget: Budget,
) -> Result<f64, EvalMiss> {
    table
        .get(key, source, budget)
        .map(|r| r.fitness_test)
        .ok_or_else(|| EvalMiss {
            source_name: source.to_string(),
            key: match key {
                ModelKey::Id(id) => id.to_string(),
                ModelKey::Genotype(g) => g.to_hex(),
            },
            budget,
        })
}

/// One source column of a table, usable wherever a [`FitnessSource`] is.
#[derive(Debug, Clone)]
pub struct TableSource<'a> {
    id: SourceId,
    table: &'a FitnessTable,
}

impl FitnessSource for TableSource<'_> {
    fn id(&self) -> &SourceId {
        &self.id
    }

    fn fitness(&self, genotype: &Genotype, budget: Budget) -> Result<f64, EvalMiss> {
        query(
            self.table,
            ModelKey::Genotype(genotype),
            &self.id.name,
            budget,
        )
    }
}
