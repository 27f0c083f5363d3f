//! The analyze pipeline and the artifact schemas it writes.
//!
//! Layout under the output directory:
//!
//! ```text
//! analysis.json                      run manifest
//! <source>/evaluations.csv           fitness table of the source
//! <source>/b<budget>/stats.json
//! <source>/b<budget>/fdc.json, fdc.csv
//! <source>/b<budget>/walk.jsonl, walk.csv, ruggedness.json
//! <source>/b<budget>/fits.json, fits_table.csv
//! <source>/b<budget>/optima.json
//! <source>/b<budget>/persistence.json, persistence_top.csv, persistence_bottom.csv
//! ```
//!
//! Synthetic sources (NK, ONES) are scored on one shared LHS sample and one
//! shared walk path, so every source sees the same cells.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use fla_core::distfit::{fit_all, fits_table_csv, select_best, FamilyKind, FitResult};
use fla_core::fitness::{load_table, write_table, Budget, EvalRecord, FitnessTable};
use fla_core::metrics::{
    fdc_table, fitness_stats, local_optima, local_optima_by_source, moving_average, ruggedness_tau,
    FitnessStats, LocalOptima, OptimaSpace, RuggednessResult,
};
use fla_core::persistence::{Direction, PersistenceSummary, Population};
use fla_core::sampling::{
    genotype_walk_path, lhs_sample, model_id, random_start_with, WalkError, WalkTrace,
};
use fla_core::{seed, Execution, FitnessSource, Genotype, SourceId, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SourceDecl};
use crate::error::{CliError, CliResult};
use crate::output::Artifact;

pub const MANIFEST: &str = "analysis.json";

// seed streams
const STREAM_SAMPLE: u64 = 1;
const STREAM_WALK: u64 = 2;

/// Valid neighbors required of the shared walk's start cell.
pub const MIN_START_NEIGHBORS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seed: u64,
    pub budgets: Vec<Budget>,
    pub b_ref: Budget,
    pub nmax: u32,
    pub window: usize,
    pub n_samples: usize,
    pub walk_steps: usize,
    pub sources: Vec<SourceId>,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsDoc {
    pub schema_version: u32,
    pub analysis_id: String,
    pub source: SourceId,
    pub budget: Budget,
    pub stats: FitnessStats,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdcDoc {
    pub schema_version: u32,
    pub analysis_id: String,
    pub source: SourceId,
    pub budget: Budget,
    pub optimum_id: Option<String>,
    pub pearson_r: Option<f64>,
    pub n_points: usize,
    /// Why no FDC was computed, e.g. records without genotypes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuggednessDoc {
    pub schema_version: u32,
    pub analysis_id: String,
    pub source: SourceId,
    pub budget: Budget,
    pub walk_seed: u64,
    pub window: usize,
    pub result: RuggednessResult,
    /// The first unscored genotype when the walk left a tabular source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub miss: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitsDoc {
    pub schema_version: u32,
    pub analysis_id: String,
    pub source: SourceId,
    pub budget: Budget,
    pub n: usize,
    pub fits: Vec<FitResult>,
    pub failed: BTreeMap<String, String>,
    pub best: Option<FamilyKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimaDoc {
    pub schema_version: u32,
    pub analysis_id: String,
    pub source: SourceId,
    pub budget: Budget,
    pub result: LocalOptima,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDoc {
    pub schema_version: u32,
    pub source: SourceId,
    pub budget: Budget,
    pub population: usize,
    pub top_id: String,
    pub bottom_id: String,
    pub top: PersistenceSummary,
    pub bottom: PersistenceSummary,
}

pub fn budget_dir(source: &str, budget: Budget) -> PathBuf {
    PathBuf::from(source).join(format!("b{budget}"))
}

fn analysis_id(source: &str, budget: Budget, what: &str) -> String {
    format!("{source}/b{budget}/{what}")
}

struct Prepared {
    id: SourceId,
    table: FitnessTable,
    callable: Option<Box<dyn FitnessSource>>,
    population: Population,
}

fn prepare(cfg: &RunConfig, decl: &SourceDecl, sample: Option<&[Genotype]>) -> CliResult<Prepared> {
    let id = decl.id();
    let mut table = FitnessTable::new();
    let callable = decl.synthetic()?;
    let budgets = cfg.sorted_budgets();
    match (&callable, decl) {
        (Some(src), _) => {
            let sample = sample.expect("sample drawn for synthetic sources");
            for &b in &budgets {
                for (i, g) in sample.iter().enumerate() {
                    let f = src
                        .fitness(g, b)
                        .map_err(|e| CliError::DataMiss(e.to_string()))?;
                    table
                        .insert(record(model_id(i), Some(*g), &id.name, b, f))
                        .map_err(|e| CliError::Internal(e.to_string()))?;
                }
            }
        }
        (None, SourceDecl::Tabular { path, column, .. }) => {
            let loaded = load_table(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let column = column.as_deref().unwrap_or(&id.name);
            for r in loaded
                .records()
                .iter()
                .filter(|r| r.source == column && budgets.contains(&r.budget))
            {
                table
                    .insert(record(
                        r.model_id.clone(),
                        r.genotype,
                        &id.name,
                        r.budget,
                        r.fitness_test,
                    ))
                    .map_err(|e| CliError::Input(e.to_string()))?;
            }
        }
        (None, _) => unreachable!("only tabular sources lack a callable"),
    }
    let population = Population::new(&table, &id.name, &budgets)
        .map_err(|e| CliError::Input(format!("source {}: {e}", id.name)))?;
    Ok(Prepared {
        id,
        table,
        callable,
        population,
    })
}

fn record(
    model_id: String,
    genotype: Option<Genotype>,
    source: &str,
    budget: Budget,
    f: f64,
) -> EvalRecord {
    EvalRecord {
        model_id,
        genotype,
        source: source.to_string(),
        budget,
        fitness_test: f,
        fitness_val: None,
    }
}

struct Shared<'a> {
    cfg: &'a RunConfig,
    walk_path: Vec<Genotype>,
    walk_seed: u64,
    sample: Vec<(String, Genotype)>,
    exec: Execution,
}

/// Runs every analysis for every `(source, budget)` and returns the files
/// to write, in a fixed order.
pub fn analyze(cfg: &RunConfig, seed: u64, exec: Execution) -> CliResult<Vec<Artifact>> {
    let budgets = cfg.sorted_budgets();
    let needs_sample = cfg
        .sources
        .iter()
        .any(|s| !matches!(s, SourceDecl::Tabular { .. }));
    let sample = if needs_sample {
        let drawn = lhs_sample(cfg.n_samples, seed::derive(seed, &[STREAM_SAMPLE]))
            .map_err(|e| CliError::Input(e.to_string()))?;
        drawn.genotypes
    } else {
        Vec::new()
    };

    let start = random_start_with(seed::derive(seed, &[STREAM_WALK, 0]), MIN_START_NEIGHBORS)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let walk_seed = seed::derive(seed, &[STREAM_WALK, 1]);
    let walk_path = genotype_walk_path(&start, cfg.walk_steps, walk_seed).map_err(|e| match e {
        WalkError::DeadEnd { step } => CliError::Input(format!(
            "walk reached a cell without valid neighbors at step {step}; choose another seed"
        )),
        other => CliError::Internal(other.to_string()),
    })?;

    let prepared = cfg
        .sources
        .iter()
        .map(|d| prepare(cfg, d, needs_sample.then_some(sample.as_slice())))
        .collect::<CliResult<Vec<_>>>()?;

    let shared = Shared {
        cfg,
        walk_path,
        walk_seed,
        sample: sample
            .iter()
            .enumerate()
            .map(|(i, g)| (model_id(i), *g))
            .collect(),
        exec,
    };
    let tasks: Vec<(&Prepared, Budget)> = prepared
        .iter()
        .flat_map(|p| budgets.iter().map(move |&b| (p, b)))
        .collect();
    let per_task = fan_out(&tasks, |(p, b)| analyze_one(&shared, p, *b));

    let mut artifacts = Vec::new();
    for p in &prepared {
        let mut csv = Vec::new();
        write_table(&p.table, &mut csv).map_err(|e| CliError::Internal(e.to_string()))?;
        artifacts.push(Artifact::new(
            PathBuf::from(&p.id.name).join("evaluations.csv"),
            csv,
        ));
    }
    for result in per_task {
        artifacts.extend(result?);
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        seed,
        budgets,
        b_ref: cfg.b_ref,
        nmax: cfg.nmax,
        window: cfg.window,
        n_samples: cfg.n_samples,
        walk_steps: cfg.walk_steps,
        sources: prepared.iter().map(|p| p.id.clone()).collect(),
        artifacts: artifacts
            .iter()
            .map(|a| a.path.to_string_lossy().replace('\\', "/"))
            .collect(),
    };
    artifacts.push(Artifact::json(MANIFEST, &manifest));
    Ok(artifacts)
}

#[cfg(feature = "parallel")]
fn fan_out<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn fan_out<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

fn analyze_one(shared: &Shared<'_>, p: &Prepared, budget: Budget) -> CliResult<Vec<Artifact>> {
    let cfg = shared.cfg;
    let name = p.id.name.as_str();
    let dir = budget_dir(name, budget);
    let mut out = Vec::new();

    // distribution
    let values: Vec<f64> = p
        .table
        .slice(name, budget)
        .map(|r| r.fitness_test)
        .collect();
    let stats = fitness_stats(&values)
        .map_err(|e| CliError::Input(format!("{name} at {budget} epochs: {e}")))?;
    out.push(Artifact::json(
        dir.join("stats.json"),
        &StatsDoc {
            schema_version: SCHEMA_VERSION,
            analysis_id: analysis_id(name, budget, "stats"),
            source: p.id.clone(),
            budget,
            stats,
            variance: stats.variance(),
        },
    ));

    let fits_raw = fit_all(&values);
    let mut fits = Vec::new();
    let mut failed = BTreeMap::new();
    for (family, r) in fits_raw {
        match r {
            Ok(f) => fits.push(f),
            Err(e) => {
                failed.insert(family.as_str().to_string(), e.to_string());
            }
        }
    }
    let best = select_best(&fits).ok().map(|f| f.family);
    out.push(Artifact::new(
        dir.join("fits_table.csv"),
        fits_table_csv(&fits),
    ));
    out.push(Artifact::json(
        dir.join("fits.json"),
        &FitsDoc {
            schema_version: SCHEMA_VERSION,
            analysis_id: analysis_id(name, budget, "fits"),
            source: p.id.clone(),
            budget,
            n: values.len(),
            fits,
            failed,
            best,
        },
    ));

    // fitness-distance correlation
    let fdc_id = analysis_id(name, budget, "fdc");
    let fdc_doc = match fdc_table(&p.table, name, budget, shared.exec) {
        Ok(res) => {
            let mut csv = String::from("distance,fitness\n");
            for pt in &res.points {
                let _ = writeln!(csv, "{},{}", pt.distance, pt.fitness);
            }
            out.push(Artifact::new(dir.join("fdc.csv"), csv));
            FdcDoc {
                schema_version: SCHEMA_VERSION,
                analysis_id: fdc_id,
                source: p.id.clone(),
                budget,
                optimum_id: Some(res.optimum_id),
                pearson_r: res.pearson_r,
                n_points: res.points.len(),
                error: None,
            }
        }
        Err(e) => FdcDoc {
            schema_version: SCHEMA_VERSION,
            analysis_id: fdc_id,
            source: p.id.clone(),
            budget,
            optimum_id: None,
            pearson_r: None,
            n_points: 0,
            error: Some(e.to_string()),
        },
    };
    out.push(Artifact::json(dir.join("fdc.json"), &fdc_doc));

    // ruggedness
    let table_source = p.table.source(name);
    let source: &dyn FitnessSource = match &p.callable {
        Some(s) => s.as_ref(),
        None => &table_source,
    };
    let (result, miss) =
        match WalkTrace::evaluate(shared.walk_path.clone(), shared.walk_seed, source, budget) {
            Ok(trace) => {
                let mut jsonl = Vec::new();
                trace
                    .write_jsonl(&mut jsonl)
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                out.push(Artifact::new(dir.join("walk.jsonl"), jsonl));
                out.push(Artifact::new(
                    dir.join("walk.csv"),
                    walk_csv(&trace.fitness, cfg.window),
                ));
                let r = ruggedness_tau(&trace)
                    .map_err(|e| CliError::Input(format!("{name} walk: {e}")))?;
                (r, None)
            }
            Err(WalkError::EvalMiss(m)) => (
                RuggednessResult::eval_miss(shared.walk_path.len()),
                Some(m.key),
            ),
            Err(e) => return Err(CliError::Internal(e.to_string())),
        };
    out.push(Artifact::json(
        dir.join("ruggedness.json"),
        &RuggednessDoc {
            schema_version: SCHEMA_VERSION,
            analysis_id: analysis_id(name, budget, "ruggedness"),
            source: p.id.clone(),
            budget,
            walk_seed: shared.walk_seed,
            window: cfg.window,
            result,
            miss,
        },
    ));

    // local optima
    let optima = match &p.callable {
        Some(src) => local_optima_by_source(&shared.sample, src.as_ref(), budget, shared.exec),
        None => local_optima(
            OptimaSpace::Sampled {
                table: &p.table,
                source: name,
                budget,
            },
            shared.exec,
        ),
    }
    .map_err(|e| CliError::Input(format!("{name} local optima: {e}")))?;
    out.push(Artifact::json(
        dir.join("optima.json"),
        &OptimaDoc {
            schema_version: SCHEMA_VERSION,
            analysis_id: analysis_id(name, budget, "optima"),
            source: p.id.clone(),
            budget,
            result: optima,
        },
    ));

    // persistence
    let summarize = |direction| {
        p.population
            .summary(cfg.b_ref, budget, direction, cfg.nmax)
            .map_err(|e| CliError::Input(format!("{name} persistence: {e}")))
    };
    let (top_curve, top) = summarize(Direction::Top)?;
    let (bottom_curve, bottom) = summarize(Direction::Bottom)?;
    out.push(Artifact::new(
        dir.join("persistence_top.csv"),
        top_curve.to_csv(),
    ));
    out.push(Artifact::new(
        dir.join("persistence_bottom.csv"),
        bottom_curve.to_csv(),
    ));
    out.push(Artifact::json(
        dir.join("persistence.json"),
        &PersistenceDoc {
            schema_version: SCHEMA_VERSION,
            source: p.id.clone(),
            budget,
            population: p.population.size(),
            top_id: analysis_id(name, budget, "persistence/top"),
            bottom_id: analysis_id(name, budget, "persistence/bottom"),
            top,
            bottom,
        },
    ));
    Ok(out)
}

/// `t,fitness,smoothed`; the moving average is aligned to the window's last
/// step and left empty before the first full window.
fn walk_csv(fitness: &[f64], window: usize) -> String {
    let smooth = moving_average(fitness, window).unwrap_or_default();
    let mut out = String::from("t,fitness,smoothed\n");
    for (t, f) in fitness.iter().enumerate() {
        let s = (t + 1)
            .checked_sub(window)
            .and_then(|i| smooth.get(i))
            .map(|v| v.to_string())
            .unwrap_or_default();
        let _ = writeln!(out, "{t},{f},{s}");
    }
    out
}
