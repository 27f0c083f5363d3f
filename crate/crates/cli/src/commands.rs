//! Command-line surface and the command implementations.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fla_core::fitness::{
    load_table, query, Budget, EvalMiss, FitnessTable, ModelKey, NkSource, OnesSource,
};
use fla_core::footprint::{build_footprint, compare, Footprint, Tagged};
use fla_core::sampling::{
    genotype_walk_path, lhs_sample, random_start, uniform_sample, write_sample_csv, WalkError,
    WalkTrace,
};
use fla_core::{encode, seed, Execution, FitnessSource, Genotype, SourceId};
use serde::de::DeserializeOwned;

use crate::analysis::{
    analyze, budget_dir, Manifest, OptimaDoc, PersistenceDoc, RuggednessDoc, StatsDoc, MANIFEST,
};
use crate::config::{env_seed, RunConfig, SourceDecl, SEED_ENV};
use crate::error::{input, CliError, CliResult};
use crate::output::{emit, write_all, Artifact};

#[derive(Debug, Parser)]
#[command(
    name = "fla",
    version,
    about = "Fitness landscape analysis for cell search spaces"
)]
pub struct Cli {
    /// Run every batch computation on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every landscape analysis described by a config file.
    Analyze(AnalyzeArgs),
    /// Assemble footprints from an analysis directory.
    Footprint(FootprintArgs),
    /// Compare two or more footprints and write the radar data.
    Compare(CompareArgs),
    /// Draw a sample of valid cells.
    Sample(SampleArgs),
    /// Random walk over valid neighbors, scored by one source.
    Walk(WalkArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed and FLA_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config output_dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated budgets in epochs.
    #[arg(long, value_delimiter = ',')]
    pub budgets: Option<Vec<Budget>>,
    #[arg(long)]
    pub b_ref: Option<Budget>,
    #[arg(long)]
    pub nmax: Option<u32>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub walk_steps: Option<usize>,
}

impl AnalyzeArgs {
    /// The config file with command-line overrides applied and revalidated.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(b) = &self.budgets {
            cfg.budgets = b.clone();
        }
        cfg.b_ref = self.b_ref.unwrap_or(cfg.b_ref);
        cfg.nmax = self.nmax.unwrap_or(cfg.nmax);
        cfg.window = self.window.unwrap_or(cfg.window);
        cfg.n_samples = self.n_samples.unwrap_or(cfg.n_samples);
        cfg.walk_steps = self.walk_steps.unwrap_or(cfg.walk_steps);
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "input")]
pub struct FootprintSource {
    /// Directory written by `analyze`.
    #[arg(long)]
    pub analysis: Option<PathBuf>,
    /// Config whose output_dir holds the analysis.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FootprintArgs {
    #[command(flatten)]
    pub input: FootprintSource,
    /// Where to write footprints; defaults to the analysis directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// footprint.json files.
    #[arg(required = true)]
    pub footprints: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Lhs,
    Uniform,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Method::Lhs)]
    pub method: Method,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    /// Start genotype as hex, or `random`.
    #[arg(long, default_value = "random")]
    pub start: String,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 4)]
    pub budget: Budget,
    /// Config file holding the source named by --source.
    #[arg(long, requires = "source", conflicts_with_all = ["nk", "ones", "table"])]
    pub config: Option<PathBuf>,
    /// Source name, with --config or --table.
    #[arg(long)]
    pub source: Option<String>,
    /// NK landscape with this K.
    #[arg(long, conflicts_with_all = ["ones", "table"])]
    pub nk: Option<usize>,
    #[arg(long, default_value_t = 0, requires = "nk")]
    pub nk_seed: u64,
    /// Ones-count fitness.
    #[arg(long, conflicts_with = "table")]
    pub ones: bool,
    /// Evaluation table CSV; needs --source.
    #[arg(long, requires = "source")]
    pub table: Option<PathBuf>,
    /// JSON lines output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn execution(cli: &Cli) -> Execution {
    if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let exec = execution(&cli);
    match cli.command {
        Command::Analyze(a) => run_analyze(&a, exec).map(|_| ()),
        Command::Footprint(a) => run_footprint(&a).map(|_| ()),
        Command::Compare(a) => run_compare(&a).map(|_| ()),
        Command::Sample(a) => run_sample(&a),
        Command::Walk(a) => run_walk(&a),
    }
}

/// Returns the written paths.
pub fn run_analyze(args: &AnalyzeArgs, exec: Execution) -> CliResult<Vec<PathBuf>> {
    let cfg = args.resolve()?;
    let seed = cfg.effective_seed(args.seed)?;
    let artifacts = analyze(&cfg, seed, exec)?;
    write_all(&cfg.output_dir, &artifacts)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(input(path.display()))?;
    serde_json::from_str(&text).map_err(input(path.display()))
}

fn check_version(path: &Path, version: u32) -> CliResult<()> {
    if version != fla_core::SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "{}: schema_version {version} (expected {})",
            path.display(),
            fla_core::SCHEMA_VERSION
        )));
    }
    Ok(())
}

/// Builds one footprint per `(source, budget)` listed in the manifest.
pub fn footprints_from_analysis(dir: &Path) -> CliResult<Vec<(PathBuf, Footprint)>> {
    let manifest_path = dir.join(MANIFEST);
    let manifest: Manifest = read_json(&manifest_path)?;
    check_version(&manifest_path, manifest.schema_version)?;
    let mut out = Vec::new();
    for src in &manifest.sources {
        for &b in &manifest.budgets {
            let rel = budget_dir(&src.name, b);
            let base = dir.join(&rel);
            let stats: StatsDoc = read_json(&base.join("stats.json"))?;
            let rugged: RuggednessDoc = read_json(&base.join("ruggedness.json"))?;
            let optima: OptimaDoc = read_json(&base.join("optima.json"))?;
            let pers: PersistenceDoc = read_json(&base.join("persistence.json"))?;
            for (name, v) in [
                ("stats.json", stats.schema_version),
                ("ruggedness.json", rugged.schema_version),
                ("optima.json", optima.schema_version),
                ("persistence.json", pers.schema_version),
            ] {
                check_version(&base.join(name), v)?;
            }
            let fp = build_footprint(
                &Tagged::new(stats.source, stats.budget, stats.analysis_id, stats.stats),
                &Tagged::new(
                    rugged.source,
                    rugged.budget,
                    rugged.analysis_id,
                    rugged.result,
                ),
                &Tagged::new(
                    optima.source,
                    optima.budget,
                    optima.analysis_id,
                    optima.result,
                ),
                &Tagged::new(pers.source.clone(), pers.budget, pers.top_id, pers.top),
                &Tagged::new(pers.source, pers.budget, pers.bottom_id, pers.bottom),
            )
            .map_err(|e| CliError::Input(format!("{}: {} {e}", base.display(), e.code())))?;
            out.push((rel.join("footprint.json"), fp));
        }
    }
    Ok(out)
}

pub fn run_footprint(args: &FootprintArgs) -> CliResult<Vec<PathBuf>> {
    let dir = match (&args.input.analysis, &args.input.config) {
        (Some(dir), _) => dir.clone(),
        (None, Some(cfg)) => RunConfig::load(cfg)?.output_dir,
        (None, None) => unreachable!("clap requires one input"),
    };
    let footprints = footprints_from_analysis(&dir)?;
    let artifacts: Vec<Artifact> = footprints
        .iter()
        .map(|(path, fp)| Artifact::new(path, fp.to_json() + "\n"))
        .collect();
    write_all(args.out.as_deref().unwrap_or(&dir), &artifacts)
}

pub const COMPARISON_JSON: &str = "comparison.json";
pub const RADAR_CSV: &str = "radar.csv";

pub fn run_compare(args: &CompareArgs) -> CliResult<Vec<PathBuf>> {
    if args.footprints.len() < 2 {
        return Err(CliError::Usage(format!(
            "TOO_FEW: compare needs at least 2 footprints, got {}",
            args.footprints.len()
        )));
    }
    let footprints = args
        .footprints
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(input(p.display()))?;
            Footprint::from_json(&text).map_err(input(p.display()))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let report = compare(&footprints).map_err(|e| match e.code() {
        "TOO_FEW" => CliError::Usage(format!("TOO_FEW: {e}")),
        code => CliError::Input(format!("{code}: {e}")),
    })?;
    let artifacts = [
        Artifact::new(COMPARISON_JSON, report.to_json() + "\n"),
        Artifact::new(RADAR_CSV, report.radar_csv()),
    ];
    write_all(&args.out, &artifacts)
}

fn seed_or_zero(flag: Option<u64>) -> CliResult<u64> {
    // clap already read FLA_SEED into the flag; this only covers an
    // unparsable variable, which clap reports itself
    Ok(match flag {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    })
}

pub fn run_sample(args: &SampleArgs) -> CliResult<()> {
    let seed = seed_or_zero(args.seed)?;
    let n = args.n as usize;
    let genotypes: Vec<Genotype> = match args.method {
        Method::Lhs => {
            lhs_sample(n, seed)
                .map_err(|e| CliError::Input(e.to_string()))?
                .genotypes
        }
        Method::Uniform => uniform_sample(n, seed)
            .map_err(|e| CliError::Input(e.to_string()))?
            .iter()
            .map(|c| encode(c).map_err(|e| CliError::Internal(e.to_string())))
            .collect::<CliResult<_>>()?,
    };
    let mut bytes = Vec::new();
    write_sample_csv(&genotypes, &mut bytes).map_err(|e| CliError::Internal(e.to_string()))?;
    emit(args.out.as_deref(), &bytes)
}

/// A loaded table that owns its records, for sources outliving the loader.
struct OwnedTable {
    id: SourceId,
    table: FitnessTable,
}

impl OwnedTable {
    fn new(table: FitnessTable, column: &str) -> Self {
        OwnedTable {
            id: SourceId::tabular(column),
            table,
        }
    }
}

impl FitnessSource for OwnedTable {
    fn id(&self) -> &SourceId {
        &self.id
    }

    fn fitness(&self, genotype: &Genotype, budget: Budget) -> Result<f64, EvalMiss> {
        query(
            &self.table,
            ModelKey::Genotype(genotype),
            &self.id.name,
            budget,
        )
    }
}

fn walk_source(args: &WalkArgs) -> CliResult<Box<dyn FitnessSource>> {
    if let Some(k) = args.nk {
        let src = NkSource::new(format!("nk{k}"), k, args.nk_seed, 0.0)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        return Ok(Box::new(src));
    }
    if args.ones {
        return Ok(Box::new(OnesSource::new("ones")));
    }
    let name = args.source.as_deref();
    if let Some(path) = &args.table {
        let name = name.expect("clap requires --source");
        let table = load_table(path).map_err(input(path.display()))?;
        return Ok(Box::new(OwnedTable::new(table, name)));
    }
    if let Some(path) = &args.config {
        let name = name.expect("clap requires --source");
        let cfg = RunConfig::load(path)?;
        let decl = cfg
            .sources
            .iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| CliError::Input(format!("no source {name} in {}", path.display())))?;
        return match decl {
            SourceDecl::Tabular { path, column, .. } => {
                let table = load_table(path).map_err(input(path.display()))?;
                Ok(Box::new(OwnedTable::new(
                    table,
                    column.as_deref().unwrap_or(name),
                )))
            }
            other => Ok(other.synthetic()?.expect("synthetic source")),
        };
    }
    Err(CliError::Usage(
        "pick a source: --nk K, --ones, --table PATH --source NAME or --config PATH --source NAME"
            .into(),
    ))
}

pub fn run_walk(args: &WalkArgs) -> CliResult<()> {
    let source = walk_source(args)?;
    let seed = seed_or_zero(args.seed)?;
    let start = if args.start == "random" {
        random_start(seed::derive(seed, &[0])).map_err(|e| CliError::Input(e.to_string()))?
    } else {
        Genotype::from_hex(&args.start).map_err(|e| CliError::Usage(format!("--start: {e}")))?
    };
    let walk_seed = seed::derive(seed, &[1]);
    let path = genotype_walk_path(&start, args.steps, walk_seed).map_err(|e| match e {
        WalkError::InvalidStart { .. } => CliError::Usage(format!("--start: {e}")),
        other => CliError::Input(other.to_string()),
    })?;
    let trace = WalkTrace::evaluate(path, walk_seed, source.as_ref(), args.budget).map_err(
        |e| match e {
            WalkError::EvalMiss(m) => CliError::DataMiss(m.to_string()),
            other => CliError::Internal(other.to_string()),
        },
    )?;
    let mut bytes = Vec::new();
    trace
        .write_jsonl(&mut bytes)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    emit(args.out.as_deref(), &bytes)
}
