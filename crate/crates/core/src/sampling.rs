//! Seeded cell samplers and random walks.
//!
//! Samplers work on the joint design: 21 boolean edge dimensions (pairs
//! `(i, j)` of a 7-node cell, `i < j`, lexicographic) followed by 5 ternary
//! operator dimensions for positions 1..=5. A design row becomes a cell by
//! dropping every node that is not on an IN -> OUT path and validating the
//! remainder.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cellspace::{
    encode, neighbors, validate_cell, CellSpec, DecodeError, Genotype, NeighborMode, Op,
    ValidationReport, MAX_NODES,
};
use crate::fitness::{Budget, EvalMiss, FitnessSource, SourceId};
use crate::seed;

pub const EDGE_DIMS: usize = MAX_NODES * (MAX_NODES - 1) / 2;
pub const OP_DIMS: usize = 5;
pub const DESIGN_DIMS: usize = EDGE_DIMS + OP_DIMS;

/// One point of the joint design: edge bits then operator indices.
pub type DesignRow = [u8; DESIGN_DIMS];

/// Number of levels of design dimension `dim`.
pub fn levels(dim: usize) -> u8 {
    if dim < EDGE_DIMS {
        2
    } else {
        3
    }
}

/// Upper-triangular pairs of a 7-node cell in design order.
pub fn edge_pairs() -> Vec<(usize, usize)> {
    (0..MAX_NODES)
        .flat_map(|i| (i + 1..MAX_NODES).map(move |j| (i, j)))
        .collect()
}

/// Turns a design row into a cell, pruning nodes off every IN -> OUT path.
pub fn row_to_cell(row: &DesignRow) -> Result<CellSpec, ValidationReport> {
    let pairs = edge_pairs();
    let mut adj = [[false; MAX_NODES]; MAX_NODES];
    for (d, &(i, j)) in pairs.iter().enumerate() {
        adj[i][j] = row[d] == 1;
    }

    let mut from_in = [false; MAX_NODES];
    from_in[0] = true;
    for i in 0..MAX_NODES {
        if from_in[i] {
            for j in i + 1..MAX_NODES {
                from_in[j] |= adj[i][j];
            }
        }
    }
    let mut to_out = [false; MAX_NODES];
    to_out[MAX_NODES - 1] = true;
    for i in (0..MAX_NODES - 1).rev() {
        to_out[i] = (i + 1..MAX_NODES).any(|j| adj[i][j] && to_out[j]);
    }

    let kept: Vec<usize> = (0..MAX_NODES)
        .filter(|&v| (from_in[v] && to_out[v]) || v == 0 || v == MAX_NODES - 1)
        .collect();
    let mut edges = Vec::new();
    for (a, &u) in kept.iter().enumerate() {
        for (b, &v) in kept.iter().enumerate().skip(a + 1) {
            if adj[u][v] && from_in[u] && to_out[v] {
                edges.push((a, b));
            }
        }
    }
    let ops = kept[1..kept.len() - 1]
        .iter()
        .map(|&v| Op::from_index(row[EDGE_DIMS + v - 1] as usize).expect("ternary level"))
        .collect();
    let cell = CellSpec::from_edges(kept.len(), &edges, ops);
    let report = validate_cell(&cell);
    if report.is_valid() {
        Ok(cell)
    } else {
        Err(report)
    }
}

fn uniform_row(rng: &mut seed::Rng) -> DesignRow {
    let mut row = [0u8; DESIGN_DIMS];
    for (d, v) in row.iter_mut().enumerate() {
        *v = rng.random_range(0..levels(d));
    }
    row
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplingError {
    #[error("sample size must be at least 1")]
    ZeroSize,
    #[error("EXHAUSTED: {attempts} attempts produced only {produced} of {requested} cells")]
    Exhausted {
        requested: usize,
        produced: usize,
        attempts: usize,
    },
}

/// Stratified design before any rejection: for every dimension, `n` strata
/// are permuted and stratum `s` maps to level `floor(s * levels / n)`.
pub fn lhs_design(n: usize, seed: u64) -> Vec<DesignRow> {
    let mut rng = seed::rng(seed);
    let mut design = vec![[0u8; DESIGN_DIMS]; n];
    for d in 0..DESIGN_DIMS {
        let l = levels(d) as usize;
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        for (row, s) in design.iter_mut().zip(strata) {
            row[d] = (s * l / n) as u8;
        }
    }
    design
}

#[derive(Debug, Clone, PartialEq)]
pub struct LhsSample {
    pub cells: Vec<CellSpec>,
    pub genotypes: Vec<Genotype>,
    /// The stratified design before repair.
    pub design: Vec<DesignRow>,
    /// Rows that had to be re-drawn.
    pub repaired_rows: Vec<usize>,
    pub repair_attempts: usize,
}

/// Latin hypercube sample of `n` distinct valid cells.
///
/// Rows that prune to an invalid cell or duplicate an earlier row are
/// re-drawn uniformly from a sub-seed derived from `(seed, row, attempt)`;
/// other rows are untouched. Fails after `100 * n` re-draws.
pub fn lhs_sample(n: usize, seed: u64) -> Result<LhsSample, SamplingError> {
    if n == 0 {
        return Err(SamplingError::ZeroSize);
    }
    let design = lhs_design(n, seed);
    let budget = 100 * n;
    let mut attempts = 0;
    let mut seen = HashSet::new();
    let mut cells = Vec::with_capacity(n);
    let mut genotypes = Vec::with_capacity(n);
    let mut repaired_rows = Vec::new();

    for (r, row) in design.iter().enumerate() {
        let mut candidate = *row;
        let mut attempt = 0u64;
        loop {
            if let Ok(cell) = row_to_cell(&candidate) {
                let g = encode(&cell).expect("validated cell encodes");
                if seen.insert(g) {
                    cells.push(cell);
                    genotypes.push(g);
                    break;
                }
            }
            if attempt == 0 {
                repaired_rows.push(r);
            }
            attempts += 1;
            if attempts > budget {
                return Err(SamplingError::Exhausted {
                    requested: n,
                    produced: cells.len(),
                    attempts,
                });
            }
            let mut rng = seed::rng(seed::derive(seed, &[r as u64, attempt]));
            candidate = uniform_row(&mut rng);
            attempt += 1;
        }
    }
    Ok(LhsSample {
        cells,
        genotypes,
        design,
        repaired_rows,
        repair_attempts: attempts,
    })
}

/// `n` valid cells from independent uniform design draws with rejection.
/// Duplicates are allowed.
pub fn uniform_sample(n: usize, seed: u64) -> Result<Vec<CellSpec>, SamplingError> {
    if n == 0 {
        return Err(SamplingError::ZeroSize);
    }
    let mut rng = seed::rng(seed);
    let mut cells = Vec::with_capacity(n);
    let mut attempts = 0;
    while cells.len() < n {
        if attempts >= 100 * n {
            return Err(SamplingError::Exhausted {
                requested: n,
                produced: cells.len(),
                attempts,
            });
        }
        attempts += 1;
        if let Ok(cell) = row_to_cell(&uniform_row(&mut rng)) {
            cells.push(cell);
        }
    }
    Ok(cells)
}

/// Model id used for the `index`-th sampled cell.
pub fn model_id(index: usize) -> String {
    format!("m{index:04}")
}

/// Sampler CSV: `model_id,genotype_hex`.
pub fn write_sample_csv<W: Write>(genotypes: &[Genotype], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model_id", "genotype_hex"])?;
    for (i, g) in genotypes.iter().enumerate() {
        w.write_record([model_id(i), g.to_hex()])?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkError {
    #[error("start genotype {genotype} does not decode: {source}")]
    InvalidStart {
        genotype: String,
        #[source]
        source: DecodeError,
    },
    #[error("DEAD_END: no valid neighbor at step {step}")]
    DeadEnd { step: usize },
    #[error("{0}")]
    EvalMiss(#[from] EvalMiss),
    #[error("EXHAUSTED: no start with a valid neighbor after {0} draws")]
    NoStart(usize),
}

/// Generic uniform random walk: each step moves to a neighbor chosen
/// uniformly from `neighbors(current)`. Returns `n_steps + 1` points.
pub fn walk_path<P, N>(
    start: P,
    n_steps: usize,
    seed: u64,
    mut neighbors: N,
) -> Result<Vec<P>, WalkError>
where
    P: Clone,
    N: FnMut(&P) -> Vec<P>,
{
    let mut rng = seed::rng(seed);
    let mut path = Vec::with_capacity(n_steps + 1);
    path.push(start);
    for step in 1..=n_steps {
        let mut options = neighbors(path.last().unwrap());
        if options.is_empty() {
            return Err(WalkError::DeadEnd { step });
        }
        let pick = rng.random_range(0..options.len());
        path.push(options.swap_remove(pick));
    }
    Ok(path)
}

/// Walk over decodable genotypes; the path does not depend on fitness.
pub fn genotype_walk_path(
    start: &Genotype,
    n_steps: usize,
    seed: u64,
) -> Result<Vec<Genotype>, WalkError> {
    crate::cellspace::decode(start).map_err(|source| WalkError::InvalidStart {
        genotype: start.to_hex(),
        source,
    })?;
    walk_path(*start, n_steps, seed, |g| neighbors(g, NeighborMode::Valid))
}

/// A deterministic start point: the first uniformly sampled cell that has
/// at least one valid neighbor.
pub fn random_start(seed: u64) -> Result<Genotype, WalkError> {
    random_start_with(seed, 1)
}

/// Like [`random_start`], but the start needs `min_neighbors` valid
/// neighbors. Valid flips keep the node set fixed, so a sparse start can be
/// confined to a two-cell cycle; a larger neighborhood avoids that.
pub fn random_start_with(seed: u64, min_neighbors: usize) -> Result<Genotype, WalkError> {
    const MAX_DRAWS: usize = 10_000;
    let mut rng = seed::rng(seed);
    for _ in 0..MAX_DRAWS {
        if let Ok(cell) = row_to_cell(&uniform_row(&mut rng)) {
            let g = encode(&cell).expect("validated cell encodes");
            if neighbors(&g, NeighborMode::Valid).len() >= min_neighbors.max(1) {
                return Ok(g);
            }
        }
    }
    Err(WalkError::NoStart(MAX_DRAWS))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkTrace {
    pub steps: Vec<Genotype>,
    pub fitness: Vec<f64>,
    pub seed: u64,
    pub source_id: SourceId,
    pub budget: Budget,
}

#[derive(Serialize, Deserialize)]
struct WalkLine {
    t: usize,
    genotype: Genotype,
    fitness: f64,
}

impl WalkTrace {
    /// Scores a walk path with `source` at `budget`, stopping at the first
    /// missing evaluation.
    pub fn evaluate(
        path: Vec<Genotype>,
        seed: u64,
        source: &dyn FitnessSource,
        budget: Budget,
    ) -> Result<Self, WalkError> {
        let fitness = path
            .iter()
            .map(|g| source.fitness(g, budget))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(WalkTrace {
            steps: path,
            fitness,
            seed,
            source_id: source.id().clone(),
            budget,
        })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// JSON lines, one `{"t", "genotype", "fitness"}` object per step.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (t, (g, f)) in self.steps.iter().zip(&self.fitness).enumerate() {
            let line = WalkLine {
                t,
                genotype: *g,
                fitness: *f,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads the `(genotype, fitness)` sequence back from JSON lines.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<(Genotype, f64)>, serde_json::Error> {
        let mut out = Vec::new();
        for line in input.lines() {
            let line = line.map_err(serde_json::Error::io)?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: WalkLine = serde_json::from_str(&line)?;
            out.push((parsed.genotype, parsed.fitness));
        }
        Ok(out)
    }
}

/// Random walk of `n_steps` over the valid Hamming-1 neighborhood, scored
/// at every visited genotype (start included).
pub fn random_walk(
    start: &Genotype,
    n_steps: usize,
    seed: u64,
    source: &dyn FitnessSource,
    budget: Budget,
) -> Result<WalkTrace, WalkError> {
    let path = genotype_walk_path(start, n_steps, seed)?;
    WalkTrace::evaluate(path, seed, source, budget)
}
