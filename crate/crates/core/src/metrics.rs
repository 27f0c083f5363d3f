//! Landscape statistics. Fitness is always maximized.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{BitString, LengthMismatch, SmallBits};
use crate::cellspace::{neighbors, Genotype, NeighborMode, GENOTYPE_BITS};
use crate::fitness::{nk_fitness, Budget, EvalMiss, FitnessSource, FitnessTable, NkConfig};
use crate::sampling::WalkTrace;
use crate::Execution;

/// Largest bitstring length accepted for exhaustive enumeration.
pub const MAX_EXHAUSTIVE_BITS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("EMPTY: {0}")]
    Empty(&'static str),
    #[error("ZERO_VARIANCE: series is constant")]
    ZeroVariance,
    #[error("TOO_SHORT: need at least {min} values, got {len}")]
    TooShort { len: usize, min: usize },
    #[error("WINDOW_TOO_LARGE: window {window} exceeds series length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("SPACE_TOO_LARGE: {n} bits exceeds the exhaustive limit of {MAX_EXHAUSTIVE_BITS}")]
    SpaceTooLarge { n: usize },
    #[error("non-finite fitness value at index {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Length(#[from] LengthMismatch),
    #[error(transparent)]
    Eval(#[from] EvalMiss),
}

impl MetricsError {
    pub fn code(&self) -> &'static str {
        match self {
            MetricsError::Empty(_) => "EMPTY",
            MetricsError::ZeroVariance => "ZERO_VARIANCE",
            MetricsError::TooShort { .. } => "TOO_SHORT",
            MetricsError::WindowTooLarge { .. } | MetricsError::ZeroWindow => "WINDOW_TOO_LARGE",
            MetricsError::SpaceTooLarge { .. } => "SPACE_TOO_LARGE",
            MetricsError::NonFinite(_) => "NON_FINITE",
            MetricsError::Length(_) => "LENGTH_MISMATCH",
            MetricsError::Eval(_) => "EVAL_MISS",
        }
    }
}

fn check_finite(values: &[f64]) -> Result<(), MetricsError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(MetricsError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Population moments (divisor n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl FitnessStats {
    pub fn variance(&self) -> f64 {
        self.std * self.std
    }
}

pub fn fitness_stats(values: &[f64]) -> Result<FitnessStats, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty("no fitness values"));
    }
    check_finite(values)?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FitnessStats {
        mean: mean.clamp(min, max),
        std: var.sqrt(),
        min,
        max,
        n: values.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdcPoint {
    pub distance: u32,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdcResult {
    pub points: Vec<FdcPoint>,
    pub optimum_id: String,
    /// `None` when distance or fitness is constant over the points.
    pub pearson_r: Option<f64>,
}

/// Fitness-distance correlation against the best sample.
///
/// The reference optimum is the sample with the highest fitness, ties going
/// to the smallest bitstring (for genotypes: the smallest hex string). Every
/// other sample contributes one `(distance, fitness)` point.
pub fn fdc<P: BitString>(samples: &[(P, f64)], exec: Execution) -> Result<FdcResult, MetricsError> {
    if samples.len() < 2 {
        return Err(MetricsError::Empty("FDC needs at least two samples"));
    }
    let fitness: Vec<f64> = samples.iter().map(|(_, f)| *f).collect();
    check_finite(&fitness)?;
    let best = (0..samples.len())
        .reduce(|a, b| {
            let (pa, fa) = &samples[a];
            let (pb, fb) = &samples[b];
            if fb > fa || (fb == fa && pb < pa) {
                b
            } else {
                a
            }
        })
        .unwrap();
    let optimum = &samples[best].0;
    let others: Vec<usize> = (0..samples.len()).filter(|&i| i != best).collect();
    let points = exec
        .map_slice(&others, |&i| {
            let (p, f) = &samples[i];
            optimum.distance(p).map(|d| FdcPoint {
                distance: d,
                fitness: *f,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.distance as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.fitness).collect();
    Ok(FdcResult {
        points,
        optimum_id: optimum.label(),
        pearson_r: pearson(&xs, &ys),
    })
}

/// FDC over the genotyped records of one `(source, budget)`; the optimum is
/// reported by model id.
pub fn fdc_table(
    table: &FitnessTable,
    source: &str,
    budget: Budget,
    exec: Execution,
) -> Result<FdcResult, MetricsError> {
    let samples: Vec<(Genotype, f64)> = table
        .slice(source, budget)
        .filter_map(|r| r.genotype.map(|g| (g, r.fitness_test)))
        .collect();
    let mut result = fdc(&samples, exec)?;
    let best = Genotype::from_hex(&result.optimum_id).expect("label is hex");
    if let Some(id) = table.model_of(&best) {
        result.optimum_id = id.to_string();
    }
    Ok(result)
}

/// Pearson correlation, `None` if either variable is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(xs) || constant(ys) || sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Lag-1 autocorrelation with the biased (divisor n) estimator:
/// `sum_t (f_t - m)(f_{t+1} - m) / sum_t (f_t - m)^2`.
pub fn rho1(series: &[f64]) -> Result<f64, MetricsError> {
    if series.len() < 3 {
        return Err(MetricsError::TooShort {
            len: series.len(),
            min: 3,
        });
    }
    check_finite(series)?;
    if series.iter().all(|v| *v == series[0]) {
        return Err(MetricsError::ZeroVariance);
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let dev: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let numer: f64 = dev.windows(2).map(|w| w[0] * w[1]).sum();
    Ok(numer / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuggednessFlag {
    NonpositiveRho1,
    /// The walk left the evaluated part of a tabular source.
    EvalMiss,
}

/// `tau = 1 / rho1`, defined only for positive `rho1`. Both are reported
/// since readings of tau differ; `rho1` near 1 means a smooth walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuggednessResult {
    pub rho1: Option<f64>,
    pub tau: Option<f64>,
    pub walk_len: usize,
    pub flag: Option<RuggednessFlag>,
}

pub fn ruggedness_from_series(series: &[f64]) -> Result<RuggednessResult, MetricsError> {
    let r = rho1(series)?;
    let (tau, flag) = if r > 0.0 {
        (Some(1.0 / r), None)
    } else {
        (None, Some(RuggednessFlag::NonpositiveRho1))
    };
    Ok(RuggednessResult {
        rho1: Some(r),
        tau,
        walk_len: series.len(),
        flag,
    })
}

impl RuggednessResult {
    /// A walk that could not be scored.
    pub fn eval_miss(walk_len: usize) -> Self {
        RuggednessResult {
            rho1: None,
            tau: None,
            walk_len,
            flag: Some(RuggednessFlag::EvalMiss),
        }
    }
}

pub fn ruggedness_tau(walk: &WalkTrace) -> Result<RuggednessResult, MetricsError> {
    ruggedness_from_series(&walk.fitness)
}

/// Valid-mode moving average; output length `n - window + 1`.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>, MetricsError> {
    if window == 0 {
        return Err(MetricsError::ZeroWindow);
    }
    if window > series.len() {
        return Err(MetricsError::WindowTooLarge {
            window,
            len: series.len(),
        });
    }
    Ok(series
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect())
}

/// Where local optima are searched.
#[derive(Debug, Clone, Copy)]
pub enum OptimaSpace<'a> {
    /// Every bitstring of an NK landscape (at most 20 bits).
    Exhaustive(NkConfig),
    /// The genotyped records of one `(source, budget)`; only neighbors that
    /// were evaluated are compared.
    Sampled {
        table: &'a FitnessTable,
        source: &'a str,
        budget: Budget,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OptimaMode {
    Exact,
    Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalOptima {
    pub count: usize,
    pub ids: Vec<String>,
    pub mode: OptimaMode,
}

/// Fitness of every bitstring of an NK landscape, indexed by
/// [`SmallBits::from_index`] order.
pub fn enumerate_nk(cfg: &NkConfig, exec: Execution) -> Result<Vec<f64>, MetricsError> {
    if cfg.n > MAX_EXHAUSTIVE_BITS {
        return Err(MetricsError::SpaceTooLarge { n: cfg.n });
    }
    let n = cfg.n;
    Ok(exec.map_range(1 << n, |i| {
        nk_fitness(cfg, &SmallBits::from_index(i as u64, n)).expect("length matches")
    }))
}

/// Indices `x` with `f(x) >= f(y)` for every single-bit flip `y`.
pub fn optima_of_values(values: &[f64], n_bits: usize, exec: Execution) -> Vec<usize> {
    assert_eq!(
        values.len(),
        1 << n_bits,
        "values must cover the whole space"
    );
    exec.map_range(values.len(), |x| {
        (0..n_bits).all(|b| values[x] >= values[x ^ (1 << b)])
    })
    .into_iter()
    .enumerate()
    .filter_map(|(x, is_opt)| is_opt.then_some(x))
    .collect()
}

/// Local optima under single-bit flips, plateaus included.
pub fn local_optima(space: OptimaSpace<'_>, exec: Execution) -> Result<LocalOptima, MetricsError> {
    match space {
        OptimaSpace::Exhaustive(cfg) => {
            let values = enumerate_nk(&cfg, exec)?;
            let ids: Vec<String> = optima_of_values(&values, cfg.n, exec)
                .into_iter()
                .map(|x| SmallBits::from_index(x as u64, cfg.n).label())
                .collect();
            Ok(LocalOptima {
                count: ids.len(),
                ids,
                mode: OptimaMode::Exact,
            })
        }
        OptimaSpace::Sampled {
            table,
            source,
            budget,
        } => {
            let records: Vec<(&str, Genotype, f64)> = table
                .slice(source, budget)
                .filter_map(|r| r.genotype.map(|g| (r.model_id.as_str(), g, r.fitness_test)))
                .collect();
            if records.is_empty() {
                return Err(MetricsError::Empty(
                    "no genotyped records for the source and budget",
                ));
            }
            let fitness: HashMap<Genotype, f64> =
                records.iter().map(|(_, g, f)| (*g, *f)).collect();
            let is_opt = exec.map_slice(&records, |(_, g, f)| {
                (0..GENOTYPE_BITS).all(|i| fitness.get(&g.flip(i)).is_none_or(|other| f >= other))
            });
            let ids: Vec<String> = records
                .iter()
                .zip(is_opt)
                .filter(|(_, opt)| *opt)
                .map(|((id, _, _), _)| id.to_string())
                .collect();
            Ok(LocalOptima {
                count: ids.len(),
                ids,
                mode: OptimaMode::Estimate,
            })
        }
    }
}

/// Sampled cells that are at least as fit as each of their valid
/// neighbors, with every neighbor scored through `source`. The count is an
/// estimate for the space since only the sample is scanned.
pub fn local_optima_by_source(
    samples: &[(String, Genotype)],
    source: &dyn FitnessSource,
    budget: Budget,
    exec: Execution,
) -> Result<LocalOptima, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::Empty("no sampled cells"));
    }
    let verdicts = exec.map_slice(samples, |(_, g)| -> Result<bool, EvalMiss> {
        let f = source.fitness(g, budget)?;
        for h in neighbors(g, NeighborMode::Valid) {
            if source.fitness(&h, budget)? > f {
                return Ok(false);
            }
        }
        Ok(true)
    });
    let mut ids = Vec::new();
    for ((id, _), verdict) in samples.iter().zip(verdicts) {
        if verdict? {
            ids.push(id.clone());
        }
    }
    Ok(LocalOptima {
        count: ids.len(),
        ids,
        mode: OptimaMode::Estimate,
    })
}
