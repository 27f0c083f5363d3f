//! The 8-metric landscape footprint and cross-source comparison.
//!
//! Every slot holds either a finite value or an explicit flag. Slots are
//! never silently dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::{Budget, SourceId};
use crate::metrics::{FitnessStats, LocalOptima, OptimaMode, RuggednessResult};
use crate::persistence::{Direction, PersistenceSummary};
use crate::SCHEMA_VERSION;

/// Axis names in footprint order.
pub const AXES: [&str; 8] = [
    "mean",
    "variance",
    "tau",
    "n_local_optima",
    "pos_p",
    "pos_auc",
    "neg_p",
    "neg_auc",
];

pub const RADAR_CSV_HEADER: &str = "axis,source,raw,normalized";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FootprintError {
    #[error("SOURCE_MISMATCH: {what} comes from source {found}, expected {expected}")]
    SourceMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("BUDGET_MISMATCH: {what} is at {found} epochs, expected {expected}")]
    BudgetMismatch {
        what: &'static str,
        expected: Budget,
        found: Budget,
    },
    #[error("{what} must be a {expected} persistence summary")]
    WrongDirection {
        what: &'static str,
        expected: &'static str,
    },
    #[error("TOO_FEW: need at least 2 footprints to compare, got {0}")]
    TooFew(usize),
    #[error("ALL_FLAGGED: axis {0} has no value in any footprint")]
    AllFlagged(&'static str),
    #[error("INVALID_FOOTPRINT: {0}")]
    Invalid(String),
}

impl FootprintError {
    pub fn code(&self) -> &'static str {
        match self {
            FootprintError::SourceMismatch { .. } => "SOURCE_MISMATCH",
            FootprintError::BudgetMismatch { .. } => "BUDGET_MISMATCH",
            FootprintError::WrongDirection { .. } => "WRONG_DIRECTION",
            FootprintError::TooFew(_) => "TOO_FEW",
            FootprintError::AllFlagged(_) => "ALL_FLAGGED",
            FootprintError::Invalid(_) => "INVALID_FOOTPRINT",
        }
    }
}

/// An analysis result labelled with what it was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct Tagged<T> {
    pub source: SourceId,
    pub budget: Budget,
    /// Identifier of the producing analysis, copied into provenance.
    pub analysis_id: String,
    pub value: T,
}

impl<T> Tagged<T> {
    pub fn new(source: SourceId, budget: Budget, analysis_id: impl Into<String>, value: T) -> Self {
        Tagged {
            source,
            budget,
            analysis_id: analysis_id.into(),
            value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootprintMetrics {
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub tau: Option<f64>,
    pub n_local_optima: Option<f64>,
    pub pos_p: Option<f64>,
    pub pos_auc: Option<f64>,
    pub neg_p: Option<f64>,
    pub neg_auc: Option<f64>,
}

impl FootprintMetrics {
    pub fn values(&self) -> [Option<f64>; 8] {
        [
            self.mean,
            self.variance,
            self.tau,
            self.n_local_optima,
            self.pos_p,
            self.pos_auc,
            self.neg_p,
            self.neg_auc,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub schema_version: u32,
    pub source: SourceId,
    pub budget: Budget,
    pub metrics: FootprintMetrics,
    /// Axis name to flag, e.g. `tau: NONPOSITIVE_RHO1`,
    /// `n_local_optima: ESTIMATE`.
    pub flags: BTreeMap<String, String>,
    pub provenance: Vec<String>,
}

impl Footprint {
    /// Checks the schema version and that every slot is a finite value or
    /// carries a flag.
    pub fn validate(&self) -> Result<(), FootprintError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(FootprintError::Invalid(format!(
                "schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        for (axis, v) in AXES.iter().zip(self.metrics.values()) {
            match v {
                Some(x) if !x.is_finite() => {
                    return Err(FootprintError::Invalid(format!("{axis} is not finite")));
                }
                None if !self.flags.contains_key(*axis) => {
                    return Err(FootprintError::Invalid(format!(
                        "{axis} has neither value nor flag"
                    )));
                }
                _ => {}
            }
        }
        if let Some(unknown) = self.flags.keys().find(|k| !AXES.contains(&k.as_str())) {
            return Err(FootprintError::Invalid(format!(
                "flag on unknown axis {unknown}"
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, FootprintError> {
        let fp: Footprint =
            serde_json::from_str(text).map_err(|e| FootprintError::Invalid(e.to_string()))?;
        fp.validate()?;
        Ok(fp)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("footprint serializes")
    }
}

fn check<T>(
    what: &'static str,
    part: &Tagged<T>,
    source: &SourceId,
    budget: Budget,
) -> Result<(), FootprintError> {
    if part.source != *source {
        return Err(FootprintError::SourceMismatch {
            what,
            expected: source.name.clone(),
            found: part.source.name.clone(),
        });
    }
    if part.budget != budget {
        return Err(FootprintError::BudgetMismatch {
            what,
            expected: budget,
            found: part.budget,
        });
    }
    Ok(())
}

/// Assembles a footprint. The source and budget of `stats` are the
/// reference; every other input must match them.
pub fn build_footprint(
    stats: &Tagged<FitnessStats>,
    rugged: &Tagged<RuggednessResult>,
    optima: &Tagged<LocalOptima>,
    pos: &Tagged<PersistenceSummary>,
    neg: &Tagged<PersistenceSummary>,
) -> Result<Footprint, FootprintError> {
    let (source, budget) = (&stats.source, stats.budget);
    check("ruggedness", rugged, source, budget)?;
    check("local optima", optima, source, budget)?;
    check("positive persistence", pos, source, budget)?;
    check("negative persistence", neg, source, budget)?;
    if pos.value.direction != Direction::Top {
        return Err(FootprintError::WrongDirection {
            what: "positive persistence",
            expected: "TOP",
        });
    }
    if neg.value.direction != Direction::Bottom {
        return Err(FootprintError::WrongDirection {
            what: "negative persistence",
            expected: "BOTTOM",
        });
    }

    let mut flags = BTreeMap::new();
    if let Some(flag) = rugged.value.flag {
        let name = serde_json::to_value(flag).expect("flag serializes");
        flags.insert(
            "tau".to_string(),
            name.as_str().unwrap_or("FLAGGED").to_string(),
        );
    }
    if optima.value.mode == OptimaMode::Estimate {
        flags.insert("n_local_optima".to_string(), "ESTIMATE".to_string());
    }

    let provenance = [
        &stats.analysis_id,
        &rugged.analysis_id,
        &optima.analysis_id,
        &pos.analysis_id,
        &neg.analysis_id,
    ]
    .into_iter()
    .cloned()
    .collect();

    let fp = Footprint {
        schema_version: SCHEMA_VERSION,
        source: source.clone(),
        budget,
        metrics: FootprintMetrics {
            mean: Some(stats.value.mean),
            variance: Some(stats.value.variance()),
            tau: rugged.value.tau,
            n_local_optima: Some(optima.value.count as f64),
            pos_p: Some(pos.value.p_at_nmax),
            pos_auc: Some(pos.value.auc),
            neg_p: Some(neg.value.p_at_nmax),
            neg_auc: Some(neg.value.auc),
        },
        flags,
        provenance,
    };
    fp.validate()?;
    Ok(fp)
}

/// One footprint scaled onto the radar axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarVector {
    pub source: String,
    pub budget: Budget,
    pub values: [f64; 8],
    /// Axes without a value; their normalized entry is 0.
    pub missing: Vec<String>,
}

/// Per-axis min-max scaling across the footprints. Axes whose present values
/// are all equal map to 0.5. Missing values map to 0 and are listed in
/// `missing`. Orientation is never inverted.
pub fn normalize_for_radar(footprints: &[Footprint]) -> Result<Vec<RadarVector>, FootprintError> {
    if footprints.len() < 2 {
        return Err(FootprintError::TooFew(footprints.len()));
    }
    let labels = labels(footprints);
    let mut out: Vec<RadarVector> = footprints
        .iter()
        .zip(&labels)
        .map(|(fp, label)| RadarVector {
            source: label.clone(),
            budget: fp.budget,
            values: [0.0; 8],
            missing: Vec::new(),
        })
        .collect();

    for (a, axis) in AXES.iter().enumerate() {
        let raw: Vec<Option<f64>> = footprints.iter().map(|fp| fp.metrics.values()[a]).collect();
        let present: Vec<f64> = raw.iter().flatten().copied().collect();
        if present.is_empty() {
            return Err(FootprintError::AllFlagged(axis));
        }
        let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (vec, v) in out.iter_mut().zip(&raw) {
            match v {
                Some(x) if hi > lo => vec.values[a] = ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
                Some(_) => vec.values[a] = 0.5,
                None => vec.missing.push(axis.to_string()),
            }
        }
    }
    Ok(out)
}

// Source names, qualified with the budget when a name occurs more than once.
fn labels(footprints: &[Footprint]) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for fp in footprints {
        *counts.entry(fp.source.name.as_str()).or_default() += 1;
    }
    footprints
        .iter()
        .map(|fp| {
            if counts[fp.source.name.as_str()] > 1 {
                format!("{}@{}", fp.source.name, fp.budget)
            } else {
                fp.source.name.clone()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RankStatus {
    Ranked,
    Tied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub source: String,
    pub raw: Option<f64>,
    /// Competition rank, 1 = highest raw value. `None` for missing values.
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisRanking {
    pub axis: String,
    /// `TIED` when every present value on the axis is equal.
    pub status: RankStatus,
    pub entries: Vec<RankEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub axes: Vec<String>,
    pub legend: BTreeMap<String, String>,
    pub footprints: Vec<Footprint>,
    pub normalized: Vec<RadarVector>,
    pub rankings: Vec<AxisRanking>,
    pub provenance: Vec<String>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, FootprintError> {
        let report: ComparisonReport =
            serde_json::from_str(text).map_err(|e| FootprintError::Invalid(e.to_string()))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(FootprintError::Invalid(format!(
                "schema_version {} (expected {SCHEMA_VERSION})",
                report.schema_version
            )));
        }
        for fp in &report.footprints {
            fp.validate()?;
        }
        Ok(report)
    }

    /// `axis,source,raw,normalized`, axis-major. Missing raw values are
    /// empty cells.
    pub fn radar_csv(&self) -> String {
        let mut out = String::from(RADAR_CSV_HEADER);
        out.push('\n');
        for (a, axis) in AXES.iter().enumerate() {
            for (fp, vec) in self.footprints.iter().zip(&self.normalized) {
                let raw = fp.metrics.values()[a]
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                let _ = writeln!(out, "{axis},{},{raw},{}", vec.source, vec.values[a]);
            }
        }
        out
    }
}

fn legend() -> BTreeMap<String, String> {
    let notes = [
        ("mean", "mean fitness; higher is fitter"),
        ("variance", "fitness variance; raw orientation"),
        ("tau", "1/rho(1) of the walk; raw orientation, not inverted"),
        (
            "n_local_optima",
            "local optima count; ESTIMATE when sampled",
        ),
        ("pos_p", "top-rank persistence at n_max, percent"),
        ("pos_auc", "top-rank persistence area, fraction"),
        ("neg_p", "bottom-rank persistence at n_max, percent"),
        ("neg_auc", "bottom-rank persistence area, fraction"),
    ];
    let mut map: BTreeMap<String, String> = notes
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    map.insert(
        "_scaling".into(),
        "per-axis min-max over the compared set; equal values 0.5; missing 0".into(),
    );
    map
}

/// Builds the comparison report. Footprints are ordered by source name then
/// budget, so the report does not depend on input order.
pub fn compare(footprints: &[Footprint]) -> Result<ComparisonReport, FootprintError> {
    for fp in footprints {
        fp.validate()?;
    }
    let mut sorted = footprints.to_vec();
    sorted.sort_by(|a, b| {
        a.source
            .name
            .cmp(&b.source.name)
            .then(a.budget.cmp(&b.budget))
    });
    let normalized = normalize_for_radar(&sorted)?;

    let rankings = AXES
        .iter()
        .enumerate()
        .map(|(a, axis)| {
            let mut entries: Vec<RankEntry> = sorted
                .iter()
                .zip(&normalized)
                .map(|(fp, v)| RankEntry {
                    source: v.source.clone(),
                    raw: fp.metrics.values()[a],
                    rank: None,
                })
                .collect();
            let present: Vec<f64> = entries.iter().filter_map(|e| e.raw).collect();
            for e in entries.iter_mut() {
                if let Some(x) = e.raw {
                    e.rank = Some(1 + present.iter().filter(|&&y| y > x).count());
                }
            }
            entries.sort_by(|x, y| {
                x.rank
                    .unwrap_or(usize::MAX)
                    .cmp(&y.rank.unwrap_or(usize::MAX))
                    .then(x.source.cmp(&y.source))
            });
            let distinct: BTreeSet<u64> = present.iter().map(|v| v.to_bits()).collect();
            AxisRanking {
                axis: axis.to_string(),
                status: if distinct.len() <= 1 {
                    RankStatus::Tied
                } else {
                    RankStatus::Ranked
                },
                entries,
            }
        })
        .collect();

    let provenance = sorted
        .iter()
        .flat_map(|fp| fp.provenance.iter().cloned())
        .collect();
    Ok(ComparisonReport {
        schema_version: SCHEMA_VERSION,
        axes: AXES.iter().map(|s| s.to_string()).collect(),
        legend: legend(),
        footprints: sorted,
        normalized,
        rankings,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::SourceKind;
    use crate::metrics::RuggednessFlag;

    fn src(name: &str) -> SourceId {
        SourceId::new(name, SourceKind::Nk)
    }

    fn summary(dir: Direction, p: f64, auc: f64) -> PersistenceSummary {
        PersistenceSummary {
            schema_version: SCHEMA_VERSION,
            source: "x".into(),
            direction: dir,
            b_ref: 4,
            b: 36,
            n_max: 25,
            auc,
            p_at_nmax: p,
        }
    }

    fn parts(
        name: &str,
        mean: f64,
        std: f64,
    ) -> (
        Tagged<FitnessStats>,
        Tagged<RuggednessResult>,
        Tagged<LocalOptima>,
        Tagged<PersistenceSummary>,
        Tagged<PersistenceSummary>,
    ) {
        let s = src(name);
        let stats = FitnessStats {
            mean,
            std,
            min: 0.0,
            max: 1.0,
            n: 100,
        };
        let rugged = RuggednessResult {
            rho1: Some(0.5),
            tau: Some(2.0),
            walk_len: 100,
            flag: None,
        };
        let optima = LocalOptima {
            count: 3,
            ids: vec![],
            mode: OptimaMode::Estimate,
        };
        (
            Tagged::new(s.clone(), 36, "stats", stats),
            Tagged::new(s.clone(), 36, "walk", rugged),
            Tagged::new(s.clone(), 36, "optima", optima),
            Tagged::new(s.clone(), 36, "pos", summary(Direction::Top, 60.0, 0.7)),
            Tagged::new(s, 36, "neg", summary(Direction::Bottom, 40.0, 0.3)),
        )
    }

    fn footprint(name: &str, mean: f64) -> Footprint {
        let (a, b, c, d, e) = parts(name, mean, 0.1);
        build_footprint(&a, &b, &c, &d, &e).unwrap()
    }

    #[test]
    fn eight_slots_filled() {
        let fp = footprint("s2", 0.9);
        assert!(fp.metrics.values().iter().all(Option::is_some));
        assert_eq!(
            fp.flags.get("n_local_optima").map(String::as_str),
            Some("ESTIMATE")
        );
        assert_eq!(fp.provenance, ["stats", "walk", "optima", "pos", "neg"]);
    }

    #[test]
    fn mismatches_rejected() {
        let (a, mut b, c, d, e) = parts("s2", 0.9, 0.1);
        b.source = src("s1");
        let err = build_footprint(&a, &b, &c, &d, &e).unwrap_err();
        assert_eq!(err.code(), "SOURCE_MISMATCH");
        b.source = a.source.clone();
        b.budget = 12;
        assert_eq!(
            build_footprint(&a, &b, &c, &d, &e).unwrap_err().code(),
            "BUDGET_MISMATCH"
        );
        b.budget = 36;
        assert_eq!(
            build_footprint(&a, &b, &c, &e, &d).unwrap_err().code(),
            "WRONG_DIRECTION"
        );
    }

    #[test]
    fn flagged_tau_is_null_with_flag() {
        let (a, mut b, c, d, e) = parts("s1", 0.5, 0.1);
        b.value.tau = None;
        b.value.flag = Some(RuggednessFlag::NonpositiveRho1);
        let fp = build_footprint(&a, &b, &c, &d, &e).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fp.to_json()).unwrap();
        assert!(v["metrics"]["tau"].is_null());
        assert_eq!(v["flags"]["tau"], "NONPOSITIVE_RHO1");
        assert_eq!(Footprint::from_json(&fp.to_json()).unwrap(), fp);
    }

    #[test]
    fn values_serialize_verbatim() {
        let (a, b, c, d, e) = parts("s2", 0.94, 0.03);
        let fp = build_footprint(&a, &b, &c, &d, &e).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fp.to_json()).unwrap();
        assert_eq!(v["metrics"]["mean"].as_f64(), Some(0.94));
        assert_eq!(v["metrics"]["variance"].as_f64(), Some(0.03 * 0.03));
        assert_eq!(v["budget"], 36);
    }

    #[test]
    fn unflagged_gap_is_invalid() {
        let mut fp = footprint("s", 0.5);
        fp.metrics.pos_p = None;
        assert_eq!(fp.validate().unwrap_err().code(), "INVALID_FOOTPRINT");
        fp.flags.insert("pos_p".into(), "MISSING".into());
        fp.validate().unwrap();
    }

    #[test]
    fn min_max_scaling() {
        let fps: Vec<_> = [1.0, 2.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, m)| footprint(&format!("s{i}"), *m))
            .collect();
        let vecs = normalize_for_radar(&fps).unwrap();
        let means: Vec<f64> = vecs.iter().map(|v| v.values[0]).collect();
        assert_eq!(means, [0.0, 0.5, 1.0]);
        // equal axes map to the midpoint
        assert!(vecs.iter().all(|v| v.values[1] == 0.5));
        assert_eq!(
            normalize_for_radar(&fps[..1]).unwrap_err(),
            FootprintError::TooFew(1)
        );
    }

    #[test]
    fn missing_axis_maps_to_zero() {
        let mut fps = vec![footprint("a", 0.1), footprint("b", 0.2)];
        fps[0].metrics.tau = None;
        fps[0].flags.insert("tau".into(), "NONPOSITIVE_RHO1".into());
        let vecs = normalize_for_radar(&fps).unwrap();
        assert_eq!(vecs[0].values[2], 0.0);
        assert_eq!(vecs[0].missing, ["tau"]);
        assert_eq!(vecs[1].values[2], 0.5);
        fps[1].metrics.tau = None;
        fps[1].flags.insert("tau".into(), "NONPOSITIVE_RHO1".into());
        assert_eq!(
            normalize_for_radar(&fps).unwrap_err(),
            FootprintError::AllFlagged("tau")
        );
    }

    #[test]
    fn ranking_and_ties() {
        let fps = vec![
            footprint("s1", 0.47),
            footprint("s2", 0.94),
            footprint("fusion", 0.89),
        ];
        let report = compare(&fps).unwrap();
        let mean = &report.rankings[0];
        assert_eq!(mean.status, RankStatus::Ranked);
        let order: Vec<&str> = mean.entries.iter().map(|e| e.source.as_str()).collect();
        assert_eq!(order, ["s2", "fusion", "s1"]);
        let variance = &report.rankings[1];
        assert_eq!(variance.status, RankStatus::Tied);
        assert!(variance.entries.iter().all(|e| e.rank == Some(1)));
    }

    #[test]
    fn report_round_trip_and_csv() {
        let fps = vec![footprint("b", 0.3), footprint("a", 0.6)];
        let report = compare(&fps).unwrap();
        let json = report.to_json();
        assert_eq!(ComparisonReport::from_json(&json).unwrap().to_json(), json);
        let csv = report.radar_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "axis,source,raw,normalized");
        assert_eq!(lines.len(), 1 + 8 * 2);
        assert_eq!(lines[1], "mean,a,0.6,1");
        assert_eq!(lines[2], "mean,b,0.3,0");
    }

    #[test]
    fn duplicate_names_get_budget_labels() {
        let mut late = footprint("a", 0.6);
        late.budget = 108;
        let report = compare(&[footprint("a", 0.3), late]).unwrap();
        let names: Vec<&str> = report
            .normalized
            .iter()
            .map(|v| v.source.as_str())
            .collect();
        assert_eq!(names, ["a@36", "a@108"]);
    }
}
