//! Acceptance suite. Prints one PASS/FAIL line per criterion with its
//! runtime and exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use fla_core::bits::{BitString, SmallBits};
use fla_core::cellspace::{
    decode, encode, neighbors, Genotype, NeighborMode, GENOTYPE_BITS, GENOTYPE_HEX_LEN,
};
use fla_core::distfit::{fit_all, fit_mle, information_criteria, select_best, FamilyKind};
use fla_core::fitness::{cohen_kappa, EvalRecord, FitnessTable, NkConfig};
use fla_core::metrics::{
    fdc, local_optima, rho1, ruggedness_from_series, OptimaSpace, RuggednessFlag,
};
use fla_core::persistence::{persistence, persistence_auc, Direction};
use fla_core::sampling::lhs_sample;
use fla_core::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, LogNormal, Weibull};

// pinned tolerances
const AIC_TOL: f64 = 0.01;
const IID_RHO_MAX: f64 = 0.05;
const RAMP_TAU: (f64, f64) = (1.0, 1.06);
const FDC_LINEAR_TOL: f64 = 1e-9;
const RECOVERY_REL: f64 = 0.10;
const LOGNORMAL_TOL: f64 = 1e-6;
const SELECTION_MIN_HITS: usize = 18;
const SELECTION_MIN_RATE: f64 = 0.9;
const SELECTION_RATE_TRIALS: u64 = 1_000;
const KAPPA_TOL: f64 = 1e-12;

type Check = fn() -> Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Duration,
    check: Check,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn aic_identity() -> Result<String, String> {
    for (l, aic) in [(53.63, -103.26), (165.18, -326.36), (109.72, -215.44)] {
        let got = information_criteria(l, 2, 100).aic;
        ensure((got - aic).abs() <= AIC_TOL, || {
            format!("loglik {l}: aic {got}, want {aic}")
        })?;
    }
    Ok("3 reference likelihoods".into())
}

fn encoding_suite() -> Result<String, String> {
    let sample = lhs_sample(1_000, 2024).map_err(|e| e.to_string())?;
    for (cell, g) in sample.cells.iter().zip(&sample.genotypes) {
        ensure(encode(cell).as_ref() == Ok(g), || {
            "encode disagrees with sample".into()
        })?;
        let back = decode(g).map_err(|e| e.to_string())?;
        ensure(&back == cell, || {
            format!("round trip changed {}", g.to_hex())
        })?;
        ensure(
            g.to_hex().len() == GENOTYPE_HEX_LEN && GENOTYPE_BITS == 289,
            || "length".into(),
        )?;
        ensure(g.popcount() <= 9, || {
            format!("popcount {} > 9", g.popcount())
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let prev = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut aborts = 0;
    for i in 0..10_000 {
        // mix dense, sparse and very sparse vectors
        let density = [0.5, 0.03, 0.01][i % 3];
        let bits: Vec<usize> = (0..GENOTYPE_BITS)
            .filter(|_| rng.random_bool(density))
            .collect();
        let g = Genotype::with_bits(&bits);
        if panic::catch_unwind(|| {
            if let Ok(cell) = decode(&g) {
                let _ = encode(&cell);
            }
        })
        .is_err()
        {
            aborts += 1;
        }
    }
    panic::set_hook(prev);
    ensure(aborts == 0, || format!("{aborts} aborts in decode fuzz"))?;
    Ok("1000 round trips, 10000 fuzz vectors, 0 aborts".into())
}

fn brute_neighbors(g: &Genotype) -> Vec<Genotype> {
    (0..GENOTYPE_BITS)
        .map(|i| {
            let mut bits: Vec<usize> = g.ones().filter(|&b| b != i).collect();
            if !g.get(i) {
                bits.push(i);
            }
            Genotype::with_bits(&bits)
        })
        .filter(|h| decode(h).is_ok())
        .collect()
}

fn neighborhood_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let sample = lhs_sample(25, 35).map_err(|e| e.to_string())?;
    // 25 valid cells plus 25 arbitrary vectors
    let mut genotypes = sample.genotypes.clone();
    genotypes.extend((0..25).map(|_| {
        let bits: Vec<usize> = (0..GENOTYPE_BITS)
            .filter(|_| rng.random_bool(0.02))
            .collect();
        Genotype::with_bits(&bits)
    }));
    let mut total = 0;
    for g in &genotypes {
        let got = neighbors(g, NeighborMode::Valid);
        ensure(got == brute_neighbors(g), || {
            format!("mismatch at {}", g.to_hex())
        })?;
        total += got.len();
    }
    Ok(format!("50 genotypes, {total} valid neighbors"))
}

fn ruggedness_calibration() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let iid: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
    let r = rho1(&iid).map_err(|e| e.to_string())?;
    ensure(r.abs() < IID_RHO_MAX, || format!("iid rho1 {r}"))?;
    let ramp: Vec<f64> = (0..100).map(f64::from).collect();
    let tau = ruggedness_from_series(&ramp)
        .map_err(|e| e.to_string())?
        .tau;
    ensure(
        tau.is_some_and(|t| t > RAMP_TAU.0 && t < RAMP_TAU.1),
        || format!("ramp tau {tau:?}"),
    )?;
    let alt: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
    let res = ruggedness_from_series(&alt).map_err(|e| e.to_string())?;
    ensure(
        res.flag == Some(RuggednessFlag::NonpositiveRho1) && res.tau.is_none(),
        || format!("alternating {res:?}"),
    )?;
    Ok(format!("iid rho1 {r:.4}, ramp tau {:.4}", tau.unwrap()))
}

// Independent NK evaluator: splitmix64 hashing, circular neighborhoods.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn nk_oracle(n: usize, k: usize, seed: u64, x: u64) -> f64 {
    // bit i of the string is the i-th most significant of n bits
    let bit = |i: usize| (x >> (n - 1 - i)) & 1;
    let mut sum = 0.0;
    for i in 0..n {
        // bit d of the pattern is x[(i + d) mod n]
        let pattern: u64 = (0..=k).map(|d| bit((i + d) % n) << d).sum();
        let h = splitmix(splitmix(splitmix(seed) ^ i as u64) ^ pattern);
        sum += (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    }
    sum / n as f64
}

fn nk_values(n: usize, k: usize, seed: u64) -> Vec<f64> {
    (0..1u64 << n).map(|x| nk_oracle(n, k, seed, x)).collect()
}

fn fdc_oracle() -> Result<String, String> {
    let linear: Vec<(SmallBits, f64)> = (0..64u64)
        .map(|i| {
            let x = SmallBits::from_index(i, 6);
            (x, 1.0 - (6 - x.count_ones()) as f64 / 6.0)
        })
        .collect();
    let r = fdc(&linear, Execution::Parallel)
        .map_err(|e| e.to_string())?
        .pearson_r;
    ensure(r.is_some_and(|r| (r + 1.0).abs() <= FDC_LINEAR_TOL), || {
        format!("linear r {r:?}")
    })?;

    let (n, k, seed) = (10, 2, 17);
    let values = nk_values(n, k, seed);
    let best = (0..values.len())
        .max_by(|&a, &b| values[a].total_cmp(&values[b]).then(b.cmp(&a)))
        .unwrap();
    let mut expected: Vec<(u32, u64)> = (0..values.len())
        .filter(|&x| x != best)
        .map(|x| ((x ^ best).count_ones(), values[x].to_bits()))
        .collect();
    expected.sort_unstable();
    let cfg = NkConfig::new(n, k, seed).map_err(|e| e.to_string())?;
    let samples: Vec<(SmallBits, f64)> = (0..1u64 << n)
        .map(|i| {
            let x = SmallBits::from_index(i, n);
            (x, fla_core::fitness::nk_fitness(&cfg, &x).unwrap())
        })
        .collect();
    let res = fdc(&samples, Execution::Parallel).map_err(|e| e.to_string())?;
    let mut got: Vec<(u32, u64)> = res
        .points
        .iter()
        .map(|p| (p.distance, p.fitness.to_bits()))
        .collect();
    got.sort_unstable();
    ensure(got == expected, || {
        "NK FDC multiset differs from the enumerator".into()
    })?;
    Ok(format!(
        "linear r = {:.12}, NK multiset of {} points",
        r.unwrap(),
        got.len()
    ))
}

fn brute_optima(values: &[f64], n: usize) -> usize {
    (0..values.len())
        .filter(|&x| (0..n).all(|b| values[x] >= values[x ^ (1 << b)]))
        .count()
}

fn local_optima_check() -> Result<String, String> {
    for seed in 0..50 {
        let cfg = NkConfig::new(10, 0, seed).map_err(|e| e.to_string())?;
        let res = local_optima(OptimaSpace::Exhaustive(cfg), Execution::Parallel)
            .map_err(|e| e.to_string())?;
        ensure(res.count == 1, || {
            format!("k=0 seed {seed}: {} optima", res.count)
        })?;
    }
    let mut counts = Vec::new();
    for seed in 0..10 {
        let cfg = NkConfig::new(10, 2, seed).map_err(|e| e.to_string())?;
        let want = brute_optima(&nk_values(10, 2, seed), 10);
        let res = local_optima(OptimaSpace::Exhaustive(cfg), Execution::Parallel)
            .map_err(|e| e.to_string())?;
        ensure(res.count == want, || {
            format!("k=2 seed {seed}: {} vs {want}", res.count)
        })?;
        counts.push(res.count);
    }
    Ok(format!("k=0: 1 x 50 seeds; k=2 counts {counts:?}"))
}

fn draw<D: Distribution<f64>>(d: D, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

fn rel_ok(got: f64, want: f64) -> bool {
    (got - want).abs() <= RECOVERY_REL * want.abs()
}

fn draw_std<D: Distribution<f64>>(d: D, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

fn selection_hits(
    family: FamilyKind,
    trials: std::ops::Range<u64>,
    sample: impl Fn(u64) -> Vec<f64>,
) -> Result<usize, String> {
    let mut hits = 0;
    for trial in trials {
        let fits: Vec<_> = fit_all(&sample(trial))
            .into_iter()
            .filter_map(|(_, r)| r.ok())
            .collect();
        let best = select_best(&fits).map_err(|e| e.to_string())?;
        hits += usize::from(best.family == family);
    }
    Ok(hits)
}

fn distfit_recovery() -> Result<String, String> {
    let beta = fit_mle(
        &draw(Beta::new(2.0, 5.0).unwrap(), 5_000, 1),
        FamilyKind::Beta,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        rel_ok(beta.params["alpha"], 2.0) && rel_ok(beta.params["beta"], 5.0),
        || format!("beta {:?}", beta.params),
    )?;
    // rand_distr takes (scale, shape)
    let weib = fit_mle(
        &draw(Weibull::new(1.0, 1.0).unwrap(), 5_000, 2),
        FamilyKind::Weibull,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        rel_ok(weib.params["shape"], 1.0) && rel_ok(weib.params["scale"], 1.0),
        || format!("weibull {:?}", weib.params),
    )?;

    let xs = draw(LogNormal::new(-0.7, 0.4).unwrap(), 2_000, 3);
    let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let mu = logs.iter().sum::<f64>() / logs.len() as f64;
    let sd = (logs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / logs.len() as f64).sqrt();
    let ln = fit_mle(&xs, FamilyKind::Lognormal).map_err(|e| e.to_string())?;
    ensure(
        (ln.params["log_mean"] - mu).abs() <= LOGNORMAL_TOL
            && (ln.params["log_sd"] - sd).abs() <= LOGNORMAL_TOL,
        || format!("lognormal {:?} vs ({mu}, {sd})", ln.params),
    )?;

    // the stated experiment: 20 trials of 1000 Beta(2,5) draws
    let beta_hits = selection_hits(FamilyKind::Beta, 0..20, |i| {
        draw_std(Beta::new(2.0, 5.0).unwrap(), 1_000, 100 + i)
    })?;
    // long-run selection rate behind it, on a disjoint stream
    let rate_hits = selection_hits(FamilyKind::Beta, 0..SELECTION_RATE_TRIALS, |i| {
        draw(Beta::new(2.0, 5.0).unwrap(), 1_000, 10_000 + i)
    })?;
    let rate = rate_hits as f64 / SELECTION_RATE_TRIALS as f64;
    let summary = format!(
        "BETA selected {beta_hits}/20; long-run rate {rate:.3} over {SELECTION_RATE_TRIALS}"
    );
    ensure(
        beta_hits >= SELECTION_MIN_HITS && rate >= SELECTION_MIN_RATE,
        || summary.clone(),
    )?;
    Ok(format!(
        "alpha {:.3}, beta {:.3}, shape {:.3}, scale {:.3}; {summary}",
        beta.params["alpha"], beta.params["beta"], weib.params["shape"], weib.params["scale"]
    ))
}

fn table(rows: &[(String, u32, f64)]) -> FitnessTable {
    let mut t = FitnessTable::new();
    for (m, b, f) in rows {
        t.insert(EvalRecord {
            model_id: m.clone(),
            genotype: None,
            source: "s".into(),
            budget: *b,
            fitness_test: *f,
            fitness_val: None,
        })
        .unwrap();
    }
    t
}

fn persistence_fixtures() -> Result<String, String> {
    let same: Vec<(String, u32, f64)> = (0..40)
        .flat_map(|i| {
            [
                (format!("m{i:02}"), 4, i as f64),
                (format!("m{i:02}"), 36, 2.0 * i as f64),
            ]
        })
        .collect();
    let rev: Vec<(String, u32, f64)> = (0..40)
        .flat_map(|i| {
            [
                (format!("m{i:02}"), 4, i as f64),
                (format!("m{i:02}"), 36, -(i as f64)),
            ]
        })
        .collect();
    let (same, rev) = (table(&same), table(&rev));
    for dir in [Direction::Top, Direction::Bottom] {
        for n in 1..=25 {
            let p = persistence(&same, "s", n as f64, 4, 36, dir).map_err(|e| e.to_string())?;
            ensure(p == 100.0, || format!("identical {dir:?} n={n}: {p}"))?;
            let q = persistence(&rev, "s", n as f64, 4, 36, dir).map_err(|e| e.to_string())?;
            ensure(q == 0.0, || format!("reversed {dir:?} n={n}: {q}"))?;
        }
        let auc = persistence_auc(&same, "s", 4, 36, dir, 25).map_err(|e| e.to_string())?;
        ensure(auc == 1.0, || format!("identical AuC {auc}"))?;
        let auc = persistence_auc(&rev, "s", 4, 36, dir, 25).map_err(|e| e.to_string())?;
        ensure(auc == 0.0, || format!("reversed AuC {auc}"))?;
    }
    // top-2 of 8 at 4 epochs {m1, m2}, at 36 epochs {m1, m5}
    let hand: Vec<(String, u32, f64)> = [
        ("m1", 0.90, 0.95),
        ("m2", 0.85, 0.70),
        ("m3", 0.60, 0.65),
        ("m4", 0.55, 0.60),
        ("m5", 0.50, 0.93),
        ("m6", 0.40, 0.45),
        ("m7", 0.30, 0.35),
        ("m8", 0.20, 0.25),
    ]
    .iter()
    .flat_map(|(m, a, b)| [(m.to_string(), 4, *a), (m.to_string(), 36, *b)])
    .collect();
    let p =
        persistence(&table(&hand), "s", 25.0, 4, 36, Direction::Top).map_err(|e| e.to_string())?;
    ensure(p == 50.0, || format!("hand fixture {p}"))?;
    Ok("identical 100/1.0, reversed 0/0.0, hand fixture 50.0".into())
}

fn kappa_check() -> Result<String, String> {
    let k = |m: &[Vec<u64>]| cohen_kappa(m).map_err(|e| e.to_string());
    let diag = k(&[vec![10, 0, 0], vec![0, 7, 0], vec![0, 0, 3]])?;
    ensure((diag - 1.0).abs() <= KAPPA_TOL, || {
        format!("diagonal {diag}")
    })?;
    let flat = k(&[vec![25, 25], vec![25, 25]])?;
    ensure(flat.abs() <= KAPPA_TOL, || format!("uniform {flat}"))?;
    let mid = k(&[vec![20, 5], vec![10, 15]])?;
    ensure((mid - 0.4).abs() <= KAPPA_TOL, || {
        format!("[[20,5],[10,15]] {mid}")
    })?;
    for c in [2u64, 3, 7, 100] {
        let scaled = k(&[vec![20 * c, 5 * c], vec![10 * c, 15 * c]])?;
        ensure((scaled - mid).abs() <= KAPPA_TOL, || {
            format!("scale {c}: {scaled}")
        })?;
    }
    Ok(format!("diag {diag}, uniform {flat}, mixed {mid}"))
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn run_pipeline(root: &Path) -> Result<(), String> {
    let demo = concat!(env!("CARGO_MANIFEST_DIR"), "/demo/nk3.json");
    let analysis = root.join("analysis");
    let cmp = root.join("cmp");
    let a = analysis.to_string_lossy().into_owned();
    let c = cmp.to_string_lossy().into_owned();
    let fps: Vec<String> = ["smooth", "medium", "rugged"]
        .iter()
        .map(|s| {
            analysis
                .join(s)
                .join("b108/footprint.json")
                .to_string_lossy()
                .into_owned()
        })
        .collect();
    let mut compare = vec!["compare".to_string(), "--out".into(), c];
    compare.extend(fps);
    let steps: Vec<Vec<String>> = vec![
        ["analyze", "--config", demo, "--out", &a]
            .map(String::from)
            .to_vec(),
        ["footprint", "--analysis", &a].map(String::from).to_vec(),
        compare,
    ];
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_fla"))
            .args(&args)
            .env_remove("FLA_SEED")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            format!(
                "{} failed: {}",
                args[0],
                String::from_utf8_lossy(&out.stderr)
            )
        })?;
    }
    Ok(())
}

fn end_to_end_determinism() -> Result<String, String> {
    let first = tempfile::tempdir().map_err(|e| e.to_string())?;
    let second = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_pipeline(first.path())?;
    run_pipeline(second.path())?;
    let (a, b) = (files_under(first.path()), files_under(second.path()));
    ensure(a.len() > 100, || format!("only {} files", a.len()))?;
    ensure(a.keys().eq(b.keys()), || "file sets differ".into())?;
    if let Some((path, _)) = a.iter().find(|(p, bytes)| b[*p] != **bytes) {
        return Err(format!("{} differs", path.display()));
    }
    Ok(format!("{} files byte-identical", a.len()))
}

// not a listed criterion; the walk command's stated timing example
fn walk_timing() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("walk.jsonl");
    let status = Command::new(env!("CARGO_BIN_EXE_fla"))
        .args([
            "walk", "--nk", "4", "--steps", "10000", "--seed", "1", "--out",
        ])
        .arg(&out)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("walk exited with {status}"))?;
    let lines = fs::read_to_string(&out)
        .map_err(|e| e.to_string())?
        .lines()
        .count();
    ensure(lines == 10_001, || format!("{lines} lines"))?;
    Ok("10,001 steps written".into())
}

fn main() {
    let criteria = [
        Criterion {
            name: "AIC identity",
            limit: Duration::from_secs(1),
            check: aic_identity,
        },
        Criterion {
            name: "encoding suite",
            limit: Duration::from_secs(30),
            check: encoding_suite,
        },
        Criterion {
            name: "neighborhood oracle",
            limit: Duration::from_secs(30),
            check: neighborhood_oracle,
        },
        Criterion {
            name: "ruggedness calibration",
            limit: Duration::from_secs(5),
            check: ruggedness_calibration,
        },
        Criterion {
            name: "FDC oracle",
            limit: Duration::from_secs(10),
            check: fdc_oracle,
        },
        Criterion {
            name: "local optima",
            limit: Duration::from_secs(60),
            check: local_optima_check,
        },
        Criterion {
            name: "distribution fitting",
            limit: Duration::from_secs(120),
            check: distfit_recovery,
        },
        Criterion {
            name: "persistence fixtures",
            limit: Duration::from_secs(1),
            check: persistence_fixtures,
        },
        Criterion {
            name: "kappa",
            limit: Duration::from_secs(1),
            check: kappa_check,
        },
        Criterion {
            name: "NK walk 10,000 steps (extra)",
            limit: Duration::from_secs(10),
            check: walk_timing,
        },
        Criterion {
            name: "end-to-end determinism",
            limit: Duration::from_secs(120),
            check: end_to_end_determinism,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(c.check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = result.and_then(|detail| {
            if took <= c.limit {
                Ok(detail)
            } else {
                Err(format!("{detail}; over the {:?} limit", c.limit))
            }
        });
        match result {
            Ok(detail) => println!("PASS {} [{:.2?} <= {:?}] {detail}", c.name, took, c.limit),
            Err(why) => {
                failed += 1;
                println!("FAIL {} [{:.2?} <= {:?}] {why}", c.name, took, c.limit);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
