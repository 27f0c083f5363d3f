//! Maximum-likelihood fits of fitness distributions (Beta, Weibull,
//! Log-normal) and model selection by information criteria.
//!
//! Each family has two free parameters, so AIC = 4 - 2l and
//! BIC = 2 ln n - 2l for all three.
//!
//! Fits maximize the log-likelihood with a damped Newton iteration in
//! unconstrained coordinates (log of positive parameters) using analytic
//! gradients and Hessians. The iteration stops once a Newton step improves
//! the log-likelihood by less than [`LOGLIK_TOL`], or after
//! [`MAX_ITERATIONS`] steps, in which case the result is flagged as not
//! converged.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::digamma;
use thiserror::Error;

/// Boundary clamp for samples at exactly 0 or 1.
pub const EPSILON: f64 = 1e-6;
pub const LOGLIK_TOL: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 500;
pub const MIN_SAMPLES: usize = 8;
/// Free parameters per family.
pub const FAMILY_PARAMS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FamilyKind {
    Beta,
    Weibull,
    Lognormal,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 3] = [FamilyKind::Beta, FamilyKind::Weibull, FamilyKind::Lognormal];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::Beta => "BETA",
            FamilyKind::Weibull => "WEIBULL",
            FamilyKind::Lognormal => "LOGNORMAL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistFitError {
    #[error("TOO_FEW_SAMPLES: need at least {MIN_SAMPLES}, got {0}")]
    TooFewSamples(usize),
    #[error("DEGENERATE: all samples are equal")]
    Degenerate,
    #[error("sample {0} is not finite")]
    NonFinite(usize),
    #[error("invalid {family} parameters: {detail}")]
    InvalidParams {
        family: &'static str,
        detail: String,
    },
    #[error("NO_CONVERGED_FIT: none of {0} fits converged")]
    NoConvergedFit(usize),
}

/// A parameterized member of one of the three families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Beta { alpha: f64, beta: f64 },
    Weibull { shape: f64, scale: f64 },
    Lognormal { log_mean: f64, log_sd: f64 },
}

impl Distribution {
    pub fn beta(alpha: f64, beta: f64) -> Result<Self, DistFitError> {
        positive("BETA", &[("alpha", alpha), ("beta", beta)])?;
        Ok(Distribution::Beta { alpha, beta })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self, DistFitError> {
        positive("WEIBULL", &[("shape", shape), ("scale", scale)])?;
        Ok(Distribution::Weibull { shape, scale })
    }

    pub fn lognormal(log_mean: f64, log_sd: f64) -> Result<Self, DistFitError> {
        if !log_mean.is_finite() {
            return Err(DistFitError::InvalidParams {
                family: "LOGNORMAL",
                detail: format!("log_mean = {log_mean}"),
            });
        }
        positive("LOGNORMAL", &[("log_sd", log_sd)])?;
        Ok(Distribution::Lognormal { log_mean, log_sd })
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            Distribution::Beta { .. } => FamilyKind::Beta,
            Distribution::Weibull { .. } => FamilyKind::Weibull,
            Distribution::Lognormal { .. } => FamilyKind::Lognormal,
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let pairs: [(&str, f64); 2] = match *self {
            Distribution::Beta { alpha, beta } => [("alpha", alpha), ("beta", beta)],
            Distribution::Weibull { shape, scale } => [("shape", shape), ("scale", scale)],
            Distribution::Lognormal { log_mean, log_sd } => {
                [("log_mean", log_mean), ("log_sd", log_sd)]
            }
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    pub fn from_params(
        kind: FamilyKind,
        params: &BTreeMap<String, f64>,
    ) -> Result<Self, DistFitError> {
        let get = |name: &str| {
            params
                .get(name)
                .copied()
                .ok_or_else(|| DistFitError::InvalidParams {
                    family: kind.as_str(),
                    detail: format!("missing {name}"),
                })
        };
        match kind {
            FamilyKind::Beta => Distribution::beta(get("alpha")?, get("beta")?),
            FamilyKind::Weibull => Distribution::weibull(get("shape")?, get("scale")?),
            FamilyKind::Lognormal => Distribution::lognormal(get("log_mean")?, get("log_sd")?),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Beta { alpha, beta } => {
                if x <= 0.0 || x >= 1.0 {
                    return f64::NEG_INFINITY;
                }
                (alpha - 1.0) * x.ln() + (beta - 1.0) * (-x).ln_1p() - ln_beta(alpha, beta)
            }
            Distribution::Weibull { shape, scale } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = x / scale;
                shape.ln() - scale.ln() + (shape - 1.0) * z.ln() - z.powf(shape)
            }
            Distribution::Lognormal { log_mean, log_sd } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let y = x.ln();
                -y - log_sd.ln()
                    - 0.5 * (2.0 * PI).ln()
                    - (y - log_mean).powi(2) / (2.0 * log_sd * log_sd)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Beta { alpha, beta } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_reg(alpha, beta, x)
                }
            }
            Distribution::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(shape)).exp_m1()
                }
            }
            Distribution::Lognormal { log_mean, log_sd } => {
                if x <= 0.0 {
                    0.0
                } else {
                    0.5 * erfc(-(x.ln() - log_mean) / (log_sd * SQRT_2))
                }
            }
        }
    }

    /// Inverse CDF for `p` in `(0, 1)`. Beta is inverted numerically by
    /// bisection.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!(p > 0.0 && p < 1.0, "quantile needs p in (0, 1), got {p}");
        match *self {
            Distribution::Beta { .. } => {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-15 {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
            Distribution::Weibull { shape, scale } => scale * (-(-p).ln_1p()).powf(1.0 / shape),
            Distribution::Lognormal { log_mean, log_sd } => {
                let z = -SQRT_2 * erfc_inv(2.0 * p);
                (log_mean + log_sd * z).exp()
            }
        }
    }

    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&x| self.ln_pdf(x)).sum()
    }
}

fn positive(family: &'static str, params: &[(&str, f64)]) -> Result<(), DistFitError> {
    for (name, v) in params {
        if !(v.is_finite() && *v > 0.0) {
            return Err(DistFitError::InvalidParams {
                family,
                detail: format!("{name} = {v} must be positive"),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationCriteria {
    pub aic: f64,
    pub bic: f64,
}

/// `aic = 2k - 2l`, `bic = k ln n - 2l`.
pub fn information_criteria(loglik: f64, k: usize, n: usize) -> InformationCriteria {
    let k = k as f64;
    InformationCriteria {
        aic: 2.0 * k - 2.0 * loglik,
        bic: k * (n as f64).ln() - 2.0 * loglik,
    }
}

/// Fit report; serializes as
/// `{family, params:{...}, loglik, aic, bic, n, converged, iterations}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: FamilyKind,
    pub params: BTreeMap<String, f64>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn distribution(&self) -> Result<Distribution, DistFitError> {
        Distribution::from_params(self.family, &self.params)
    }
}

/// Applies the per-family boundary clamp: Beta samples into
/// `[EPSILON, 1 - EPSILON]`, Weibull and Log-normal samples to at least
/// `EPSILON`.
pub fn preprocess(samples: &[f64], family: FamilyKind) -> Result<Vec<f64>, DistFitError> {
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(DistFitError::NonFinite(i));
    }
    let (lo, hi) = match family {
        FamilyKind::Beta => (EPSILON, 1.0 - EPSILON),
        FamilyKind::Weibull | FamilyKind::Lognormal => (EPSILON, f64::INFINITY),
    };
    let clamped = samples.iter().filter(|&&v| v < 0.0).count();
    if clamped > 0 {
        log::warn!(
            "{clamped} negative fitness values clamped to {lo} for {} fit",
            family.as_str()
        );
    }
    Ok(samples.iter().map(|v| v.clamp(lo, hi)).collect())
}

pub fn fit_mle(samples: &[f64], family: FamilyKind) -> Result<FitResult, DistFitError> {
    if samples.len() < MIN_SAMPLES {
        return Err(DistFitError::TooFewSamples(samples.len()));
    }
    let xs = preprocess(samples, family)?;
    if samples.iter().all(|v| *v == samples[0]) || xs.iter().all(|v| *v == xs[0]) {
        return Err(DistFitError::Degenerate);
    }
    let objective = Objective::new(family, &xs);
    let outcome = newton_maximize(&objective, objective.start());
    let dist = objective.distribution(outcome.theta)?;
    let loglik = dist.log_likelihood(&xs);
    let ic = information_criteria(loglik, FAMILY_PARAMS, xs.len());
    Ok(FitResult {
        family,
        params: dist.params(),
        loglik,
        aic: ic.aic,
        bic: ic.bic,
        n: xs.len(),
        converged: outcome.converged,
        iterations: outcome.iterations,
    })
}

/// Fits all three families; failures are returned per family.
pub fn fit_all(samples: &[f64]) -> Vec<(FamilyKind, Result<FitResult, DistFitError>)> {
    FamilyKind::ALL
        .iter()
        .map(|&f| (f, fit_mle(samples, f)))
        .collect()
}

/// Lowest AIC among converged fits; ties go to the higher log-likelihood,
/// then to the earlier family in BETA, WEIBULL, LOGNORMAL order.
pub fn select_best(fits: &[FitResult]) -> Result<&FitResult, DistFitError> {
    fits.iter()
        .filter(|f| f.converged)
        .min_by(|a, b| {
            a.aic
                .total_cmp(&b.aic)
                .then(b.loglik.total_cmp(&a.loglik))
                .then(a.family.cmp(&b.family))
        })
        .ok_or(DistFitError::NoConvergedFit(fits.len()))
}

/// The families x {Likelihood, AIC, BIC} layout as CSV, two decimals.
/// Families without a fit get empty cells.
pub fn fits_table_csv(fits: &[FitResult]) -> String {
    let by_family: BTreeMap<FamilyKind, &FitResult> = fits.iter().map(|f| (f.family, f)).collect();
    let mut out = String::from("metric,BETA,WEIBULL,LOGNORMAL\n");
    let rows: [(&str, fn(&FitResult) -> f64); 3] = [
        ("Likelihood", |f| f.loglik),
        ("AIC", |f| f.aic),
        ("BIC", |f| f.bic),
    ];
    for (name, get) in rows {
        out.push_str(name);
        for fam in FamilyKind::ALL {
            out.push(',');
            if let Some(f) = by_family.get(&fam) {
                out.push_str(&format!("{:.2}", get(f)));
            }
        }
        out.push('\n');
    }
    out
}

/// Trigamma function for `x > 0`: recurrence up to `x >= 10`, then the
/// asymptotic series.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = x * x;
    let inv = 1.0 / x;
    let inv2 = 1.0 / x2;
    acc + inv
        + inv2 / 2.0
        + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)))
}

// Log-likelihood in unconstrained coordinates:
//   Beta      (ln alpha, ln beta)
//   Weibull   (ln shape, ln scale)
//   Lognormal (log_mean, ln log_sd)
struct Objective<'a> {
    family: FamilyKind,
    xs: &'a [f64],
    n: f64,
    sum_ln: f64,
    sum_ln1m: f64,
}

impl<'a> Objective<'a> {
    fn new(family: FamilyKind, xs: &'a [f64]) -> Self {
        let sum_ln1m = if family == FamilyKind::Beta {
            xs.iter().map(|x| (-x).ln_1p()).sum()
        } else {
            0.0
        };
        Objective {
            family,
            xs,
            n: xs.len() as f64,
            sum_ln: xs.iter().map(|x| x.ln()).sum(),
            sum_ln1m,
        }
    }

    fn distribution(&self, t: [f64; 2]) -> Result<Distribution, DistFitError> {
        match self.family {
            FamilyKind::Beta => Distribution::beta(t[0].exp(), t[1].exp()),
            FamilyKind::Weibull => Distribution::weibull(t[0].exp(), t[1].exp()),
            FamilyKind::Lognormal => Distribution::lognormal(t[0], t[1].exp()),
        }
    }

    fn start(&self) -> [f64; 2] {
        let mean = self.xs.iter().sum::<f64>() / self.n;
        let var = self.xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / self.n;
        match self.family {
            FamilyKind::Beta => {
                let common = mean * (1.0 - mean) / var - 1.0;
                if common > 0.0 {
                    [(mean * common).ln(), ((1.0 - mean) * common).ln()]
                } else {
                    [0.0, 0.0]
                }
            }
            FamilyKind::Weibull => {
                let m = self.sum_ln / self.n;
                let sd =
                    (self.xs.iter().map(|x| (x.ln() - m).powi(2)).sum::<f64>() / self.n).sqrt();
                let shape = 1.2825 / sd.max(1e-12);
                let scale = (m + 0.5772 / shape).exp();
                [shape.ln(), scale.ln()]
            }
            FamilyKind::Lognormal => {
                // moment matching on the raw scale, deliberately not the MLE
                let s2 = (1.0 + var / (mean * mean)).ln();
                [mean.ln() - s2 / 2.0, 0.5 * s2.ln()]
            }
        }
    }

    fn value(&self, t: [f64; 2]) -> f64 {
        match self.distribution(t) {
            Ok(Distribution::Beta { alpha, beta }) => {
                (alpha - 1.0) * self.sum_ln + (beta - 1.0) * self.sum_ln1m
                    - self.n * ln_beta(alpha, beta)
            }
            Ok(d) => d.log_likelihood(self.xs),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Gradient and Hessian in unconstrained coordinates.
    fn derivatives(&self, t: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
        let n = self.n;
        match self.family {
            FamilyKind::Beta => {
                let (a, b) = (t[0].exp(), t[1].exp());
                let ga = self.sum_ln - n * (digamma(a) - digamma(a + b));
                let gb = self.sum_ln1m - n * (digamma(b) - digamma(a + b));
                let t_ab = trigamma(a + b);
                let haa = -n * (trigamma(a) - t_ab);
                let hbb = -n * (trigamma(b) - t_ab);
                let hab = n * t_ab;
                log_chain([a, b], [ga, gb], [[haa, hab], [hab, hbb]])
            }
            FamilyKind::Weibull => {
                let (k, lam) = (t[0].exp(), t[1].exp());
                let (mut a0, mut a1, mut a2, mut sum_l) = (0.0, 0.0, 0.0, 0.0);
                for &x in self.xs {
                    let l = (x / lam).ln();
                    let zk = (k * l).exp();
                    a0 += zk;
                    a1 += zk * l;
                    a2 += zk * l * l;
                    sum_l += l;
                }
                let gk = n / k + sum_l - a1;
                let gl = k / lam * (a0 - n);
                let hkk = -n / (k * k) - a2;
                let hll = k / (lam * lam) * (n - (k + 1.0) * a0);
                let hkl = (a0 - n) / lam + k * a1 / lam;
                log_chain([k, lam], [gk, gl], [[hkk, hkl], [hkl, hll]])
            }
            FamilyKind::Lognormal => {
                let (mu, s) = (t[0], t[1].exp());
                let (mut s1, mut s2) = (0.0, 0.0);
                for &x in self.xs {
                    let d = x.ln() - mu;
                    s1 += d;
                    s2 += d * d;
                }
                let gmu = s1 / (s * s);
                let gs = -n / s + s2 / (s * s * s);
                let hmm = -n / (s * s);
                let hss = n / (s * s) - 3.0 * s2 / (s * s * s * s);
                let hms = -2.0 * s1 / (s * s * s);
                // only the second coordinate is logged
                let g = [gmu, s * gs];
                let h = [[hmm, s * hms], [s * hms, s * s * hss + s * gs]];
                (g, h)
            }
        }
    }
}

// Chain rule for u = ln p on both coordinates.
fn log_chain(p: [f64; 2], g: [f64; 2], h: [[f64; 2]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let gu = [p[0] * g[0], p[1] * g[1]];
    let hu = [
        [p[0] * p[0] * h[0][0] + p[0] * g[0], p[0] * p[1] * h[0][1]],
        [p[0] * p[1] * h[1][0], p[1] * p[1] * h[1][1] + p[1] * g[1]],
    ];
    (gu, hu)
}

struct Outcome {
    theta: [f64; 2],
    converged: bool,
    iterations: usize,
}

fn newton_maximize(obj: &Objective<'_>, start: [f64; 2]) -> Outcome {
    let mut theta = start;
    let mut value = obj.value(theta);
    if !value.is_finite() {
        theta = [0.0, 0.0];
        value = obj.value(theta);
    }
    for iter in 1..=MAX_ITERATIONS {
        let (g, h) = obj.derivatives(theta);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let newton = h[0][0] < 0.0 && det > 0.0;
        let step = if newton {
            // -H^{-1} g
            [
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
            ]
        } else {
            let norm = (g[0] * g[0] + g[1] * g[1]).sqrt().max(1.0);
            [g[0] / norm, g[1] / norm]
        };

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = [theta[0] + t * step[0], theta[1] + t * step[1]];
            let v = obj.value(cand);
            if v.is_finite() && v >= value {
                accepted = Some((cand, v));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, v)) => {
                let gain = v - value;
                theta = cand;
                value = v;
                if newton && gain.abs() < LOGLIK_TOL {
                    return Outcome {
                        theta,
                        converged: true,
                        iterations: iter,
                    };
                }
            }
            // no ascent along a Newton direction: stationary to machine precision
            None => {
                return Outcome {
                    theta,
                    converged: newton,
                    iterations: iter,
                }
            }
        }
    }
    Outcome {
        theta,
        converged: false,
        iterations: MAX_ITERATIONS,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ic_identities() {
        let ic = information_criteria(0.0, 2, 1);
        assert_eq!((ic.aic, ic.bic), (4.0, 0.0));
        assert_abs_diff_eq!(
            information_criteria(53.63, 2, 75).aic,
            -103.26,
            epsilon = 1e-9
        );
    }

    #[test]
    fn trigamma_known_values() {
        // psi1(1) = pi^2/6, psi1(1/2) = pi^2/2
        assert_abs_diff_eq!(trigamma(1.0), PI * PI / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trigamma(0.5), PI * PI / 2.0, epsilon = 1e-12);
        // finite difference of digamma
        let x = 3.7;
        let fd = (digamma(x + 1e-5) - digamma(x - 1e-5)) / 2e-5;
        assert_abs_diff_eq!(trigamma(x), fd, epsilon = 1e-7);
    }

    #[test]
    fn cdf_closed_forms() {
        let u = Distribution::beta(1.0, 1.0).unwrap();
        for x in [0.0, 0.1, 0.5, 0.93, 1.0] {
            assert_abs_diff_eq!(u.cdf(x), x, epsilon = 1e-12);
        }
        let ln = Distribution::lognormal(0.3, 0.7).unwrap();
        assert_abs_diff_eq!(ln.cdf(0.3f64.exp()), 0.5, epsilon = 1e-15);
        let w = Distribution::weibull(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(w.cdf(2.0), 1.0 - (-2.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let dists = [
            Distribution::beta(2.0, 5.0).unwrap(),
            Distribution::weibull(1.7, 0.4).unwrap(),
            Distribution::lognormal(-0.5, 0.3).unwrap(),
        ];
        for d in dists {
            for p in [0.01, 0.2, 0.5, 0.77, 0.99] {
                assert_abs_diff_eq!(d.cdf(d.quantile(p)), p, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn invalid_params() {
        assert!(Distribution::beta(0.0, 1.0).is_err());
        assert!(Distribution::weibull(1.0, -1.0).is_err());
        assert!(Distribution::lognormal(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn fit_errors() {
        assert_eq!(
            fit_mle(&[0.5; 7], FamilyKind::Beta),
            Err(DistFitError::TooFewSamples(7))
        );
        assert_eq!(
            fit_mle(&[0.5; 10], FamilyKind::Weibull),
            Err(DistFitError::Degenerate)
        );
        assert_eq!(
            fit_mle(&[-0.2; 10], FamilyKind::Lognormal),
            Err(DistFitError::Degenerate)
        );
    }

    #[test]
    fn boundary_samples_are_clamped() {
        let xs = [0.0, 1.0, 0.3, 0.5, 0.6, 0.2, 0.9, 0.4];
        let fit = fit_mle(&xs, FamilyKind::Beta).unwrap();
        assert!(fit.converged);
        assert!(fit.loglik.is_finite());
        let pre = preprocess(&xs, FamilyKind::Beta).unwrap();
        assert_eq!(pre[0], EPSILON);
        assert_eq!(pre[1], 1.0 - EPSILON);
    }

    fn fake(family: FamilyKind, aic: f64, loglik: f64, converged: bool) -> FitResult {
        FitResult {
            family,
            params: BTreeMap::new(),
            loglik,
            aic,
            bic: 0.0,
            n: 100,
            converged,
            iterations: 1,
        }
    }

    #[test]
    fn selection_rules() {
        let fits = vec![
            fake(FamilyKind::Beta, -88.56, 46.28, true),
            fake(FamilyKind::Weibull, -85.04, 44.52, true),
            fake(FamilyKind::Lognormal, -103.26, 53.63, true),
        ];
        assert_eq!(select_best(&fits).unwrap().family, FamilyKind::Lognormal);
        assert_eq!(select_best(&fits[..1]).unwrap().family, FamilyKind::Beta);

        let tied = vec![
            fake(FamilyKind::Lognormal, -10.0, 7.0, true),
            fake(FamilyKind::Weibull, -10.0, 7.0, true),
            fake(FamilyKind::Beta, -10.0, 6.0, true),
        ];
        assert_eq!(select_best(&tied).unwrap().family, FamilyKind::Weibull);

        let none = vec![fake(FamilyKind::Beta, -1.0, 1.0, false)];
        assert_eq!(select_best(&none), Err(DistFitError::NoConvergedFit(1)));
    }

    #[test]
    fn table_layout() {
        let fits = vec![
            fake(FamilyKind::Beta, -88.56, 46.28, true),
            fake(FamilyKind::Lognormal, -103.26, 53.63, true),
        ];
        let csv = fits_table_csv(&fits);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "metric,BETA,WEIBULL,LOGNORMAL");
        assert_eq!(lines[1], "Likelihood,46.28,,53.63");
        assert_eq!(lines[2], "AIC,-88.56,,-103.26");
    }

    #[test]
    fn fit_json_shape() {
        let xs: Vec<f64> = (1..=20).map(|i| i as f64 / 21.0).collect();
        let fit = fit_mle(&xs, FamilyKind::Lognormal).unwrap();
        let v: serde_json::Value = serde_json::to_value(&fit).unwrap();
        assert_eq!(v["family"], "LOGNORMAL");
        assert!(v["params"]["log_mean"].is_number());
        assert!(v["params"]["log_sd"].is_number());
        for key in ["loglik", "aic", "bic", "n", "converged"] {
            assert!(!v[key].is_null(), "{key}");
        }
    }
}
