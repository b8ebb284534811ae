//! Consensus-latency distribution: Gamma MLE fit, KS goodness of fit,
//! sampling, and the benchmark parameter tables measured on a Hyperledger
//! Fabric v1.3 deployment.

use crate::error::{Error, Result};
use crate::numerics::reg_lower_gamma;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Shape/rate parameters of the consensus-latency Gamma distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl GammaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<GammaParams> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!(
                "Gamma parameters must be positive, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(GammaParams { alpha, beta })
    }

    pub fn mean(&self) -> f64 {
        self.alpha / self.beta
    }

    pub fn sd(&self) -> f64 {
        self.alpha.sqrt() / self.beta
    }

    pub fn skewness(&self) -> f64 {
        2.0 / self.alpha.sqrt()
    }

    /// CDF F(x) = gamma(alpha, beta x) / Gamma(alpha).
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            reg_lower_gamma(self.alpha, self.beta * x)
        }
    }
}

/// A sequence of measured consensus latencies (seconds).
#[derive(Clone, Debug)]
pub struct LatencyTrace {
    samples: Vec<f64>,
}

impl LatencyTrace {
    pub fn new(samples: Vec<f64>) -> Result<LatencyTrace> {
        if samples.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a trace needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for &s in &samples {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Domain(format!(
                    "latency samples must be positive and finite, got {s}"
                )));
            }
        }
        Ok(LatencyTrace { samples })
    }

    /// Parse the plain-text trace format: one positive decimal per line,
    /// blank lines ignored.
    pub fn parse(text: &str) -> Result<LatencyTrace> {
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                Error::Domain(format!("line {}: not a number: {line:?}", i + 1))
            })?;
            samples.push(v);
        }
        LatencyTrace::new(samples)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// Closed-form Gamma MLE: with A = ln(mean) - mean(ln x_i),
/// alpha = (1 + sqrt(1 + 4A/3)) / (4A) and beta = alpha / mean.
pub fn fit_gamma(trace: &LatencyTrace) -> Result<GammaParams> {
    let n = trace.samples.len() as f64;
    let mean = trace.samples.iter().sum::<f64>() / n;
    let mean_ln = trace.samples.iter().map(|x| x.ln()).sum::<f64>() / n;
    let a = mean.ln() - mean_ln;
    if a <= 1e-12 {
        return Err(Error::DegenerateTrace(format!(
            "log-moment gap A = {a:e} is not positive; samples are (near) constant"
        )));
    }
    let alpha = (1.0 + (1.0 + 4.0 * a / 3.0).sqrt()) / (4.0 * a);
    GammaParams::new(alpha, alpha / mean)
}

/// Two-sided Kolmogorov-Smirnov statistic of the trace against the Gamma CDF.
pub fn ks_statistic(trace: &LatencyTrace, params: &GammaParams) -> Result<f64> {
    let mut sorted = trace.samples.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = params.cdf(x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi.abs()).max(lo.abs());
    }
    Ok(d)
}

/// KS critical value at significance 0.01 for N = 1000 samples.
pub const KS_CRITICAL_1000: f64 = 0.0515;

/// One Gamma draw from the caller's stream.
pub fn sample_latency<R: Rng + ?Sized>(params: &GammaParams, rng: &mut R) -> f64 {
    // rand_distr uses shape/scale
    let g = Gamma::new(params.alpha, 1.0 / params.beta).expect("validated parameters");
    let mut x = g.sample(rng);
    // Gamma(shape < 1) can underflow to exactly 0; the support is (0, inf)
    while x <= 0.0 {
        x = g.sample(rng);
    }
    x
}

/// Which ordering/transport knob a benchmark table row varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Knob {
    /// Target successful-transmission probability (block size 20, timeout 3 s).
    TargetStp,
    /// Ordering block size in transactions (zeta 0.6, timeout 3 s).
    BlockSize,
    /// Ordering timeout in seconds (zeta 0.6, block size 20).
    Timeout,
}

impl Knob {
    pub fn name(&self) -> &'static str {
        match self {
            Knob::TargetStp => "target_stp",
            Knob::BlockSize => "block_size",
            Knob::Timeout => "timeout",
        }
    }

    pub fn parse(s: &str) -> Result<Knob> {
        match s {
            "target_stp" => Ok(Knob::TargetStp),
            "block_size" => Ok(Knob::BlockSize),
            "timeout" => Ok(Knob::Timeout),
            _ => Err(Error::Domain(format!(
                "unknown knob {s:?}; expected target_stp, block_size or timeout"
            ))),
        }
    }
}

/// One row of the benchmark tables: fitted (alpha, beta) plus the reported
/// sample statistics for a single knob setting.
#[derive(Clone, Copy, Debug)]
pub struct HlfParamRow {
    pub knob: Knob,
    pub knob_value: f64,
    pub alpha: f64,
    pub beta: f64,
    pub avg_latency: f64,
    pub sd: f64,
    pub skewness: f64,
    pub ks_statistic: f64,
}

impl HlfParamRow {
    pub fn gamma(&self) -> GammaParams {
        GammaParams {
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

const fn row(
    knob: Knob,
    knob_value: f64,
    alpha: f64,
    beta: f64,
    avg_latency: f64,
    sd: f64,
    skewness: f64,
    ks_statistic: f64,
) -> HlfParamRow {
    HlfParamRow {
        knob,
        knob_value,
        alpha,
        beta,
        avg_latency,
        sd,
        skewness,
        ks_statistic,
    }
}

// Benchmark rows, averaged over five runs of 1000 committed transactions on
// an HLF v1.3 testbed; (alpha, beta) are the per-run MLE estimates averaged,
// so alpha/beta need not equal avg_latency exactly. Values stored verbatim,
// no smoothing.
pub const TABLE_TARGET_STP: [HlfParamRow; 8] = [
    row(Knob::TargetStp, 0.3, 5.64, 3.01, 2.42, 0.95, 0.093, 0.0732),
    row(Knob::TargetStp, 0.4, 5.94, 2.45, 2.42, 0.92, 0.086, 0.0623),
    row(Knob::TargetStp, 0.5, 5.39, 2.85, 2.17, 0.87, 0.095, 0.0506),
    row(Knob::TargetStp, 0.6, 5.42, 2.84, 1.90, 0.76, 0.097, 0.0504),
    row(Knob::TargetStp, 0.7, 7.18, 3.73, 1.92, 0.67, 0.071, 0.0462),
    row(Knob::TargetStp, 0.8, 7.71, 4.12, 1.87, 0.63, 0.066, 0.0423),
    row(Knob::TargetStp, 0.9, 7.50, 4.35, 1.73, 0.60, 0.068, 0.0369),
    row(Knob::TargetStp, 1.0, 6.57, 3.82, 1.76, 0.76, 0.085, 0.0532),
];

pub const TABLE_BLOCK_SIZE: [HlfParamRow; 8] = [
    row(Knob::BlockSize, 3.0, 1.62, 0.30, 5.71, 4.03, 0.342, 0.0831),
    row(Knob::BlockSize, 5.0, 2.90, 1.38, 2.16, 1.25, 0.182, 0.0333),
    row(Knob::BlockSize, 7.0, 4.35, 2.58, 1.70, 0.85, 0.121, 0.0498),
    row(Knob::BlockSize, 10.0, 5.24, 3.30, 1.59, 0.74, 0.099, 0.0495),
    row(Knob::BlockSize, 12.0, 5.81, 3.66, 1.58, 0.63, 0.074, 0.0382),
    row(Knob::BlockSize, 15.0, 6.95, 3.85, 1.80, 0.65, 0.074, 0.0381),
    row(Knob::BlockSize, 20.0, 5.42, 2.84, 1.90, 0.76, 0.097, 0.0504),
    row(Knob::BlockSize, 25.0, 4.85, 2.36, 2.05, 0.86, 0.107, 0.0604),
];

pub const TABLE_TIMEOUT: [HlfParamRow; 11] = [
    row(Knob::Timeout, 0.5, 2.74, 0.89, 3.08, 2.00, 0.194, 0.0420),
    row(Knob::Timeout, 0.6, 4.26, 2.04, 2.10, 1.07, 0.122, 0.0452),
    row(Knob::Timeout, 0.7, 8.28, 5.40, 1.53, 0.54, 0.061, 0.0494),
    row(Knob::Timeout, 0.75, 6.78, 5.19, 1.30, 0.47, 0.076, 0.0489),
    row(Knob::Timeout, 1.0, 6.96, 4.65, 1.50, 0.54, 0.075, 0.0588),
    row(Knob::Timeout, 1.25, 9.62, 5.37, 1.79, 0.55, 0.053, 0.0446),
    row(Knob::Timeout, 1.5, 9.86, 5.20, 1.89, 0.56, 0.052, 0.0603),
    row(Knob::Timeout, 2.0, 6.79, 3.62, 1.87, 0.66, 0.075, 0.0535),
    row(Knob::Timeout, 2.5, 5.64, 3.01, 1.97, 0.72, 0.091, 0.0497),
    row(Knob::Timeout, 3.0, 5.42, 2.84, 1.89, 0.76, 0.097, 0.0504),
    row(Knob::Timeout, 3.5, 5.39, 2.85, 1.89, 0.75, 0.091, 0.0503),
];

pub fn table_for(knob: Knob) -> &'static [HlfParamRow] {
    match knob {
        Knob::TargetStp => &TABLE_TARGET_STP,
        Knob::BlockSize => &TABLE_BLOCK_SIZE,
        Knob::Timeout => &TABLE_TIMEOUT,
    }
}

/// Exact-match row lookup (no interpolation).
pub fn lookup_params(knob: Knob, value: f64) -> Result<HlfParamRow> {
    let table = table_for(knob);
    for r in table {
        if (r.knob_value - value).abs() <= 1e-9 {
            return Ok(*r);
        }
    }
    let available = table
        .iter()
        .map(|r| r.knob_value.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    Err(Error::RowNotFound {
        knob: knob.name().into(),
        value,
        available,
    })
}

/// Report |alpha/beta - avg_latency| for a row (informational; several rows
/// disagree because per-run estimates were averaged).
pub fn mean_discrepancy(row: &HlfParamRow) -> f64 {
    (row.alpha / row.beta - row.avg_latency).abs()
}
