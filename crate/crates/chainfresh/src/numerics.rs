//! Scalar special functions used by the closed-form freshness metrics.

use crate::error::{Error, Result};

/// Truncation policy for the infinite series evaluations.
#[derive(Clone, Copy, Debug)]
pub struct SeriesControl {
    /// Stop once a term's relative contribution stays below this.
    pub rel_tolerance: f64,
    /// Hard cap on the number of terms before reporting non-convergence.
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            rel_tolerance: 1e-12,
            max_terms: 500,
        }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::Domain("rel_tolerance must be > 0".into()));
        }
        if self.max_terms == 0 {
            return Err(Error::Domain("max_terms must be >= 1".into()));
        }
        Ok(())
    }
}

/// Natural log of the Gamma function for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection keeps the shifted sum well conditioned near 0
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    for (i, &g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma P(a, x) = gamma(a,x) / Gamma(a).
pub(crate) fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series_p(a, x)
    } else {
        1.0 - gamma_cf_q(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a,x) / Gamma(a).
pub(crate) fn reg_upper_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series_p(a, x)
    } else {
        gamma_cf_q(a, x)
    }
}

// series for P(a,x), converges fast for x < a+1
fn gamma_series_p(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..1_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma_unchecked(a)).exp()
}

// Lentz continued fraction for Q(a,x), converges fast for x > a+1
fn gamma_cf_q(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (a * x.ln() - x - ln_gamma_unchecked(a)).exp()
}

/// Lower incomplete gamma gamma(a, x) for a > 0, x >= 0.
pub fn lower_inc_gamma(a: f64, x: f64) -> Result<f64> {
    check_inc_gamma_args(a, x)?;
    Ok(reg_lower_gamma(a, x) * ln_gamma_unchecked(a).exp())
}

/// Upper incomplete gamma Gamma(a, x) = Gamma(a) - gamma(a, x).
pub fn upper_inc_gamma(a: f64, x: f64) -> Result<f64> {
    check_inc_gamma_args(a, x)?;
    Ok(reg_upper_gamma(a, x) * ln_gamma_unchecked(a).exp())
}

fn check_inc_gamma_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!(
            "incomplete gamma requires a > 0, got a = {a}"
        )));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "incomplete gamma requires x >= 0, got x = {x}"
        )));
    }
    Ok(())
}

/// Beta function B(a, b) via ln-gamma differences (no overflow for large args).
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "beta_fn requires a, b > 0, got ({a}, {b})"
        )));
    }
    Ok((ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)).exp())
}

/// Confluent hypergeometric 1F1(a; b; z) by power series.
///
/// Negative z is routed through the Kummer transform
/// 1F1(a;b;z) = e^z 1F1(b-a; b; -z) so the evaluated series has positive
/// argument, avoiding alternating-term cancellation.
pub fn kummer_1f1(a: f64, b: f64, z: f64, ctl: SeriesControl) -> Result<f64> {
    ctl.validate()?;
    if b <= 0.0 && (b - b.round()).abs() < 1e-12 {
        return Err(Error::Domain(format!(
            "kummer_1f1 undefined for non-positive integer b = {b}"
        )));
    }
    if z < 0.0 {
        return Ok(z.exp() * kummer_series(b - a, b, -z, ctl)?);
    }
    kummer_series(a, b, z, ctl)
}

fn kummer_series(a: f64, b: f64, z: f64, ctl: SeriesControl) -> Result<f64> {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut small_streak = 0u32;
    for j in 0..ctl.max_terms {
        let jf = j as f64;
        term *= (a + jf) * z / ((b + jf) * (jf + 1.0));
        sum += term;
        if term.abs() <= ctl.rel_tolerance * sum.abs().max(1.0) {
            small_streak += 1;
            if small_streak >= 3 {
                return Ok(sum);
            }
        } else {
            small_streak = 0;
        }
    }
    Err(Error::Convergence {
        max_terms: ctl.max_terms,
        last_term: term.abs(),
        hint: "increase max_terms or reduce |z|".into(),
    })
}
