//! Closed-form freshness metrics of the update process: time-average age,
//! age-violation probability (series, integer-shape finite form, integer
//! bounds, quadrature oracle) and peak-age violation probability.
//!
//! The model: updates are generated as a Poisson process, survive transmission
//! independently (effective arrival rate `rho`), take a constant transmission
//! latency `t_tx`, and commit after a Gamma(alpha, beta) consensus latency.
//! A version check discards updates that arrive before the previous commit.

use crate::dd::{kummer_pos_dd, ln_gamma_dd, lower_gamma_dd, Dd};
use crate::error::{Error, Result};
use crate::latency::GammaParams;
use crate::numerics::{ln_gamma_unchecked, reg_lower_gamma, reg_upper_gamma, SeriesControl};
use crate::quad::integrate;

/// Everything the closed forms consume: consensus-latency distribution,
/// effective arrival rate (1/s) and constant transmission latency (s).
#[derive(Clone, Copy, Debug)]
pub struct AoiModel {
    pub gamma: GammaParams,
    pub rho: f64,
    pub t_tx: f64,
}

impl AoiModel {
    pub fn new(gamma: GammaParams, rho: f64, t_tx: f64) -> Result<AoiModel> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Domain(format!("rho must be positive, got {rho}")));
        }
        // t_tx may be +inf (target STP of 1 forces rate 0)
        if !(t_tx >= 0.0) {
            return Err(Error::Domain(format!(
                "t_tx must be non-negative, got {t_tx}"
            )));
        }
        Ok(AoiModel { gamma, rho, t_tx })
    }

    /// Mean update interval E[T_k] = alpha/beta + 1/rho.
    pub fn mean_cycle(&self) -> f64 {
        self.gamma.alpha / self.gamma.beta + 1.0 / self.rho
    }
}

/// An age target v (seconds). The closed forms depend on it only through the
/// slack t_v = max(0, v - t_tx).
#[derive(Clone, Copy, Debug)]
pub struct TargetAoi {
    pub v: f64,
}

impl TargetAoi {
    pub fn new(v: f64) -> Result<TargetAoi> {
        if !(v >= 0.0) {
            return Err(Error::Domain(format!("target age must be >= 0, got {v}")));
        }
        Ok(TargetAoi { v })
    }

    pub fn slack(&self, t_tx: f64) -> f64 {
        (self.v - t_tx).max(0.0)
    }
}

/// How a violation probability was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Series,
    Quadrature,
}

/// A probability with its pre-clamp raw value and evaluation route.
#[derive(Clone, Copy, Debug)]
pub struct Violation {
    pub value: f64,
    pub raw: f64,
    pub method: Method,
}

impl Violation {
    pub fn clamped(&self) -> bool {
        self.value != self.raw
    }
}

fn clamp01(raw: f64, method: Method) -> Violation {
    Violation {
        value: raw.clamp(0.0, 1.0),
        raw,
        method,
    }
}

/// Time-average age of the stationary process:
/// rho*beta/(2(alpha rho + beta)) * (2/rho^2 + 2 alpha/(rho beta)
/// + (alpha^2+alpha)/beta^2) + alpha/beta + t_tx.
pub fn average_aoi(model: &AoiModel) -> f64 {
    let a = model.gamma.alpha;
    let b = model.gamma.beta;
    let r = model.rho;
    r * b / (2.0 * (a * r + b)) * (2.0 / (r * r) + 2.0 * a / (r * b) + (a * a + a) / (b * b))
        + a / b
        + model.t_tx
}

// ---------------------------------------------------------------------------
// survival function of the effective inter-generation time X + Exp(rho)
// ---------------------------------------------------------------------------

// ln gamma(a, x) without underflow for tiny a*ln(x) contributions
fn ln_lower_inc_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x > 0.0);
    if x < a + 1.0 {
        // gamma(a,x) = x^a e^-x sum_j x^j / (a..(a+j))
        let mut denom = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..1_000 {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        a * x.ln() - x + sum.ln()
    } else {
        let q = reg_upper_gamma(a, x);
        ln_gamma_unchecked(a) + (-q).ln_1p()
    }
}

/// P[X + T_int >= u]: survival function of one consensus latency plus one
/// exponential inter-arrival gap. This is the distribution of the effective
/// inter-generation time, reused by the quadrature oracle and by simulator
/// goodness-of-fit checks.
pub fn interarrival_sf(model: &AoiModel, u: f64) -> f64 {
    if u <= 0.0 {
        return 1.0;
    }
    let a = model.gamma.alpha;
    let b = model.gamma.beta;
    let r = model.rho;
    let q = reg_upper_gamma(a, b * u);
    let delta = b - r;
    // cross term: P[X <= u < X + T_int] = e^{-r u} b^a / Gamma(a)
    //             * int_0^u w^{a-1} e^{-(b-r) w} dw
    let lg = ln_gamma_unchecked(a);
    let cross = if delta.abs() < 1e-9 * b {
        (a * (b * u).ln() - r * u - a.ln() - lg).exp()
    } else if delta > 0.0 {
        let lnc = -r * u + a * (b / delta).ln() + ln_lower_inc_gamma(a, delta * u) - lg;
        lnc.exp()
    } else {
        // sum_j (r-b)^j u^{a+j} / (j! (a+j)), evaluated in log space because
        // it grows like e^{(r-b)u}
        let g = -delta; // r - b > 0
        let mut lnt = a * u.ln() - a.ln();
        let mut peak = lnt;
        let mut terms = vec![lnt];
        for j in 0..100_000 {
            let jf = j as f64;
            lnt += (g * u).ln() - (jf + 1.0).ln() + ((a + jf) / (a + jf + 1.0)).ln();
            terms.push(lnt);
            peak = peak.max(lnt);
            if jf > g * u && lnt < peak - 45.0 {
                break;
            }
        }
        let s: f64 = terms.iter().map(|t| (t - peak).exp()).sum();
        (-r * u + a * b.ln() - lg + peak + s.ln()).exp()
    };
    (q + cross).clamp(0.0, 1.0)
}

/// Violation probability by numerical integration of the renewal-reward
/// expectation (the oracle route; absolute error <= 1e-7).
pub fn aoi_violation_quadrature(model: &AoiModel, target: &TargetAoi) -> Result<f64> {
    let tv = target.slack(model.t_tx);
    if tv <= 0.0 {
        return Ok(1.0);
    }
    let a = model.gamma.alpha;
    let b = model.gamma.beta;
    let etk = model.mean_cycle();
    let f_tv = reg_lower_gamma(a, b * tv);

    // E[time above target per cycle] =
    //   int_0^inf P[X + T_int >= u] (F_X(t_v) - F_X((t_v - u)^+)) du
    //   + E[T_k] Q(alpha, beta t_v)
    let (part1, e1) = integrate(
        |u| interarrival_sf(model, u) * (f_tv - reg_lower_gamma(a, b * (tv - u).max(0.0))),
        0.0,
        tv,
        2e-9,
    )?;
    // beyond u = t_v the weight is constant F_X(t_v)
    let mut hi = tv + (a + 10.0 * a.sqrt()) / b + 40.0 / model.rho;
    let mut grow = 0;
    while interarrival_sf(model, hi) > 1e-13 {
        hi *= 1.5;
        grow += 1;
        if grow > 200 {
            return Err(Error::Numeric(
                "quadrature tail did not decay; achieved error unknown".into(),
            ));
        }
    }
    let (part2, e2) = integrate(|u| interarrival_sf(model, u), tv, hi, 2e-9)?;
    let err = (e1 + e2 * f_tv) / etk;
    if err > 1e-7 {
        return Err(Error::Numeric(format!(
            "quadrature error estimate {err:e} exceeds 1e-7"
        )));
    }
    let num = part1 + f_tv * part2 + etk * reg_upper_gamma(a, b * tv);
    Ok((num / etk).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// series evaluation of the violation probability (double-double)
// ---------------------------------------------------------------------------

// shared per-index factors of the series: with s the combined inner index,
//   b_s = B(alpha + s + 2, alpha)
//   f_s = 1F1(alpha; 2 alpha + s + 2; -beta t_v)
struct SharedFactors {
    alpha: Dd,
    x: Dd,  // beta * t_v
    ex: Dd, // e^{-beta t_v}
    b: Vec<Dd>,
    f: Vec<Dd>,
}

impl SharedFactors {
    fn new(alpha: Dd, x: Dd) -> SharedFactors {
        let two_a = alpha.mul_f64(2.0);
        let b0 = ln_gamma_dd(alpha.add(Dd::from_f64(2.0)))
            .add(ln_gamma_dd(alpha))
            .sub(ln_gamma_dd(two_a.add(Dd::from_f64(2.0))))
            .exp();
        SharedFactors {
            alpha,
            x,
            ex: (-x).exp(),
            b: vec![b0],
            f: Vec::new(),
        }
    }

    fn b(&mut self, s: usize) -> Dd {
        while self.b.len() <= s {
            let k = self.b.len() as f64; // extending from index k-1 to k
            let prev = self.b[self.b.len() - 1];
            // B(x+1, a) = B(x, a) * x / (x + a), here x = alpha + k + 1
            let xx = self.alpha.add(Dd::from_f64(k + 1.0));
            let next = prev.mul(xx).div(xx.add(self.alpha));
            self.b.push(next);
        }
        self.b[s]
    }

    fn f(&mut self, s: usize) -> Dd {
        while self.f.len() <= s {
            let k = self.f.len() as f64;
            // Kummer transform: 1F1(a; b; -x) = e^{-x} 1F1(b - a; b; x)
            let b = self.alpha.mul_f64(2.0).add(Dd::from_f64(k + 2.0));
            let val = self
                .ex
                .mul(kummer_pos_dd(self.alpha.add(Dd::from_f64(k + 2.0)), b, self.x));
            self.f.push(val);
        }
        self.f[s]
    }
}

struct SeriesAccum {
    max_mag: f64,
}

impl SeriesAccum {
    fn new() -> SeriesAccum {
        SeriesAccum { max_mag: 1.0 }
    }
    fn note(&mut self, t: Dd) {
        let m = t.hi.abs();
        if m > self.max_mag {
            self.max_mag = m;
        }
    }
}

/// Raw series evaluation of the violation probability (no clamping, no
/// fallback). Returns the value and an error estimate that accounts for the
/// cancellation observed while summing.
pub fn aoi_violation_series(
    model: &AoiModel,
    target: &TargetAoi,
    ctl: SeriesControl,
) -> Result<(f64, f64)> {
    ctl.validate()?;
    let tv = target.slack(model.t_tx);
    if tv <= 0.0 {
        return Ok((1.0, 0.0));
    }
    let alpha = model.gamma.alpha;
    let beta = model.gamma.beta;
    let rho = model.rho;
    if beta >= 2.0 * rho {
        // outer expansion in (rho - beta)^n / rho^n has ratio |1 - beta/rho|
        return Err(Error::Convergence {
            max_terms: 0,
            last_term: f64::INFINITY,
            hint: format!(
                "outer series diverges for beta >= 2 rho (beta = {beta}, rho = {rho}); \
                 use the quadrature oracle"
            ),
        });
    }

    let a = Dd::from_f64(alpha);
    let b = Dd::from_f64(beta);
    let r = Dd::from_f64(rho);
    let t = Dd::from_f64(tv);
    let x = b.mul(t); // beta t_v
    let lga = ln_gamma_dd(a);
    let gamma_a = lga.exp();
    let glow = lower_gamma_dd(a, x); // gamma(alpha, beta t_v)
    let q_reg = gamma_a.sub(glow).div(gamma_a);
    let etk = a.div(b).add(r.recip());
    let ln_b = b.ln();
    let ln_r = r.ln();
    let ln_t = t.ln();

    let mut shared = SharedFactors::new(a, x);
    let mut acc = SeriesAccum::new();
    let rtol = ctl.rel_tolerance;

    // guards: the unimodal inner/outer terms peak near these indices, so the
    // streak-based stop is only allowed past them
    let inner_peak = (rho * tv).ceil() as usize + 2;
    let outer_peak = ((rho - beta).abs() * tv).ceil() as usize + 2;
    let i23_peak = (beta * tv).ceil() as usize + 2;

    // I2 = alpha gamma(a, x) / (beta Gamma(a))
    //      - sum_n (-1)^n beta^{2a+n} t^{2a+n+1} / (n! (a+n+1) Gamma(a)^2)
    //              * b_n * f_n
    let inv_g2 = lga.mul_f64(-2.0).exp();
    let mut i2 = a.mul(glow).div(b.mul(gamma_a));
    {
        let mut u = ln_b
            .mul(a.mul_f64(2.0))
            .add(ln_t.mul(a.mul_f64(2.0).add(Dd::ONE)))
            .exp(); // beta^{2a} t^{2a+1} / 0!
        let mut sign = 1.0;
        let mut streak = 0;
        let mut n = 0usize;
        loop {
            let term = u
                .mul_f64(sign)
                .mul(shared.b(n))
                .mul(shared.f(n))
                .mul(inv_g2)
                .div(a.add(Dd::from_f64(n as f64 + 1.0)));
            acc.note(term);
            i2 = i2.sub(term);
            if term.hi.abs() <= rtol * i2.hi.abs().max(1e-3) && n >= i23_peak {
                streak += 1;
                if streak >= 3 {
                    break;
                }
            } else {
                streak = 0;
            }
            n += 1;
            if n >= ctl.max_terms {
                return Err(non_convergence(ctl, term.hi.abs()));
            }
            u = u.mul(x).div_f64(n as f64);
            sign = -sign;
        }
    }

    // I3 = -t (beta t)^a / Gamma(a) * B(a, 2) * 1F1(a; a+2; -x)
    //      + t / Gamma(a)^2 * sum_n (-1)^n (beta t)^{2a+n} / (n! (a+n))
    //              * b_n * f_n
    let f_head = shared
        .ex
        .mul(kummer_pos_dd(Dd::from_f64(2.0), a.add(Dd::from_f64(2.0)), x));
    let b_a2 = a.mul(a.add(Dd::ONE)).recip(); // B(alpha, 2)
    let head = t
        .mul(x.powf(a))
        .div(gamma_a)
        .mul(b_a2)
        .mul(f_head);
    let mut i3 = -head;
    {
        let mut u = x.powf(a.mul_f64(2.0)); // (beta t)^{2a} / 0!
        let mut sign = 1.0;
        let mut streak = 0;
        let mut n = 0usize;
        let mut sum = Dd::ZERO;
        loop {
            let term = u
                .mul_f64(sign)
                .mul(shared.b(n))
                .mul(shared.f(n))
                .div(a.add(Dd::from_f64(n as f64)));
            acc.note(term);
            sum = sum.add(term);
            if term.hi.abs() <= rtol * sum.hi.abs().max(1e-3) && n >= i23_peak {
                streak += 1;
                if streak >= 3 {
                    break;
                }
            } else {
                streak = 0;
            }
            n += 1;
            if n >= ctl.max_terms {
                return Err(non_convergence(ctl, term.hi.abs()));
            }
            u = u.mul(x).div_f64(n as f64);
            sign = -sign;
        }
        i3 = i3.add(t.mul(inv_g2).mul(sum));
    }

    // I1 = beta^{2a}/Gamma(a)^2 * sum_n A_n (G_n - S_n) with
    //   A_n = (rho-beta)^n / (n! (a+n) rho^{a+n+1})
    //   G_n = Gamma(a+n+1) beta^{-a} gamma(a, x)
    //   S_n = sum_k (-1)^k rho^{a+n+k+1} t^{2a+n+k+1} / (k! (a+n+k+1))
    //           * b_{n+k} * f_{n+k}
    let mut i1 = Dd::ZERO;
    {
        let pref = ln_b.mul(a.mul_f64(2.0)).sub(lga.mul_f64(2.0)).exp();
        let bneg_glow = ln_b.mul(-a).exp().mul(glow);
        let rb = r.sub(b); // rho - beta, signed
        // A_n and Gamma(a+n+1) overflow/underflow separately for large n, and
        // rho^{a+s+1} t^{2a+s+1} / k! does the same in the inner sum, so only
        // the combined quantities are carried:
        //   c_n = A_n Gamma(a+n+1)            (geometric decay, ratio |1-b/r|)
        //   d_n = A_n rho^{a+n+1} t^{2a+n+1}  (peaks near n = |rho-beta| t)
        //   w_k = d_n (rho t)^k / k!          (peaks near k = rho t)
        let a0 = ln_r.mul(-(a.add(Dd::ONE))).exp().div(a);
        let mut c_n = a0.mul(a).mul(gamma_a); // A_0 Gamma(alpha + 1)
        let mut d_n = a0.mul(
            ln_r.mul(a.add(Dd::ONE))
                .add(ln_t.mul(a.mul_f64(2.0).add(Dd::ONE)))
                .exp(),
        );
        let rt = r.mul(t);
        let mut streak = 0;
        let mut n = 0usize;
        loop {
            // inner alternating sum over k, already scaled by A_n
            let mut s_n = Dd::ZERO;
            {
                let mut w = d_n;
                let mut sign = 1.0;
                let mut kstreak = 0;
                let mut k = 0usize;
                loop {
                    let s = n + k;
                    let term = w
                        .mul_f64(sign)
                        .div(a.add(Dd::from_f64(s as f64 + 1.0)))
                        .mul(shared.b(s))
                        .mul(shared.f(s));
                    acc.note(term.mul(pref));
                    s_n = s_n.add(term);
                    if term.hi.abs() <= rtol * s_n.hi.abs().max(1e-3) && k >= inner_peak {
                        kstreak += 1;
                        if kstreak >= 3 {
                            break;
                        }
                    } else {
                        kstreak = 0;
                    }
                    k += 1;
                    if k >= ctl.max_terms * 4 {
                        return Err(non_convergence(ctl, term.hi.abs()));
                    }
                    w = w.mul(rt).div_f64(k as f64);
                    sign = -sign;
                }
            }
            let term_n = pref.mul(c_n.mul(bneg_glow).sub(s_n));
            acc.note(term_n);
            i1 = i1.add(term_n);
            if term_n.hi.abs() <= rtol * i1.hi.abs().max(1e-3) && n >= outer_peak {
                streak += 1;
                if streak >= 3 {
                    break;
                }
            } else {
                streak = 0;
            }
            n += 1;
            if n >= ctl.max_terms {
                return Err(non_convergence(ctl, term_n.hi.abs()));
            }
            let nf = n as f64;
            let an_dd = a.add(Dd::from_f64(nf));
            // A_{n} / A_{n-1} = (rho-beta)(alpha+n-1) / ((alpha+n) n rho)
            c_n = c_n.mul(rb).mul(an_dd.sub(Dd::ONE)).div(r).div_f64(nf);
            d_n = d_n
                .mul(rb)
                .mul(t)
                .mul(an_dd.sub(Dd::ONE))
                .div(an_dd)
                .div_f64(nf);
        }
    }

    let i4 = etk.mul(q_reg);
    let total = i1.add(i2).add(i3).add(i4).div(etk);
    let value = total.to_f64();
    let err = acc.max_mag * 1e-30 / etk.to_f64() + rtol * 10.0;
    Ok((value, err))
}

fn non_convergence(ctl: SeriesControl, last: f64) -> Error {
    Error::Convergence {
        max_terms: ctl.max_terms,
        last_term: last,
        hint: "series truncation budget exhausted; use the quadrature oracle".into(),
    }
}

/// Violation probability P[age >= v]. Evaluates the closed-form series and
/// falls back to the quadrature oracle when the series diverges, exhausts its
/// term budget, or cannot certify the requested accuracy.
pub fn aoi_violation(model: &AoiModel, target: &TargetAoi, ctl: SeriesControl) -> Result<Violation> {
    match aoi_violation_series(model, target, ctl) {
        Ok((raw, err)) if err <= 1e-7 && (-1e-9..=1.0 + 1e-9).contains(&raw) => {
            Ok(clamp01(raw, Method::Series))
        }
        Ok(_) | Err(Error::Convergence { .. }) => {
            let v = aoi_violation_quadrature(model, target)?;
            Ok(clamp01(v, Method::Quadrature))
        }
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// integer-shape finite form
// ---------------------------------------------------------------------------

// gamma(a, x) for positive integer a and any real x (x may be negative):
// Gamma(a) (1 - e^{-x} sum_{n<a} x^n/n!)
fn lower_gamma_int_dd(a: i64, x: Dd) -> Dd {
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    for n in 1..a {
        term = term.mul(x).div_f64(n as f64);
        sum = sum.add(term);
    }
    let mut gam = Dd::ONE;
    for n in 1..a {
        gam = gam.mul_f64(n as f64);
    }
    gam.mul(Dd::ONE.sub((-x).exp().mul(sum)))
}

/// Finite-sum violation probability, valid when the shape parameter is a
/// positive integer. Errors when beta is within 1e-6 relative of rho (the
/// expression divides by (beta - rho)^{2 alpha}); use the quadrature oracle
/// there.
pub fn aoi_violation_integer(model: &AoiModel, target: &TargetAoi) -> Result<f64> {
    let alpha = model.gamma.alpha;
    let a_round = alpha.round();
    if (alpha - a_round).abs() > 1e-9 || a_round < 1.0 {
        return Err(Error::Domain(format!(
            "integer-shape form requires a positive integer shape, got {alpha}"
        )));
    }
    let a = a_round as i64;
    let beta = model.gamma.beta;
    let rho = model.rho;
    if (beta - rho).abs() / beta <= 1e-6 {
        return Err(Error::Singularity(format!(
            "beta = {beta} too close to rho = {rho}; use the quadrature oracle"
        )));
    }
    let tv = target.slack(model.t_tx);
    if tv <= 0.0 {
        return Ok(1.0);
    }

    let b = Dd::from_f64(beta);
    let r = Dd::from_f64(rho);
    let t = Dd::from_f64(tv);
    let delta = b.sub(r);
    let x = b.mul(t);
    let a_dd = Dd::from_f64(a as f64);
    let denom_rate = a_dd.mul(r).add(b); // alpha rho + beta

    let mut gam_a = Dd::ONE; // Gamma(a) = (a-1)!
    for n in 1..a {
        gam_a = gam_a.mul_f64(n as f64);
    }

    let t1 = b
        .powi(2 * a + 1)
        .mul((-r.mul(t)).exp())
        .mul(lower_gamma_int_dd(a, delta.mul(t)))
        .div(denom_rate)
        .div(delta.powi(2 * a))
        .div(gam_a);

    let glow = lower_gamma_dd(a_dd, x);
    let t2 = gam_a.sub(glow).div(gam_a);

    let ex = (-x).exp();
    let bd = b.div(delta); // (1 - rho/beta)^{-1}
    let mut t3 = Dd::ZERO;
    for m in 0..a {
        // (1 - rho/beta)^{m - a} = (beta/delta)^{a - m}
        let bracket = Dd::ONE.sub(bd.powi(a - m));
        let mut pw = x.powi(a); // (beta t)^{a+k}
        let mut fact = gam_a.mul_f64(a as f64); // Gamma(a + k + 1)
        for k in 0..=m {
            if k > 0 {
                pw = pw.mul(x);
                fact = fact.mul_f64((a + k) as f64);
            }
            t3 = t3.add(pw.mul(ex).div(fact).mul(bracket));
        }
    }
    t3 = t3.mul(r).div(denom_rate);

    Ok(t1.add(t2).add(t3).to_f64().clamp(0.0, 1.0))
}

/// Integer-shape bounds from rounding the shape down/up: (floor bound, ceil
/// bound). A larger shape slows consensus, so the floor gives the lower bound.
/// For integer shape the two coincide.
pub fn aoi_violation_bounds(model: &AoiModel, target: &TargetAoi) -> Result<(f64, f64)> {
    let alpha = model.gamma.alpha;
    let lo = alpha.floor();
    if lo < 1.0 {
        return Err(Error::Domain(format!(
            "shape {alpha} floors to 0; integer bounds need floor(alpha) >= 1"
        )));
    }
    let hi = alpha.ceil();
    let lower = aoi_violation_integer(
        &AoiModel {
            gamma: GammaParams {
                alpha: lo,
                beta: model.gamma.beta,
            },
            ..*model
        },
        target,
    )?;
    if hi == lo {
        return Ok((lower, lower));
    }
    let upper = aoi_violation_integer(
        &AoiModel {
            gamma: GammaParams {
                alpha: hi,
                beta: model.gamma.beta,
            },
            ..*model
        },
        target,
    )?;
    Ok((lower, upper))
}

// ---------------------------------------------------------------------------
// peak-age violation
// ---------------------------------------------------------------------------

/// Raw series evaluation of the peak-age violation probability
/// P[peak age >= v]; returns (value, error estimate).
pub fn paoi_violation_series(
    model: &AoiModel,
    target: &TargetAoi,
    ctl: SeriesControl,
) -> Result<(f64, f64)> {
    ctl.validate()?;
    let tv = target.slack(model.t_tx);
    if tv <= 0.0 {
        return Ok((1.0, 0.0));
    }
    let alpha = model.gamma.alpha;
    let beta = model.gamma.beta;
    let rho = model.rho;

    let a = Dd::from_f64(alpha);
    let b = Dd::from_f64(beta);
    let r = Dd::from_f64(rho);
    let t = Dd::from_f64(tv);
    let lga = ln_gamma_dd(a);
    let pref = b.ln().mul(a.mul_f64(2.0)).sub(lga.mul_f64(2.0)).exp();
    let ert = (-r.mul(t)).exp();
    let rb = r.sub(b);
    let nb = -b;

    // peak guards for the unimodal term profile
    let kpeak = (tv * beta.max((rho - beta).abs())).ceil() as usize + 2;

    let mut acc = SeriesAccum::new();
    let rtol = ctl.rel_tolerance;

    // B(alpha + 1, alpha)
    let mut b_row = ln_gamma_dd(a.add(Dd::ONE))
        .add(lga)
        .sub(ln_gamma_dd(a.mul_f64(2.0).add(Dd::ONE)))
        .exp();
    let mut tp = t.ln().mul(a.mul_f64(2.0)).exp(); // t^{2a} / 0!
    let mut nb_row = Dd::ONE; // (-beta)^n
    let mut rb_row = Dd::ONE; // (rho-beta)^n

    let mut total = Dd::ZERO;
    let mut row_streak = 0;
    let mut n = 0usize;
    loop {
        let an = a.add(Dd::from_f64(n as f64));
        let mut row = Dd::ZERO;
        {
            let mut bk = b_row; // B(alpha+n+1, alpha+k)
            let mut tk = tp; // t^{2a+n+k} / (n! k!)
            let mut nbk = nb_row;
            let mut rbk = rb_row;
            let mut streak = 0;
            let mut k = 0usize;
            loop {
                let term = tk.div(an).mul(bk).mul(nbk.sub(ert.mul(rbk)));
                acc.note(term.mul(pref));
                row = row.add(term);
                if term.hi.abs() * pref.hi <= rtol * 1e-2 && k >= kpeak {
                    streak += 1;
                    if streak >= 3 {
                        break;
                    }
                } else {
                    streak = 0;
                }
                k += 1;
                if k >= ctl.max_terms * 4 {
                    return Err(paoi_non_convergence(ctl, term.hi.abs()));
                }
                // B(., alpha+k+1) = B(., alpha+k) * (alpha+k) / (2alpha+n+k+1)
                let ak = a.add(Dd::from_f64(k as f64 - 1.0));
                bk = bk
                    .mul(ak)
                    .div(a.mul_f64(2.0).add(Dd::from_f64((n + k) as f64)));
                tk = tk.mul(t).div_f64(k as f64);
                nbk = nbk.mul(nb);
                rbk = rbk.mul(rb);
            }
        }
        acc.note(row.mul(pref));
        total = total.add(row);
        if row.hi.abs() * pref.hi <= rtol * 1e-2 && n >= kpeak {
            row_streak += 1;
            if row_streak >= 3 {
                break;
            }
        } else {
            row_streak = 0;
        }
        n += 1;
        if n >= ctl.max_terms * 4 {
            return Err(paoi_non_convergence(ctl, row.hi.abs()));
        }
        // B(alpha+n+1, alpha) -> B(alpha+n+2, alpha)
        let anp = a.add(Dd::from_f64(n as f64));
        b_row = b_row.mul(anp).div(a.mul_f64(2.0).add(Dd::from_f64(n as f64)));
        tp = tp.mul(t).div_f64(n as f64);
        nb_row = nb_row.mul(nb);
        rb_row = rb_row.mul(rb);
    }

    let value = Dd::ONE.sub(pref.mul(total)).to_f64();
    let err = acc.max_mag * 1e-30 + rtol * 10.0;
    Ok((value, err))
}

fn paoi_non_convergence(ctl: SeriesControl, last: f64) -> Error {
    Error::Convergence {
        max_terms: ctl.max_terms,
        last_term: last,
        hint: "peak-age series did not settle; estimate by Monte Carlo of \
               X + X' + Exp(rho) instead"
            .into(),
    }
}

/// Peak-age violation probability P[peak age >= v], clamped with audit.
pub fn paoi_violation(model: &AoiModel, target: &TargetAoi, ctl: SeriesControl) -> Result<Violation> {
    let (raw, err) = paoi_violation_series(model, target, ctl)?;
    if err > 1e-7 || !(-1e-6..=1.0 + 1e-6).contains(&raw) {
        return Err(Error::Convergence {
            max_terms: ctl.max_terms,
            last_term: err,
            hint: format!(
                "peak-age series result {raw} with error estimate {err:e} is unreliable; \
                 estimate by Monte Carlo of X + X' + Exp(rho) instead"
            ),
        });
    }
    Ok(clamp01(raw, Method::Series))
}
