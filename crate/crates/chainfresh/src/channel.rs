//! Uplink model: successful-transmission probability under Poisson-field
//! interference, the matching maximum target rate, and transmission latency.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Physical-layer parameters, all in SI units.
#[derive(Clone, Copy, Debug)]
pub struct ChannelParams {
    /// Transmit power (W).
    pub p: f64,
    /// Noise power spectral density (W/Hz).
    pub n0: f64,
    /// Bandwidth (Hz).
    pub w: f64,
    /// Interferer (base-station) density (per m^2).
    pub lambda_bs: f64,
    /// Source-to-receiver distance (m).
    pub l: f64,
    /// Pathloss exponent; must exceed 2 for the interference term to be finite.
    pub n: f64,
}

impl ChannelParams {
    /// Defaults used throughout the experiments: P = 1 W, N0 = 1e-13 W/Hz
    /// (-100 dBm/Hz), W = 1 MHz, lambda = 1e-10 m^-2 (0.0001 km^-2),
    /// l = 37 m, n = 4.
    pub fn defaults() -> ChannelParams {
        ChannelParams {
            p: 1.0,
            n0: 1e-13,
            w: 1e6,
            lambda_bs: 1e-10,
            l: 37.0,
            n: 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("p", self.p),
            ("n0", self.n0),
            ("w", self.w),
            ("lambda_bs", self.lambda_bs),
            ("l", self.l),
            ("n", self.n),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "channel parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.n <= 2.0 {
            return Err(Error::Domain(format!(
                "pathloss exponent must exceed 2, got {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Successful-transmission probability at target rate `epsilon` (bit/s).
///
/// p_c = exp(-(l^n/P) N0 W theta - 2 lambda pi^2 l^2 theta^{2/n} /
/// (n P^{2/n} sin(2 pi/n))) with theta = 2^{epsilon/W} - 1. Strictly
/// decreasing in epsilon with p_c(0) = 1.
pub fn stp(epsilon: f64, params: &ChannelParams) -> Result<f64> {
    params.validate()?;
    if !(epsilon >= 0.0) {
        return Err(Error::Domain(format!(
            "rate must be non-negative, got {epsilon}"
        )));
    }
    let theta = (epsilon / params.w).exp2() - 1.0;
    let noise = params.l.powf(params.n) / params.p * params.n0 * params.w * theta;
    let interf = 2.0 * params.lambda_bs * PI * PI * params.l * params.l
        * theta.powf(2.0 / params.n)
        / (params.n * params.p.powf(2.0 / params.n) * (2.0 * PI / params.n).sin());
    Ok((-noise - interf).exp())
}

/// Largest target rate whose STP still meets `zeta`: solves stp(rate) = zeta.
///
/// Uses the closed form available for pathloss exponent 4, bisection
/// otherwise. `zeta = 1` returns rate 0 (the only rate with certain success).
pub fn max_rate(params: &ChannelParams, zeta: f64) -> Result<f64> {
    params.validate()?;
    check_zeta(zeta)?;
    if zeta == 1.0 {
        return Ok(0.0);
    }
    if params.n == 4.0 {
        let lam = params.lambda_bs;
        let disc = PI.powi(4) * lam * lam - 16.0 * params.n0 * params.w * zeta.ln();
        let t = params.p.sqrt() * (-PI * PI * lam + disc.sqrt())
            / (4.0 * params.n0 * params.w * params.l * params.l);
        return Ok(params.w * (1.0 + t * t).log2());
    }
    max_rate_bisection(params, zeta)
}

/// Bisection solver for stp(rate) = zeta, valid for any pathloss exponent.
pub fn max_rate_bisection(params: &ChannelParams, zeta: f64) -> Result<f64> {
    params.validate()?;
    check_zeta(zeta)?;
    if zeta == 1.0 {
        return Ok(0.0);
    }
    // stp is strictly decreasing; bracket from 0 up past the SNR-limited rate
    let snr_max = params.p / (params.l.powf(params.n) * params.n0 * params.w);
    let mut hi = params.w * (1.0 + snr_max * 10.0).log2();
    let mut grow = 0;
    while stp(hi, params)? > zeta {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::Numeric(format!(
                "max_rate bracket failure: stp({hi:e}) still above {zeta}"
            )));
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if stp(mid, params)? > zeta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_zeta(zeta: f64) -> Result<()> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::Domain(format!(
            "target STP must lie in (0, 1], got {zeta}"
        )));
    }
    Ok(())
}

/// Transmission latency of a `d_bits` packet at the given rate: D / rate.
pub fn tx_latency(d_bits: f64, rate: f64) -> Result<f64> {
    if !(d_bits > 0.0) {
        return Err(Error::Domain(format!(
            "packet size must be positive, got {d_bits}"
        )));
    }
    if !(rate > 0.0) {
        return Err(Error::InfiniteLatency(format!(
            "rate {rate} bit/s gives unbounded latency (target STP of 1 forces rate 0)"
        )));
    }
    Ok(d_bits / rate)
}
