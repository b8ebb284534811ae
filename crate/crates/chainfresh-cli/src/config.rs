//! Experiment configuration: file format, unit conversions, defaults.
//!
//! The config file is TOML with dotted keys (`channel.p_watts = 1.0`).
//! Channel inputs use field-survey units (dBm/Hz, BS/km^2) and are converted
//! to SI exactly once, here. CLI flags override file values.

use std::path::{Path, PathBuf};

use chainfresh::channel::{max_rate, tx_latency, ChannelParams};
use chainfresh::latency::{fit_gamma, lookup_params, GammaParams, Knob, LatencyTrace};
use chainfresh::sim::StopRule;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_SEED: u64 = 7;
pub const SEED_ENV: &str = "CHAINFRESH_SEED";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    channel: Option<ChannelSection>,
    rho_s: Option<f64>,
    zeta: Option<f64>,
    d_bits: Option<f64>,
    v_grid: Option<Vec<f64>>,
    gamma: Option<GammaSection>,
    sim: Option<SimSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    p_watts: Option<f64>,
    n0_dbm_per_hz: Option<f64>,
    w_hz: Option<f64>,
    lambda_bs_per_km2: Option<f64>,
    l_m: Option<f64>,
    pathloss_exp: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaSection {
    source: Option<String>,
    alpha: Option<f64>,
    beta: Option<f64>,
    knob: Option<String>,
    value: Option<f64>,
    trace: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    seed: Option<u64>,
    stop_updates: Option<usize>,
    stop_horizon: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum GammaSource {
    Explicit { alpha: f64, beta: f64 },
    Table { knob: Knob, value: f64 },
    Trace(PathBuf),
}

/// Fully resolved experiment: SI units, one latency source, one stop rule.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub channel: ChannelParams,
    pub rho_s: f64,
    pub zeta: f64,
    pub d_bits: f64,
    pub gamma_source: GammaSource,
    pub v_grid: Vec<f64>,
    pub stop: StopRule,
    pub seed: u64,
}

/// Flag-level overrides collected from the command line.
#[derive(Debug, Default)]
pub struct Overrides {
    pub v_grid: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub stop_updates: Option<usize>,
    pub stop_horizon: Option<f64>,
    pub d_bits: Option<f64>,
}

fn dbm_per_hz_to_w_per_hz(dbm: f64) -> f64 {
    // dBm is referenced to 1 mW: -100 dBm/Hz -> 1e-13 W/Hz
    10f64.powf(dbm / 10.0) * 1e-3
}

fn per_km2_to_per_m2(lambda: f64) -> f64 {
    lambda * 1e-6
}

impl Experiment {
    pub fn resolve(path: Option<&Path>, over: &Overrides) -> Result<Experiment, CliError> {
        let file: FileConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::config(format!("cannot read config {}: {e}", p.display()))
                })?;
                toml::from_str(&text)
                    .map_err(|e| CliError::config(format!("config {}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };

        let ch = file.channel.unwrap_or_default();
        let channel = ChannelParams {
            p: ch.p_watts.unwrap_or(1.0),
            n0: dbm_per_hz_to_w_per_hz(ch.n0_dbm_per_hz.unwrap_or(-100.0)),
            w: ch.w_hz.unwrap_or(1e6),
            lambda_bs: per_km2_to_per_m2(ch.lambda_bs_per_km2.unwrap_or(0.0001)),
            l: ch.l_m.unwrap_or(37.0),
            n: ch.pathloss_exp.unwrap_or(4.0),
        };
        channel.validate().map_err(CliError::config_from)?;

        let g = file.gamma.unwrap_or_default();
        let source = g.source.as_deref().unwrap_or("table");
        let gamma_source = match source {
            "explicit" => {
                if g.knob.is_some() || g.value.is_some() || g.trace.is_some() {
                    return Err(CliError::config(
                        "gamma.source = \"explicit\" admits only gamma.alpha and gamma.beta",
                    ));
                }
                match (g.alpha, g.beta) {
                    (Some(alpha), Some(beta)) => GammaSource::Explicit { alpha, beta },
                    _ => {
                        return Err(CliError::config(
                            "gamma.source = \"explicit\" requires gamma.alpha and gamma.beta",
                        ))
                    }
                }
            }
            "table" => {
                if g.alpha.is_some() || g.beta.is_some() || g.trace.is_some() {
                    return Err(CliError::config(
                        "gamma.source = \"table\" admits only gamma.knob and gamma.value",
                    ));
                }
                let knob = Knob::parse(g.knob.as_deref().unwrap_or("target_stp"))
                    .map_err(CliError::config_from)?;
                GammaSource::Table {
                    knob,
                    value: g.value.unwrap_or(0.6),
                }
            }
            "trace" => {
                if g.alpha.is_some() || g.beta.is_some() || g.knob.is_some() || g.value.is_some() {
                    return Err(CliError::config(
                        "gamma.source = \"trace\" admits only gamma.trace",
                    ));
                }
                let p = g.trace.ok_or_else(|| {
                    CliError::config("gamma.source = \"trace\" requires gamma.trace = \"<path>\"")
                })?;
                GammaSource::Trace(PathBuf::from(p))
            }
            other => {
                return Err(CliError::config(format!(
                    "gamma.source must be explicit, table or trace, got {other:?}"
                )))
            }
        };

        let v_grid = over
            .v_grid
            .clone()
            .or(file.v_grid)
            .unwrap_or_else(|| (1..=8).map(|i| i as f64).collect());
        if v_grid.is_empty() {
            return Err(CliError::config("v_grid must not be empty"));
        }
        if !v_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::config(format!(
                "v_grid must be strictly increasing, got {v_grid:?}"
            )));
        }
        if v_grid.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(CliError::config(format!(
                "v_grid entries must be finite and non-negative, got {v_grid:?}"
            )));
        }

        let sim = file.sim.unwrap_or_default();
        let stop = match (
            over.stop_updates.or(sim.stop_updates),
            over.stop_horizon.or(sim.stop_horizon),
        ) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "give either an update-count stop or a horizon stop, not both",
                ))
            }
            (Some(n), None) => StopRule::Updates(n),
            (None, Some(h)) => StopRule::Horizon(h),
            (None, None) => StopRule::Updates(200_000),
        };

        let seed = match over.seed {
            Some(s) => s,
            None => match std::env::var(SEED_ENV) {
                Ok(text) => text.parse::<u64>().map_err(|_| {
                    CliError::config(format!("{SEED_ENV} must be a 64-bit integer, got {text:?}"))
                })?,
                Err(_) => sim.seed.unwrap_or(DEFAULT_SEED),
            },
        };

        let exp = Experiment {
            channel,
            rho_s: file.rho_s.unwrap_or(15.0),
            zeta: file.zeta.unwrap_or(0.6),
            d_bits: over.d_bits.or(file.d_bits).unwrap_or(5e5),
            gamma_source,
            v_grid,
            stop,
            seed,
        };
        if !(exp.rho_s > 0.0 && exp.rho_s.is_finite()) {
            return Err(CliError::config(format!(
                "rho_s must be positive, got {}",
                exp.rho_s
            )));
        }
        if !(exp.zeta > 0.0 && exp.zeta <= 1.0) {
            return Err(CliError::config(format!(
                "zeta must lie in (0, 1], got {}",
                exp.zeta
            )));
        }
        if !(exp.d_bits > 0.0 && exp.d_bits.is_finite()) {
            return Err(CliError::config(format!(
                "d_bits must be positive, got {}",
                exp.d_bits
            )));
        }
        Ok(exp)
    }

    /// Consensus-latency parameters from whichever source the config names.
    pub fn gamma(&self) -> Result<GammaParams, CliError> {
        match &self.gamma_source {
            GammaSource::Explicit { alpha, beta } => {
                GammaParams::new(*alpha, *beta).map_err(CliError::config_from)
            }
            GammaSource::Table { knob, value } => Ok(lookup_params(*knob, *value)
                .map_err(CliError::config_from)?
                .gamma()),
            GammaSource::Trace(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::runtime(format!("cannot read trace {}: {e}", path.display()))
                })?;
                let trace = LatencyTrace::parse(&text).map_err(CliError::runtime_from)?;
                fit_gamma(&trace).map_err(CliError::runtime_from)
            }
        }
    }

    /// Transmission latency at the given target STP; infinite when the only
    /// rate meeting the target is zero.
    pub fn t_tx_at(&self, zeta: f64) -> Result<f64, CliError> {
        let rate = max_rate(&self.channel, zeta).map_err(CliError::runtime_from)?;
        if rate == 0.0 {
            Ok(f64::INFINITY)
        } else {
            tx_latency(self.d_bits, rate).map_err(CliError::runtime_from)
        }
    }

    pub fn t_tx(&self) -> Result<f64, CliError> {
        self.t_tx_at(self.zeta)
    }

    /// Effective update arrival rate rho = rho_s * zeta.
    pub fn rho(&self) -> f64 {
        self.rho_s * self.zeta
    }
}
