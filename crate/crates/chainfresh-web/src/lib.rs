//! Browser bindings for the freshness metrics: small wasm-bindgen wrappers
//! that return JSON strings for a plain-JS plotting page (see `www/`).

use chainfresh::aoi::{aoi_violation, average_aoi, paoi_violation, AoiModel, TargetAoi};
use chainfresh::channel::{max_rate, tx_latency, ChannelParams};
use chainfresh::latency::{table_for, GammaParams, Knob};
use chainfresh::numerics::SeriesControl;
use chainfresh::sim::{simulate, SimConfig, StopRule};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(err)
}

// JsValue cannot be constructed on non-wasm targets, so the logic lives in
// plain-Rust functions (unit-testable on the host) and the exported wrappers
// only translate the error type.


#[derive(Serialize)]
struct Curves {
    avg_aoi: f64,
    v: Vec<f64>,
    p_v: Vec<f64>,
    p_pv: Vec<f64>,
}

/// Violation and peak-violation curves of one operating point on a uniform
/// target grid.
pub fn violation_curves_impl(
    alpha: f64,
    beta: f64,
    rho: f64,
    t_tx: f64,
    v_max: f64,
    points: usize,
) -> Result<String, String> {
    if !(v_max > 0.0) || points < 2 || points > 2000 {
        return Err(err("need v_max > 0 and 2..=2000 points"));
    }
    let model = AoiModel::new(GammaParams::new(alpha, beta).map_err(err)?, rho, t_tx)
        .map_err(err)?;
    let ctl = SeriesControl::default();
    let mut out = Curves {
        avg_aoi: average_aoi(&model),
        v: Vec::new(),
        p_v: Vec::new(),
        p_pv: Vec::new(),
    };
    for i in 0..points {
        let v = v_max * (i + 1) as f64 / points as f64;
        let t = TargetAoi::new(v).map_err(err)?;
        out.v.push(v);
        out.p_v.push(aoi_violation(&model, &t, ctl).map_err(err)?.value);
        // the peak series refuses deep-tail targets; report NaN there and let
        // the page truncate the curve
        out.p_pv.push(
            paoi_violation(&model, &t, ctl)
                .map(|p| p.value)
                .unwrap_or(f64::NAN),
        );
    }
    json(&out)
}

#[derive(Serialize)]
struct SweepPoint {
    knob_value: f64,
    alpha: f64,
    beta: f64,
    t_tx: f64,
    avg_aoi: f64,
    p_v: f64,
    p_pv: f64,
}

/// Metrics across one benchmark table (knob: target_stp, block_size or
/// timeout) at a fixed target, mirroring the CLI sweep.
pub fn knob_sweep_impl(knob: &str, v: f64, rho_s: f64, d_bits: f64) -> Result<String, String> {
    let knob = Knob::parse(knob).map_err(err)?;
    let target = TargetAoi::new(v).map_err(err)?;
    let ctl = SeriesControl::default();
    let channel = ChannelParams::defaults();
    let mut out = Vec::new();
    for row in table_for(knob) {
        let zeta = match knob {
            Knob::TargetStp => row.knob_value,
            _ => 0.6,
        };
        let rate = max_rate(&channel, zeta).map_err(err)?;
        let t_tx = if rate == 0.0 {
            f64::INFINITY
        } else {
            tx_latency(d_bits, rate).map_err(err)?
        };
        let model = AoiModel::new(row.gamma(), rho_s * zeta, t_tx).map_err(err)?;
        out.push(SweepPoint {
            knob_value: row.knob_value,
            alpha: row.alpha,
            beta: row.beta,
            t_tx,
            avg_aoi: average_aoi(&model),
            p_v: aoi_violation(&model, &target, ctl).map_err(err)?.value,
            p_pv: paoi_violation(&model, &target, ctl).map_err(err)?.value,
        });
    }
    json(&out)
}

#[derive(Serialize)]
struct Sawtooth {
    /// Piecewise-linear (t, age) vertices of the age process.
    t: Vec<f64>,
    age: Vec<f64>,
    invalid_count: u64,
    n_effective: usize,
}

/// A short simulated sample path rendered as age-process vertices.
pub fn sample_path_impl(
    alpha: f64,
    beta: f64,
    rho_s: f64,
    zeta: f64,
    t_tx: f64,
    updates: usize,
    seed: u64,
) -> Result<String, String> {
    if updates < 2 || updates > 500 {
        return Err(err("need 2..=500 updates"));
    }
    let cfg = SimConfig {
        rho_s,
        zeta,
        t_tx,
        gamma: GammaParams::new(alpha, beta).map_err(err)?,
        stop: StopRule::Updates(updates),
        seed,
    };
    cfg.validate().map_err(err)?;
    let path = simulate(&cfg).map_err(err)?;
    let mut out = Sawtooth {
        t: Vec::new(),
        age: Vec::new(),
        invalid_count: path.invalid_count,
        n_effective: path.updates.len(),
    };
    for w in path.updates.windows(2) {
        // age climbs at slope 1 from the last reset, drops to U - G at commit
        out.t.push(w[0].u);
        out.age.push(w[0].u - w[0].g);
        out.t.push(w[1].u);
        out.age.push(w[0].u - w[0].g + (w[1].u - w[0].u));
        out.t.push(w[1].u);
        out.age.push(w[1].u - w[1].g);
    }
    json(&out)
}


#[wasm_bindgen]
pub fn violation_curves(
    alpha: f64,
    beta: f64,
    rho: f64,
    t_tx: f64,
    v_max: f64,
    points: usize,
) -> Result<String, JsValue> {
    violation_curves_impl(alpha, beta, rho, t_tx, v_max, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn knob_sweep(knob: &str, v: f64, rho_s: f64, d_bits: f64) -> Result<String, JsValue> {
    knob_sweep_impl(knob, v, rho_s, d_bits).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sample_path(
    alpha: f64,
    beta: f64,
    rho_s: f64,
    zeta: f64,
    t_tx: f64,
    updates: usize,
    seed: u64,
) -> Result<String, JsValue> {
    sample_path_impl(alpha, beta, rho_s, zeta, t_tx, updates, seed).map_err(|e| JsValue::from_str(&e))
}
