//! Browser bindings. Every export takes the parameter set as a JSON string
//! and returns a JSON string, so the page needs no generated types.

use serde_json::{json, Value};
use sirsvp_core::lyapunov::EXCLUSION_RADIUS;
use sirsvp_core::{
    classify_regime, derived_quantities, endemic_equilibrium, integrate, l_dfe_orbital, l_ee, l_ee_orbital,
    population_fate, FractionState, InitialState, IntegrationSpec, ModelParams, RawParams, ReducedState, Sampling,
};
use wasm_bindgen::prelude::*;

const MAX_GRID: usize = 400;

fn parse_params(params: &str) -> Result<ModelParams, String> {
    let raw: RawParams = serde_json::from_str(params).map_err(|e| format!("parameters: {e}"))?;
    raw.validate().map_err(|e| e.to_string())
}

/// Thresholds, equilibria, regime and population fate.
pub fn analyze_value(params: &str) -> Result<Value, String> {
    let p = parse_params(params)?;
    let regime = classify_regime(&p);
    Ok(json!({
        "n_star": p.n_star(),
        "derived": derived_quantities(&p),
        "regime": regime.regime,
        "certificate_basis": regime.certificate_basis,
        "endemic": regime.endemic,
        "population_fate": population_fate(&p).ok(),
    }))
}

/// Reduced `(I, R)` trajectory sampled every `dt`, with the Lyapunov value of the predicted attractor.
pub fn trajectory_value(params: &str, i0: f64, r0: f64, t_end: f64, dt: f64) -> Result<Value, String> {
    let p = parse_params(params)?;
    let start = ReducedState::new(i0, r0).map_err(|e| e.to_string())?;
    let spec = IntegrationSpec::new(InitialState::Reduced(start), t_end).with_sampling(Sampling::Uniform(dt));
    let traj = integrate(&spec, &p).map_err(|e| e.to_string())?;
    let eq = endemic_equilibrium(&p);
    let points: Vec<[f64; 4]> = traj
        .samples
        .iter()
        .map(|s| {
            let (i, r) = (s.state[0], s.state[1]);
            let l = match &eq {
                Some(eq) => l_ee(&ReducedState { i, r }, eq, &p).unwrap_or(f64::NAN),
                None => i,
            };
            [s.t, i, r, l]
        })
        .collect();
    Ok(json!({ "termination": traj.termination, "points": points }))
}

/// Sign map of the orbital derivative on a cell-centred grid over the simplex.
///
/// Cells within the exclusion radius of the equilibrium, or outside the simplex, are `null`.
pub fn orbital_map_value(params: &str, resolution: usize) -> Result<Value, String> {
    let p = parse_params(params)?;
    let n = resolution.clamp(2, MAX_GRID);
    let eq = endemic_equilibrium(&p);
    let h = 1.0 / n as f64;
    let mut cells = Vec::with_capacity(n * n);
    let mut positive = 0usize;
    for row in 0..n {
        let r = (row as f64 + 0.5) * h;
        for col in 0..n {
            let i = (col as f64 + 0.5) * h;
            let value = if i + r > 1.0 {
                None
            } else {
                match &eq {
                    Some(eq) => {
                        let near = (i - eq.i).hypot(r - eq.r) < EXCLUSION_RADIUS;
                        (!near)
                            .then(|| l_ee_orbital(&ReducedState { i, r }, eq, &p).ok())
                            .flatten()
                    }
                    None => Some(l_dfe_orbital(&FractionState { s: 1.0 - i - r, i, r }, &p)),
                }
            };
            if value.is_some_and(|v| v > 0.0) {
                positive += 1;
            }
            cells.push(value);
        }
    }
    Ok(json!({
        "resolution": n,
        "rho": p.rho(),
        "equilibrium": eq.map(|e| [e.i, e.r]),
        "positive_cells": positive,
        "cells": cells,
    }))
}

fn to_js(result: Result<Value, String>) -> Result<String, JsValue> {
    result.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn analyze(params: &str) -> Result<String, JsValue> {
    to_js(analyze_value(params))
}

#[wasm_bindgen]
pub fn trajectory(params: &str, i0: f64, r0: f64, t_end: f64, dt: f64) -> Result<String, JsValue> {
    to_js(trajectory_value(params, i0, r0, t_end, dt))
}

#[wasm_bindgen]
pub fn orbital_map(params: &str, resolution: usize) -> Result<String, JsValue> {
    to_js(orbital_map_value(params, resolution))
}
