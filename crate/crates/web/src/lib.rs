//! Browser bindings for the ring backflow simulator.
//!
//! Each export returns a JSON string so the page needs no generated
//! TypeScript glue beyond `wasm-bindgen`'s default.

use std::f64::consts::PI;

use backflow_core::circuit::Plan;
use backflow_core::experiment::{
    backflow_coefficients, closed_form_current, exact_current, run_simulation, SimulationConfig,
};
use backflow_core::pauli::current_decomposition;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Register sizes the page offers; larger rings make the profile slow to
/// redraw and the decomposition listing unreadable.
pub const MAX_DEMO_QUBITS: usize = 10;

fn check_qubits(n: usize) -> Result<(), String> {
    if (1..=MAX_DEMO_QUBITS).contains(&n) {
        Ok(())
    } else {
        Err(format!("n must be between 1 and {MAX_DEMO_QUBITS}"))
    }
}

/// Probability density and current of the backflowing state around the
/// ring, sampled at `samples` equally spaced angles in `[0, 2π)`.
pub fn ring_profile_json(n: usize, samples: usize) -> Result<String, String> {
    check_qubits(n)?;
    if !(2..=4096).contains(&samples) {
        return Err("samples must be between 2 and 4096".into());
    }
    let coeffs = backflow_coefficients(n).map_err(|e| e.to_string())?;
    let complex = coeffs.to_complex();
    let mut theta = Vec::with_capacity(samples);
    let mut density = Vec::with_capacity(samples);
    let mut current = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = 2.0 * PI * k as f64 / samples as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (m, a) in coeffs.amplitudes().iter().enumerate() {
            let (s, c) = (m as f64 * t).sin_cos();
            re += a * c;
            im += a * s;
        }
        theta.push(t);
        density.push((re * re + im * im) / (2.0 * PI));
        current.push(exact_current(&complex, t).map_err(|e| e.to_string())?);
    }
    let closed = closed_form_current(n).map_err(|e| e.to_string())?;
    Ok(json!({
        "n": n,
        "theta": theta,
        "density": density,
        "current": current,
        "j_closed_form": closed,
    })
    .to_string())
}

/// Shot-based estimate at `θ0 = 0`; returns the full report.
pub fn simulate_json(
    n: usize,
    shots: u32,
    seed: u32,
    per_term: bool,
    readout_flip: f64,
) -> Result<String, String> {
    check_qubits(n)?;
    let config = SimulationConfig {
        n_qubits: n,
        shots_per_setting: u64::from(shots),
        seed: u64::from(seed),
        plan: if per_term {
            Plan::PerTerm
        } else {
            Plan::Grouped
        },
        readout_flip,
    };
    let report = run_simulation(&config).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// The weighted Pauli strings of the current operator.
pub fn decompose_json(n: usize) -> Result<String, String> {
    check_qubits(n)?;
    let sum = current_decomposition(n).map_err(|e| e.to_string())?;
    serde_json::to_string(&sum).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn ring_profile(n: usize, samples: usize) -> Result<String, JsError> {
    ring_profile_json(n, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(
    n: usize,
    shots: u32,
    seed: u32,
    per_term: bool,
    readout_flip: f64,
) -> Result<String, JsError> {
    simulate_json(n, shots, seed, per_term, readout_flip).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn decompose(n: usize) -> Result<String, JsError> {
    decompose_json(n).map_err(|e| JsError::new(&e))
}
