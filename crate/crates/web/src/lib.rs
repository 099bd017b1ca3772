//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each binding returns a JSON string. The plain functions underneath do
//! the work and are what the native tests call.

use motlab::constructions::{mu_m, nu_mn, pi_mn, random_walk_kernel, theta_n};
use motlab::experiments::{ratio_bound, theta_grid};
use motlab::transport::{mot_value, ot_value};
use motlab::{Coupling, DiscreteMeasure, Norm};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest parameters the page offers; keeps every solve interactive.
pub const MAX_M: usize = 8;
pub const MAX_N: usize = 12;

fn atoms(mu: &DiscreteMeasure) -> Value {
    mu.atoms()
        .iter()
        .map(|a| json!({ "x": a.point.coords()[0], "y": a.point.coords()[1], "w": a.weight }))
        .collect()
}

fn edges(plan: &Coupling) -> Value {
    plan.support()
        .map(|(x, y, w)| json!({ "from": x.coords(), "to": y.coords(), "w": w }))
        .collect()
}

fn check_range(name: &str, value: usize, lo: usize, hi: usize) -> Result<(), String> {
    if (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(format!("{name} = {value} must lie in {lo}..={hi}"))
    }
}

/// `μ_m`, `ν_{m,n}`, the kernel coupling and the two transport values.
pub fn construction_json(m: usize, n: usize) -> Result<String, String> {
    check_range("m", m, 1, MAX_M)?;
    check_range("n", n, 1, MAX_N)?;
    let run = || -> motlab::Result<Value> {
        let (mu, nu) = (mu_m(m)?, nu_mn(m, n)?);
        let (w1, _) = ot_value(&mu, &nu, Norm::Euclidean)?;
        let (m1, _) = mot_value(&mu, &nu, Norm::Euclidean)?;
        Ok(json!({
            "m": m,
            "n": n,
            "theta": theta_n(n),
            "mu": atoms(&mu),
            "nu": atoms(&nu),
            "plan": edges(&pi_mn(m, n)?),
            "w1": w1,
            "m1": m1,
        }))
    };
    run().map(|v| v.to_string()).map_err(|e| e.to_string())
}

/// `M₁/W₁` for `(μ_n, ν_{n,n})`, `n = 2..=nmax`, with its lower bound.
pub fn ratio_curve_json(nmax: usize, norm: &str) -> Result<String, String> {
    check_range("nmax", nmax, 2, MAX_N)?;
    let run = || -> motlab::Result<Value> {
        let norm: Norm = norm.parse()?;
        let mut rows = Vec::new();
        for n in 2..=nmax {
            let (mu, nu) = (mu_m(n)?, nu_mn(n, n)?);
            let (m1, _) = mot_value(&mu, &nu, norm)?;
            let (w1, _) = ot_value(&mu, &nu, norm)?;
            rows.push(json!({
                "n": n,
                "m1": m1,
                "w1": w1,
                "ratio": m1 / w1,
                "bound": ratio_bound(n, norm),
            }));
        }
        Ok(json!({ "norm": norm.as_str(), "rows": rows }))
    };
    run().map(|v| v.to_string()).map_err(|e| e.to_string())
}

/// `W₁(μ_mP₀, μ_mP_θ)` on `steps` equally spaced angles in `[0, π/2]`.
pub fn chord_curve_json(m: usize, steps: usize) -> Result<String, String> {
    check_range("m", m, 1, MAX_M)?;
    check_range("steps", steps, 2, 64)?;
    let run = || -> motlab::Result<Value> {
        let mu = mu_m(m)?;
        let flat = mu.apply_kernel(&random_walk_kernel(0.0)?)?;
        let mut rows = Vec::new();
        for theta in theta_grid(steps) {
            let tilted = mu.apply_kernel(&random_walk_kernel(theta)?)?;
            let (w1, _) = ot_value(&flat, &tilted, Norm::Euclidean)?;
            rows.push(json!({ "theta": theta, "w1": w1, "chord": 2.0 * (theta / 2.0).sin() }));
        }
        Ok(json!({ "m": m, "rows": rows }))
    };
    run().map(|v| v.to_string()).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn construction(m: usize, n: usize) -> Result<String, JsError> {
    construction_json(m, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn ratio_curve(nmax: usize, norm: &str) -> Result<String, JsError> {
    ratio_curve_json(nmax, norm).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn chord_curve(m: usize, steps: usize) -> Result<String, JsError> {
    chord_curve_json(m, steps).map_err(|e| JsError::new(&e))
}
