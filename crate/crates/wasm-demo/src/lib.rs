//! WebAssembly bindings for the demo page. Each operation returns a JSON
//! string; the `*_json` functions are the same operations for native callers.

use glauber_lab::dynamics::{block_matrix, exact_mixing_time, glauber_matrix, mixing_bound_from_certificate};
use glauber_lab::exact::ExactDistribution;
use glauber_lab::graph::{generators, Graph};
use glauber_lab::models::{critical_fugacity, hardcore, rational_to_f64, uniqueness_gap, TwoSpin};
use glauber_lab::simplicial::build_levels;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest graph the page accepts; keeps every call well under a second.
pub const MAX_VERTICES: usize = 8;

fn named_graph(kind: &str, n: usize) -> Result<Graph, String> {
    if n == 0 || n > MAX_VERTICES {
        return Err(format!("n must lie in 1..={MAX_VERTICES}"));
    }
    match kind {
        "path" => Ok(generators::path(n)),
        "cycle" => generators::cycle(n).map_err(|e| e.to_string()),
        "star" => Ok(generators::star(n - 1)),
        "complete" => Ok(generators::complete(n)),
        other => Err(format!("unknown graph kind {other:?}")),
    }
}

/// Largest recursion slope `max_{d < Delta} |f_d'(R_d*)|` of the hard-core
/// model over a grid of activities, with the critical activity.
pub fn uniqueness_curve_json(max_degree: usize, lambda_max: f64, points: usize) -> Result<String, String> {
    if max_degree < 3 || points < 2 || !(lambda_max > 0.0) {
        return Err("need max_degree >= 3, points >= 2 and lambda_max > 0".into());
    }
    let critical = rational_to_f64(&critical_fugacity(max_degree).map_err(|e| e.to_string())?);
    let mut lambda = Vec::with_capacity(points);
    let mut slope = Vec::with_capacity(points);
    for i in 1..=points {
        let l = lambda_max * i as f64 / points as f64;
        let rep = uniqueness_gap(TwoSpin::hardcore(l), max_degree).map_err(|e| e.to_string())?;
        lambda.push(l);
        slope.push(rep.max_abs_derivative);
    }
    Ok(json!({"max_degree": max_degree, "critical": critical, "lambda": lambda, "slope": slope}).to_string())
}

/// Worst-case total-variation distance of hard-core Glauber dynamics against
/// time, with the exact mixing time and the certified upper bound.
pub fn mixing_curve_json(kind: &str, n: usize, lambda: f64, eps: f64) -> Result<String, String> {
    let g = named_graph(kind, n)?;
    let d = ExactDistribution::enumerate(&g, &hardcore(lambda).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let chain = glauber_matrix(&d).map_err(|e| e.to_string())?;
    let rep = exact_mixing_time(&chain, eps).map_err(|e| e.to_string())?;
    let cert = build_levels(&d).and_then(|c| c.exact_certificate(n)).map_err(|e| e.to_string())?;
    let bound = mixing_bound_from_certificate(cert.kappa(n - 1), rep.min_stationary, eps);
    Ok(json!({
        "distance": rep.distance,
        "t_mix": rep.t_mix,
        "spectral_gap": rep.spectral_gap,
        "bound": bound,
        "epsilon": eps,
    })
    .to_string())
}

/// Exact spectral gap of heat-bath block dynamics for each block size, with the
/// variance certificate from local spectral expansion.
pub fn block_gap_curve_json(kind: &str, n: usize, lambda: f64) -> Result<String, String> {
    let g = named_graph(kind, n)?;
    let d = ExactDistribution::enumerate(&g, &hardcore(lambda).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let cx = build_levels(&d).map_err(|e| e.to_string())?;
    let mut ell = Vec::new();
    let mut gap = Vec::new();
    let mut certified = Vec::new();
    for l in 1..=n {
        ell.push(l);
        gap.push(block_matrix(&d, l).map_err(|e| e.to_string())?.spectral_gap());
        certified.push(cx.variance_certificate(n, n - l).map_err(|e| e.to_string())?.gap_bound);
    }
    Ok(json!({"ell": ell, "gap": gap, "certified": certified}).to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn uniqueness_curve(max_degree: u32, lambda_max: f64, points: u32) -> Result<String, JsValue> {
    js(uniqueness_curve_json(max_degree as usize, lambda_max, points as usize))
}

#[wasm_bindgen]
pub fn mixing_curve(kind: &str, n: u32, lambda: f64, eps: f64) -> Result<String, JsValue> {
    js(mixing_curve_json(kind, n as usize, lambda, eps))
}

#[wasm_bindgen]
pub fn block_gap_curve(kind: &str, n: u32, lambda: f64) -> Result<String, JsValue> {
    js(block_gap_curve_json(kind, n as usize, lambda))
}
