//! WebAssembly bindings for the static demo page in `www/`. Each export
//! returns a JSON document; the plain functions below it are the testable
//! core.

use roughinc::drivers::{sample_fbm, FbmMethod};
use roughinc::norms::{holder_seminorm, p_variation};
use roughinc::selection::{certify_with_norm, measured_gamma_norm, select_path};
use roughinc::ydi::ydi_approximate;
use roughinc::{BuiltinMap, DyadicGrid, Path, TimeSetMap};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest grid level the page may request.
pub const MAX_LEVEL: u32 = 12;

fn grid(level: u32) -> Result<DyadicGrid, String> {
    if level > MAX_LEVEL {
        return Err(format!("level {level} above {MAX_LEVEL}"));
    }
    DyadicGrid::new(1.0, level).map_err(|e| e.to_string())
}

fn column(p: &Path, k: usize) -> Vec<f64> {
    (0..p.len()).map(|i| p.point(i)[k]).collect()
}

/// A scalar fBm sample with its p-variation and Hölder seminorm.
pub fn fbm_summary(hurst: f64, level: u32, seed: u64, p: f64, alpha: f64) -> Result<Value, String> {
    let x = sample_fbm(hurst, 1, grid(level)?, seed, FbmMethod::Covariance).map_err(|e| e.to_string())?;
    let pv = p_variation(&x, p).map_err(|e| e.to_string())?;
    let h = holder_seminorm(&x, alpha).map_err(|e| e.to_string())?;
    Ok(json!({ "t": x.times(), "x": column(&x, 0), "p_variation": pv, "holder": h }))
}

/// The level-`level` scheme for `dz in {a sin z, a (sin z + offset)} dx` on an fBm driver.
pub fn ydi_summary(hurst: f64, level: u32, seed: u64, amp: f64, offset: f64, xi: f64) -> Result<Value, String> {
    let x = sample_fbm(hurst, 1, grid(level)?, seed, FbmMethod::Covariance).map_err(|e| e.to_string())?;
    let map = BuiltinMap::parse(&format!("two_point(amp={amp}, offset={offset})")).map_err(|e| e.to_string())?;
    let sol = ydi_approximate(&map, &x, &[xi], level).map_err(|e| e.to_string())?;
    Ok(json!({
        "t": sol.z.times(),
        "x": column(&x, 0),
        "z": column(&sol.z, 0),
        "v": column(&sol.v, 0),
        "inclusion_residual": sol.inclusion_residual,
    }))
}

/// Selection of `t -> {h(t), h(t) + offset}` for a Weierstrass profile `h`.
pub fn selection_summary(gamma: f64, level: u32, offset: f64, q: f64) -> Result<Value, String> {
    let map = BuiltinMap::parse(&format!("two_point(shape=weierstrass, gamma={gamma}, terms=16, arg=time, offset={offset})"))
        .map_err(|e| e.to_string())?;
    let xi = TimeSetMap::eval(&map, 0.0).project(&[0.0]).map_err(|e| e.to_string())?;
    let res = select_path(&map, &xi, level).map_err(|e| e.to_string())?;
    let norm = measured_gamma_norm(&map, level.min(10)).map_err(|e| e.to_string())?;
    let cert = certify_with_norm(&res, gamma, norm, q).map_err(|e| e.to_string())?;
    let branches: Vec<Vec<Vec<f64>>> = res.f.times().iter().map(|&t| TimeSetMap::eval(&map, t).sample_points(2)).collect();
    Ok(json!({
        "t": res.f.times(),
        "f": column(&res.f, 0),
        "lower": branches.iter().map(|b| b[0][0]).collect::<Vec<_>>(),
        "upper": branches.iter().map(|b| b[1][0]).collect::<Vec<_>>(),
        "q_variation": cert.q_variation,
        "bound": cert.bound_rhs,
        "gamma_norm": norm,
        "pass": cert.pass,
    }))
}

fn export(v: Result<Value, String>) -> Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fbm_path(hurst: f64, level: u32, seed: u32, p: f64, alpha: f64) -> Result<String, JsValue> {
    export(fbm_summary(hurst, level, seed as u64, p, alpha))
}

#[wasm_bindgen]
pub fn ydi_demo(hurst: f64, level: u32, seed: u32, amp: f64, offset: f64, xi: f64) -> Result<String, JsValue> {
    export(ydi_summary(hurst, level, seed as u64, amp, offset, xi))
}

#[wasm_bindgen]
pub fn selection_demo(gamma: f64, level: u32, offset: f64, q: f64) -> Result<String, JsValue> {
    export(selection_summary(gamma, level, offset, q))
}
