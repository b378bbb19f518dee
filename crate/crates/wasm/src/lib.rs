//! Pendulum demo operations exported to JavaScript. Every export returns a
//! JSON string; failures become a thrown string.

use serde_json::json;
use wasm_bindgen::prelude::*;

use resample::perf::gamma_h_curve;
use resample::pendulum;
use resample::sim::simulate_event;

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// γ_opt, h_sup and the analog controller factors at level γ.
pub fn design_json(gamma: f64) -> Result<String, String> {
    let d = pendulum::design(gamma).map_err(|e| e.to_string())?;
    let zpk = d.analog_controller().zpk().map_err(|e| e.to_string())?;
    Ok(json!({
        "gamma": gamma,
        "gamma_opt": d.gamma_opt,
        "h_sup": finite(d.h_sup),
        "zeros": zpk.zeros.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "poles": zpk.poles.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        "gain": zpk.gain,
    })
    .to_string())
}

/// `points` levels spread over [gamma_min, gamma_max] with their h_sup;
/// infeasible levels carry an error message.
pub fn curve_json(gamma_min: f64, gamma_max: f64, points: usize) -> Result<String, String> {
    if points == 0 || !(gamma_max >= gamma_min) {
        return Err("need points > 0 and gamma_max >= gamma_min".into());
    }
    let step = if points > 1 { (gamma_max - gamma_min) / (points - 1) as f64 } else { 0.0 };
    let gammas: Vec<f64> = (0..points).map(|k| gamma_min + step * k as f64).collect();
    let rows: Vec<_> = gamma_h_curve(&pendulum::shaped_plant(), &gammas)
        .into_iter()
        .map(|p| match p.h_sup {
            Ok(h) => json!({ "gamma": p.gamma, "h_sup": finite(h) }),
            Err(e) => json!({ "gamma": p.gamma, "error": e.to_string() }),
        })
        .collect();
    Ok(json!(rows).to_string())
}

/// Event-sampled loop under the square-wave load; the trace is thinned to
/// about 500 points for plotting.
pub fn event_json(gamma: f64, epsilon: f64, h_max: f64, t_end: f64) -> Result<String, String> {
    let d = pendulum::design(gamma).map_err(|e| e.to_string())?;
    let tr = simulate_event(&pendulum::sim_plant(), &d.controller, &pendulum::disturbance(), epsilon, h_max, t_end, 2e-3)
        .map_err(|e| e.to_string())?;
    let stride = (tr.times.len() / 500).max(1);
    let pick = |v: &Vec<Vec<f64>>| v.iter().step_by(stride).map(|r| r[0]).collect::<Vec<_>>();
    Ok(json!({
        "h_av": tr.average_interval(),
        "samples": tr.sample_instants.len(),
        "peak_abs_z": tr.peak_abs_z(),
        "t": tr.times.iter().step_by(stride).collect::<Vec<_>>(),
        "y": pick(&tr.y),
        "u": pick(&tr.u),
        "instants": tr.sample_instants,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn pendulum_design(gamma: f64) -> Result<String, JsValue> {
    design_json(gamma).map_err(JsValue::from)
}

#[wasm_bindgen]
pub fn gamma_curve(gamma_min: f64, gamma_max: f64, points: usize) -> Result<String, JsValue> {
    curve_json(gamma_min, gamma_max, points).map_err(JsValue::from)
}

#[wasm_bindgen]
pub fn event_simulation(gamma: f64, epsilon: f64, h_max: f64, t_end: f64) -> Result<String, JsValue> {
    event_json(gamma, epsilon, h_max, t_end).map_err(JsValue::from)
}
