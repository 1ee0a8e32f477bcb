//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export runs a small single-threaded campaign and returns flat
//! numeric arrays the page draws on a canvas.

use rsmask_core::campaign::{run_distribution, run_sifa, run_tvla, CampaignConfig};
use rsmask_core::datapath::Model;
use wasm_bindgen::prelude::*;

const MAX_SAMPLES: u32 = 2_000_000;

fn config(model: &str, traces: u32, seed: u32) -> Result<CampaignConfig, String> {
    let model: Model = model.parse().map_err(|e| format!("{e}"))?;
    if traces == 0 || traces > MAX_SAMPLES {
        return Err(format!("sample count must be in 1..={MAX_SAMPLES}"));
    }
    Ok(CampaignConfig {
        model,
        traces: traces as u64,
        seed: seed as u64,
        ..CampaignConfig::default()
    })
}

/// S-box output histograms under the default stuck-at fault: 256 counts of
/// faulty outputs (effective faults) followed by 256 counts of correct
/// outputs (ineffective faults), then the two chi-square p-values.
pub fn fault_distribution_native(model: &str, samples: u32, seed: u32) -> Result<Vec<f64>, String> {
    let r = run_distribution(&config(model, samples, seed)?, None).map_err(|e| e.to_string())?;
    let mut out: Vec<f64> = r.faulty_hist.counts().iter().map(|&c| c as f64).collect();
    out.extend(r.correct_hist.counts().iter().map(|&c| c as f64));
    out.push(r.faulty_p.unwrap_or(f64::NAN));
    out.push(r.correct_p.unwrap_or(f64::NAN));
    Ok(out)
}

/// SIFA against the default fault, flattened as
/// `[n, sei_correct, sei_max_wrong, rank]` per checkpoint (every `step`
/// ineffective ciphertexts).
pub fn sifa_curve_native(model: &str, ineffective: u32, step: u32, seed: u32) -> Result<Vec<f64>, String> {
    let mut cfg = config(model, ineffective, seed)?;
    let step = step.max(1) as u64;
    cfg.checkpoints = Some((1..).map(|i| i * step).take_while(|&n| n < cfg.traces).collect());
    let r = run_sifa(&cfg, None).map_err(|e| e.to_string())?;
    Ok(r.curve
        .iter()
        .flat_map(|p| [p.n as f64, p.sei_correct, p.sei_max_wrong, p.rank as f64])
        .collect())
}

/// Welch t per leakage sample for `traces` noisy traces.
pub fn tvla_native(model: &str, traces: u32, sigma: f64, seed: u32) -> Result<Vec<f64>, String> {
    let mut cfg = config(model, traces, seed)?;
    cfg.sigma = sigma;
    Ok(run_tvla(&cfg, None).map_err(|e| e.to_string())?.t)
}

#[wasm_bindgen]
pub fn fault_distribution(model: &str, samples: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    fault_distribution_native(model, samples, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sifa_curve(model: &str, ineffective: u32, step: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    sifa_curve_native(model, ineffective, step, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn tvla(model: &str, traces: u32, sigma: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    tvla_native(model, traces, sigma, seed).map_err(|e| JsError::new(&e))
}
