//! Browser bindings for the static page in `www/`.
//!
//! The page calls three functions: the optimal list of an editable instance,
//! regret curves on the four-item toy instance and the region of CTRs where
//! PIE* can settle on the wrong order of two same-topic items. Each binding
//! is a thin wrapper around a plain function returning JSON so the logic can
//! be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ldr_core::harness::{
    geometric_checkpoints, misorder_inequality, run_batch, ExperimentConfig, InstanceSource, RegretMode,
};
use ldr_core::oracle::{greedy_optimal_list, regret_lower_bound};
use ldr_core::policies::PolicySpec;
use ldr_core::Instance;

/// Longest horizon the page may request; a run of this length takes a few
/// seconds in the browser.
pub const MAX_HORIZON: u32 = 1 << 18;
pub const MAX_RUNS: u32 = 50;

#[derive(Debug, Serialize)]
struct OptimalListView {
    /// One-based item ids.
    list: Vec<usize>,
    reward: f64,
    success_rates: Vec<f64>,
    /// Regret lower-bound constant, absent when it cannot be computed.
    lower_bound: Option<f64>,
}

/// `topic_of` is one-based, as in instance files.
pub fn optimal_list(topic_of: &[u32], ctr: &[f64], topic_dist: &[f64], slots: usize) -> Result<String, String> {
    if topic_of.contains(&0) {
        return Err("topics are numbered from 1".into());
    }
    let topics = topic_of.iter().map(|&m| m as usize - 1).collect();
    let inst = Instance::new(topics, ctr.to_vec(), topic_dist.to_vec(), slots).map_err(|e| e.to_string())?;
    let best = greedy_optimal_list(&inst, slots).map_err(|e| e.to_string())?;
    let view = OptimalListView {
        list: best.iter().map(|k| k + 1).collect(),
        reward: inst.expected_reward(&best).map_err(|e| e.to_string())?,
        success_rates: (0..best.len())
            .map(|l| inst.success_rate(&best, l))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?,
        lower_bound: regret_lower_bound(&inst).ok().map(|r| r.total),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct Series {
    policy: String,
    mean: Vec<f64>,
    q05: Vec<f64>,
    q95: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct CurvesView {
    checkpoints: Vec<u64>,
    series: Vec<Series>,
}

/// Mean and 5%/95% regret curves of LDR, RBA and PIE* on the toy layout
/// (items 1, 2 in topic 1 and 3, 4 in topic 2, equal topic weights, two
/// slots) with the given CTRs.
pub fn toy_regret_curves(ctr: &[f64], horizon: u32, runs: u32, seed: u32) -> Result<String, String> {
    if ctr.len() != 4 {
        return Err(format!("expected 4 CTRs, got {}", ctr.len()));
    }
    if horizon == 0 || horizon > MAX_HORIZON {
        return Err(format!("horizon must lie in [1, {MAX_HORIZON}]"));
    }
    if runs == 0 || runs > MAX_RUNS {
        return Err(format!("runs must lie in [1, {MAX_RUNS}]"));
    }
    let inst = Instance::new(vec![0, 0, 1, 1], ctr.to_vec(), vec![0.5, 0.5], 2).map_err(|e| e.to_string())?;
    let checkpoints = geometric_checkpoints(u64::from(horizon), 40);
    let policies = vec![PolicySpec::LdrRandomized, PolicySpec::Rba, PolicySpec::PieStar];
    let batch = run_batch(&ExperimentConfig {
        source: InstanceSource::Given(inst),
        policies: policies.clone(),
        horizon: u64::from(horizon),
        runs: runs as usize,
        master_seed: u64::from(seed),
        mode: RegretMode::Pseudo,
        checkpoints: Some(checkpoints.clone()),
    })
    .map_err(|e| e.to_string())?;
    let series = policies
        .iter()
        .map(|p| {
            let name = p.to_string();
            let rows: Vec<_> = batch.aggregate.iter().filter(|r| r.policy == name).collect();
            Series {
                mean: rows.iter().map(|r| r.mean).collect(),
                q05: rows.iter().map(|r| r.q05).collect(),
                q95: rows.iter().map(|r| r.q95).collect(),
                policy: name,
            }
        })
        .collect();
    serde_json::to_string(&CurvesView { checkpoints, series }).map_err(|e| e.to_string())
}

/// Row-major `resolution x resolution` grid over the CTR of the better item
/// (columns) and of the worse item (rows, from the bottom), both at cell
/// centres in (0, 1). Cells hold 0 where the worse item is not worse, 1
/// where PIE* orders the pair correctly and 2 where it can misorder it.
pub fn misorder_region(phi: f64, resolution: usize) -> Vec<u8> {
    let centre = |i: usize| (i as f64 + 0.5) / resolution as f64;
    let mut cells = Vec::with_capacity(resolution * resolution);
    for row in (0..resolution).rev() {
        let worse = centre(row);
        for col in 0..resolution {
            let better = centre(col);
            cells.push(if worse >= better {
                0
            } else if misorder_inequality(phi, better, worse) {
                2
            } else {
                1
            });
        }
    }
    cells
}

#[wasm_bindgen(js_name = optimalList)]
pub fn optimal_list_js(
    topic_of: Vec<u32>,
    ctr: Vec<f64>,
    topic_dist: Vec<f64>,
    slots: usize,
) -> Result<String, JsValue> {
    optimal_list(&topic_of, &ctr, &topic_dist, slots).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = toyRegretCurves)]
pub fn toy_regret_curves_js(ctr: Vec<f64>, horizon: u32, runs: u32, seed: u32) -> Result<String, JsValue> {
    toy_regret_curves(&ctr, horizon, runs, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = misorderRegion)]
pub fn misorder_region_js(phi: f64, resolution: usize) -> Vec<u8> {
    misorder_region(phi, resolution.clamp(2, 400))
}
