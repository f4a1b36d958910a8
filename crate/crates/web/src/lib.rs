//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Results are returned as JSON strings so the page needs no generated
//! TypeScript types.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ranktomo::selection::{scan_ranks, ScanOptions};
use ranktomo::states::DensityMatrix;
use ranktomo::study::{run_study2, Study2Config, StudyOptions};
use ranktomo::{simulate_dataset, FitOptions, QuantumState};

#[derive(Serialize)]
struct RankRow {
    rank: usize,
    loglik: f64,
    aic: f64,
    bic: f64,
    eigenvalues: Vec<f64>,
}

#[derive(Serialize)]
struct Selection {
    counts: Vec<(String, Vec<u64>)>,
    ranks: Vec<RankRow>,
    selected_aic: usize,
    selected_bic: usize,
}

#[derive(Serialize)]
struct CurvePoint {
    n: u64,
    mse_rank1: f64,
    mse_rank2: f64,
    aic_rank2_rate: f64,
    bic_rank2_rate: f64,
}

fn to_js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Pure-state mean-squared-error bound for `k` qubits and `n` repetitions.
#[wasm_bindgen]
pub fn bound(k: u32, n: f64) -> f64 {
    ranktomo::stats::qmse_bound(k as usize, n)
}

/// Simulate `n` repetitions per setting from the qubit with Bloch vector
/// `(x, y, z)`, fit ranks 1 and 2 and report both criteria.
#[wasm_bindgen]
pub fn select_one_qubit(x: f64, y: f64, z: f64, n: u32, seed: u32) -> Result<String, JsError> {
    let rho = DensityMatrix::from_bloch([x, y, z]).map_err(to_js)?;
    let data = simulate_dataset(&rho, n as u64, seed as u64).map_err(to_js)?;
    let opts = ScanOptions { max_rank: Some(2), fit: FitOptions { seed: seed as u64, ..FitOptions::default() }, ..ScanOptions::default() };
    let scan = scan_ranks(&data, &opts).map_err(to_js)?;
    let out = Selection {
        counts: data.iter().map(|(s, c)| (s.to_string(), c.to_vec())).collect(),
        ranks: scan
            .entries
            .iter()
            .map(|e| RankRow {
                rank: e.rank(),
                loglik: e.loglik(),
                aic: e.criteria.aic,
                bic: e.criteria.bic,
                eigenvalues: e.fit.density().eigenvalues(),
            })
            .collect(),
        selected_aic: scan.selected_rank_aic,
        selected_bic: scan.selected_rank_bic,
    };
    serde_json::to_string(&out).map_err(to_js)
}

/// Mean squared error of the rank-1 and rank-2 estimators and the rank-2
/// selection rates for the qubit with eigenvalues `(λ, 1 − λ)`.
#[wasm_bindgen]
pub fn mse_curve(lambda: f64, n_values: Vec<u32>, replicates: u32, seed: u32) -> Result<String, JsError> {
    let cfg = Study2Config {
        n_values: n_values.iter().map(|&n| n as u64).collect(),
        eigenvalues: vec![lambda],
        options: StudyOptions { replicates: replicates as usize, seed: seed as u64, restarts: 3, stop_after_increases: 2 },
        ..Study2Config::default()
    };
    let report = run_study2(&cfg, None).map_err(to_js)?;
    let mut points = Vec::new();
    for (i, cell) in report.cells.iter().enumerate() {
        let counts = report.selection_counts(i);
        let reps = counts.replicates.max(1) as f64;
        let mse = |r| report.mse(i, r).map_or(f64::NAN, |m| m.0);
        points.push(CurvePoint {
            n: cell.n,
            mse_rank1: mse(1),
            mse_rank2: mse(2),
            aic_rank2_rate: counts.aic_correct(2) as f64 / reps,
            bic_rank2_rate: counts.bic_correct(2) as f64 / reps,
        });
    }
    serde_json::to_string(&points).map_err(to_js)
}
