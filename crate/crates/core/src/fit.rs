//! Maximum-likelihood fitting: multi-start fixed-rank fits, the iterative
//! full-rank `RρR` baseline, and the naive linear-inversion estimator.

use std::hash::{Hash, Hasher};

use rayon::prelude::*;

use crate::dataset::CountsDataset;
use crate::error::{Error, Result};
use crate::likelihood::{loglik_from_probs, Objective};
use crate::linalg::{CMatrix, C64};
use crate::optim::{self, LbfgsOptions};
use crate::pauli::{self, num_outcomes, Letter, PauliCoefficients, Setting};
use crate::rng;
use crate::states::{DensityMatrix, QuantumState, TrapezoidalFactor};

/// Options for [`fit_rank`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Number of random starting points.
    pub restarts: usize,
    pub max_iter: usize,
    /// Tolerance on the gradient of the mean log-likelihood `ℓ/N_tot`
    /// at the unit-norm factor.
    pub grad_tol: f64,
    pub f_rel_tol: f64,
    /// Optional warm start of rank `r` or `r − 1`.
    pub warm_start: Option<TrapezoidalFactor>,
    /// Magnitude of the row appended to a rank `r − 1` warm start.
    pub pad_scale: f64,
    /// Floor on probabilities inside `log` during optimization.
    pub floor: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 5,
            max_iter: 2000,
            grad_tol: 1e-6,
            f_rel_tol: 1e-13,
            warm_start: None,
            pad_scale: 1e-3,
            floor: 1e-12,
            seed: 0,
        }
    }
}

/// Result of a fixed-rank maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct ModelFit {
    pub rank: usize,
    /// Unit-norm fitted factor.
    pub factor: TrapezoidalFactor,
    /// Unclamped log-likelihood at the fitted state (nats).
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Number of starting points tried (random plus warm).
    pub restarts: usize,
    /// Index of the winning start (warm start, if any, is index 0).
    pub best_start: usize,
    /// Gradient norm of `ℓ/N_tot` at the unit-norm factor.
    pub grad_norm: f64,
    /// Total measurement count of the fitted dataset.
    pub total_count: u64,
    pub(crate) data_id: u64,
}

impl ModelFit {
    pub fn state(&self) -> DensityMatrix {
        self.factor.state().expect("fitted factor is nonzero")
    }

    /// Fingerprint of the dataset this fit was computed on.
    pub fn data_id(&self) -> u64 {
        self.data_id
    }
}

pub(crate) fn dataset_id(data: &CountsDataset) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    data.num_qubits().hash(&mut h);
    for (s, c) in data.iter() {
        s.index().hash(&mut h);
        c.hash(&mut h);
    }
    h.finish()
}

struct StartResult {
    factor: TrapezoidalFactor,
    loglik: f64,
    iterations: usize,
}

const POLISH_ROUNDS: usize = 3;

fn polish(obj: &Objective, start: &TrapezoidalFactor, opts: &FitOptions) -> StartResult {
    let lopts = LbfgsOptions {
        max_iter: opts.max_iter,
        grad_tol: opts.grad_tol,
        f_rel_tol: opts.f_rel_tol,
        ..Default::default()
    };
    let neg = |x: &[f64]| {
        let (v, g) = obj.mean_loglik_and_grad(x);
        (-v, g.into_iter().map(|gi| -gi).collect::<Vec<f64>>())
    };
    // The gradient scales with 1/‖T‖, so the tolerance is checked again
    // after renormalizing and the run resumed if it no longer holds.
    let mut factor = start.normalized();
    let mut iterations = 0;
    for _ in 0..POLISH_ROUNDS {
        let res = optim::minimize(neg, &factor.to_params(), &lopts);
        iterations += res.iterations;
        factor = TrapezoidalFactor::from_params(obj.rank, obj.dim, &res.x).normalized();
        let (_, g) = neg(&factor.to_params());
        if g.iter().map(|v| v * v).sum::<f64>().sqrt() < opts.grad_tol || iterations >= opts.max_iter {
            break;
        }
    }
    let loglik = obj.loglik(&factor);
    StartResult { factor, loglik, iterations }
}

/// Maximum-likelihood fit over rank-`r` states `T†T/Tr(T†T)`.
///
/// Runs `restarts` random starts plus the optional warm start, each polished
/// by L-BFGS, and returns the highest-likelihood result (ties go to the
/// lowest start index).
pub fn fit_rank(data: &CountsDataset, r: usize, opts: &FitOptions) -> Result<ModelFit> {
    data.require_complete()?;
    let k = data.num_qubits();
    let d = 1usize << k;
    if r == 0 || r > d {
        return Err(Error::RankOutOfRange { rank: r, max: d });
    }
    let obj = Objective::new(data, r, Some(opts.floor))?;

    let mut starts = Vec::with_capacity(opts.restarts + 1);
    if let Some(w) = &opts.warm_start {
        if w.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: w.dim() });
        }
        let mut g = rng::sub_rng(opts.seed, u64::MAX);
        match w.rank() {
            x if x == r => starts.push(w.normalized()),
            x if x + 1 == r => starts.push(w.padded(opts.pad_scale, &mut g)?),
            x => return Err(Error::RankOutOfRange { rank: x, max: r }),
        }
    }
    for i in 0..opts.restarts {
        let mut g = rng::sub_rng(opts.seed, i as u64);
        starts.push(TrapezoidalFactor::random(r, d, &mut g));
    }
    if starts.is_empty() {
        return Err(Error::Domain("no starting points".into()));
    }

    let results: Vec<StartResult> = starts.par_iter().map(|s| polish(&obj, s, opts)).collect();
    let (best_idx, best) = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.loglik.is_finite())
        .fold(None::<(usize, &StartResult)>, |acc, (i, r)| match acc {
            Some((_, b)) if b.loglik >= r.loglik => acc,
            _ => Some((i, r)),
        })
        .ok_or_else(|| Error::FitFailed(format!("all {} starts diverged at rank {r}", results.len())))?;

    let (_, g) = obj.mean_loglik_and_grad(&best.factor.to_params());
    let grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(ModelFit {
        rank: r,
        factor: best.factor.clone(),
        loglik: best.loglik,
        converged: grad_norm < opts.grad_tol,
        iterations: best.iterations,
        restarts: results.len(),
        best_start: best_idx,
        grad_norm,
        total_count: obj.total() as u64,
        data_id: dataset_id(data),
    })
}

/// Result of the iterative full-rank fit.
#[derive(Debug, Clone)]
pub struct IterativeFit {
    pub state: DensityMatrix,
    pub loglik: f64,
    pub iterations: usize,
}

/// Full-rank MLE by the fixed-point iteration `ρ ← RρR / Tr(RρR)` with
/// `R = Σ (N/P) P_s^d`, started at the maximally mixed state.
pub fn fit_full_iterative(data: &CountsDataset, max_iter: usize, tol: f64) -> Result<IterativeFit> {
    data.require_complete()?;
    let k = data.num_qubits();
    let d = num_outcomes(k);
    let counts = data.flat()?;
    let unitaries: Vec<CMatrix> = Setting::all(k).map(|s| pauli::setting_unitary(&s)).collect();
    let adjoints: Vec<CMatrix> = unitaries.iter().map(|u| u.adjoint()).collect();

    let mut rho = DensityMatrix::maximally_mixed(k).matrix().clone();
    let mut probs = probabilities_with(&rho, &unitaries, &adjoints, d);
    let mut ll = loglik_from_probs(&counts, &probs);
    let mut iterations = 0;
    while iterations < max_iter {
        let mut rop = CMatrix::zeros(d, d);
        for (idx, (u, ua)) in unitaries.iter().zip(&adjoints).enumerate() {
            let mut scaled = u.clone();
            for s in 0..d {
                let n = counts[idx * d + s];
                let p = probs[idx * d + s];
                let w = if n > 0.0 && p > 0.0 { n / p } else { 0.0 };
                scaled.column_mut(s).scale_mut(w);
            }
            rop += scaled * ua;
        }
        let next = &rop * &rho * &rop;
        let tr = next.trace().re;
        if tr.is_nan() || tr <= 0.0 {
            break;
        }
        let next = crate::linalg::symmetrize(&(next / C64::new(tr, 0.0)));
        let next_probs = probabilities_with(&next, &unitaries, &adjoints, d);
        let next_ll = loglik_from_probs(&counts, &next_probs);
        iterations += 1;
        let improved = next_ll - ll;
        rho = next;
        probs = next_probs;
        ll = next_ll;
        if improved < tol {
            break;
        }
    }
    Ok(IterativeFit { state: DensityMatrix::new(rho).map_err(|e| Error::FitFailed(e.to_string()))?, loglik: ll, iterations })
}

fn probabilities_with(rho: &CMatrix, us: &[CMatrix], uas: &[CMatrix], d: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(us.len() * d);
    for (u, ua) in us.iter().zip(uas) {
        let m = ua * rho * u;
        out.extend((0..d).map(|s| m[(s, s)].re));
    }
    out
}

/// Setting used by the naive estimator for a Pauli word: the word's axes,
/// with identity letters measured along `z`.
pub fn naive_setting(word: &[Letter]) -> Setting {
    let axes = word.iter().map(|l| l.axis().unwrap_or(crate::pauli::Axis::Z)).collect();
    Setting::new(axes).expect("nonempty word")
}

/// Naive linear-inversion estimate in the normalized Pauli basis.
pub fn naive_coefficients(data: &CountsDataset) -> Result<PauliCoefficients> {
    data.require_complete()?;
    let k = data.num_qubits();
    let norm = 0.5f64.powf(k as f64 / 2.0);
    let mut coeffs = vec![0.0; 1 << (2 * k)];
    coeffs[0] = norm;
    for (w, c) in coeffs.iter_mut().enumerate().skip(1) {
        let word = pauli::word_from_index(k, w);
        let setting = naive_setting(&word);
        let counts = data.counts(&setting).expect("complete dataset");
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidDataset(format!("setting {setting} has zero repetitions")));
        }
        let mut acc = 0.0;
        for (s, &cnt) in counts.iter().enumerate() {
            let mut sign = 1.0;
            for (j, l) in word.iter().enumerate() {
                if *l != Letter::Id && (s >> (k - 1 - j)) & 1 == 1 {
                    sign = -sign;
                }
            }
            acc += sign * cnt as f64;
        }
        *c = norm * acc / n as f64;
    }
    PauliCoefficients::from_vec(k, coeffs)
}

/// Naive linear-inversion estimator (selfadjoint, unit trace, not
/// necessarily positive).
pub fn naive_estimate(data: &CountsDataset) -> Result<CMatrix> {
    Ok(pauli::pauli_reconstruct(&naive_coefficients(data)?))
}

impl QuantumState for ModelFit {
    fn num_qubits(&self) -> usize {
        self.factor.num_qubits()
    }

    fn probabilities(&self, setting: &Setting) -> Result<Vec<f64>> {
        self.factor.probabilities(setting)
    }

    fn all_probabilities(&self) -> Vec<f64> {
        self.factor.all_probabilities()
    }

    fn density(&self) -> DensityMatrix {
        self.state()
    }
}
