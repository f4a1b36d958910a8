//! Pearson goodness-of-fit statistic, measurement KL divergence, and the
//! asymptotic and parametric-bootstrap tests built on them.

use rayon::prelude::*;

use crate::dataset::{simulate_from_probabilities, CountsDataset};
use crate::error::{Error, Result};
use crate::fit::{fit_rank, FitOptions, ModelFit};
use crate::pauli::{num_outcomes, num_settings};
use crate::rng;
use crate::selection::model_dim;
use crate::states::QuantumState;

use super::chi2::ChiSquare;

/// `T = Σ_{s,d} (N − E)²/E` with `E(s|d) = n(d)·P(s|d)`.
///
/// Cells with `E = N = 0` contribute nothing; a cell with `E = 0 < N`
/// makes the statistic infinite.
pub fn pearson_statistic<S: QuantumState + ?Sized>(data: &CountsDataset, state: &S) -> Result<f64> {
    if data.num_qubits() != state.num_qubits() {
        return Err(Error::DimensionMismatch { expected: state.num_qubits(), got: data.num_qubits() });
    }
    let counts = data.flat()?;
    let probs = state.all_probabilities();
    Ok(pearson_from_probs(&counts, &probs, &data.repetitions_all()))
}

fn pearson_from_probs(counts: &[f64], probs: &[f64], reps: &[u64]) -> f64 {
    let d = counts.len() / reps.len();
    let mut t = 0.0;
    for (c, (&n, &p)) in counts.iter().zip(probs).enumerate() {
        let e = reps[c / d] as f64 * p.max(0.0);
        if e > 0.0 {
            t += (n - e) * (n - e) / e;
        } else if n > 0.0 {
            return f64::INFINITY;
        }
    }
    t
}

/// Degrees of freedom `3^k (2^k − 1) − p(2^k, r)` of the Pearson statistic
/// for a rank-`r` fit.
pub fn pearson_df(k: usize, r: usize) -> Result<usize> {
    let free_cells = num_settings(k) * (num_outcomes(k) - 1);
    Ok(free_cells - model_dim(num_outcomes(k), r)?)
}

/// `Σ_d Σ_s P_ρ(s|d) log(P_ρ(s|d)/P_τ(s|d))`, summed over all settings.
/// `0·log 0 = 0`; infinite when `P_τ = 0 < P_ρ`.
pub fn kl_measurement<A, B>(rho: &A, tau: &B) -> Result<f64>
where
    A: QuantumState + ?Sized,
    B: QuantumState + ?Sized,
{
    if rho.num_qubits() != tau.num_qubits() {
        return Err(Error::DimensionMismatch { expected: rho.num_qubits(), got: tau.num_qubits() });
    }
    let p = rho.all_probabilities();
    let q = tau.all_probabilities();
    let mut kl = 0.0;
    for (&a, &b) in p.iter().zip(&q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += a * (a / b).ln();
        }
    }
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    Asymptotic,
    Bootstrap,
}

impl std::fmt::Display for TestMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TestMethod::Asymptotic => "asymptotic",
            TestMethod::Bootstrap => "bootstrap",
        })
    }
}

/// Level-`α` goodness-of-fit test of the rank-`r` model.
#[derive(Debug, Clone)]
pub struct TestResult {
    pub rank: usize,
    pub statistic: f64,
    pub df: usize,
    pub alpha: f64,
    pub p_value: f64,
    /// Critical value `t_α`; the model is rejected iff `statistic > threshold`.
    pub threshold: f64,
    pub reject: bool,
    pub method: TestMethod,
    pub bootstrap_samples: Option<Vec<f64>>,
    /// Bootstrap replicates dropped because their refit failed.
    pub dropped: usize,
    /// χ²(df) p-value and critical value, reported alongside the bootstrap
    /// ones (absent when `df = 0`).
    pub asymptotic_p_value: Option<f64>,
    pub asymptotic_threshold: Option<f64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("test level must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn asymptotic(df: usize, statistic: f64, alpha: f64) -> Result<Option<(f64, f64)>> {
    if df == 0 {
        return Ok(None);
    }
    let c = ChiSquare::new(df as f64)?;
    Ok(Some((c.sf(statistic), c.quantile(1.0 - alpha)?)))
}

/// Pearson test of `fit` against χ²(df) at level `alpha`.
pub fn pearson_test(data: &CountsDataset, fit: &ModelFit, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let statistic = pearson_statistic(data, &fit.factor)?;
    let df = pearson_df(data.num_qubits(), fit.rank)?;
    let (p_value, threshold) = asymptotic(df, statistic, alpha)?
        .ok_or_else(|| Error::Domain(format!("rank {} leaves no degrees of freedom", fit.rank)))?;
    Ok(TestResult {
        rank: fit.rank,
        statistic,
        df,
        alpha,
        p_value,
        threshold,
        reject: statistic > threshold,
        method: TestMethod::Asymptotic,
        bootstrap_samples: None,
        dropped: 0,
        asymptotic_p_value: Some(p_value),
        asymptotic_threshold: Some(threshold),
    })
}

/// Options for [`bootstrap_pearson`].
#[derive(Debug, Clone)]
pub struct BootstrapOptions {
    /// Number of bootstrap datasets `N`.
    pub samples: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Options of the fit to the observed data.
    pub fit: FitOptions,
    /// Random restarts per replicate refit, in addition to the warm start
    /// at the observed-data fit.
    pub replicate_restarts: usize,
    /// Abort when more than this fraction of replicates fail to refit.
    pub max_drop_fraction: f64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            samples: 100,
            alpha: 0.05,
            seed: 0,
            fit: FitOptions::default(),
            replicate_restarts: 2,
            max_drop_fraction: 0.2,
        }
    }
}

/// Parametric-bootstrap Pearson test of the rank-`r` model: fit `ρ̂_r`,
/// simulate `N` datasets from it, refit each at rank `r`, take each
/// replicate's statistic against its own refit, and reject when the observed
/// statistic exceeds the empirical `1 − α` quantile.
pub fn bootstrap_pearson(data: &CountsDataset, r: usize, opts: &BootstrapOptions) -> Result<TestResult> {
    let fit = fit_rank(data, r, &FitOptions { seed: opts.seed, ..opts.fit.clone() })?;
    bootstrap_pearson_from_fit(data, &fit, opts)
}

/// [`bootstrap_pearson`] starting from an existing fit of `data`.
pub fn bootstrap_pearson_from_fit(data: &CountsDataset, fit: &ModelFit, opts: &BootstrapOptions) -> Result<TestResult> {
    check_alpha(opts.alpha)?;
    if opts.samples == 0 {
        return Err(Error::Domain("bootstrap needs at least one sample".into()));
    }
    if fit.data_id() != crate::fit::dataset_id(data) {
        return Err(Error::InvalidDataset("fit was computed on a different dataset".into()));
    }
    let k = data.num_qubits();
    let r = fit.rank;
    let statistic = pearson_statistic(data, &fit.factor)?;
    let probs = fit.factor.all_probabilities();
    let reps = data.repetitions_all();

    let replicates: Vec<Option<f64>> = (0..opts.samples as u64)
        .into_par_iter()
        .map(|b| {
            let sim = simulate_from_probabilities(k, &probs, &reps, rng::sub_seed(opts.seed, 2 * b));
            let fopts = FitOptions {
                restarts: opts.replicate_restarts,
                warm_start: Some(fit.factor.clone()),
                seed: rng::sub_seed(opts.seed, 2 * b + 1),
                ..opts.fit.clone()
            };
            let refit = fit_rank(&sim, r, &fopts).ok()?;
            pearson_statistic(&sim, &refit.factor).ok().filter(|t| t.is_finite())
        })
        .collect();
    let samples: Vec<f64> = replicates.iter().flatten().copied().collect();
    let dropped = opts.samples - samples.len();
    if dropped as f64 > opts.max_drop_fraction * opts.samples as f64 {
        return Err(Error::FitFailed(format!("{dropped} of {} bootstrap refits failed", opts.samples)));
    }
    let threshold = upper_quantile(&samples, 1.0 - opts.alpha);
    let exceed = samples.iter().filter(|&&t| t >= statistic).count();
    let p_value = (1 + exceed) as f64 / (1 + samples.len()) as f64;
    let df = pearson_df(k, r)?;
    let asym = asymptotic(df, statistic, opts.alpha)?;
    Ok(TestResult {
        rank: r,
        statistic,
        df,
        alpha: opts.alpha,
        p_value,
        threshold,
        reject: statistic > threshold,
        method: TestMethod::Bootstrap,
        bootstrap_samples: Some(samples),
        dropped,
        asymptotic_p_value: asym.map(|a| a.0),
        asymptotic_threshold: asym.map(|a| a.1),
    })
}

/// Empirical quantile: the `⌈q·m⌉`-th smallest of `m` values.
pub fn upper_quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}
