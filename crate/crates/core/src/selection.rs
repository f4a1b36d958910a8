//! Model dimension, AIC/BIC, rank scans and log-likelihood ratios.

use crate::dataset::CountsDataset;
use crate::error::{Error, Result};
use crate::fit::{dataset_id, fit_rank, FitOptions, ModelFit};

/// Intrinsic dimension `p(d, r) = 2dr − r² − 1` of rank-`r` states in
/// dimension `d`.
pub fn model_dim(d: usize, r: usize) -> Result<usize> {
    if r == 0 || r > d {
        return Err(Error::RankOutOfRange { rank: r, max: d });
    }
    Ok(2 * d * r - r * r - 1)
}

/// Penalized log-likelihoods for one fitted rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationCriteria {
    pub aic: f64,
    pub bic: f64,
    /// `p(d, r)`.
    pub dim: usize,
    /// False when the underlying fit did not reach its gradient tolerance.
    pub converged: bool,
}

/// AIC and BIC from a log-likelihood, with `N_tot` the total measurement count.
pub fn criteria_from_loglik(loglik: f64, d: usize, r: usize, total: u64) -> Result<(f64, f64)> {
    if total == 0 {
        return Err(Error::InvalidDataset("dataset has no counts".into()));
    }
    let p = model_dim(d, r)? as f64;
    Ok((-2.0 * loglik + 2.0 * p, -2.0 * loglik + p * (total as f64).ln()))
}

/// `AIC = −2ℓ̂ + 2p`, `BIC = −2ℓ̂ + p·log N_tot`.
pub fn information_criteria(fit: &ModelFit, data: &CountsDataset) -> Result<InformationCriteria> {
    check_same_data(fit, data)?;
    let d = 1usize << data.num_qubits();
    let (aic, bic) = criteria_from_loglik(fit.loglik, d, fit.rank, data.total())?;
    Ok(InformationCriteria { aic, bic, dim: model_dim(d, fit.rank)?, converged: fit.converged })
}

fn check_same_data(fit: &ModelFit, data: &CountsDataset) -> Result<()> {
    if fit.data_id() != dataset_id(data) {
        return Err(Error::InvalidDataset("fit was computed on a different dataset".into()));
    }
    Ok(())
}

/// `Λ = 2(ℓ̂_hi − ℓ̂_lo)` between nested rank models fitted to the same data.
pub fn log_likelihood_ratio(fit_hi: &ModelFit, fit_lo: &ModelFit) -> Result<f64> {
    if fit_hi.data_id() != fit_lo.data_id() {
        return Err(Error::InvalidDataset("fits come from different datasets".into()));
    }
    if fit_hi.rank < fit_lo.rank {
        return Err(Error::Domain(format!(
            "higher model has rank {} below lower model rank {}",
            fit_hi.rank, fit_lo.rank
        )));
    }
    Ok(2.0 * (fit_hi.loglik - fit_lo.loglik))
}

/// Options for [`scan_ranks`].
#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Stop once both criteria have gone this many ranks without a new minimum.
    pub stop_after_increases: usize,
    /// Highest rank to fit; `None` means the Hilbert dimension.
    pub max_rank: Option<usize>,
    pub fit: FitOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { stop_after_increases: 2, max_rank: None, fit: FitOptions::default() }
    }
}

/// One fitted rank within a scan.
#[derive(Debug, Clone)]
pub struct RankEntry {
    pub fit: ModelFit,
    pub criteria: InformationCriteria,
}

impl RankEntry {
    pub fn rank(&self) -> usize {
        self.fit.rank
    }

    pub fn loglik(&self) -> f64 {
        self.fit.loglik
    }
}

/// Fits over ranks `1..=stop_rank` with the ranks selected by each criterion.
#[derive(Debug, Clone)]
pub struct RankScan {
    pub entries: Vec<RankEntry>,
    pub selected_rank_aic: usize,
    pub selected_rank_bic: usize,
    pub stop_rank: usize,
    pub total_count: u64,
    /// Error message of the rank that aborted the scan, if any.
    pub failure: Option<String>,
}

impl RankScan {
    pub fn entry(&self, r: usize) -> Option<&RankEntry> {
        self.entries.iter().find(|e| e.rank() == r)
    }

    pub fn fit(&self, r: usize) -> Option<&ModelFit> {
        self.entry(r).map(|e| &e.fit)
    }
}

/// Smallest rank attaining the minimum of `crit`.
fn argmin(entries: &[RankEntry], crit: impl Fn(&InformationCriteria) -> f64) -> usize {
    let mut best = &entries[0];
    for e in &entries[1..] {
        if crit(&e.criteria) < crit(&best.criteria) {
            best = e;
        }
    }
    best.rank()
}

/// Fit ranks `1, 2, …`, warm-starting each from the previous fit, until both
/// criteria have failed to improve for `stop_after_increases` consecutive
/// ranks or `max_rank` is reached.
///
/// A rank whose fit fails ends the scan; earlier ranks are kept and the
/// error is recorded in [`RankScan::failure`]. A failure at rank 1 is
/// returned as an error.
pub fn scan_ranks(data: &CountsDataset, opts: &ScanOptions) -> Result<RankScan> {
    data.require_complete()?;
    let d = 1usize << data.num_qubits();
    let max_rank = opts.max_rank.unwrap_or(d);
    if max_rank == 0 || max_rank > d {
        return Err(Error::RankOutOfRange { rank: max_rank, max: d });
    }
    let patience = opts.stop_after_increases.max(1);
    let mut entries: Vec<RankEntry> = Vec::new();
    let mut failure = None;
    for r in 1..=max_rank {
        let mut fopts = opts.fit.clone();
        if let Some(prev) = entries.last() {
            fopts.warm_start = Some(prev.fit.factor.clone());
        }
        let fit = match fit_rank(data, r, &fopts) {
            Ok(f) => f,
            Err(e) if r > 1 => {
                failure = Some(format!("rank {r}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let criteria = information_criteria(&fit, data)?;
        entries.push(RankEntry { fit, criteria });
        let best_aic = argmin(&entries, |c| c.aic);
        let best_bic = argmin(&entries, |c| c.bic);
        if r >= best_aic + patience && r >= best_bic + patience {
            break;
        }
    }
    Ok(RankScan {
        selected_rank_aic: argmin(&entries, |c| c.aic),
        selected_rank_bic: argmin(&entries, |c| c.bic),
        stop_rank: entries.last().map(|e| e.rank()).unwrap_or(0),
        total_count: data.total(),
        entries,
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::simulate_dataset;
    use crate::states::random_state;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dimension_formula() {
        assert_eq!(model_dim(16, 1).unwrap(), 30);
        assert_eq!(model_dim(16, 16).unwrap(), 255);
        assert_eq!(model_dim(16, 3).unwrap() - model_dim(16, 2).unwrap(), 27);
        assert!(model_dim(4, 5).is_err());
        assert!(model_dim(4, 0).is_err());
    }

    #[test]
    fn bic_step_constant() {
        let total = 100 * 81;
        let (_, b2) = criteria_from_loglik(0.0, 16, 2, total).unwrap();
        let (_, b3) = criteria_from_loglik(0.0, 16, 3, total).unwrap();
        let step = b3 - b2;
        assert_abs_diff_eq!(step, 27.0 * 8100f64.ln(), epsilon = 1e-9);
        // 242.9897…: the two-decimal truncation is 242.98.
        assert_eq!((step * 100.0).floor() / 100.0, 242.98);
    }

    #[test]
    fn plug_in_values() {
        let (aic, bic) = criteria_from_loglik(0.0, 2, 1, 30).unwrap();
        assert_abs_diff_eq!(aic, 4.0);
        assert_abs_diff_eq!(bic, 2.0 * 30f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn scan_selects_and_stops() {
        let rho = random_state(2, 1, 3).unwrap();
        let data = simulate_dataset(&rho, 200, 4).unwrap();
        let scan = scan_ranks(&data, &ScanOptions::default()).unwrap();
        assert_eq!(scan.selected_rank_bic, 1);
        assert!(scan.stop_rank <= 4);
        for w in scan.entries.windows(2) {
            assert!(w[1].loglik() >= w[0].loglik() - 1e-6);
        }
        for e in &scan.entries {
            let p = e.criteria.dim as f64;
            let want = p * (2.0 - (scan.total_count as f64).ln());
            assert_abs_diff_eq!(e.criteria.aic - e.criteria.bic, want, epsilon = 1e-9 * e.criteria.aic.abs());
        }
    }

    #[test]
    fn mismatched_datasets_rejected() {
        let rho = random_state(1, 2, 3).unwrap();
        let a = simulate_dataset(&rho, 50, 1).unwrap();
        let b = simulate_dataset(&rho, 50, 2).unwrap();
        let fa = fit_rank(&a, 2, &FitOptions::default()).unwrap();
        let fb = fit_rank(&b, 1, &FitOptions::default()).unwrap();
        assert!(log_likelihood_ratio(&fa, &fb).is_err());
        assert!(information_criteria(&fa, &b).is_err());
        assert_eq!(log_likelihood_ratio(&fa, &fa).unwrap(), 0.0);
    }
}
