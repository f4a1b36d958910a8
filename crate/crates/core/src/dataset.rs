//! Per-setting outcome counts and multinomial simulation.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::{num_outcomes, num_settings, Outcome, Setting};
use crate::rng;
use crate::states::QuantumState;

/// Outcome counts `N(s|d)` for a `k`-qubit Pauli experiment.
///
/// Settings may be missing (an incomplete dataset); fitting requires every
/// one of the `3^k` settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsDataset {
    k: usize,
    counts: Vec<Option<Vec<u64>>>,
}

impl CountsDataset {
    pub fn empty(k: usize) -> Self {
        CountsDataset { k, counts: vec![None; num_settings(k)] }
    }

    /// Complete dataset from setting-major flat counts.
    pub fn from_flat(k: usize, flat: &[u64]) -> Result<Self> {
        let d = num_outcomes(k);
        if flat.len() != d * num_settings(k) {
            return Err(Error::DimensionMismatch { expected: d * num_settings(k), got: flat.len() });
        }
        Ok(CountsDataset { k, counts: flat.chunks_exact(d).map(|c| Some(c.to_vec())).collect() })
    }

    pub fn num_qubits(&self) -> usize {
        self.k
    }

    /// Set the counts for one setting, replacing any previous ones.
    pub fn insert(&mut self, setting: &Setting, counts: Vec<u64>) -> Result<()> {
        if setting.num_qubits() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: setting.num_qubits() });
        }
        if counts.len() != num_outcomes(self.k) {
            return Err(Error::DimensionMismatch { expected: num_outcomes(self.k), got: counts.len() });
        }
        self.counts[setting.index()] = Some(counts);
        Ok(())
    }

    /// Add to a single cell, creating the setting row if needed.
    pub fn add_cell(&mut self, setting: &Setting, outcome: &Outcome, count: u64) -> Result<()> {
        if setting.num_qubits() != self.k || outcome.signs().len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: outcome.signs().len() });
        }
        let row = self.counts[setting.index()].get_or_insert_with(|| vec![0; num_outcomes(self.k)]);
        row[outcome.index()] += count;
        Ok(())
    }

    pub fn counts(&self, setting: &Setting) -> Option<&[u64]> {
        self.counts.get(setting.index()).and_then(|c| c.as_deref())
    }

    /// Repetitions `n(d)` for a setting (0 when missing).
    pub fn repetitions(&self, setting: &Setting) -> u64 {
        self.counts(setting).map(|c| c.iter().sum()).unwrap_or(0)
    }

    /// Per-setting repetitions in canonical order (0 for missing settings).
    pub fn repetitions_all(&self) -> Vec<u64> {
        self.counts.iter().map(|c| c.as_ref().map(|v| v.iter().sum()).unwrap_or(0)).collect()
    }

    /// Total measurement count `Σ_d n(d)`.
    pub fn total(&self) -> u64 {
        self.repetitions_all().iter().sum()
    }

    pub fn missing_settings(&self) -> usize {
        self.counts.iter().filter(|c| c.is_none()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_settings() == 0
    }

    pub fn require_complete(&self) -> Result<()> {
        match self.missing_settings() {
            0 => Ok(()),
            m => Err(Error::IncompleteDataset { missing: m, total: self.counts.len() }),
        }
    }

    /// Setting-major flat counts as floats; errors on incomplete data.
    pub fn flat(&self) -> Result<Vec<f64>> {
        self.require_complete()?;
        Ok(self.counts.iter().flatten().flat_map(|c| c.iter().map(|&x| x as f64)).collect())
    }

    /// Present settings with their counts, in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (Setting, &[u64])> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter_map(move |(i, c)| c.as_deref().map(|c| (Setting::from_index(self.k, i), c)))
    }
}

/// One multinomial draw by sequential binomial conditioning.
pub fn sample_multinomial(n: u64, probs: &[f64], rng: &mut rng::Rng) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p.max(0.0) / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q).expect("valid binomial").sample(rng)
        };
        out[i] = draw;
        remaining -= draw;
        mass -= p.max(0.0);
    }
    out
}

/// Simulate `n` repetitions of every setting from `state`.
///
/// Each setting uses its own sub-stream `(seed, setting index)`, so the
/// result does not depend on thread scheduling.
pub fn simulate_dataset<S: QuantumState + ?Sized>(state: &S, n: u64, seed: u64) -> Result<CountsDataset> {
    if n == 0 {
        return Err(Error::Domain("repetitions must be at least 1".into()));
    }
    let k = state.num_qubits();
    let probs = state.all_probabilities();
    if probs.iter().any(|p| !p.is_finite() || *p < -1e-10) {
        return Err(Error::InvalidState("non-finite or negative outcome probability".into()));
    }
    let d = num_outcomes(k);
    let counts: Vec<Option<Vec<u64>>> = probs
        .par_chunks_exact(d)
        .enumerate()
        .map(|(i, p)| Some(sample_multinomial(n, p, &mut rng::sub_rng(seed, i as u64))))
        .collect();
    Ok(CountsDataset { k, counts })
}

/// Simulate from explicit setting-major probabilities with per-setting repetitions.
pub fn simulate_from_probabilities(k: usize, probs: &[f64], reps: &[u64], seed: u64) -> CountsDataset {
    let d = num_outcomes(k);
    let counts = probs
        .par_chunks_exact(d)
        .zip(reps.par_iter())
        .enumerate()
        .map(|(i, (p, &n))| Some(sample_multinomial(n, p, &mut rng::sub_rng(seed, i as u64))))
        .collect();
    CountsDataset { k, counts }
}
