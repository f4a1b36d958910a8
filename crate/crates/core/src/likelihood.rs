//! Count log-likelihood `ℓ = Σ N(s|d) log P(s|d)` and its analytic gradient
//! in the raw trapezoidal-factor coordinates.

use crate::dataset::CountsDataset;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::states::{QuantumState, TrapezoidalFactor};

/// Log-likelihood of `data` under `state`, factorial constants dropped.
///
/// Zero-count cells contribute nothing; a positive count on a zero-probability
/// cell gives `-inf`.
pub fn log_likelihood<S: QuantumState + ?Sized>(state: &S, data: &CountsDataset) -> Result<f64> {
    check_dims(state.num_qubits(), data)?;
    let counts = data.flat()?;
    let probs = state.all_probabilities();
    Ok(loglik_from_probs(&counts, &probs))
}

pub(crate) fn loglik_from_probs(counts: &[f64], probs: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&n, &p) in counts.iter().zip(probs) {
        if n > 0.0 {
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += n * p.ln();
        }
    }
    acc
}

fn check_dims(k: usize, data: &CountsDataset) -> Result<()> {
    if data.num_qubits() != k {
        return Err(Error::DimensionMismatch { expected: k, got: data.num_qubits() });
    }
    Ok(())
}

/// Gradient of `ℓ` with respect to the real and imaginary parts of every free
/// entry of `t`, in the order of [`TrapezoidalFactor::to_params`].
pub fn loglik_gradient(t: &TrapezoidalFactor, data: &CountsDataset) -> Result<Vec<f64>> {
    if t.frob_sq() == 0.0 {
        return Err(Error::ZeroFactor);
    }
    check_dims(t.num_qubits(), data)?;
    let counts = data.flat()?;
    let eval = Engine::new(t.num_qubits()).loglik(t.entries(), t.rank(), &counts, None, true);
    if !eval.loglik.is_finite() {
        return Err(Error::ZeroProbabilityCell);
    }
    Ok(wirtinger_to_real(&eval.grad.expect("gradient requested"), t.rank(), t.dim()))
}

/// `∂ℓ/∂Re = 2 Re(∂ℓ/∂T̄)`, `∂ℓ/∂Im = 2 Im(∂ℓ/∂T̄)` over free entries.
pub(crate) fn wirtinger_to_real(g: &[crate::linalg::C64], r: usize, d: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * (r * d - r * (r - 1) / 2));
    for i in 0..r {
        for j in i..d {
            let z = g[i * d + j];
            out.push(2.0 * z.re);
            out.push(2.0 * z.im);
        }
    }
    out
}

/// Precomputed objective for repeated evaluation during fitting:
/// the mean log-likelihood per measurement, `ℓ / N_tot`.
pub(crate) struct Objective {
    engine: Engine,
    counts: Vec<f64>,
    total: f64,
    pub rank: usize,
    pub dim: usize,
    pub floor: Option<f64>,
}

impl Objective {
    pub fn new(data: &CountsDataset, rank: usize, floor: Option<f64>) -> Result<Self> {
        let counts = data.flat()?;
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDataset("dataset has no counts".into()));
        }
        let k = data.num_qubits();
        Ok(Objective { engine: Engine::new(k), counts, total, rank, dim: 1 << k, floor })
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// `(ℓ/N_tot, ∇(ℓ/N_tot))` at raw parameters.
    pub fn mean_loglik_and_grad(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let t = TrapezoidalFactor::from_params(self.rank, self.dim, params);
        if t.frob_sq() == 0.0 {
            return (f64::NEG_INFINITY, vec![0.0; params.len()]);
        }
        let e = self.engine.loglik(t.entries(), self.rank, &self.counts, self.floor, true);
        let mut g = wirtinger_to_real(&e.grad.expect("gradient requested"), self.rank, self.dim);
        g.iter_mut().for_each(|v| *v /= self.total);
        (e.loglik / self.total, g)
    }

    /// Unclamped log-likelihood.
    pub fn loglik(&self, t: &TrapezoidalFactor) -> f64 {
        self.engine.loglik(t.entries(), t.rank(), &self.counts, None, false).loglik
    }
}
