//! Classical Fisher information of the Pauli measurement model, the
//! Hilbert–Schmidt metric `G`, and the resulting asymptotic MSE.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::chart::Chart;
use crate::dataset::CountsDataset;
use crate::error::{Error, Result};
use crate::linalg::{trace_product_re, CMatrix, ZERO};
use crate::optim::{self, LbfgsOptions};
use crate::pauli::{num_outcomes, setting_unitary, Setting};

/// Probabilities below this are treated as zero by the Fisher computations.
pub const MIN_CELL_PROBABILITY: f64 = 1e-12;

/// Cell probabilities and their derivatives along each chart coordinate.
pub(crate) struct CellDerivatives {
    pub probs: Vec<f64>,
    /// `grads[j][c] = ∂P_c/∂θ_j`, cells setting-major.
    pub grads: Vec<Vec<f64>>,
}

/// `⟨e_s|a|e_s⟩` for every column `e_s` of `u`.
fn diag_sandwich(u: &CMatrix, a: &CMatrix) -> Vec<f64> {
    let au = a * u;
    (0..u.ncols())
        .map(|s| {
            let mut acc = ZERO;
            for t in 0..u.nrows() {
                acc += u[(t, s)].conj() * au[(t, s)];
            }
            acc.re
        })
        .collect()
}

pub(crate) fn cell_derivatives<C: Chart + ?Sized>(chart: &C, theta: &[f64]) -> Result<CellDerivatives> {
    let k = chart.num_qubits();
    let rho = chart.density(theta)?;
    let jac = chart.jacobian(theta)?;
    let settings: Vec<Setting> = Setting::all(k).collect();
    let per_setting: Vec<(Vec<f64>, Vec<Vec<f64>>)> = settings
        .par_iter()
        .map(|s| {
            let u = setting_unitary(s);
            (diag_sandwich(&u, &rho), jac.iter().map(|a| diag_sandwich(&u, a)).collect())
        })
        .collect();
    let mut probs = Vec::with_capacity(settings.len() * num_outcomes(k));
    let mut grads = vec![Vec::with_capacity(probs.capacity()); jac.len()];
    for (p, g) in per_setting {
        probs.extend(p);
        for (dst, src) in grads.iter_mut().zip(g) {
            dst.extend(src);
        }
    }
    Ok(CellDerivatives { probs, grads })
}

/// Per-repetition-set Fisher information
/// `I₁_{jk} = Σ_d Σ_s ∂_j P(s|d) ∂_k P(s|d) / P(s|d)` (one shot of every
/// setting). Refuses states with any cell probability below
/// [`MIN_CELL_PROBABILITY`].
pub fn fisher_information<C: Chart + ?Sized>(chart: &C, theta: &[f64]) -> Result<DMatrix<f64>> {
    let cd = cell_derivatives(chart, theta)?;
    if let Some(p) = cd.probs.iter().find(|&&p| p < MIN_CELL_PROBABILITY) {
        return Err(Error::SingularModel(format!("cell probability {p:e} at the evaluation point")));
    }
    let w: Vec<f64> = cd.probs.iter().map(|p| 1.0 / p).collect();
    Ok(weighted_gram(&cd.grads, &w))
}

fn weighted_gram(rows: &[Vec<f64>], w: &[f64]) -> DMatrix<f64> {
    let p = rows.len();
    let mut m = DMatrix::zeros(p, p);
    for j in 0..p {
        for l in 0..=j {
            let v: f64 = rows[j].iter().zip(&rows[l]).zip(w).map(|((a, b), c)| a * b * c).sum();
            m[(j, l)] = v;
            m[(l, j)] = v;
        }
    }
    m
}

/// Metric `G_{jk} = Tr(∂_j ρ ∂_k ρ)`, so `‖ρ_{θ+δ} − ρ_θ‖₂² ≈ δᵀGδ`.
pub fn g_matrix<C: Chart + ?Sized>(chart: &C, theta: &[f64]) -> Result<DMatrix<f64>> {
    let jac = chart.jacobian(theta)?;
    let p = jac.len();
    let mut g = DMatrix::zeros(p, p);
    for j in 0..p {
        for l in 0..=j {
            let v = trace_product_re(&jac[j], &jac[l]);
            g[(j, l)] = v;
            g[(l, j)] = v;
        }
    }
    Ok(g)
}

/// Fisher information and metric at one chart point.
#[derive(Debug, Clone)]
pub struct FisherPair {
    pub fisher: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

impl FisherPair {
    pub fn new<C: Chart + ?Sized>(chart: &C, theta: &[f64]) -> Result<Self> {
        Ok(FisherPair { fisher: fisher_information(chart, theta)?, g: g_matrix(chart, theta)? })
    }

    /// `Tr(G I₁⁻¹)`.
    pub fn trace_g_inv(&self) -> Result<f64> {
        trace_g_inv(&self.g, &self.fisher)
    }

    /// `Tr(G I₁⁻¹)/n` for `n` repetitions of every setting.
    pub fn asymptotic_mse(&self, n: f64) -> Result<f64> {
        Ok(self.trace_g_inv()? / n)
    }
}

/// `Tr(G F⁻¹)` for a symmetric positive definite `F`.
pub fn trace_g_inv(g: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<f64> {
    let chol = f
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularModel("information matrix is not positive definite".into()))?;
    let x = chol.solve(g);
    let t = x.trace();
    if !t.is_finite() {
        return Err(Error::SingularModel("information matrix is numerically singular".into()));
    }
    Ok(t)
}

/// Asymptotic norm-two MSE `Tr(G I₁⁻¹)/n` of an efficient estimator.
pub fn asymptotic_mse<C: Chart + ?Sized>(chart: &C, theta: &[f64], n: f64) -> Result<f64> {
    FisherPair::new(chart, theta)?.asymptotic_mse(n)
}

/// Best MSE over all measurements for pure states,
/// `2(2^k − 1)/(3^k n)`.
pub fn qmse_bound(k: usize, n: f64) -> f64 {
    2.0 * ((1u64 << k) - 1) as f64 / (3f64.powi(k as i32) * n)
}

/// Fisher information of the coarse-grained data that keeps only the
/// per-setting mean of the full parity `Π_j s_j`:
/// `Σ_d ∂_j m_d ∂_k m_d / (1 − m_d²)` with `m_d = Tr(ρ σ_{d_1}⊗…⊗σ_{d_k})`.
pub fn coarse_fisher<C: Chart + ?Sized>(chart: &C, theta: &[f64]) -> Result<DMatrix<f64>> {
    let cd = cell_derivatives(chart, theta)?;
    let d = num_outcomes(chart.num_qubits());
    let parity: Vec<f64> = (0..d).map(|s| if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let contract = |v: &[f64]| -> Vec<f64> {
        v.chunks_exact(d).map(|c| c.iter().zip(&parity).map(|(a, b)| a * b).sum()).collect()
    };
    let m = contract(&cd.probs);
    if let Some(x) = m.iter().find(|x| 1.0 - x.abs() < MIN_CELL_PROBABILITY) {
        return Err(Error::SingularModel(format!("parity mean {x} has unit modulus")));
    }
    let dm: Vec<Vec<f64>> = cd.grads.iter().map(|g| contract(g)).collect();
    let w: Vec<f64> = m.iter().map(|x| 1.0 / (1.0 - x * x)).collect();
    Ok(weighted_gram(&dm, &w))
}

/// Maximum-likelihood point on a chart.
#[derive(Debug, Clone)]
pub struct ChartFit {
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Maximize `ℓ` over the chart coordinates not marked in `pinned`, starting
/// at `theta0` (pinned coordinates keep their `theta0` values).
pub fn chart_mle<C: Chart + ?Sized>(chart: &C, data: &CountsDataset, theta0: &[f64], pinned: &[bool]) -> Result<ChartFit> {
    let p = chart.num_params();
    if theta0.len() != p || pinned.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: theta0.len().min(pinned.len()) });
    }
    if data.num_qubits() != chart.num_qubits() {
        return Err(Error::DimensionMismatch { expected: chart.num_qubits(), got: data.num_qubits() });
    }
    let counts = data.flat()?;
    let total: f64 = counts.iter().sum();
    let free: Vec<usize> = (0..p).filter(|&j| !pinned[j]).collect();
    let embed = |x: &[f64]| {
        let mut th = theta0.to_vec();
        for (v, &j) in x.iter().zip(&free) {
            th[j] = *v;
        }
        th
    };
    let eval = |x: &[f64]| -> (f64, Vec<f64>) {
        let Ok(cd) = cell_derivatives(chart, &embed(x)) else {
            return (f64::INFINITY, vec![0.0; x.len()]);
        };
        let mut ll = 0.0;
        let mut w = vec![0.0; counts.len()];
        for (c, (&n, &pr)) in counts.iter().zip(&cd.probs).enumerate() {
            if n > 0.0 {
                if pr <= 0.0 {
                    return (f64::INFINITY, vec![0.0; x.len()]);
                }
                ll += n * pr.ln();
                w[c] = n / pr;
            }
        }
        let g = free.iter().map(|&j| -cd.grads[j].iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / total).collect();
        (-ll / total, g)
    };
    let x0: Vec<f64> = free.iter().map(|&j| theta0[j]).collect();
    let opts = LbfgsOptions { f_rel_tol: 1e-14, ..Default::default() };
    let res = optim::minimize(eval, &x0, &opts);
    if !res.f.is_finite() {
        return Err(Error::FitFailed("chart likelihood is not finite at the start point".into()));
    }
    Ok(ChartFit {
        theta: embed(&res.x),
        loglik: -res.f * total,
        grad_norm: res.grad_norm,
        converged: res.grad_norm < opts.grad_tol,
    })
}
