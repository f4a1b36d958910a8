//! State representations: density matrices, trapezoidal Cholesky factors,
//! random states and distances.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::linalg::{frob_sq, hermitian_defect, hermitian_eigenvalues, symmetrize, CMatrix, C64, ZERO};
use crate::pauli::{self, qubits_for_dim, Setting};
use crate::rng;

const STATE_TOL: f64 = 1e-10;

/// Anything that yields Pauli-setting outcome distributions.
pub trait QuantumState {
    fn num_qubits(&self) -> usize;

    /// Outcome probabilities for one setting.
    fn probabilities(&self, setting: &Setting) -> Result<Vec<f64>>;

    /// Outcome probabilities for all `3^k` settings, setting-major.
    fn all_probabilities(&self) -> Vec<f64>;

    fn density(&self) -> DensityMatrix;
}

/// Selfadjoint, positive semidefinite, unit-trace `2^k × 2^k` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    k: usize,
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates selfadjointness, trace and positivity within `1e-10`.
    pub fn new(m: CMatrix) -> Result<Self> {
        let k = qubits_for_dim(m.nrows())?;
        if m.ncols() != m.nrows() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let defect = hermitian_defect(&m);
        if defect > STATE_TOL {
            return Err(Error::NotSelfadjoint(defect));
        }
        let tr = m.trace().re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = hermitian_eigenvalues(&m).last().copied().unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix { k, m: symmetrize(&m) })
    }

    pub fn maximally_mixed(k: usize) -> Self {
        let d = 1 << k;
        DensityMatrix { k, m: CMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0) }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm == 0.0 {
            return Err(Error::ZeroFactor);
        }
        let k = qubits_for_dim(psi.len())?;
        let d = psi.len();
        let m = CMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj() / norm);
        Ok(DensityMatrix { k, m })
    }

    /// One-qubit state `(I + b·σ)/2` from a Bloch vector with `|b| ≤ 1`.
    pub fn from_bloch(b: [f64; 3]) -> Result<Self> {
        let len = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
        if len > 1.0 + STATE_TOL {
            return Err(Error::InvalidState(format!("Bloch vector length {len}")));
        }
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new((1.0 + b[2]) / 2.0, 0.0),
                C64::new(b[0] / 2.0, -b[1] / 2.0),
                C64::new(b[0] / 2.0, b[1] / 2.0),
                C64::new((1.0 - b[2]) / 2.0, 0.0),
            ],
        );
        Ok(DensityMatrix { k: 1, m })
    }

    /// `Σ_i λ_i |v_i⟩⟨v_i|` for orthonormal columns `v_i` of `basis`.
    pub fn from_spectrum(eigenvalues: &[f64], basis: &CMatrix) -> Result<Self> {
        let d = basis.nrows();
        let mut m = CMatrix::zeros(d, d);
        for (i, &l) in eigenvalues.iter().enumerate() {
            let v = basis.column(i);
            m += v * v.adjoint() * C64::new(l, 0.0);
        }
        DensityMatrix::new(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Eigenvalues in decreasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.m)
    }

    /// Number of eigenvalues above `tol`.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&l| l > tol).count()
    }

    /// Bloch vector of a one-qubit state.
    pub fn bloch(&self) -> Option<[f64; 3]> {
        (self.k == 1).then(|| {
            [2.0 * self.m[(1, 0)].re, 2.0 * self.m[(1, 0)].im, (self.m[(0, 0)] - self.m[(1, 1)]).re]
        })
    }
}

impl QuantumState for DensityMatrix {
    fn num_qubits(&self) -> usize {
        self.k
    }

    fn probabilities(&self, setting: &Setting) -> Result<Vec<f64>> {
        pauli::outcome_probabilities_dense(&self.m, setting)
    }

    fn all_probabilities(&self) -> Vec<f64> {
        Setting::all(self.k)
            .flat_map(|s| pauli::outcome_probabilities_dense(&self.m, &s).expect("matching dimension"))
            .collect()
    }

    fn density(&self) -> DensityMatrix {
        self.clone()
    }
}

/// Upper-trapezoidal `r × d` factor `T` with `ρ = T†T / Tr(T†T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapezoidalFactor {
    d: usize,
    r: usize,
    entries: Vec<C64>,
}

impl TrapezoidalFactor {
    /// Row-major `r × d` entries; entries below the diagonal must be zero.
    pub fn new(r: usize, d: usize, entries: Vec<C64>) -> Result<Self> {
        qubits_for_dim(d)?;
        if r == 0 || r > d {
            return Err(Error::RankOutOfRange { rank: r, max: d });
        }
        if entries.len() != r * d {
            return Err(Error::DimensionMismatch { expected: r * d, got: entries.len() });
        }
        for i in 0..r {
            for j in 0..i {
                if entries[i * d + j] != ZERO {
                    return Err(Error::InvalidState(format!("entry ({i},{j}) below diagonal")));
                }
            }
        }
        Ok(TrapezoidalFactor { d, r, entries })
    }

    /// Independent standard complex Gaussian free entries.
    pub fn random(r: usize, d: usize, rng: &mut rng::Rng) -> Self {
        let mut entries = vec![ZERO; r * d];
        for i in 0..r {
            for j in i..d {
                entries[i * d + j] = complex_gaussian(rng);
            }
        }
        TrapezoidalFactor { d, r, entries }
    }

    /// Rank-`r` factor reproducing the top `r` eigen-components of `rho`
    /// (exactly `rho` when its rank is at most `r`).
    pub fn from_state(rho: &DensityMatrix, r: usize) -> Result<Self> {
        let d = rho.dim();
        if r == 0 || r > d {
            return Err(Error::RankOutOfRange { rank: r, max: d });
        }
        let eig = symmetrize(rho.matrix()).symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        // B = Λ^{1/2} V†, then B = Q R with R upper trapezoidal and R†R = B†B.
        let b = CMatrix::from_fn(r, d, |i, j| {
            let idx = order[i];
            let l = eig.eigenvalues[idx].max(0.0).sqrt();
            eig.eigenvectors[(j, idx)].conj() * l
        });
        let qr = b.qr();
        let rmat = qr.r();
        let mut entries = vec![ZERO; r * d];
        for i in 0..r {
            for j in i..d {
                entries[i * d + j] = rmat[(i, j)];
            }
        }
        let t = TrapezoidalFactor { d, r, entries };
        if t.frob_sq() == 0.0 {
            return Err(Error::ZeroFactor);
        }
        Ok(t)
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.d + j]
    }

    pub fn frob_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Number of free real coordinates (real and imaginary parts of every
    /// on-or-above-diagonal entry).
    pub fn num_real_params(&self) -> usize {
        2 * (self.r * self.d - self.r * (self.r - 1) / 2)
    }

    /// Flatten free entries as `(re, im)` pairs in row-major order.
    pub fn to_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_real_params());
        for i in 0..self.r {
            for j in i..self.d {
                let z = self.entries[i * self.d + j];
                v.push(z.re);
                v.push(z.im);
            }
        }
        v
    }

    pub fn from_params(r: usize, d: usize, params: &[f64]) -> Self {
        let mut entries = vec![ZERO; r * d];
        let mut it = params.chunks_exact(2);
        for i in 0..r {
            for j in i..d {
                let c = it.next().expect("parameter length");
                entries[i * d + j] = C64::new(c[0], c[1]);
            }
        }
        TrapezoidalFactor { d, r, entries }
    }

    /// Rescale to unit Frobenius norm.
    pub fn normalized(&self) -> Self {
        let s = self.frob_sq().sqrt();
        TrapezoidalFactor {
            d: self.d,
            r: self.r,
            entries: self.entries.iter().map(|z| z / s).collect(),
        }
    }

    /// Append a row (making rank `r+1`) whose free entries are drawn with
    /// magnitude `scale` relative to the current normalization.
    pub fn padded(&self, scale: f64, rng: &mut rng::Rng) -> Result<Self> {
        if self.r >= self.d {
            return Err(Error::RankOutOfRange { rank: self.r + 1, max: self.d });
        }
        let base = self.normalized();
        let r = self.r + 1;
        let mut entries = base.entries.clone();
        entries.extend((0..self.d).map(|j| if j < self.r { ZERO } else { complex_gaussian(rng) * scale }));
        Ok(TrapezoidalFactor { d: self.d, r, entries })
    }

    /// Multiply row `i` by `phase`.
    pub fn with_row_phase(&self, i: usize, phase: C64) -> Self {
        let mut t = self.clone();
        for j in 0..self.d {
            t.entries[i * self.d + j] *= phase;
        }
        t
    }

    pub fn as_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.r, self.d, |i, j| self.entries[i * self.d + j])
    }

    /// `ρ = T†T / Tr(T†T)`.
    pub fn state(&self) -> Result<DensityMatrix> {
        let n = self.frob_sq();
        if n == 0.0 {
            return Err(Error::ZeroFactor);
        }
        let t = self.as_matrix();
        let m = t.adjoint() * &t / C64::new(n, 0.0);
        Ok(DensityMatrix { k: self.d.trailing_zeros() as usize, m: symmetrize(&m) })
    }
}

impl QuantumState for TrapezoidalFactor {
    fn num_qubits(&self) -> usize {
        self.d.trailing_zeros() as usize
    }

    /// Factored path: squared column norms of `T·U_d`, one qubit at a time.
    fn probabilities(&self, setting: &Setting) -> Result<Vec<f64>> {
        let k = self.num_qubits();
        if setting.num_qubits() != k {
            return Err(Error::DimensionMismatch { expected: k, got: setting.num_qubits() });
        }
        let all = self.all_probabilities();
        let base = setting.index() * self.d;
        Ok(all[base..base + self.d].to_vec())
    }

    fn all_probabilities(&self) -> Vec<f64> {
        let n = self.frob_sq();
        let mut w = Engine::new(self.num_qubits()).weights(&self.entries, self.r);
        w.iter_mut().for_each(|q| *q /= n);
        w
    }

    fn density(&self) -> DensityMatrix {
        self.state().expect("nonzero factor")
    }
}

/// `state_from_factor`: the normalized state of a trapezoidal factor.
pub fn state_from_factor(t: &TrapezoidalFactor) -> Result<DensityMatrix> {
    t.state()
}

pub(crate) fn complex_gaussian(rng: &mut rng::Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random pure state vector of dimension `2^k`.
pub fn haar_vector(k: usize, rng: &mut rng::Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..1usize << k).map(|_| complex_gaussian(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Minimum ratio of smallest to largest nonzero eigenvalue accepted by
/// [`random_state`] for ranks above one.
pub const MIN_EIGEN_RATIO: f64 = 0.02;

/// Random rank-`r` state on `k` qubits: `G†G / Tr` with `G` an `r × 2^k`
/// standard complex Gaussian, redrawn until the smallest nonzero eigenvalue is
/// at least [`MIN_EIGEN_RATIO`] times the largest. `r = 1` is Haar-random.
pub fn random_state(k: usize, r: usize, seed: u64) -> Result<DensityMatrix> {
    let d = 1usize << k;
    if r == 0 || r > d {
        return Err(Error::RankOutOfRange { rank: r, max: d });
    }
    let mut rng = rng::rng(seed);
    if r == 1 {
        return DensityMatrix::pure(&haar_vector(k, &mut rng));
    }
    loop {
        let g = CMatrix::from_fn(r, d, |_, _| complex_gaussian(&mut rng));
        let m = g.adjoint() * &g;
        let tr = m.trace().re;
        let rho = DensityMatrix { k, m: symmetrize(&(m / C64::new(tr, 0.0))) };
        let ev = rho.eigenvalues();
        if ev[r - 1] >= MIN_EIGEN_RATIO * ev[0] {
            return Ok(rho);
        }
    }
}

/// Squared Hilbert–Schmidt (norm-two) distance `Σ |ρ_ij − σ_ij|²`.
pub fn hs_distance_sq(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch { expected: rho.nrows(), got: sigma.nrows() });
    }
    Ok(frob_sq(&(rho - sigma)))
}

/// Trace-norm distance `Tr|ρ − σ|`.
pub fn trace_norm_distance(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch { expected: rho.nrows(), got: sigma.nrows() });
    }
    Ok(hermitian_eigenvalues(&(rho - sigma)).iter().map(|l| l.abs()).sum())
}

/// A random unitary with Haar distribution (QR of a complex Gaussian matrix).
pub fn haar_unitary(d: usize, rng: &mut rng::Rng) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let z = r[(i, i)];
            if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) }
        } else {
            ZERO
        }
    });
    q * phases
}
