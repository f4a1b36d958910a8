//! Smooth local parametrizations `θ ↦ ρ_θ` with Jacobians `∂ρ/∂θ_j`, used
//! for Fisher-information and metric computations.

use crate::error::{Error, Result};
use crate::linalg::{C64, CMatrix, I, ZERO};
use crate::pauli::qubits_for_dim;
use crate::states::{DensityMatrix, TrapezoidalFactor};

/// A differentiable family of unit-trace states.
pub trait Chart: Sync {
    fn num_qubits(&self) -> usize;

    /// Number of real parameters `p`.
    fn num_params(&self) -> usize;

    /// `ρ_θ`; errors outside the chart domain.
    fn density(&self, theta: &[f64]) -> Result<CMatrix>;

    /// `∂ρ/∂θ_j` for `j = 0..p`, each selfadjoint and traceless.
    fn jacobian(&self, theta: &[f64]) -> Result<Vec<CMatrix>>;
}

fn check_len(theta: &[f64], p: usize) -> Result<()> {
    if theta.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: theta.len() });
    }
    Ok(())
}

/// Pure states `ψ = Σ_j c_j e_j` with the anchor amplitude `c_a` real and
/// positive, `c_a = (1 − Σ_{j≠a} |c_j|²)^{1/2}`. Parameters are the real
/// parts of the non-anchor amplitudes followed by their imaginary parts.
#[derive(Debug, Clone)]
pub struct PureStateChart {
    d: usize,
    anchor: usize,
}

impl PureStateChart {
    pub fn new(k: usize, anchor: usize) -> Result<Self> {
        let d = 1usize << k;
        if anchor >= d {
            return Err(Error::Domain(format!("anchor {anchor} outside dimension {d}")));
        }
        Ok(PureStateChart { d, anchor })
    }

    /// Chart anchored at the largest-modulus amplitude of `psi`, together
    /// with the coordinates of `psi` in it.
    pub fn around(psi: &[C64]) -> Result<(Self, Vec<f64>)> {
        let k = qubits_for_dim(psi.len())?;
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroFactor);
        }
        let anchor = (0..psi.len())
            .max_by(|&a, &b| psi[a].norm().partial_cmp(&psi[b].norm()).unwrap())
            .expect("nonempty");
        let phase = psi[anchor].conj() / psi[anchor].norm();
        let unit: Vec<C64> = psi.iter().map(|z| z * phase / norm).collect();
        let chart = PureStateChart::new(k, anchor)?;
        let theta = chart.coordinates(&unit);
        Ok((chart, theta))
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    fn others(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.d).filter(move |&j| j != self.anchor)
    }

    fn coordinates(&self, psi: &[C64]) -> Vec<f64> {
        let re = self.others().map(|j| psi[j].re);
        let im = self.others().map(|j| psi[j].im);
        re.chain(im).collect()
    }

    /// State vector `ψ_θ`.
    pub fn vector(&self, theta: &[f64]) -> Result<Vec<C64>> {
        check_len(theta, self.num_params())?;
        let rest: f64 = theta.iter().map(|v| v * v).sum();
        if rest >= 1.0 {
            return Err(Error::Domain("pure-state chart requires Σ|c_j|² < 1".into()));
        }
        let m = self.d - 1;
        let mut psi = vec![ZERO; self.d];
        psi[self.anchor] = C64::new((1.0 - rest).sqrt(), 0.0);
        for (n, j) in self.others().enumerate() {
            psi[j] = C64::new(theta[n], theta[m + n]);
        }
        Ok(psi)
    }
}

fn outer(a: &[C64], b: &[C64]) -> CMatrix {
    CMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

impl Chart for PureStateChart {
    fn num_qubits(&self) -> usize {
        self.d.trailing_zeros() as usize
    }

    fn num_params(&self) -> usize {
        2 * (self.d - 1)
    }

    fn density(&self, theta: &[f64]) -> Result<CMatrix> {
        let psi = self.vector(theta)?;
        Ok(outer(&psi, &psi))
    }

    fn jacobian(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        let psi = self.vector(theta)?;
        let ca = psi[self.anchor].re;
        let m = self.d - 1;
        let mut out = Vec::with_capacity(2 * m);
        for (part, unit) in [(0usize, C64::new(1.0, 0.0)), (1, I)] {
            for (n, j) in self.others().enumerate() {
                let mut dpsi = vec![ZERO; self.d];
                dpsi[j] = unit;
                dpsi[self.anchor] = C64::new(-theta[part * m + n] / ca, 0.0);
                let a = outer(&dpsi, &psi);
                out.push(&a + a.adjoint());
            }
        }
        Ok(out)
    }
}

/// Rank-`r` states `ρ = T†T` with `T` upper trapezoidal, real positive
/// diagonal and unit Frobenius norm.
///
/// Coordinates are `θ = (R, I, D)`: real parts of the strictly upper entries
/// (row-major), their imaginary parts, then the diagonal entries
/// `T_22 … T_rr`. The first diagonal entry is `T_11 = (1 − ‖θ‖²)^{1/2}`.
/// The count is `2dr − r² − 1`.
#[derive(Debug, Clone)]
pub struct CholeskyChart {
    d: usize,
    r: usize,
}

impl CholeskyChart {
    pub fn new(k: usize, r: usize) -> Result<Self> {
        let d = 1usize << k;
        if r == 0 || r > d {
            return Err(Error::RankOutOfRange { rank: r, max: d });
        }
        Ok(CholeskyChart { d, r })
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.r).flat_map(move |i| (i + 1..self.d).map(move |j| (i, j)))
    }

    fn num_off(&self) -> usize {
        self.r * self.d - self.r * (self.r + 1) / 2
    }

    /// Coordinates of `rho` (rank at most `r`) in this chart. Errors when a
    /// diagonal entry of the factor vanishes, which puts the state outside
    /// the chart.
    pub fn coordinates(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: rho.dim() });
        }
        let mut t = TrapezoidalFactor::from_state(rho, self.r)?.normalized();
        for i in 0..self.r {
            let tii = t.get(i, i);
            if tii.norm() < 1e-12 {
                return Err(Error::Domain(format!("factor diagonal entry {i} vanishes")));
            }
            t = t.with_row_phase(i, tii.conj() / tii.norm());
        }
        let re = self.off_diagonal().map(|(i, j)| t.get(i, j).re);
        let im = self.off_diagonal().map(|(i, j)| t.get(i, j).im);
        let diag = (1..self.r).map(|i| t.get(i, i).re);
        Ok(re.chain(im).chain(diag).collect())
    }

    /// The factor `T(θ)` as an `r × d` matrix.
    pub fn factor(&self, theta: &[f64]) -> Result<CMatrix> {
        check_len(theta, self.num_params())?;
        let rest: f64 = theta.iter().map(|v| v * v).sum();
        if rest >= 1.0 {
            return Err(Error::Domain("Cholesky chart requires ‖θ‖ < 1".into()));
        }
        let m = self.num_off();
        let mut t = CMatrix::zeros(self.r, self.d);
        t[(0, 0)] = C64::new((1.0 - rest).sqrt(), 0.0);
        for (n, (i, j)) in self.off_diagonal().enumerate() {
            t[(i, j)] = C64::new(theta[n], theta[m + n]);
        }
        for i in 1..self.r {
            t[(i, i)] = C64::new(theta[2 * m + i - 1], 0.0);
        }
        Ok(t)
    }
}

impl Chart for CholeskyChart {
    fn num_qubits(&self) -> usize {
        self.d.trailing_zeros() as usize
    }

    fn num_params(&self) -> usize {
        2 * self.d * self.r - self.r * self.r - 1
    }

    fn density(&self, theta: &[f64]) -> Result<CMatrix> {
        let t = self.factor(theta)?;
        Ok(t.adjoint() * t)
    }

    fn jacobian(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        let t = self.factor(theta)?;
        let t11 = t[(0, 0)].re;
        let m = self.num_off();
        let mut cells: Vec<((usize, usize), C64)> = Vec::with_capacity(self.num_params());
        cells.extend(self.off_diagonal().map(|c| (c, C64::new(1.0, 0.0))));
        cells.extend(self.off_diagonal().map(|c| (c, I)));
        cells.extend((1..self.r).map(|i| ((i, i), C64::new(1.0, 0.0))));
        let mut out = Vec::with_capacity(cells.len());
        for (n, ((i, j), unit)) in cells.into_iter().enumerate() {
            let mut dt = CMatrix::zeros(self.r, self.d);
            dt[(i, j)] = unit;
            dt[(0, 0)] = C64::new(-theta[n] / t11, 0.0);
            let a = dt.adjoint() * &t;
            out.push(&a + a.adjoint());
        }
        debug_assert_eq!(out.len(), 2 * m + self.r - 1);
        Ok(out)
    }
}
