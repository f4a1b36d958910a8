//! Pauli measurement model: settings, outcomes, eigenbases, outcome
//! probabilities and the normalized Pauli (Fourier) expansion.
//!
//! Index conventions used everywhere in the crate:
//!
//! * qubit 0 is the leftmost letter and the most significant bit of every
//!   basis, outcome and word index;
//! * outcome sign `+1` maps to bit 0 and `-1` to bit 1;
//! * settings are enumerated in base 3 with `x = 0, y = 1, z = 2`;
//! * Pauli words are enumerated in base 4 with `0 = 0, x = 1, y = 2, z = 3`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, CMatrix, C64, I, ONE, ZERO};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// One of the three measured Pauli axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    pub fn from_letter(c: char) -> Option<Axis> {
        match c {
            'x' | 'X' => Some(Axis::X),
            'y' | 'Y' => Some(Axis::Y),
            'z' | 'Z' => Some(Axis::Z),
            _ => None,
        }
    }

    /// 2x2 matrix whose columns are the `+1` and `-1` eigenvectors.
    ///
    /// Phases are fixed: `e_z = (1,0),(0,1)`, `e_x = (1,±1)/√2`, `e_y = (1,±i)/√2`.
    pub fn eigenbasis(self) -> [[C64; 2]; 2] {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            Axis::Z => [[ONE, ZERO], [ZERO, ONE]],
            Axis::X => [[h, h], [h, -h]],
            Axis::Y => [[h, h], [I * h, -I * h]],
        }
    }

    /// The Pauli matrix for this axis.
    pub fn pauli(self) -> CMatrix {
        Letter::from(self).matrix()
    }
}

/// A Pauli letter including the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    Id,
    X,
    Y,
    Z,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::Id, Letter::X, Letter::Y, Letter::Z];

    pub fn index(self) -> usize {
        match self {
            Letter::Id => 0,
            Letter::X => 1,
            Letter::Y => 2,
            Letter::Z => 3,
        }
    }

    pub fn from_index(i: usize) -> Letter {
        Letter::ALL[i]
    }

    pub fn axis(self) -> Option<Axis> {
        match self {
            Letter::Id => None,
            Letter::X => Some(Axis::X),
            Letter::Y => Some(Axis::Y),
            Letter::Z => Some(Axis::Z),
        }
    }

    pub fn matrix(self) -> CMatrix {
        let e = |a: C64, b: C64, c: C64, d: C64| CMatrix::from_row_slice(2, 2, &[a, b, c, d]);
        match self {
            Letter::Id => e(ONE, ZERO, ZERO, ONE),
            Letter::X => e(ZERO, ONE, ONE, ZERO),
            Letter::Y => e(ZERO, -I, I, ZERO),
            Letter::Z => e(ONE, ZERO, ZERO, -ONE),
        }
    }

    /// Column index and entry of the single nonzero element in `row`.
    fn monomial(self, row: usize) -> (usize, C64) {
        match (self, row) {
            (Letter::Id, r) => (r, ONE),
            (Letter::X, r) => (r ^ 1, ONE),
            (Letter::Y, 0) => (1, -I),
            (Letter::Y, _) => (0, I),
            (Letter::Z, 0) => (0, ONE),
            (Letter::Z, _) => (1, -ONE),
        }
    }

    fn letter(self) -> char {
        match self {
            Letter::Id => '0',
            Letter::X => 'x',
            Letter::Y => 'y',
            Letter::Z => 'z',
        }
    }
}

impl From<Axis> for Letter {
    fn from(a: Axis) -> Self {
        match a {
            Axis::X => Letter::X,
            Axis::Y => Letter::Y,
            Axis::Z => Letter::Z,
        }
    }
}

/// A measurement setting: one Pauli axis per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Setting(Vec<Axis>);

impl Setting {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidSetting("empty setting".into()));
        }
        Ok(Setting(axes))
    }

    pub fn axes(&self) -> &[Axis] {
        &self.0
    }

    pub fn num_qubits(&self) -> usize {
        self.0.len()
    }

    /// Base-3 canonical index.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, a| acc * 3 + a.index())
    }

    pub fn from_index(k: usize, mut idx: usize) -> Setting {
        let mut axes = vec![Axis::X; k];
        for slot in axes.iter_mut().rev() {
            *slot = Axis::ALL[idx % 3];
            idx /= 3;
        }
        Setting(axes)
    }

    /// All `3^k` settings in canonical order.
    pub fn all(k: usize) -> impl Iterator<Item = Setting> {
        (0..num_settings(k)).map(move |i| Setting::from_index(k, i))
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            write!(f, "{}", a.letter())?;
        }
        Ok(())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .trim()
            .chars()
            .map(|c| Axis::from_letter(c).ok_or_else(|| Error::InvalidSetting(s.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Setting::new(axes)
    }
}

/// A measurement outcome: one sign per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Outcome(Vec<i8>);

impl Outcome {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() || signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidOutcome(format!("{signs:?}")));
        }
        Ok(Outcome(signs))
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &s| acc * 2 + usize::from(s < 0))
    }

    pub fn from_index(k: usize, idx: usize) -> Outcome {
        Outcome(
            (0..k)
                .map(|j| if (idx >> (k - 1 - j)) & 1 == 1 { -1 } else { 1 })
                .collect(),
        )
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let signs = s
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' | '\u{2212}' => Ok(-1),
                _ => Err(Error::InvalidOutcome(s.to_string())),
            })
            .collect::<Result<Vec<i8>>>()?;
        Outcome::new(signs)
    }
}

pub fn num_settings(k: usize) -> usize {
    3usize.pow(k as u32)
}

pub fn num_outcomes(k: usize) -> usize {
    1usize << k
}

/// Qubit count for a Hilbert dimension that is a power of two.
pub fn qubits_for_dim(d: usize) -> Result<usize> {
    if d < 2 || !d.is_power_of_two() {
        return Err(Error::Domain(format!("dimension {d} is not a power of two >= 2")));
    }
    Ok(d.trailing_zeros() as usize)
}

/// Dense unitary `U_d` whose column `s` is the basis vector `|e_s^d⟩`.
pub fn setting_unitary(setting: &Setting) -> CMatrix {
    let mut u = CMatrix::from_element(1, 1, ONE);
    for a in setting.axes() {
        let b = a.eigenbasis();
        let m = CMatrix::from_fn(2, 2, |i, j| b[i][j]);
        u = crate::linalg::kron(&u, &m);
    }
    u
}

/// The `2^k` basis vectors for a setting, in canonical outcome order.
pub fn setting_basis(setting: &Setting) -> Vec<Vec<C64>> {
    let u = setting_unitary(setting);
    (0..u.ncols())
        .map(|s| u.column(s).iter().copied().collect())
        .collect()
}

/// `P(s|d) = ⟨e_s|ρ|e_s⟩` evaluated densely from a matrix.
pub fn outcome_probabilities_dense(rho: &CMatrix, setting: &Setting) -> Result<Vec<f64>> {
    let d = num_outcomes(setting.num_qubits());
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: rho.nrows() });
    }
    let u = setting_unitary(setting);
    let ru = rho * &u;
    Ok((0..d)
        .map(|s| {
            let mut acc = ZERO;
            for t in 0..d {
                acc += u[(t, s)].conj() * ru[(t, s)];
            }
            acc.re
        })
        .collect())
}

/// Coefficients of a selfadjoint matrix in the normalized Pauli basis
/// `σ̃_i = 2^{-k/2} σ_{i_1} ⊗ … ⊗ σ_{i_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliCoefficients {
    k: usize,
    coeffs: Vec<f64>,
}

impl PauliCoefficients {
    pub fn num_qubits(&self) -> usize {
        self.k
    }

    /// Coefficients indexed by base-4 word index.
    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, word: &[Letter]) -> f64 {
        self.coeffs[word_index(word)]
    }

    pub fn from_vec(k: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != 1 << (2 * k) {
            return Err(Error::DimensionMismatch { expected: 1 << (2 * k), got: coeffs.len() });
        }
        Ok(PauliCoefficients { k, coeffs })
    }
}

pub fn word_index(word: &[Letter]) -> usize {
    word.iter().fold(0, |acc, l| acc * 4 + l.index())
}

pub fn word_from_index(k: usize, mut idx: usize) -> Vec<Letter> {
    let mut w = vec![Letter::Id; k];
    for slot in w.iter_mut().rev() {
        *slot = Letter::from_index(idx % 4);
        idx /= 4;
    }
    w
}

pub fn word_string(word: &[Letter]) -> String {
    word.iter().map(|l| l.letter()).collect()
}

/// Entry `(row, col)` of the unnormalized Pauli string, returned as the unique
/// nonzero column for `row` together with its value.
fn pauli_string_row(word: &[Letter], row: usize) -> (usize, C64) {
    let k = word.len();
    let mut col = 0usize;
    let mut val = ONE;
    for (j, l) in word.iter().enumerate() {
        let bit = (row >> (k - 1 - j)) & 1;
        let (c, v) = l.monomial(bit);
        col |= c << (k - 1 - j);
        val *= v;
    }
    (col, val)
}

/// Dense unnormalized Pauli string `σ_{i_1} ⊗ … ⊗ σ_{i_k}`.
pub fn pauli_string(word: &[Letter]) -> CMatrix {
    let d = 1usize << word.len();
    let mut m = CMatrix::zeros(d, d);
    for row in 0..d {
        let (col, v) = pauli_string_row(word, row);
        m[(row, col)] = v;
    }
    m
}

/// `Tr(σ_word · m)` for the unnormalized Pauli string, in `O(2^k)`.
pub fn pauli_trace(word: &[Letter], m: &CMatrix) -> C64 {
    let d = m.nrows();
    let mut acc = ZERO;
    for row in 0..d {
        let (col, v) = pauli_string_row(word, row);
        acc += v * m[(col, row)];
    }
    acc
}

/// Expand a selfadjoint matrix in the normalized Pauli basis.
pub fn pauli_expand(rho: &CMatrix) -> Result<PauliCoefficients> {
    let k = qubits_for_dim(rho.nrows())?;
    if rho.ncols() != rho.nrows() {
        return Err(Error::DimensionMismatch { expected: rho.nrows(), got: rho.ncols() });
    }
    let defect = hermitian_defect(rho);
    if defect > 1e-10 {
        return Err(Error::NotSelfadjoint(defect));
    }
    let norm = (0.5f64).powf(k as f64 / 2.0);
    let coeffs = (0..1usize << (2 * k))
        .map(|w| pauli_trace(&word_from_index(k, w), rho).re * norm)
        .collect();
    Ok(PauliCoefficients { k, coeffs })
}

/// Inverse of [`pauli_expand`].
pub fn pauli_reconstruct(coeffs: &PauliCoefficients) -> CMatrix {
    let k = coeffs.k;
    let d = 1usize << k;
    let norm = (0.5f64).powf(k as f64 / 2.0);
    let mut m = CMatrix::zeros(d, d);
    for (w, &c) in coeffs.coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let word = word_from_index(k, w);
        for row in 0..d {
            let (col, v) = pauli_string_row(&word, row);
            m[(row, col)] += v * (c * norm);
        }
    }
    m
}
