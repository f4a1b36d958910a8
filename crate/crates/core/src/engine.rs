//! Factored evaluation of outcome probabilities, log-likelihood and its
//! gradient for states held as `ρ = T†T / Tr(T†T)`.
//!
//! The product `T·U_d` is never formed densely. Settings are visited as a
//! ternary tree over qubits; each tree edge applies one 2x2 eigenbasis to one
//! qubit of every row, so settings sharing a prefix share work. The gradient
//! pass walks the same tree backwards applying the adjoint rotations.

use crate::linalg::{C64, ZERO};
use crate::pauli::Axis;

type Op = [[C64; 2]; 2];

#[derive(Debug, Clone)]
pub(crate) struct Engine {
    k: usize,
    d: usize,
    ops: [Op; 3],
    adj: [Op; 3],
}

/// Result of one likelihood pass.
#[derive(Debug, Clone)]
pub(crate) struct LikEval {
    pub loglik: f64,
    /// Wirtinger gradient `∂ℓ/∂T̄`, row-major `r×d`; real-parameter gradient is
    /// `2·Re` / `2·Im` of these entries.
    pub grad: Option<Vec<C64>>,
}

impl Engine {
    pub fn new(k: usize) -> Self {
        let ops = [Axis::X.eigenbasis(), Axis::Y.eigenbasis(), Axis::Z.eigenbasis()];
        let adj = ops.map(|u| [[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]]);
        Engine { k, d: 1 << k, ops, adj }
    }

    /// Right-multiply each row of `buf` by `op` acting on `qubit`.
    fn apply(&self, buf: &mut [C64], rows: usize, qubit: usize, op: &Op) {
        let d = self.d;
        let stride = 1usize << (self.k - 1 - qubit);
        for row in buf.chunks_exact_mut(d).take(rows) {
            let mut base = 0;
            while base < d {
                for i0 in base..base + stride {
                    let i1 = i0 + stride;
                    let x0 = row[i0];
                    let x1 = row[i1];
                    row[i0] = x0 * op[0][0] + x1 * op[1][0];
                    row[i1] = x0 * op[0][1] + x1 * op[1][1];
                }
                base += 2 * stride;
            }
        }
    }

    /// Unnormalized outcome weights `‖(T U_d)_{·,s}‖²` for every setting,
    /// setting-major in canonical order.
    pub fn weights(&self, t: &[C64], rows: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(crate::pauli::num_settings(self.k) * self.d);
        let mut levels: Vec<Vec<C64>> = vec![t.to_vec(); self.k + 1];
        self.weights_rec(0, rows, &mut levels, &mut out);
        out
    }

    fn weights_rec(&self, depth: usize, rows: usize, levels: &mut [Vec<C64>], out: &mut Vec<f64>) {
        if depth == self.k {
            let m = &levels[depth];
            for s in 0..self.d {
                let mut q = 0.0;
                for i in 0..rows {
                    q += m[i * self.d + s].norm_sqr();
                }
                out.push(q);
            }
            return;
        }
        for a in 0..3 {
            let (head, tail) = levels.split_at_mut(depth + 1);
            tail[0].copy_from_slice(&head[depth]);
            self.apply(&mut tail[0], rows, depth, &self.ops[a]);
            self.weights_rec(depth + 1, rows, levels, out);
        }
    }

    /// `Σ N log P` with optional gradient.
    ///
    /// With `floor = Some(f)`, probabilities below `f` contribute `N·ln f` and
    /// no gradient. With `floor = None` a positive count at zero probability
    /// yields `-inf`.
    pub fn loglik(&self, t: &[C64], rows: usize, counts: &[f64], floor: Option<f64>, want_grad: bool) -> LikEval {
        let d = self.d;
        let norm: f64 = t[..rows * d].iter().map(|z| z.norm_sqr()).sum();
        let total: f64 = counts.iter().sum();
        let mut st = State {
            levels: vec![t[..rows * d].to_vec(); self.k + 1],
            grads: if want_grad { vec![vec![ZERO; rows * d]; self.k + 1] } else { Vec::new() },
            loglik: 0.0,
            leaf: 0,
            norm,
            floor,
            counts,
            want_grad,
            rows,
        };
        self.loglik_rec(0, &mut st);
        let grad = if want_grad {
            let mut g = std::mem::take(&mut st.grads[0]);
            let c = total / norm;
            for i in 0..rows {
                for j in 0..d {
                    let idx = i * d + j;
                    g[idx] = if j < i { ZERO } else { g[idx] - t[idx] * c };
                }
            }
            Some(g)
        } else {
            None
        };
        LikEval { loglik: st.loglik, grad }
    }

    fn loglik_rec(&self, depth: usize, st: &mut State<'_>) {
        let d = self.d;
        let rows = st.rows;
        if depth == self.k {
            let base = st.leaf * d;
            st.leaf += 1;
            for s in 0..d {
                let n = st.counts[base + s];
                let mut q = 0.0;
                for i in 0..rows {
                    q += st.levels[depth][i * d + s].norm_sqr();
                }
                let p = q / st.norm;
                let mut w = 0.0;
                if n > 0.0 {
                    match st.floor {
                        Some(f) if p < f => st.loglik += n * f.ln(),
                        _ => {
                            if q <= 0.0 {
                                st.loglik = f64::NEG_INFINITY;
                            } else {
                                st.loglik += n * p.ln();
                                w = n / q;
                            }
                        }
                    }
                }
                if st.want_grad {
                    let (lv, gr) = (&st.levels[depth], &mut st.grads[depth]);
                    for i in 0..rows {
                        gr[i * d + s] = lv[i * d + s] * w;
                    }
                }
            }
            return;
        }
        if st.want_grad {
            st.grads[depth].iter_mut().for_each(|z| *z = ZERO);
        }
        for a in 0..3 {
            {
                let (head, tail) = st.levels.split_at_mut(depth + 1);
                tail[0].copy_from_slice(&head[depth]);
                self.apply(&mut tail[0], rows, depth, &self.ops[a]);
            }
            self.loglik_rec(depth + 1, st);
            if st.want_grad {
                let (head, tail) = st.grads.split_at_mut(depth + 1);
                self.apply(&mut tail[0], rows, depth, &self.adj[a]);
                for (acc, v) in head[depth].iter_mut().zip(tail[0].iter()) {
                    *acc += *v;
                }
            }
        }
    }
}

struct State<'a> {
    levels: Vec<Vec<C64>>,
    grads: Vec<Vec<C64>>,
    loglik: f64,
    leaf: usize,
    norm: f64,
    floor: Option<f64>,
    counts: &'a [f64],
    want_grad: bool,
    rows: usize,
}
