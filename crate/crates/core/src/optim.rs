//! Limited-memory BFGS minimizer with a strong-Wolfe line search.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the gradient norm falls below this.
    pub grad_tol: f64,
    /// Stop when `|Δf| ≤ f_rel_tol · max(|f|, 1)` on three consecutive iterations.
    pub f_rel_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions { memory: 10, max_iter: 2000, grad_tol: 1e-6, f_rel_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientTolerance,
    ValueTolerance,
    MaxIterations,
    LineSearchFailed,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub reason: StopReason,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + alpha * b).collect()
}

struct Point {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    dg: f64,
}

/// Minimize `f` from `x0`. The closure returns `(value, gradient)`; a
/// non-finite value marks an infeasible point and triggers step shrinking.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut evals = 1;
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() {
        return LbfgsResult { grad_norm: f64::INFINITY, x, f: fx, iterations: 0, evaluations: 1, reason: StopReason::NonFinite };
    }
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iter = 0;
    let mut reason = StopReason::MaxIterations;
    let mut retried = false;
    let mut flat_steps = 0;

    while iter < opts.max_iter {
        let gn = norm(&g);
        if gn < opts.grad_tol {
            reason = StopReason::GradientTolerance;
            break;
        }
        let mut dir = two_loop(&g, &hist);
        let mut dg = dot(&dir, &g);
        if dg >= 0.0 {
            hist.clear();
            dir = g.iter().map(|v| -v).collect();
            dg = -gn * gn;
        }
        let init = if hist.is_empty() { (1.0 / gn).min(1.0) } else { 1.0 };
        let ls = line_search(&mut f, &x, fx, dg, &dir, init, &mut evals);
        let Some(pt) = ls else {
            if !retried && !hist.is_empty() {
                hist.clear();
                retried = true;
                continue;
            }
            reason = StopReason::LineSearchFailed;
            break;
        };
        retried = false;
        let x_new = axpy(&x, pt.alpha, &dir);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = pt.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if hist.len() == opts.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let df = (fx - pt.f).abs();
        x = x_new;
        fx = pt.f;
        g = pt.g;
        iter += 1;
        flat_steps = if df <= opts.f_rel_tol * fx.abs().max(1.0) { flat_steps + 1 } else { 0 };
        if flat_steps >= FLAT_STEPS {
            reason = if norm(&g) < opts.grad_tol { StopReason::GradientTolerance } else { StopReason::ValueTolerance };
            break;
        }
    }
    LbfgsResult { grad_norm: norm(&g), x, f: fx, iterations: iter, evaluations: evals, reason }
}

fn two_loop(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Consecutive small-change iterations required to stop on the value test.
const FLAT_STEPS: usize = 3;

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

/// Strong-Wolfe line search (bracketing + zoom with cubic interpolation).
fn line_search<F>(f: &mut F, x: &[f64], f0: f64, dg0: f64, dir: &[f64], init: f64, evals: &mut usize) -> Option<Point>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut eval = |alpha: f64, evals: &mut usize| {
        *evals += 1;
        let (fv, g) = f(&axpy(x, alpha, dir));
        let dg = dot(&g, dir);
        Point { alpha, f: fv, g, dg }
    };
    let mut prev = Point { alpha: 0.0, f: f0, g: Vec::new(), dg: dg0 };
    let mut alpha = init;
    for i in 0..40 {
        let cur = eval(alpha, evals);
        if !cur.f.is_finite() {
            alpha = prev.alpha + 0.25 * (alpha - prev.alpha);
            if alpha - prev.alpha < 1e-20 {
                return None;
            }
            continue;
        }
        if cur.f > f0 + C1 * alpha * dg0 || (i > 0 && cur.f >= prev.f) {
            return zoom(&mut eval, prev, cur, f0, dg0, evals);
        }
        if cur.dg.abs() <= -C2 * dg0 {
            return Some(cur);
        }
        if cur.dg >= 0.0 {
            return zoom(&mut eval, cur, prev, f0, dg0, evals);
        }
        let next = alpha * 2.0;
        prev = cur;
        alpha = next;
    }
    None
}

fn zoom<E>(eval: &mut E, mut lo: Point, mut hi: Point, f0: f64, dg0: f64, evals: &mut usize) -> Option<Point>
where
    E: FnMut(f64, &mut usize) -> Point,
{
    for _ in 0..40 {
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        if (b - a) < 1e-16 * b.max(1e-300) {
            break;
        }
        let mut alpha = cubic_min(&lo, &hi).unwrap_or(0.5 * (lo.alpha + hi.alpha));
        let margin = 0.1 * (b - a);
        if !(alpha > a + margin && alpha < b - margin) {
            alpha = 0.5 * (lo.alpha + hi.alpha);
        }
        let cur = eval(alpha, evals);
        if !cur.f.is_finite() || cur.f > f0 + C1 * alpha * dg0 || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.dg.abs() <= -C2 * dg0 {
                return Some(cur);
            }
            if cur.dg * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // Accept a point with sufficient decrease even if curvature is not met.
    (lo.alpha > 0.0 && lo.f < f0).then_some(lo)
}

fn cubic_min(p: &Point, q: &Point) -> Option<f64> {
    if !p.f.is_finite() || !q.f.is_finite() {
        return None;
    }
    let d1 = p.dg + q.dg - 3.0 * (p.f - q.f) / (p.alpha - q.alpha);
    let disc = d1 * d1 - p.dg * q.dg;
    if disc < 0.0 {
        return None;
    }
    let d2 = disc.sqrt().copysign(q.alpha - p.alpha);
    let t = q.alpha - (q.alpha - p.alpha) * (q.dg + d2 - d1) / (q.dg - p.dg + 2.0 * d2);
    t.is_finite().then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            (v, g)
        };
        let r = minimize(f, &[-1.2, 1.0], &LbfgsOptions { f_rel_tol: 0.0, grad_tol: 1e-9, ..Default::default() });
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{r:?}");
        assert_eq!(r.reason, StopReason::GradientTolerance);
    }

    #[test]
    fn quadratic_high_dim() {
        let n = 50;
        let f = |x: &[f64]| {
            let v: f64 = x.iter().enumerate().map(|(i, xi)| (i as f64 + 1.0) * (xi - 1.0).powi(2)).sum();
            let g = x.iter().enumerate().map(|(i, xi)| 2.0 * (i as f64 + 1.0) * (xi - 1.0)).collect();
            (v, g)
        };
        let r = minimize(f, &vec![0.0; n], &LbfgsOptions { f_rel_tol: 0.0, ..Default::default() });
        assert!(r.grad_norm < 1e-6);
        assert!(r.x.iter().all(|v| (v - 1.0).abs() < 1e-6));
    }

    #[test]
    fn infeasible_region_is_avoided() {
        // -log(1 - x^2) has its minimum at 0 and is infinite outside |x| < 1.
        let f = |x: &[f64]| {
            let u = 1.0 - x[0] * x[0];
            if u <= 0.0 {
                (f64::INFINITY, vec![0.0])
            } else {
                (-(u.ln()) + 0.5 * x[0], vec![2.0 * x[0] / u + 0.5])
            }
        };
        let r = minimize(f, &[0.9], &LbfgsOptions::default());
        assert!(r.f.is_finite());
        assert!(r.grad_norm < 1e-6, "{r:?}");
    }
}
