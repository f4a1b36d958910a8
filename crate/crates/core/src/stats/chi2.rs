//! χ² distribution functions and the one-sample Kolmogorov–Smirnov test.

use rand_distr::Distribution;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::rng;

/// χ² distribution with `df` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    df: f64,
}

impl ChiSquare {
    pub fn new(df: f64) -> Result<Self> {
        if !(df > 0.0 && df.is_finite()) {
            return Err(Error::Domain(format!("χ² degrees of freedom must be positive, got {df}")));
        }
        Ok(ChiSquare { df })
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        gamma_lr(self.df / 2.0, x / 2.0)
    }

    /// Upper tail `1 − cdf(x)`, accurate far into the tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x == f64::INFINITY {
            return 0.0;
        }
        gamma_ur(self.df / 2.0, x / 2.0)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let a = self.df / 2.0;
        ((a - 1.0) * x.ln() - x / 2.0 - a * std::f64::consts::LN_2 - ln_gamma(a)).exp()
    }

    /// Inverse of [`cdf`](Self::cdf) on `(0, 1)`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {q}")));
        }
        // Work on whichever tail is smaller to keep the residual accurate.
        let upper = q > 0.5;
        let target = if upper { 1.0 - q } else { q };
        let resid = |x: f64| if upper { target - self.sf(x) } else { self.cdf(x) - target };

        let mut lo = 0.0;
        let mut hi = self.df.max(1.0);
        while resid(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        // Wilson–Hilferty start, clamped into the bracket.
        let k = self.df;
        let z = Normal::standard().inverse_cdf(q);
        let wh = k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3);
        let mut x = if wh > lo && wh < hi { wh } else { 0.5 * (lo + hi) };
        for _ in 0..200 {
            let f = resid(x);
            if f == 0.0 {
                return Ok(x);
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let step = f / self.pdf(x);
            let mut next = x - step;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * x.max(1e-300) || hi - lo <= 1e-15 * hi {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    pub fn sample(&self, rng: &mut rng::Rng) -> f64 {
        rand_distr::ChiSquared::new(self.df).expect("positive df").sample(rng)
    }

    /// `count` independent draws from the stream seeded by `seed`.
    pub fn samples(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut g = rng::rng(seed);
        let dist = rand_distr::ChiSquared::new(self.df).expect("positive df");
        (0..count).map(|_| dist.sample(&mut g)).collect()
    }
}

/// Outcome of a one-sample Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// `sup_x |F_n(x) − F(x)|`.
    pub statistic: f64,
    /// Asymptotic p-value with Stephens' small-sample correction.
    pub p_value: f64,
    pub n: usize,
}

impl KsResult {
    pub fn rejects_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Compare `samples` against the continuous distribution function `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::Domain("KS test needs at least one sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("KS test sample contains NaN".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let n = xs.len() as f64;
    let mut dmax: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        dmax = dmax.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * dmax;
    Ok(KsResult { statistic: dmax, p_value: kolmogorov_sf(lambda), n: xs.len() })
}

/// `Q(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2 j² λ²)`, the Kolmogorov tail.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_degrees_closed_form() {
        let c = ChiSquare::new(2.0).unwrap();
        for x in [0.1, 1.0, 3.0, 10.0] {
            assert_abs_diff_eq!(c.cdf(x), 1.0 - (-x / 2.0).exp(), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(c.quantile(0.95).unwrap(), -2.0 * 0.05f64.ln(), epsilon = 1e-10);
        assert_eq!(format!("{:.4}", c.quantile(0.95).unwrap()), "5.9915");
    }

    #[test]
    fn quantile_inverts_cdf() {
        for df in [1.0, 2.0, 5.0, 27.0, 996.0] {
            let c = ChiSquare::new(df).unwrap();
            for q in [1e-6, 0.01, 0.5, 0.95, 0.999, 1.0 - 1e-9] {
                let x = c.quantile(q).unwrap();
                let back = if q > 0.5 { 1.0 - c.sf(x) } else { c.cdf(x) };
                assert_abs_diff_eq!(back, q, epsilon = 1e-10);
            }
            assert_abs_diff_eq!(c.cdf(c.quantile(0.5).unwrap()), 0.5, epsilon = 1e-8);
            for x in [(0.8 * df).max(0.5), df, 1.2 * df] {
                let y = c.quantile(c.cdf(x)).unwrap();
                assert_abs_diff_eq!(y, x, epsilon = 1e-8 * x.max(1.0));
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(ChiSquare::new(0.0).is_err());
        let c = ChiSquare::new(3.0).unwrap();
        assert!(c.quantile(0.0).is_err());
        assert!(c.quantile(1.0).is_err());
    }

    #[test]
    fn ks_accepts_own_distribution() {
        let c = ChiSquare::new(4.0).unwrap();
        let s = c.samples(2000, 3);
        let r = ks_test(&s, |x| c.cdf(x)).unwrap();
        assert!(!r.rejects_at(0.01), "{r:?}");
        let wrong = ChiSquare::new(6.0).unwrap();
        assert!(ks_test(&s, |x| wrong.cdf(x)).unwrap().rejects_at(0.01));
    }
}
