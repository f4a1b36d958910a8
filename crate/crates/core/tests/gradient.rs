use ranktomo::rng::sub_rng;
use ranktomo::states::{random_state, TrapezoidalFactor};
use ranktomo::{log_likelihood, loglik_gradient, simulate_dataset};

/// Central differences of ℓ in every raw coordinate, compared with the
/// analytic gradient on random (k, r, factor, data) instances.
#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut worst: f64 = 0.0;
    for i in 0..20u64 {
        let k = 1 + (i % 3) as usize;
        let d = 1 << k;
        let r = 1 + (i as usize % d);
        let truth = random_state(k, r, i).unwrap();
        let data = simulate_dataset(&truth, 50, 1000 + i).unwrap();
        let t = TrapezoidalFactor::random(r, d, &mut sub_rng(i, 9));
        let g = loglik_gradient(&t, &data).unwrap();
        let x = t.to_params();
        let h = 1e-6;
        let mut fd = Vec::with_capacity(x.len());
        for j in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let lp = log_likelihood(&TrapezoidalFactor::from_params(r, d, &xp), &data).unwrap();
            let lm = log_likelihood(&TrapezoidalFactor::from_params(r, d, &xm), &data).unwrap();
            fd.push((lp - lm) / (2.0 * h));
        }
        let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = fd.iter().map(|b| b * b).sum::<f64>().sqrt();
        let rel = num / den;
        worst = worst.max(rel);
        assert!(rel < 1e-6, "instance {i} (k={k}, r={r}): relative error {rel:e}");
    }
    println!("worst relative gradient error {worst:e}");
}
