//! Times a rank scan on simulated four-qubit data.

use std::time::Instant;

use ranktomo::{fit_rank, random_state, simulate_dataset, FitOptions};

fn main() {
    let truth = random_state(4, 2, 1).unwrap();
    let data = simulate_dataset(&truth, 100, 2).unwrap();
    let mut prev = None;
    for r in 1..=4 {
        let t0 = Instant::now();
        let opts = FitOptions { warm_start: prev, seed: r as u64, ..Default::default() };
        let fit = fit_rank(&data, r, &opts).unwrap();
        println!(
            "rank {r}: loglik {:.4} converged {} iters {} grad {:.2e} best start {} ({:.2?})",
            fit.loglik,
            fit.converged,
            fit.iterations,
            fit.grad_norm,
            fit.best_start,
            t0.elapsed()
        );
        prev = Some(fit.factor);
    }
}
