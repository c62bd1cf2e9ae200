//! Dataset generators shared by the benchmarks.

use c2plus::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` uniform sites at unit density (a square of side `sqrt(n)`) with values in `[0, 1]`.
pub fn unit_density(n: usize, seed: u64) -> (Vec<Point2>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = (n as f64).sqrt();
    let pts = (0..n).map(|_| Point2::new(rng.gen::<f64>() * side, rng.gen::<f64>() * side)).collect();
    let vals = (0..n).map(|_| rng.gen::<f64>()).collect();
    (pts, vals)
}
