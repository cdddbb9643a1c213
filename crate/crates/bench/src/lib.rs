//! Fixtures shared by the benchmarks in `benches/`.

use specq_core::sampling::{random_specpoint, rng};
use specq_core::SpecPoint;

/// Deterministic pairs of special Q-points.
pub fn specpoint_pairs(count: usize, q: usize, n: usize) -> Vec<(SpecPoint, SpecPoint)> {
    let mut r = rng(7);
    (0..count).map(|_| (random_specpoint(&mut r, q, n, 1.0), random_specpoint(&mut r, q, n, 1.0))).collect()
}
