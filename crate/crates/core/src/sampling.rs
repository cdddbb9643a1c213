//! Seeded random generators for Q-points, special Q-points and embedded vectors.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::qpoints::QPoint;
use crate::specpoints::SpecPoint;

/// Deterministic generator used across tests, suites and the CLI.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Atoms uniform in [−scale, scale]ⁿ. With probability 1/8 two atoms are
/// made equal so that ties are exercised.
pub fn random_qpoint<R: Rng>(rng: &mut R, q: usize, n: usize, scale: f64) -> QPoint {
    let mut c: Vec<f64> = (0..q * n).map(|_| rng.gen_range(-scale..=scale)).collect();
    if q >= 2 && rng.gen_ratio(1, 8) {
        let (i, j) = (rng.gen_range(0..q), rng.gen_range(0..q));
        for k in 0..n {
            c[j * n + k] = c[i * n + k];
        }
    }
    QPoint::from_flat(q, n, c)
}

/// Random special Q-point; roughly one in ten is collapsed.
pub fn random_specpoint<R: Rng>(rng: &mut R, q: usize, n: usize, scale: f64) -> SpecPoint {
    if rng.gen_ratio(1, 10) {
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
        return SpecPoint::collapsed(q, &p);
    }
    let base = random_qpoint(rng, q, n, scale);
    let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
    SpecPoint::new(base, sign)
}

/// Uniform vector in [−scale, scale]ᵈ.
pub fn random_vec<R: Rng>(rng: &mut R, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-scale..=scale)).collect()
}
