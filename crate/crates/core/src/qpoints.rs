//! Classical Q-points: unordered Q-tuples of points in ℝⁿ with the
//! optimal-matching metric 𝒢.

use std::cmp::Ordering;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{dim_mismatch, Result, SpecqError};

/// Largest Q for which [`metric_g`] enumerates permutations directly.
pub const BRUTE_FORCE_MAX_Q: usize = 5;

/// An unordered Q-tuple of points in ℝⁿ.
///
/// Atoms are stored flat, row-major, in lexicographic order so that two
/// representations of the same multiset compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct QPoint {
    q: usize,
    n: usize,
    coords: Vec<f64>,
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

impl QPoint {
    /// Builds a Q-point from a list of atoms; all atoms must have the same length.
    pub fn new(atoms: Vec<Vec<f64>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(SpecqError::EmptyInput("Q-point needs at least one atom".into()));
        }
        let n = atoms[0].len();
        if n == 0 {
            return Err(SpecqError::InvalidParameter("atoms must have n >= 1".into()));
        }
        if let Some(bad) = atoms.iter().find(|a| a.len() != n) {
            return Err(dim_mismatch(n, bad.len()));
        }
        let q = atoms.len();
        let coords = atoms.into_iter().flatten().collect();
        Ok(Self::from_flat(q, n, coords))
    }

    /// Builds a Q-point from `q*n` flat coordinates (atom-major).
    ///
    /// # Panics
    /// Panics if `coords.len() != q * n`.
    pub fn from_flat(q: usize, n: usize, coords: Vec<f64>) -> Self {
        assert_eq!(coords.len(), q * n, "flat coordinate length must be q*n");
        assert!(q >= 1 && n >= 1);
        let mut p = QPoint { q, n, coords };
        p.canonicalize();
        p
    }

    /// Q copies of the point `p`.
    pub fn collapsed(q: usize, p: &[f64]) -> Self {
        let mut coords = Vec::with_capacity(q * p.len());
        for _ in 0..q {
            coords.extend_from_slice(p);
        }
        QPoint { q, n: p.len(), coords }
    }

    /// Q copies of the origin of ℝⁿ.
    pub fn zero(q: usize, n: usize) -> Self {
        QPoint { q, n, coords: vec![0.0; q * n] }
    }

    /// Scalar convenience constructor for n = 1.
    pub fn scalars(values: &[f64]) -> Self {
        Self::from_flat(values.len(), 1, values.to_vec())
    }

    fn canonicalize(&mut self) {
        if self.q < 2 {
            return;
        }
        let n = self.n;
        let mut idx: Vec<usize> = (0..self.q).collect();
        idx.sort_by(|&i, &j| lex_cmp(&self.coords[i * n..(i + 1) * n], &self.coords[j * n..(j + 1) * n]));
        if idx.iter().enumerate().all(|(k, &i)| k == i) {
            return;
        }
        let mut out = Vec::with_capacity(self.coords.len());
        for i in idx {
            out.extend_from_slice(&self.coords[i * n..(i + 1) * n]);
        }
        self.coords = out;
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The `i`-th atom in canonical order.
    pub fn atom(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.n)
    }

    /// Flat canonical coordinates.
    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        self.atoms().map(|a| a.to_vec()).collect()
    }

    /// Barycenter η(S).
    pub fn eta(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for a in self.atoms() {
            for (mk, ak) in m.iter_mut().zip(a) {
                *mk += ak;
            }
        }
        let qf = self.q as f64;
        m.iter_mut().for_each(|x| *x /= qf);
        m
    }

    /// S ⊕ v for `sign = 1`, S ⊖ v for `sign = -1`.
    pub fn translate(&self, v: &[f64], sign: i8) -> QPoint {
        assert_eq!(v.len(), self.n, "translation vector has wrong dimension");
        let s = if sign < 0 { -1.0 } else { 1.0 };
        let mut coords = self.coords.clone();
        for a in coords.chunks_exact_mut(self.n) {
            for (ak, vk) in a.iter_mut().zip(v) {
                *ak += s * vk;
            }
        }
        // Translation preserves lexicographic order.
        QPoint { q: self.q, n: self.n, coords }
    }

    /// S ⊖ η(S).
    pub fn centered(&self) -> QPoint {
        self.translate(&self.eta(), -1)
    }

    /// Multiplies every atom by `lambda`.
    pub fn scale(&self, lambda: f64) -> QPoint {
        let coords = self.coords.iter().map(|x| x * lambda).collect();
        if lambda >= 0.0 {
            QPoint { q: self.q, n: self.n, coords }
        } else {
            QPoint::from_flat(self.q, self.n, coords)
        }
    }

    /// |S|² = Σ |S_i|².
    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum()
    }

    /// |S| = 𝒢(S, Q⟦0⟧).
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Least distance between distinct atom values; 0 if all atoms coincide.
    pub fn sep(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.q {
            for j in (i + 1)..self.q {
                let d = dist_sq(self.atom(i), self.atom(j));
                if d > 0.0 && d < best {
                    best = d;
                }
            }
        }
        if best.is_finite() {
            best.sqrt()
        } else {
            0.0
        }
    }

    /// True when all atoms coincide.
    pub fn is_collapsed(&self) -> bool {
        let a0 = self.atom(0);
        self.atoms().all(|a| a == a0)
    }

    pub(crate) fn check_compatible(&self, other: &QPoint) -> Result<()> {
        if self.q != other.q || self.n != other.n {
            return Err(dim_mismatch(
                format!("Q={}, n={}", self.q, self.n),
                format!("Q={}, n={}", other.q, other.n),
            ));
        }
        Ok(())
    }
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared-distance cost matrix `c[i*q + j] = |S_i - T_j|²`.
pub fn cost_matrix(s: &QPoint, t: &QPoint) -> Vec<f64> {
    let q = s.q;
    let mut c = Vec::with_capacity(q * q);
    for i in 0..q {
        for j in 0..q {
            c.push(dist_sq(s.atom(i), t.atom(j)));
        }
    }
    c
}

/// Cost of a permutation, summed in row order.
pub fn permutation_cost(cost: &[f64], q: usize, perm: &[usize]) -> f64 {
    (0..q).map(|i| cost[i * q + perm[i]]).sum()
}

/// Minimum-cost permutation by enumeration in lexicographic order. Ties keep
/// the lexicographically smallest permutation.
pub fn brute_force_assignment(cost: &[f64], q: usize) -> (Vec<usize>, f64) {
    let mut perm: Vec<usize> = (0..q).collect();
    let mut best = perm.clone();
    let mut best_cost = permutation_cost(cost, q, &perm);
    while next_permutation(&mut perm) {
        let c = permutation_cost(cost, q, &perm);
        if c < best_cost {
            best_cost = c;
            best.copy_from_slice(&perm);
        }
    }
    (best, best_cost)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Hungarian method with potentials, O(q³). Returns the row-to-column
/// assignment and its cost summed in row order.
pub fn hungarian_assignment(cost: &[f64], q: usize) -> (Vec<usize>, f64) {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; q + 1];
    let mut v = vec![0.0; q + 1];
    // p[j] = row matched to column j (1-based, 0 = free)
    let mut p = vec![0usize; q + 1];
    let mut way = vec![0usize; q + 1];
    for i in 1..=q {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; q + 1];
        let mut used = vec![false; q + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=q {
                if !used[j] {
                    let cur = cost[(i0 - 1) * q + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=q {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; q];
    for j in 1..=q {
        perm[p[j] - 1] = j - 1;
    }
    let c = permutation_cost(cost, q, &perm);
    (perm, c)
}

/// Optimal matching of `s` onto `t`: brute force for Q ≤ 5, Hungarian otherwise.
pub fn optimal_matching(s: &QPoint, t: &QPoint) -> Result<(Vec<usize>, f64)> {
    s.check_compatible(t)?;
    let c = cost_matrix(s, t);
    Ok(if s.q <= BRUTE_FORCE_MAX_Q {
        brute_force_assignment(&c, s.q)
    } else {
        hungarian_assignment(&c, s.q)
    })
}

/// Squared matching distance 𝒢(S,T)².
pub fn metric_g_sq(s: &QPoint, t: &QPoint) -> Result<f64> {
    if s.n == 1 && s.q == t.q && t.n == 1 {
        // Canonical order of scalars is ascending, and the monotone matching is optimal.
        return Ok(dist_sq(&s.coords, &t.coords));
    }
    // Fixed argument order keeps the value exactly symmetric.
    if s.coords.as_slice() > t.coords.as_slice() {
        return optimal_matching(t, s).map(|(_, c)| c);
    }
    optimal_matching(s, t).map(|(_, c)| c)
}

/// Matching distance 𝒢(S,T).
pub fn metric_g(s: &QPoint, t: &QPoint) -> Result<f64> {
    metric_g_sq(s, t).map(f64::sqrt)
}

impl Serialize for QPoint {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested().serialize(ser)
    }
}

impl<'de> Deserialize<'de> for QPoint {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let atoms = Vec::<Vec<f64>>::deserialize(de)?;
        QPoint::new(atoms).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_examples() {
        assert_eq!(QPoint::scalars(&[1.0, 3.0]).eta(), vec![2.0]);
        assert_eq!(QPoint::collapsed(3, &[1.5, -2.0]).eta(), vec![1.5, -2.0]);
        let p = QPoint::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(p.eta(), vec![0.5, 0.5]);
    }

    #[test]
    fn translate_examples() {
        let s = QPoint::scalars(&[1.0, 3.0]);
        assert_eq!(s.translate(&s.eta(), -1), QPoint::scalars(&[-1.0, 1.0]));
        assert_eq!(QPoint::scalars(&[0.0, 0.0]).translate(&[5.0], 1), QPoint::scalars(&[5.0, 5.0]));
    }

    #[test]
    fn norm_examples() {
        assert!((QPoint::scalars(&[3.0, -3.0]).norm() - 18f64.sqrt()).abs() < 1e-15);
        assert_eq!(QPoint::zero(3, 2).norm(), 0.0);
        let s = QPoint::scalars(&[1.0, 3.0]);
        assert_eq!(s.norm_sq(), 10.0);
        assert_eq!(s.centered().norm_sq(), 2.0);
        let eta = s.eta()[0];
        assert_eq!(2.0 * eta * eta, 8.0);
        assert_eq!(s.centered().norm_sq() + 2.0 * eta * eta, s.norm_sq());
    }

    #[test]
    fn metric_examples() {
        let d = metric_g(&QPoint::scalars(&[1.0, 3.0]), &QPoint::scalars(&[2.0, 2.0])).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let d = metric_g(&QPoint::scalars(&[0.0, 4.0]), &QPoint::scalars(&[1.0, 2.0])).unwrap();
        assert!((d - 5f64.sqrt()).abs() < 1e-15);
        let s = QPoint::new(vec![vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
        assert_eq!(metric_g(&s, &s).unwrap(), 0.0);
    }

    #[test]
    fn metric_rejects_mismatch() {
        let a = QPoint::scalars(&[0.0, 1.0]);
        let b = QPoint::scalars(&[0.0, 1.0, 2.0]);
        assert!(matches!(metric_g(&a, &b), Err(SpecqError::DimensionMismatch { .. })));
    }

    #[test]
    fn sep_examples() {
        assert_eq!(QPoint::scalars(&[1.0, 1.0]).sep(), 0.0);
        assert_eq!(QPoint::scalars(&[0.0, 2.0]).sep(), 2.0);
        assert_eq!(QPoint::scalars(&[0.0, 0.0, 5.0]).sep(), 5.0);
    }

    #[test]
    fn canonical_order_makes_equality_multiset() {
        let a = QPoint::new(vec![vec![2.0, 1.0], vec![0.0, 3.0], vec![2.0, 0.0]]).unwrap();
        let b = QPoint::new(vec![vec![2.0, 0.0], vec![2.0, 1.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.atom(0), &[0.0, 3.0]);
    }

    #[test]
    fn hungarian_matches_brute_force_small() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let (p1, c1) = brute_force_assignment(&cost, 3);
        let (p2, c2) = hungarian_assignment(&cost, 3);
        assert_eq!(p1, vec![1, 0, 2]);
        assert_eq!(p1, p2);
        assert_eq!(c1, c2);
    }

    #[test]
    fn json_round_trip() {
        let s = QPoint::new(vec![vec![1.0, 2.0], vec![0.0, -1.0]]).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, "[[0.0,-1.0],[1.0,2.0]]");
        let back: QPoint = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }
}
