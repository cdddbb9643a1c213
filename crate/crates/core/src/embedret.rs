//! Euclidean embedding ζ of special Q-points, the retraction ϱ built from the
//! explicit map `R`, the almost-retraction ϱ*_δ, Luckhaus interpolation on an
//! annulus and Lipschitz extension of finitely many values.
//!
//! Embedded vectors are laid out as `[a (N) | b (N) | √Q·z (n)]` so that
//! |ζ(P)| = |P| holds with the plain Euclidean norm.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Result, SpecqError};
use crate::qpoints::{dist_sq, QPoint};
use crate::specpoints::{cone_project, metric_gs_sq, SpecPoint};

/// Threshold δ₀ for the almost-retraction: δ must lie in (0, δ₀).
pub const DELTA0: f64 = 0.5;

/// Tolerance for reading a point of ℝ^{2N+n} back as a special Q-point.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// An isometric embedding of centered classical Q-points into ℝᴺ.
pub trait Embedding: Send + Sync {
    fn name(&self) -> &'static str;
    fn q(&self) -> usize;
    fn n(&self) -> usize;
    /// Dimension N of the target.
    fn dim(&self) -> usize;
    /// Forward map on centered Q-points.
    fn xi(&self, s: &QPoint) -> Vec<f64>;
    /// Inverse on the image.
    fn xi_inv(&self, x: &[f64]) -> QPoint;
    /// Retraction of ℝᴺ onto the image of all Q-points.
    fn rho(&self, x: &[f64]) -> Vec<f64>;
    /// Retraction onto the image of centered Q-points, exactly the identity there.
    fn rho_centered(&self, x: &[f64]) -> Vec<f64>;
}

/// n = 1: sort the atoms; the retraction is isotonic regression.
#[derive(Clone, Debug)]
pub struct SortedN1 {
    q: usize,
}

impl SortedN1 {
    pub fn new(q: usize) -> Self {
        assert!(q >= 1);
        SortedN1 { q }
    }
}

/// Nearest nondecreasing vector (pool-adjacent-violators).
pub fn isotonic_regression(x: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut sums: Vec<f64> = Vec::with_capacity(x.len());
    let mut counts: Vec<usize> = Vec::with_capacity(x.len());
    for &v in x {
        sums.push(v);
        counts.push(1);
        while sums.len() > 1 {
            let k = sums.len();
            let prev = sums[k - 2] / counts[k - 2] as f64;
            let last = sums[k - 1] / counts[k - 1] as f64;
            if prev > last {
                let s = sums.pop().unwrap();
                let c = counts.pop().unwrap();
                sums[k - 2] += s;
                counts[k - 2] += c;
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(x.len());
    for (s, c) in sums.iter().zip(&counts) {
        let m = s / *c as f64;
        out.extend(std::iter::repeat(m).take(*c));
    }
    out
}

fn is_nondecreasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] <= w[1])
}

fn near_zero_sum(x: &[f64]) -> bool {
    let s: f64 = x.iter().sum();
    let scale: f64 = x.iter().map(|v| v.abs()).sum();
    s.abs() <= 1e-12 * scale.max(1.0)
}

impl Embedding for SortedN1 {
    fn name(&self) -> &'static str {
        "sorted-n1"
    }

    fn q(&self) -> usize {
        self.q
    }

    fn n(&self) -> usize {
        1
    }

    fn dim(&self) -> usize {
        self.q
    }

    fn xi(&self, s: &QPoint) -> Vec<f64> {
        // Canonical order of scalar atoms is ascending.
        s.flat().to_vec()
    }

    fn xi_inv(&self, x: &[f64]) -> QPoint {
        QPoint::from_flat(self.q, 1, x.to_vec())
    }

    fn rho(&self, x: &[f64]) -> Vec<f64> {
        if is_nondecreasing(x) {
            x.to_vec()
        } else {
            isotonic_regression(x)
        }
    }

    fn rho_centered(&self, x: &[f64]) -> Vec<f64> {
        if is_nondecreasing(x) && near_zero_sum(x) {
            return x.to_vec();
        }
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
        isotonic_regression(&c)
    }
}

type Factory = fn(usize) -> Arc<dyn Embedding>;

/// Embeddings keyed by (Q, n). The default registry knows `sorted-n1`.
#[derive(Clone)]
pub struct EmbeddingRegistry {
    by_n: HashMap<usize, (&'static str, Factory)>,
}

impl Default for EmbeddingRegistry {
    fn default() -> Self {
        let mut by_n: HashMap<usize, (&'static str, Factory)> = HashMap::new();
        by_n.insert(1, ("sorted-n1", |q| Arc::new(SortedN1::new(q))));
        EmbeddingRegistry { by_n }
    }
}

impl EmbeddingRegistry {
    pub fn register(&mut self, n: usize, name: &'static str, f: Factory) {
        self.by_n.insert(n, (name, f));
    }

    pub fn get(&self, q: usize, n: usize) -> Result<Arc<dyn Embedding>> {
        self.by_n
            .get(&n)
            .map(|(_, f)| f(q))
            .ok_or(SpecqError::UnsupportedEmbedding { q, n })
    }

    /// Looks an embedding up by name, e.g. `sorted-n1`.
    pub fn by_name(&self, name: &str, q: usize) -> Result<Arc<dyn Embedding>> {
        self.by_n
            .iter()
            .find(|(_, (nm, _))| *nm == name)
            .map(|(_, (_, f))| f(q))
            .ok_or_else(|| SpecqError::InvalidParameter(format!("unknown embedding {name}")))
    }
}

/// The full embedding ζ of special Q-points into ℝ^{2N+n}.
#[derive(Clone)]
pub struct Zeta {
    emb: Arc<dyn Embedding>,
    q: usize,
    n: usize,
    big_n: usize,
    sqrt_q: f64,
}

impl std::fmt::Debug for Zeta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Zeta({}, Q={}, n={})", self.emb.name(), self.q, self.n)
    }
}

impl Zeta {
    pub fn new(emb: Arc<dyn Embedding>) -> Self {
        let q = emb.q();
        let n = emb.n();
        Zeta { big_n: emb.dim(), emb, q, n, sqrt_q: (q as f64).sqrt() }
    }

    /// ζ for (Q, n) from the default registry.
    pub fn for_dims(q: usize, n: usize) -> Result<Self> {
        EmbeddingRegistry::default().get(q, n).map(Zeta::new)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// N, the dimension of each of the a and b blocks.
    pub fn block_dim(&self) -> usize {
        self.big_n
    }

    /// Total ambient dimension 2N + n.
    pub fn dim(&self) -> usize {
        2 * self.big_n + self.n
    }

    pub fn embedding(&self) -> &dyn Embedding {
        &*self.emb
    }

    /// ζ(P) written into `out` (length `dim()`).
    pub fn zeta_into(&self, p: &SpecPoint, out: &mut [f64]) {
        let nn = self.big_n;
        let z = p.eta();
        let c = p.base().translate(&z, -1);
        let x = self.emb.xi(&c);
        out.iter_mut().for_each(|v| *v = 0.0);
        if p.sign() > 0 {
            out[..nn].copy_from_slice(&x);
        } else {
            out[nn..2 * nn].copy_from_slice(&x);
        }
        for (o, zk) in out[2 * nn..].iter_mut().zip(&z) {
            *o = self.sqrt_q * zk;
        }
        // Collapsed points: centered part is exactly zero after recentring.
        if p.is_collapsed() {
            out[..2 * nn].iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn zeta(&self, p: &SpecPoint) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.zeta_into(p, &mut out);
        out
    }

    /// ζ⁻¹ on 𝒬; the smaller of the two blocks must vanish up to [`MEMBERSHIP_TOL`].
    pub fn zeta_inv(&self, e: &[f64]) -> Result<SpecPoint> {
        let nn = self.big_n;
        let (a, rest) = e.split_at(nn);
        let (b, zs) = rest.split_at(nn);
        let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if na.min(nb) > MEMBERSHIP_TOL {
            return Err(SpecqError::InvalidTriple(format!(
                "embedded point is off the image: min(|a|,|b|) = {}",
                na.min(nb)
            )));
        }
        let z: Vec<f64> = zs.iter().map(|v| v / self.sqrt_q).collect();
        let (block, sign) = if na >= nb { (a, 1) } else { (b, -1) };
        let c = self.emb.xi_inv(block);
        Ok(SpecPoint::new(c.translate(&z, 1), sign))
    }

    /// ρ′×ρ′ followed by `R`, identity on the z block.
    pub fn varrho(&self, e: &[f64]) -> Vec<f64> {
        let nn = self.big_n;
        let a = self.emb.rho_centered(&e[..nn]);
        let b = self.emb.rho_centered(&e[nn..2 * nn]);
        let (ra, rb) = r_pair(&a, &b);
        let mut out = Vec::with_capacity(e.len());
        out.extend_from_slice(&ra);
        out.extend_from_slice(&rb);
        out.extend_from_slice(&e[2 * nn..]);
        out
    }

    /// ρ′×ρ′ followed by `R_δ`, identity on the z block.
    pub fn varrho_star(&self, e: &[f64], delta: f64) -> Result<Vec<f64>> {
        check_delta(delta)?;
        let nn = self.big_n;
        let a = self.emb.rho_centered(&e[..nn]);
        let b = self.emb.rho_centered(&e[nn..2 * nn]);
        let (ra, rb) = r_delta(&a, &b, delta);
        let mut out = Vec::with_capacity(e.len());
        out.extend_from_slice(&ra);
        out.extend_from_slice(&rb);
        out.extend_from_slice(&e[2 * nn..]);
        Ok(out)
    }

    /// Euclidean nearest point of 𝒬 (ties go to the positive block); written in place.
    pub fn project_nearest(&self, e: &mut [f64]) {
        let nn = self.big_n;
        let pa = self.emb.rho_centered(&e[..nn]);
        let pb = self.emb.rho_centered(&e[nn..2 * nn]);
        let na: f64 = e[nn..2 * nn].iter().map(|v| v * v).sum::<f64>() + dist_sq(&pa, &e[..nn]);
        let nb: f64 = e[..nn].iter().map(|v| v * v).sum::<f64>() + dist_sq(&pb, &e[nn..2 * nn]);
        if na <= nb {
            e[..nn].copy_from_slice(&pa);
            e[nn..2 * nn].iter_mut().for_each(|v| *v = 0.0);
        } else {
            e[..nn].iter_mut().for_each(|v| *v = 0.0);
            e[nn..2 * nn].copy_from_slice(&pb);
        }
    }

    /// True when `e` lies in 𝒬 (image blocks in the cone, one of them zero).
    pub fn in_image(&self, e: &[f64]) -> bool {
        let nn = self.big_n;
        let a = &e[..nn];
        let b = &e[nn..2 * nn];
        let za = a.iter().all(|v| *v == 0.0);
        let zb = b.iter().all(|v| *v == 0.0);
        (za || zb) && self.emb.rho_centered(a) == a && self.emb.rho_centered(b) == b
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// The map `R` of ℝᴺ×ℝᴺ onto ℝᴺ×{0} ∪ {0}×ℝᴺ (Lipschitz constant √2).
pub fn r_pair(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nx = norm(x);
    let ny = norm(y);
    let zero = vec![0.0; x.len()];
    if nx > ny {
        if ny == 0.0 {
            return (x.to_vec(), vec![0.0; y.len()]);
        }
        let f = ny / nx;
        (x.iter().map(|v| v - f * v).collect(), vec![0.0; y.len()])
    } else if ny > nx {
        if nx == 0.0 {
            return (zero, y.to_vec());
        }
        let f = nx / ny;
        (zero, y.iter().map(|v| v - f * v).collect())
    } else {
        (zero, vec![0.0; y.len()])
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < DELTA0) {
        return Err(SpecqError::InvalidParameter(format!(
            "delta must lie in (0, {DELTA0}), got {delta}"
        )));
    }
    Ok(())
}

/// χ_δ: 0 on [0,δ], linear on [δ,1], 1 above 1.
pub fn chi_delta(s: f64, delta: f64) -> f64 {
    if s <= delta {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        (s - delta) / (1.0 - delta)
    }
}

fn radial(x: &[f64], r: f64) -> Vec<f64> {
    let nx = norm(x);
    if r == 0.0 || nx == 0.0 {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| v * r / nx).collect()
}

/// `R_δ`. Where both |x|, |y| exceed δ² the larger block keeps its direction
/// and its radius is reduced by |smaller| − δ² before applying χ_δ, which
/// joins the two formula branches continuously and vanishes on |x| = |y|.
pub fn r_delta(x: &[f64], y: &[f64], delta: f64) -> (Vec<f64>, Vec<f64>) {
    let d2 = delta * delta;
    let nx = norm(x);
    let ny = norm(y);
    let zx = vec![0.0; x.len()];
    let zy = vec![0.0; y.len()];
    if ny <= d2 {
        return (radial(x, chi_delta(nx, delta)), zy);
    }
    if nx <= d2 {
        return (zx, radial(y, chi_delta(ny, delta)));
    }
    if nx >= ny {
        (radial(x, chi_delta(nx - (ny - d2), delta)), zy)
    } else {
        (zx, radial(y, chi_delta(ny - (nx - d2), delta)))
    }
}

/// Discrete interpolant on the annulus B₁ ∖ B_{1−λ} (m = 2), sampled on a
/// polar grid with `radii[0] = 1 − λ` and `radii.last() = 1`.
#[derive(Clone, Debug)]
pub struct AnnulusField {
    pub lambda: f64,
    pub radii: Vec<f64>,
    pub angles: usize,
    /// `values[i * angles + k]` at radius `radii[i]`, angle 2πk/angles.
    pub values: Vec<SpecPoint>,
}

impl AnnulusField {
    pub fn at(&self, i: usize, k: usize) -> &SpecPoint {
        &self.values[i * self.angles + k]
    }

    /// Polar discrete Dirichlet energy.
    pub fn energy(&self) -> Result<f64> {
        let k = self.angles;
        let dth = 2.0 * PI / k as f64;
        let nr = self.radii.len();
        let mut e = 0.0;
        for i in 0..nr {
            let r = self.radii[i];
            let wr = if i == 0 {
                (self.radii[1] - self.radii[0]) / 2.0
            } else if i == nr - 1 {
                (self.radii[i] - self.radii[i - 1]) / 2.0
            } else {
                (self.radii[i + 1] - self.radii[i - 1]) / 2.0
            };
            for j in 0..k {
                let d = metric_gs_sq(self.at(i, j), self.at(i, (j + 1) % k))?;
                e += d * wr / (r * dth);
                if i + 1 < nr {
                    let dr = self.radii[i + 1] - r;
                    let rm = 0.5 * (self.radii[i + 1] + r);
                    e += metric_gs_sq(self.at(i, j), self.at(i + 1, j))? * rm * dth / dr;
                }
            }
        }
        Ok(e)
    }
}

/// Dirichlet energy of a map on the unit circle sampled at K equally spaced angles.
pub fn circle_energy(f: &[SpecPoint]) -> Result<f64> {
    let k = f.len();
    let dth = 2.0 * PI / k as f64;
    let mut e = 0.0;
    for j in 0..k {
        e += metric_gs_sq(&f[j], &f[(j + 1) % k])?;
    }
    Ok(e / dth)
}

/// ∫_{𝕊¹} 𝒢ₛ(f,g)² by the rectangle rule.
pub fn circle_distance_sq(f: &[SpecPoint], g: &[SpecPoint]) -> Result<f64> {
    let dth = 2.0 * PI / f.len() as f64;
    let mut s = 0.0;
    for (a, b) in f.iter().zip(g) {
        s += metric_gs_sq(a, b)?;
    }
    Ok(s * dth)
}

/// Luckhaus interpolation between `f` on ∂B₁ and `g` on ∂B_{1−λ}, with
/// `radial_steps` radial intervals.
pub fn luckhaus_interpolate(
    zeta: &Zeta,
    f: &[SpecPoint],
    g: &[SpecPoint],
    lambda: f64,
    radial_steps: usize,
) -> Result<AnnulusField> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(SpecqError::InvalidParameter(format!("lambda must lie in (0, 1/2), got {lambda}")));
    }
    if f.len() != g.len() || f.is_empty() {
        return Err(SpecqError::InvalidParameter("f and g need the same nonempty angular grid".into()));
    }
    if radial_steps < 1 {
        return Err(SpecqError::InvalidParameter("radial_steps must be >= 1".into()));
    }
    let k = f.len();
    let zf: Vec<Vec<f64>> = f.iter().map(|p| zeta.zeta(p)).collect();
    let zg: Vec<Vec<f64>> = g.iter().map(|p| zeta.zeta(p)).collect();
    let radii: Vec<f64> = (0..=radial_steps)
        .map(|i| (1.0 - lambda) + lambda * i as f64 / radial_steps as f64)
        .collect();
    let mut values = Vec::with_capacity(radii.len() * k);
    for i in 0..=radial_steps {
        for j in 0..k {
            // Endpoint weights are exactly 1 and 0; copy the data so traces match bit for bit.
            if i == 0 || i == radial_steps {
                values.push(if i == 0 { g[j].clone() } else { f[j].clone() });
                continue;
            }
            let t = i as f64 / radial_steps as f64;
            let e: Vec<f64> = zf[j].iter().zip(&zg[j]).map(|(a, b)| t * a + (1.0 - t) * b).collect();
            values.push(zeta.zeta_inv(&zeta.varrho(&e))?);
        }
    }
    Ok(AnnulusField { lambda, radii, angles: k, values })
}

/// Energy of the Luckhaus interpolant against λ(Dir f + Dir g) + λ⁻¹∫𝒢ₛ(f, g)².
#[derive(Clone, Debug, serde::Serialize)]
pub struct LuckhausBound {
    pub lambda: f64,
    pub energy: f64,
    pub dir_f: f64,
    pub dir_g: f64,
    pub dist_sq: f64,
    /// energy / (λ(dir_f + dir_g) + dist_sq/λ); zero when the denominator vanishes.
    pub ratio: f64,
}

/// Interpolates with radial spacing matched to the angular spacing and
/// reports the energy ratio.
pub fn luckhaus_bound(zeta: &Zeta, f: &[SpecPoint], g: &[SpecPoint], lambda: f64) -> Result<LuckhausBound> {
    let steps = ((lambda * f.len() as f64 / (2.0 * PI)).ceil() as usize).max(2);
    let u = luckhaus_interpolate(zeta, f, g, lambda, steps)?;
    let energy = u.energy()?;
    let dir_f = circle_energy(f)?;
    let dir_g = circle_energy(g)?;
    let dist_sq = circle_distance_sq(f, g)?;
    let den = lambda * (dir_f + dir_g) + dist_sq / lambda;
    Ok(LuckhausBound { lambda, energy, dir_f, dir_g, dist_sq, ratio: if den > 0.0 { energy / den } else { 0.0 } })
}

/// McShane extension of finitely many special Q-values, retracted back to 𝒬
/// and projected into the ball of radius max|f|.
#[derive(Clone, Debug)]
pub struct LipschitzExtension {
    zeta: Zeta,
    sites: Vec<Vec<f64>>,
    embedded: Vec<Vec<f64>>,
    lip: f64,
    sup: f64,
}

impl LipschitzExtension {
    pub fn new(zeta: Zeta, data: &[(Vec<f64>, SpecPoint)]) -> Result<Self> {
        if data.is_empty() {
            return Err(SpecqError::EmptyInput("no sites to extend from".into()));
        }
        let m = data[0].0.len();
        if data.iter().any(|(x, _)| x.len() != m) {
            return Err(SpecqError::InvalidParameter("sites have different dimensions".into()));
        }
        let sites: Vec<Vec<f64>> = data.iter().map(|(x, _)| x.clone()).collect();
        let embedded: Vec<Vec<f64>> = data.iter().map(|(_, p)| zeta.zeta(p)).collect();
        let mut lip: f64 = 0.0;
        for i in 0..sites.len() {
            for j in (i + 1)..sites.len() {
                let dx = dist_sq(&sites[i], &sites[j]).sqrt();
                if dx > 0.0 {
                    lip = lip.max(dist_sq(&embedded[i], &embedded[j]).sqrt() / dx);
                }
            }
        }
        let sup = data.iter().map(|(_, p)| p.norm()).fold(0.0, f64::max);
        Ok(LipschitzExtension { zeta, sites, embedded, lip, sup })
    }

    /// Lipschitz constant of the data (with respect to 𝒢ₛ).
    pub fn data_lipschitz(&self) -> f64 {
        self.lip
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup
    }

    pub fn eval(&self, x: &[f64]) -> Result<SpecPoint> {
        let dim = self.zeta.dim();
        let mut e = vec![f64::INFINITY; dim];
        for (s, v) in self.sites.iter().zip(&self.embedded) {
            let d = self.lip * dist_sq(s, x).sqrt();
            for (ek, vk) in e.iter_mut().zip(v) {
                *ek = ek.min(vk + d);
            }
        }
        let p = self.zeta.zeta_inv(&self.zeta.varrho(&e))?;
        Ok(cone_project(&p, self.sup))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specpoints::metric_gs;

    fn sp(v: &[f64], s: i8) -> SpecPoint {
        SpecPoint::new(QPoint::scalars(v), s)
    }

    #[test]
    fn xi_sorted_examples() {
        let e = SortedN1::new(2);
        assert_eq!(e.xi(&QPoint::scalars(&[3.0, 1.0])), vec![1.0, 3.0]);
        let a = e.xi(&QPoint::scalars(&[1.0, 3.0]));
        let b = e.xi(&QPoint::scalars(&[2.0, 2.0]));
        assert!((dist_sq(&a, &b).sqrt() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(e.rho(&[3.0, 1.0]), vec![2.0, 2.0]);
    }

    #[test]
    fn isotonic_pools_violators() {
        assert_eq!(isotonic_regression(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic_regression(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn unsupported_embedding() {
        assert!(matches!(Zeta::for_dims(2, 2), Err(SpecqError::UnsupportedEmbedding { q: 2, n: 2 })));
    }

    #[test]
    fn r_pair_examples() {
        assert_eq!(r_pair(&[1.0, 2.0], &[0.0, 0.0]), (vec![1.0, 2.0], vec![0.0, 0.0]));
        assert_eq!(r_pair(&[2.0], &[1.0]), (vec![1.0], vec![0.0]));
        assert_eq!(r_pair(&[3.0, 4.0], &[0.0, 5.0]), (vec![0.0, 0.0], vec![0.0, 0.0]));
    }

    #[test]
    fn chi_examples() {
        assert_eq!(chi_delta(0.2, 0.2), 0.0);
        assert_eq!(chi_delta(1.0, 0.2), 1.0);
        assert!((chi_delta(0.6, 0.2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn r_delta_examples() {
        let d = 0.2;
        assert_eq!(r_delta(&[0.01, 0.0], &[0.0, 0.02], d), (vec![0.0, 0.0], vec![0.0, 0.0]));
        let (a, b) = r_delta(&[3.0, 4.0], &[0.0, 0.0], d);
        assert!((a[0] - 0.6).abs() < 1e-15 && (a[1] - 0.8).abs() < 1e-15);
        assert_eq!(b, vec![0.0, 0.0]);
        assert_eq!(r_delta(&[0.0], &[0.2], d), (vec![0.0], vec![0.0]));
        // Continuity across |y| = δ².
        let (a1, _) = r_delta(&[0.7], &[d * d], d);
        let (a2, _) = r_delta(&[0.7], &[d * d + 1e-12], d);
        assert!((a1[0] - a2[0]).abs() < 1e-10);
    }

    #[test]
    fn zeta_preserves_norm_and_inverts() {
        let z = Zeta::for_dims(3, 1).unwrap();
        let p = sp(&[0.5, -2.0, 4.0], -1);
        let e = z.zeta(&p);
        assert!((norm(&e) - p.norm()).abs() < 1e-12);
        let back = z.zeta_inv(&e).unwrap();
        assert!(metric_gs(&back, &p).unwrap() < 1e-14);
        assert_eq!(z.varrho(&e), e);
    }

    #[test]
    fn varrho_lands_in_image() {
        let z = Zeta::for_dims(2, 1).unwrap();
        let e = [0.3, -0.1, -0.2, 0.5, 1.0];
        let r = z.varrho(&e);
        assert!(z.in_image(&r));
        assert!(z.zeta_inv(&r).is_ok());
    }

    #[test]
    fn project_nearest_picks_closer_block() {
        let z = Zeta::for_dims(2, 1).unwrap();
        let mut e = [-1.0, 1.0, -0.1, 0.1, 0.0];
        z.project_nearest(&mut e);
        assert_eq!(e, [-1.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn luckhaus_constant_data() {
        let z = Zeta::for_dims(2, 1).unwrap();
        let p = sp(&[-1.0, 2.0], -1);
        let f = vec![p.clone(); 16];
        let u = luckhaus_interpolate(&z, &f, &f, 0.2, 4).unwrap();
        assert!(u.values.iter().all(|v| metric_gs(v, &p).unwrap() < 1e-14));
        assert!(u.energy().unwrap() < 1e-20);
        assert!(luckhaus_interpolate(&z, &f, &f, 0.5, 4).is_err());
    }

    #[test]
    fn extension_of_constant_data() {
        let z = Zeta::for_dims(2, 1).unwrap();
        let p = sp(&[-1.0, 2.0], 1);
        let ext = LipschitzExtension::new(z.clone(), &[(vec![0.0, 0.0], p.clone()), (vec![1.0, 0.0], p.clone())]).unwrap();
        assert_eq!(ext.data_lipschitz(), 0.0);
        let v = ext.eval(&[0.3, 0.7]).unwrap();
        assert!(metric_gs(&v, &p).unwrap() < 1e-14);
        assert!(LipschitzExtension::new(z, &[]).is_err());
    }
}
