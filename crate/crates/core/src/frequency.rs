//! Frequency function I(r) = r·D(r)/H(r) of a field around a center, with
//! monotonicity, key-identity and energy-decay diagnostics.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SpecqError};
use crate::fields::{default_trace_samples, edge_energies, EmbeddedGrid, GridField};
use crate::minimize::point_jet;

/// H below this is treated as zero and I is masked.
pub const H_FLOOR: f64 = 1e-14;
/// Discretization allowance in the default monotonicity tolerance 1e−3 + C·h.
pub const MONOTONE_C: f64 = 2.0;

pub fn default_monotone_tol(h: f64) -> f64 {
    1e-3 + MONOTONE_C * h
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyProfile {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub d: Vec<f64>,
    pub h: Vec<f64>,
    pub i: Vec<Option<f64>>,
    /// Radii where H vanishes although the field is nonzero somewhere.
    pub flagged: Vec<usize>,
}

impl FrequencyProfile {
    /// max H/(rD) over radii with D > 0.
    pub fn poincare_ratio(&self) -> Option<f64> {
        self.radii
            .iter()
            .zip(self.d.iter().zip(&self.h))
            .filter(|(_, (d, _))| **d > 0.0)
            .map(|(r, (d, h))| h / (r * d))
            .reduce(f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,D,H,I\n");
        for k in 0..self.radii.len() {
            let i = self.i[k].map_or(String::new(), |v| format!("{v:.12e}"));
            s.push_str(&format!("{:.12e},{:.12e},{:.12e},{}\n", self.radii[k], self.d[k], self.h[k], i));
        }
        s
    }
}

/// Ball energies and circle integrals of one field around one center.
pub struct BallProbe<'a> {
    field: &'a GridField,
    grid: EmbeddedGrid<'a>,
    center: Vec<f64>,
    max_r: f64,
    /// (endpoint a, endpoint b, scaled edge energy)
    edges: Vec<([f64; 2], [f64; 2], f64)>,
}

impl<'a> BallProbe<'a> {
    pub fn new(field: &'a GridField, center: &[f64]) -> Result<Self> {
        let d = field.domain();
        if d.m() != 2 || center.len() != 2 {
            return Err(SpecqError::InvalidParameter("frequency diagnostics need m = 2".into()));
        }
        let scale = d.energy_scale();
        let edges = edge_energies(field)?
            .into_iter()
            .filter(|e| e.3 > 0.0)
            .map(|(i, j, w, e)| {
                let a = d.coords(i);
                let b = d.coords(j);
                ([a[0], a[1]], [b[0], b[1]], scale * w * e)
            })
            .collect();
        Ok(BallProbe {
            field,
            grid: EmbeddedGrid::new(field)?,
            center: center.to_vec(),
            max_r: d.dist_to_boundary(center),
            edges,
        })
    }

    fn check(&self, r: f64) -> Result<()> {
        if r > 0.0 && r < self.max_r {
            Ok(())
        } else {
            Err(SpecqError::RadiusOutOfRange { r, max: self.max_r })
        }
    }

    /// D(r), each edge weighted by the fraction of its dual h×h strip inside B_r.
    pub fn d(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        let c = &self.center;
        let h = self.field.domain().h();
        Ok(self.edges.iter().map(|(a, b, e)| e * strip_fraction(a, b, h, c, r)).sum())
    }

    /// H(r) = ∫_{∂B_r} |u|², trapezoid rule on the trace.
    pub fn h(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        let k = default_trace_samples(r, self.field.domain().h()).max(64);
        let tr = self.grid.trace_circle(&self.center, r, k)?;
        let ds = 2.0 * std::f64::consts::PI * r / k as f64;
        Ok(tr.iter().map(|p| p.norm_sq()).sum::<f64>() * ds)
    }

    /// (∫_{∂B_r} |∂_ν u|², ∫_{∂B_r} Σ⟨∂_ν u_i, u_i⟩) from cellwise sheet jets.
    pub fn normal_integrals(&self, r: f64) -> Result<(f64, f64)> {
        self.check(r)?;
        let k = 2 * default_trace_samples(r, self.field.domain().h()).max(64);
        let ds = 2.0 * std::f64::consts::PI * r / k as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for j in 0..k {
            let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / k as f64;
            let nu = [th.cos(), th.sin()];
            let x = [self.center[0] + r * nu[0], self.center[1] + r * nu[1]];
            let jet = point_jet(self.field, &x)?.ok_or(SpecqError::RadiusOutOfRange { r, max: self.max_r })?;
            let s = &jet.stress;
            a += s[0] * nu[0] * nu[0] + (s[1] + s[2]) * nu[0] * nu[1] + s[3] * nu[1] * nu[1];
            b += jet.half_grad_norm_sq[0] * nu[0] + jet.half_grad_norm_sq[1] * nu[1];
        }
        Ok((a * ds, b * ds))
    }
}

/// Fraction of segment [a, b] lying in the closed ball B_r(c).
fn inside_fraction(a: &[f64; 2], b: &[f64; 2], c: &[f64], r: f64) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let f = [a[0] - c[0], a[1] - c[1]];
    let qa = d[0] * d[0] + d[1] * d[1];
    let qb = 2.0 * (f[0] * d[0] + f[1] * d[1]);
    let qc = f[0] * f[0] + f[1] * f[1] - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let t0 = ((-qb - sq) / (2.0 * qa)).max(0.0);
    let t1 = ((-qb + sq) / (2.0 * qa)).min(1.0);
    (t1 - t0).max(0.0)
}

/// Fraction of the h-wide strip around the axis-aligned edge [a, b] lying in
/// B_r(c), by a 32-point midpoint rule across the strip.
fn strip_fraction(a: &[f64; 2], b: &[f64; 2], h: f64, c: &[f64], r: f64) -> f64 {
    let mid = [0.5 * (a[0] + b[0]) - c[0], 0.5 * (a[1] + b[1]) - c[1]];
    let near = ((mid[0].abs() - h).max(0.0)).hypot((mid[1].abs() - h).max(0.0));
    let far = (mid[0].abs() + h).hypot(mid[1].abs() + h);
    if far <= r {
        return 1.0;
    }
    if near >= r {
        return 0.0;
    }
    let perp = if a[0] == b[0] { [1.0, 0.0] } else { [0.0, 1.0] };
    const K: usize = 32;
    let mut acc = 0.0;
    for k in 0..K {
        let s = h * ((k as f64 + 0.5) / K as f64 - 0.5);
        let a2 = [a[0] + s * perp[0], a[1] + s * perp[1]];
        let b2 = [b[0] + s * perp[0], b[1] + s * perp[1]];
        acc += inside_fraction(&a2, &b2, c, r);
    }
    acc / K as f64
}

/// 24 radii geometrically spaced in [4h, dist(x₀, ∂Ω) − 4h].
pub fn default_radii(u: &GridField, center: &[f64]) -> Result<Vec<f64>> {
    let d = u.domain();
    let lo = 4.0 * d.h();
    let hi = d.dist_to_boundary(center) - 4.0 * d.h();
    if hi <= lo {
        return Err(SpecqError::RadiusOutOfRange { r: lo, max: hi });
    }
    Ok(geometric_radii(lo, hi, 24))
}

pub fn geometric_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let ratio = (hi / lo).ln();
    (0..count).map(|k| lo * (ratio * k as f64 / (count - 1).max(1) as f64).exp()).collect()
}

pub fn frequency_profile(u: &GridField, center: &[f64], radii: &[f64]) -> Result<FrequencyProfile> {
    if radii.is_empty() {
        return Err(SpecqError::EmptyInput("radii".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpecqError::InvalidParameter("radii must be strictly increasing".into()));
    }
    let probe = BallProbe::new(u, center)?;
    let dh: Vec<(f64, f64)> = radii.iter().map(|&r| Ok((probe.d(r)?, probe.h(r)?))).collect::<Result<_>>()?;
    let nonzero = u.values.iter().any(|p| p.norm_sq() > 0.0);
    let mut prof = FrequencyProfile {
        center: center.to_vec(),
        radii: radii.to_vec(),
        d: dh.iter().map(|x| x.0).collect(),
        h: dh.iter().map(|x| x.1).collect(),
        i: Vec::with_capacity(radii.len()),
        flagged: Vec::new(),
    };
    for k in 0..radii.len() {
        if prof.h[k] < H_FLOOR {
            prof.i.push(None);
            if nonzero {
                prof.flagged.push(k);
            }
        } else {
            prof.i.push(Some(radii[k] * prof.d[k] / prof.h[k]));
        }
    }
    Ok(prof)
}

/// Profiles around several centers, computed in parallel.
pub fn frequency_profiles(u: &GridField, centers: &[Vec<f64>], radii: &[f64]) -> Vec<Result<FrequencyProfile>> {
    centers.par_iter().map(|c| frequency_profile(u, c, radii)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneReport {
    pub tol: f64,
    /// (k, I(r_k) − I(r_{k+1})) for each drop larger than `tol`.
    pub violations: Vec<(usize, f64)>,
    /// Largest drop between consecutive defined values (0 when none).
    pub max_drop: f64,
    pub passed: bool,
}

pub fn check_monotone(p: &FrequencyProfile, tol: f64) -> MonotoneReport {
    let mut violations = Vec::new();
    let mut max_drop: f64 = 0.0;
    for k in 0..p.i.len().saturating_sub(1) {
        if let (Some(a), Some(b)) = (p.i[k], p.i[k + 1]) {
            let drop = a - b;
            max_drop = max_drop.max(drop);
            if drop > tol {
                violations.push((k, drop));
            }
        }
    }
    MonotoneReport { tol, passed: violations.is_empty(), violations, max_drop }
}

/// Both sides of the three radial identities at one radius.
#[derive(Clone, Debug, Serialize)]
pub struct KeyIdentities {
    pub r: f64,
    pub d: f64,
    pub h: f64,
    pub d_prime: f64,
    pub d_prime_formula: f64,
    pub h_prime: f64,
    pub h_prime_formula: f64,
    /// ∫_{∂B_r} Σ⟨∂_ν u_i, u_i⟩, to be compared with D(r).
    pub outer_boundary_term: f64,
    /// Relative residuals |lhs − rhs| / max(|lhs|, |rhs|), 0 when both are at roundoff level.
    pub residual_d_prime: f64,
    pub residual_h_prime: f64,
    pub residual_outer: f64,
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s <= floor {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// D′ and H′ by Richardson-extrapolated central differences with step 8h.
pub fn key_identity_residuals(u: &GridField, center: &[f64], r: f64) -> Result<KeyIdentities> {
    let probe = BallProbe::new(u, center)?;
    let hh = u.domain().h();
    let step = 8.0 * hh;
    if r - step < 2.0 * hh || r + step > probe.max_r - 2.0 * hh {
        return Err(SpecqError::RadiusOutOfRange { r, max: probe.max_r - step - 2.0 * hh });
    }
    let deriv = |f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        let c1 = (f(r + step)? - f(r - step)?) / (2.0 * step);
        let c2 = (f(r + step / 2.0)? - f(r - step / 2.0)?) / step;
        Ok((4.0 * c2 - c1) / 3.0)
    };
    let m = 2.0;
    let d = probe.d(r)?;
    let h = probe.h(r)?;
    let d_prime = deriv(&|s| probe.d(s))?;
    let h_prime = deriv(&|s| probe.h(s))?;
    let (nn, nu) = probe.normal_integrals(r)?;
    // Roundoff floor in units of |u|².
    let floor = 1e-12 * (d + h / r);
    let d_prime_formula = (m - 2.0) / r * d + 2.0 * nn;
    let h_prime_formula = (m - 1.0) / r * h + 2.0 * d;
    Ok(KeyIdentities {
        r,
        d,
        h,
        d_prime,
        d_prime_formula,
        h_prime,
        h_prime_formula,
        outer_boundary_term: nu,
        residual_d_prime: rel(d_prime, d_prime_formula, floor / r),
        residual_h_prime: rel(h_prime, h_prime_formula, floor),
        residual_outer: rel(d, nu, floor),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub alpha: f64,
    pub tol: f64,
    pub passed: bool,
    /// Largest relative drop of ρ^{2−m−2α} D(ρ) between consecutive radii.
    pub worst_drop: f64,
}

fn decay_drop(radii: &[f64], d: &[f64], m: f64, alpha: f64) -> f64 {
    let g: Vec<f64> = radii.iter().zip(d).map(|(r, d)| r.powf(2.0 - m - 2.0 * alpha) * d).collect();
    g.windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| (w[0] - w[1]) / w[0])
        .fold(0.0, f64::max)
}

/// Checks that ρ ↦ ρ^{2−m−2α} D(ρ) is nondecreasing up to a relative `tol`.
pub fn energy_decay_check(p: &FrequencyProfile, alpha: f64, tol: f64) -> DecayReport {
    let worst = decay_drop(&p.radii, &p.d, 2.0, alpha);
    DecayReport { alpha, tol, passed: worst <= tol, worst_drop: worst }
}

/// Largest α ∈ [0, 1] passing [`energy_decay_check`], by bisection (the
/// check is monotone in α).
pub fn max_decay_exponent(p: &FrequencyProfile, tol: f64) -> f64 {
    if energy_decay_check(p, 1.0, tol).passed {
        return 1.0;
    }
    if !energy_decay_check(p, 0.0, tol).passed {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if energy_decay_check(p, mid, tol).passed {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enneper::{self, Labeling};
    use crate::fields::{GridDomain, Shape};
    use crate::qpoints::QPoint;
    use crate::specpoints::SpecPoint;
    use std::sync::Arc;

    fn disk(h: f64) -> Arc<GridDomain> {
        Arc::new(GridDomain::new(Shape::unit_disk(), 2, h).unwrap())
    }

    fn linear(h: f64) -> GridField {
        GridField::from_fn(disk(h), |x| SpecPoint::collapsed(2, &[0.7 * x[0] - 0.4 * x[1]]))
    }

    #[test]
    fn inside_fraction_cases() {
        let c = [0.0, 0.0];
        assert_eq!(inside_fraction(&[0.0, 0.0], &[0.5, 0.0], &c, 1.0), 1.0);
        assert_eq!(inside_fraction(&[2.0, 0.0], &[3.0, 0.0], &c, 1.0), 0.0);
        assert_eq!(strip_fraction(&[0.0, 0.0], &[0.1, 0.0], 0.1, &c, 1.0), 1.0);
        assert!((strip_fraction(&[0.95, 0.0], &[1.05, 0.0], 0.1, &c, 1.0) - 0.5).abs() < 0.01);
        assert!((inside_fraction(&[0.5, 0.0], &[1.5, 0.0], &c, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn linear_field_has_frequency_one() {
        let u = linear(1.0 / 64.0);
        let p = frequency_profile(&u, &[0.0, 0.0], &default_radii(&u, &[0.0, 0.0]).unwrap()).unwrap();
        for v in p.i.iter().flatten() {
            assert!((v - 1.0).abs() < 0.02, "{v}");
        }
        assert!(max_decay_exponent(&p, default_monotone_tol(u.domain().h())) >= 1.0 - 1e-3);
    }

    #[test]
    fn example_field_has_frequency_two() {
        let u = GridField::from_fn(disk(1.0 / 64.0), |x| enneper::value(x[0], x[1], Labeling::Quadrant));
        let radii = geometric_radii(0.2, 0.7, 8);
        let p = frequency_profile(&u, &[0.0, 0.0], &radii).unwrap();
        for v in p.i.iter().flatten() {
            assert!((v - 2.0).abs() < 0.04, "{v}");
        }
        assert!(check_monotone(&p, default_monotone_tol(1.0 / 64.0)).passed);
    }

    #[test]
    fn collapsed_nonzero_center_has_small_frequency() {
        let u = GridField::from_fn(disk(1.0 / 64.0), |x| SpecPoint::collapsed(2, &[1.0 + x[0]]));
        let p = frequency_profile(&u, &[0.0, 0.0], &geometric_radii(0.05, 0.4, 4)).unwrap();
        let i: Vec<f64> = p.i.iter().flatten().copied().collect();
        assert!(i[0] < 0.01 && i.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_field_masks_frequency() {
        let u = GridField::from_fn(disk(0.125), |_| SpecPoint::zero(2, 1));
        let p = frequency_profile(&u, &[0.0, 0.0], &[0.5]).unwrap();
        assert_eq!(p.i, vec![None]);
        assert!(p.flagged.is_empty());
        assert!(energy_decay_check(&p, 1.0, 0.0).passed);
    }

    #[test]
    fn constant_field_identities_vanish() {
        let u = GridField::from_fn(disk(1.0 / 32.0), |_| SpecPoint::new(QPoint::scalars(&[0.0, 1.0]), -1));
        let k = key_identity_residuals(&u, &[0.0, 0.0], 0.5).unwrap();
        assert_eq!((k.residual_d_prime, k.residual_outer), (0.0, 0.0), "{k:?}");
        assert!(k.residual_h_prime < 1e-12, "{k:?}");
    }

    #[test]
    fn linear_field_identities() {
        let u = linear(1.0 / 64.0);
        let k = key_identity_residuals(&u, &[0.0, 0.0], 0.5).unwrap();
        assert!(k.residual_d_prime < 5e-3, "{k:?}");
        assert!(k.residual_h_prime < 5e-3, "{k:?}");
        assert!(k.residual_outer < 5e-3, "{k:?}");
        assert!(key_identity_residuals(&u, &[0.0, 0.0], 0.05).is_err());
    }

    #[test]
    fn rejects_bad_radii() {
        let u = linear(0.125);
        assert!(frequency_profile(&u, &[0.0, 0.0], &[0.5, 0.4]).is_err());
        assert!(frequency_profile(&u, &[0.0, 0.0], &[1.5]).is_err());
        assert!(frequency_profile(&u, &[0.0, 0.0], &[]).is_err());
    }
}
