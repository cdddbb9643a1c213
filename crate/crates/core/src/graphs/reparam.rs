//! Reparametrization of a graph over the plane π obtained by rotating π₀ by
//! θ in the (x₁, y) plane (m = 2, n = 1).
//!
//! New coordinates: y₁ = x₁ cos θ + f sin θ, y₂ = x₂, τ = −x₁ sin θ + f cos θ.

use serde::Serialize;

use super::quad::{gauss_legendre, panel_rule, PlanarDomain};
use super::{SheetSpec, DEFAULT_ORDER};
use crate::error::{Result, SpecqError};
use crate::qpoints::QPoint;
use crate::specpoints::SpecPoint;

#[derive(Clone, Debug, Serialize)]
pub struct ReparamReport {
    pub theta: f64,
    pub s: f64,
    pub h: f64,
    /// Grid nodes of B_s(π) in (y₁, y₂) coordinates.
    pub nodes: Vec<[f64; 2]>,
    pub values: Vec<SpecPoint>,
    pub mass_g: f64,
    pub mass_f: f64,
    pub mass_rel_diff: f64,
    /// |π − π₀| = 2 sin(|θ|/2).
    pub tilt: f64,
    pub g_sup: f64,
    pub g_lip: f64,
    pub f_sup: f64,
    pub f_lip: f64,
    /// ‖g‖ / (s|π − π₀| + ‖f‖).
    pub c_c0: f64,
    /// Lip(g) / (|π − π₀| + Lip(f)).
    pub c_lip: f64,
}

struct Rotation {
    c: f64,
    s: f64,
}

impl Rotation {
    fn forward(&self, x: &[f64; 2], f: f64) -> [f64; 2] {
        [x[0] * self.c + f * self.s, x[1]]
    }
}

/// Solves y₁ sin θ + τ cos θ = f(y₁ cos θ − τ sin θ, y₂) for τ and returns
/// the footpoint x. `f` returns (value, ∂₁ value).
fn shoot<F: Fn(&[f64; 2]) -> (f64, f64)>(rot: &Rotation, y: &[f64; 2], bound: f64, f: F) -> Result<[f64; 2]> {
    let x_of = |t: f64| [y[0] * rot.c - t * rot.s, y[1]];
    let phi = |t: f64| y[0] * rot.s + t * rot.c - f(&x_of(t)).0;
    let fail = |reason: String| SpecqError::RootFinding { node: y.to_vec(), reason };
    let (mut lo, mut hi) = (-bound, bound);
    let (flo, fhi) = (phi(lo), phi(hi));
    if !(flo < 0.0 && fhi > 0.0) {
        if flo == 0.0 {
            return Ok(x_of(lo));
        }
        if fhi == 0.0 {
            return Ok(x_of(hi));
        }
        return Err(fail(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..3 {
        let (_, p) = f(&x_of(t));
        let d = rot.c + rot.s * p;
        if d.abs() < 1e-12 {
            return Err(fail("vertical tangent".into()));
        }
        let v = phi(t);
        if v == 0.0 {
            break;
        }
        t -= v / d;
    }
    if !t.is_finite() || phi(t).abs() > 1e-9 * (1.0 + bound) {
        return Err(fail(format!("residual {:e} after Newton", phi(t))));
    }
    Ok(x_of(t))
}

struct Sheets<'a> {
    spec: &'a SheetSpec,
    rot: Rotation,
    bound: f64,
}

impl Sheets<'_> {
    /// Footpoint of sheet k over y, with τ and ∇τ.
    fn sheet(&self, k: usize, y: &[f64; 2]) -> Result<([f64; 2], f64, [f64; 2])> {
        let x = shoot(&self.rot, y, self.bound, |x| {
            (self.spec.sheet_value(k, x)[0], self.spec.sheet_gradient(k, x)[0])
        })?;
        let fx = self.spec.sheet_value(k, &x)[0];
        let g = self.spec.sheet_gradient(k, &x);
        let (c, s) = (self.rot.c, self.rot.s);
        let den = c + g[0] * s;
        Ok((x, -x[0] * s + fx * c, [(g[0] * c - s) / den, g[1] / den]))
    }

    /// Footpoint of the mean sheet over y.
    fn mean_footpoint(&self, y: &[f64; 2]) -> Result<[f64; 2]> {
        let q = self.spec.q as f64;
        shoot(&self.rot, y, self.bound, |x| {
            let mut v = 0.0;
            let mut p = 0.0;
            for k in 0..self.spec.q {
                v += self.spec.sheet_value(k, x)[0] / q;
                p += self.spec.sheet_gradient(k, x)[0] / q;
            }
            (v, p)
        })
    }
}

const POLAR_ANGLES: usize = 256;
const RADIAL_PANELS: usize = 4;

/// Mass of sheet k over its preimage of B_s(π), in polar coordinates about
/// the preimage of the origin.
fn preimage_mass(sh: &Sheets, k: usize, s: f64) -> Result<f64> {
    let (x0, _, _) = sh.sheet(k, &[0.0, 0.0])?;
    let y_of = |x: &[f64; 2]| sh.rot.forward(x, sh.spec.sheet_value(k, x)[0]);
    let (gx, gw) = gauss_legendre(8);
    let mut total = 0.0;
    for a in 0..POLAR_ANGLES {
        let phi = 2.0 * std::f64::consts::PI * a as f64 / POLAR_ANGLES as f64;
        let e = [phi.cos(), phi.sin()];
        let at = |r: f64| [x0[0] + r * e[0], x0[1] + r * e[1]];
        let outside = |r: f64| {
            let y = y_of(&at(r));
            y[0].hypot(y[1]) > s
        };
        let mut hi = 2.0 * s;
        let mut grow = 0;
        while !outside(hi) {
            hi *= 2.0;
            grow += 1;
            if grow > 30 {
                return Err(SpecqError::RootFinding { node: at(hi).to_vec(), reason: "preimage unbounded".into() });
            }
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if outside(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let rho = 0.5 * (lo + hi);
        let pw = rho / RADIAL_PANELS as f64;
        let mut line = 0.0;
        for p in 0..RADIAL_PANELS {
            for (t, w) in gx.iter().zip(&gw) {
                let r = pw * (p as f64 + 0.5 * (t + 1.0));
                let g = sh.spec.sheet_gradient(k, &at(r));
                line += 0.5 * pw * w * r * (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
            }
        }
        total += line * 2.0 * std::f64::consts::PI / POLAR_ANGLES as f64;
    }
    Ok(total)
}

/// Reparametrizes the graph of `spec` over the tilted plane at angle
/// `theta`, sampling g on the grid of spacing `h` inside B_s(π).
pub fn reparametrize_tilted(spec: &SheetSpec, theta: f64, s: f64, h: f64) -> Result<ReparamReport> {
    if spec.n != 1 || spec.m != 2 {
        return Err(SpecqError::InvalidParameter("reparametrization supports m = 2, n = 1".into()));
    }
    if !(theta.abs() < std::f64::consts::FRAC_PI_4) {
        return Err(SpecqError::InvalidParameter(format!("tilt {theta} must satisfy |θ| < π/4")));
    }
    if !(s > 0.0 && h > 0.0 && h <= s) {
        return Err(SpecqError::InvalidParameter("need 0 < h ≤ s".into()));
    }
    let tilt = 2.0 * (theta.abs() / 2.0).sin();
    let f_bound = spec.sup_norm(&PlanarDomain::disk(2.0 * s))?;
    let sh = Sheets { spec, rot: Rotation { c: theta.cos(), s: theta.sin() }, bound: 2.0 * (f_bound + s * tilt) + s };

    let k_max = (s / h).floor() as i64;
    let mut nodes = Vec::new();
    for i in -k_max..=k_max {
        for j in -k_max..=k_max {
            let y = [i as f64 * h, j as f64 * h];
            if y[0].hypot(y[1]) <= s * (1.0 + 1e-12) {
                nodes.push(y);
            }
        }
    }
    let (mut g_sup, mut g_lip, mut f_sup, mut f_lip) = (0f64, 0f64, 0f64, 0f64);
    let mut values = Vec::with_capacity(nodes.len());
    for y in &nodes {
        let mut taus = Vec::with_capacity(spec.q);
        for k in 0..spec.q {
            let (x, t, dt) = sh.sheet(k, y)?;
            let fg = spec.sheet_gradient(k, &x);
            g_sup = g_sup.max(t.abs());
            g_lip = g_lip.max(dt[0].hypot(dt[1]));
            f_sup = f_sup.max(spec.sheet_value(k, &x)[0].abs());
            f_lip = f_lip.max(fg[0].hypot(fg[1]));
            taus.push(t);
        }
        let sign = spec.sign_at(&sh.mean_footpoint(y)?);
        values.push(SpecPoint::new(QPoint::scalars(&taus), sign));
    }

    let mut mass_g = 0.0;
    for pts in panel_rule(&PlanarDomain::disk(s), DEFAULT_ORDER, None)? {
        for p in pts {
            for k in 0..spec.q {
                let (_, _, dt) = sh.sheet(k, &p.x)?;
                mass_g += p.w * (1.0 + dt[0] * dt[0] + dt[1] * dt[1]).sqrt();
            }
        }
    }
    let mass_f = (0..spec.q).map(|k| preimage_mass(&sh, k, s)).sum::<Result<f64>>()?;
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    Ok(ReparamReport {
        theta,
        s,
        h,
        nodes,
        values,
        mass_g,
        mass_f,
        mass_rel_diff: (mass_g - mass_f).abs() / mass_f,
        tilt,
        g_sup,
        g_lip,
        f_sup,
        f_lip,
        c_c0: ratio(g_sup, s * tilt + f_sup),
        c_lip: ratio(g_lip, tilt + f_lip),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::Polynomial;

    #[test]
    fn identity_when_untilted() {
        let spec = SheetSpec::enneper(1.0);
        let r = reparametrize_tilted(&spec, 0.0, 0.5, 0.1).unwrap();
        for (y, v) in r.nodes.iter().zip(&r.values) {
            assert_eq!(v, &spec.value(y));
        }
        assert!(r.mass_rel_diff < 1e-8);
    }

    #[test]
    fn linear_rotation_closed_form() {
        for (a, th) in [(0.3, 0.1), (-0.5, 0.2), (0.0, -0.3)] {
            let spec = SheetSpec::linear(2, &[a, 0.0]).unwrap();
            let r = reparametrize_tilted(&spec, th, 0.5, 0.125).unwrap();
            let slope = (f64::atan(a) - th).tan();
            for (y, v) in r.nodes.iter().zip(&r.values) {
                for atom in v.base().atoms() {
                    assert!((atom[0] - slope * y[0]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn enneper_mass_invariant() {
        let spec = SheetSpec::enneper(1.0 / 6.0);
        let r = reparametrize_tilted(&spec, 0.05, 0.5, 0.05).unwrap();
        assert!(r.mass_rel_diff < 1e-4, "{r:?}");
    }

    #[test]
    fn rejects_large_tilt_and_vectors() {
        let spec = SheetSpec::enneper(1.0);
        assert!(reparametrize_tilted(&spec, 1.0, 0.5, 0.1).is_err());
        let v = SheetSpec::new(vec![vec![Polynomial::zero(2); 2]], None).unwrap();
        assert!(reparametrize_tilted(&v, 0.1, 0.5, 0.1).is_err());
    }
}
