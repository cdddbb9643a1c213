//! Planar integration domains and panel quadrature aligned to a sign predicate.

use serde::{Deserialize, Serialize};

use super::poly::Polynomial;
use crate::error::{Result, SpecqError};

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PlanarDomain {
    Disk { center: [f64; 2], radius: f64 },
    Rect { lo: [f64; 2], hi: [f64; 2] },
}

impl PlanarDomain {
    pub fn disk(radius: f64) -> Self {
        PlanarDomain::Disk { center: [0.0, 0.0], radius }
    }

    pub fn area(&self) -> f64 {
        match self {
            PlanarDomain::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            PlanarDomain::Rect { lo, hi } => (hi[0] - lo[0]) * (hi[1] - lo[1]),
        }
    }

    /// Whether the closed ball B_ρ(c) lies in the interior.
    pub fn contains_ball(&self, c: &[f64], rho: f64) -> bool {
        match self {
            PlanarDomain::Disk { center, radius } => (c[0] - center[0]).hypot(c[1] - center[1]) + rho < *radius,
            PlanarDomain::Rect { lo, hi } => (0..2).all(|k| c[k] - rho > lo[k] && c[k] + rho < hi[k]),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            PlanarDomain::Disk { radius, .. } => *radius > 0.0,
            PlanarDomain::Rect { lo, hi } => hi[0] > lo[0] && hi[1] > lo[1],
        };
        if ok {
            Ok(())
        } else {
            Err(SpecqError::InvalidParameter(format!("degenerate domain {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Panel {
    /// Polar panel around `c`: r ∈ [a0, a1], θ ∈ [b0, b1].
    Polar { c: [f64; 2], a0: f64, a1: f64, b0: f64, b1: f64 },
    Rect { a0: f64, a1: f64, b0: f64, b1: f64 },
}

impl Panel {
    fn map(&self, s: f64, t: f64) -> ([f64; 2], f64) {
        match *self {
            Panel::Polar { c, a0, a1, b0, b1 } => {
                let r = a0 + (a1 - a0) * s;
                let th = b0 + (b1 - b0) * t;
                ([c[0] + r * th.cos(), c[1] + r * th.sin()], r * (a1 - a0) * (b1 - b0))
            }
            Panel::Rect { a0, a1, b0, b1 } => ([a0 + (a1 - a0) * s, b0 + (b1 - b0) * t], (a1 - a0) * (b1 - b0)),
        }
    }

    fn split(&self) -> [Panel; 4] {
        let quarter = |a0: f64, a1: f64, b0: f64, b1: f64| match *self {
            Panel::Polar { c, .. } => Panel::Polar { c, a0, a1, b0, b1 },
            Panel::Rect { .. } => Panel::Rect { a0, a1, b0, b1 },
        };
        let (a0, a1, b0, b1) = match *self {
            Panel::Polar { a0, a1, b0, b1, .. } | Panel::Rect { a0, a1, b0, b1 } => (a0, a1, b0, b1),
        };
        let am = 0.5 * (a0 + a1);
        let bm = 0.5 * (b0 + b1);
        [quarter(a0, am, b0, bm), quarter(am, a1, b0, bm), quarter(a0, am, bm, b1), quarter(am, a1, bm, b1)]
    }

    /// Whether `pred` takes both strict signs on a sample set of the closed panel.
    fn straddles(&self, pred: &Polynomial) -> bool {
        const K: usize = 6;
        let (mut pos, mut neg) = (false, false);
        for i in 0..=K {
            for j in 0..=K {
                let (x, _) = self.map(i as f64 / K as f64, j as f64 / K as f64);
                let v = pred.eval(&x);
                pos |= v > 0.0;
                neg |= v < 0.0;
            }
        }
        pos && neg
    }
}

/// A quadrature point with weight (Jacobian included).
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub x: [f64; 2],
    pub w: f64,
}

/// Tensor Gauss–Legendre rule of the given order on base panels (16 polar
/// sectors aligned to multiples of π/8 by 4 radial rings for disks, 4×4 for
/// rectangles). Panels on which `pred` changes sign are split up to 6 times.
/// Points are grouped by panel, in a fixed order.
pub fn panel_rule(dom: &PlanarDomain, order: usize, pred: Option<&Polynomial>) -> Result<Vec<Vec<QuadPoint>>> {
    if order < 1 {
        return Err(SpecqError::InvalidParameter("quadrature order must be at least 1".into()));
    }
    dom.validate()?;
    let mut base = Vec::new();
    match *dom {
        PlanarDomain::Disk { center, radius } => {
            let (na, nr) = (16, 4);
            for i in 0..nr {
                for j in 0..na {
                    let tp = 2.0 * std::f64::consts::PI / na as f64;
                    base.push(Panel::Polar {
                        c: center,
                        a0: radius * i as f64 / nr as f64,
                        a1: radius * (i + 1) as f64 / nr as f64,
                        b0: tp * j as f64,
                        b1: tp * (j + 1) as f64,
                    });
                }
            }
        }
        PlanarDomain::Rect { lo, hi } => {
            let n = 4;
            for i in 0..n {
                for j in 0..n {
                    let dx = (hi[0] - lo[0]) / n as f64;
                    let dy = (hi[1] - lo[1]) / n as f64;
                    base.push(Panel::Rect {
                        a0: lo[0] + dx * i as f64,
                        a1: lo[0] + dx * (i + 1) as f64,
                        b0: lo[1] + dy * j as f64,
                        b1: lo[1] + dy * (j + 1) as f64,
                    });
                }
            }
        }
    }
    let mut leaves = Vec::new();
    let mut stack: Vec<(Panel, usize)> = base.into_iter().rev().map(|p| (p, 0)).collect();
    while let Some((p, depth)) = stack.pop() {
        match pred {
            Some(q) if depth < 6 && p.straddles(q) => {
                for c in p.split().into_iter().rev() {
                    stack.push((c, depth + 1));
                }
            }
            _ => leaves.push(p),
        }
    }
    let (gx, gw) = gauss_legendre(order);
    Ok(leaves
        .iter()
        .map(|p| {
            let mut pts = Vec::with_capacity(order * order);
            for (i, xi) in gx.iter().enumerate() {
                for (j, xj) in gx.iter().enumerate() {
                    let (x, jac) = p.map(0.5 * (xi + 1.0), 0.5 * (xj + 1.0));
                    pts.push(QuadPoint { x, w: 0.25 * gw[i] * gw[j] * jac });
                }
            }
            pts
        })
        .collect())
}
