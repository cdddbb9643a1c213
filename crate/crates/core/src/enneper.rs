//! The planar 2-valued example with sheets {0, 3(x² − y²)} on the unit disk,
//! its sign labelings and the classical competitor boundary split.

use std::sync::Arc;

use crate::error::Result;
use crate::fields::{regions, GridDomain, GridField, Shape};
use crate::qpoints::QPoint;
use crate::specpoints::SpecPoint;

/// Which side of the diagonals is labelled positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Labeling {
    /// Positive where x > y.
    Diagonal,
    /// Positive where |x| > |y|; this makes the signed amplitude harmonic.
    Quadrant,
}

/// g₀(x, y) = 3(x² − y²).
pub fn g0(x: f64, y: f64) -> f64 {
    3.0 * (x * x - y * y)
}

/// Value of the example field at (x, y).
pub fn value(x: f64, y: f64, labeling: Labeling) -> SpecPoint {
    let g = g0(x, y);
    let positive = match labeling {
        Labeling::Diagonal => x > y,
        Labeling::Quadrant => x.abs() > y.abs(),
    };
    SpecPoint::new(QPoint::scalars(&[0.0, g]), if positive { 1 } else { -1 })
}

/// Dirichlet energy of the example on the unit disk, ∫|∇g₀|² = 18π.
pub const ENERGY: f64 = 18.0 * std::f64::consts::PI;

/// Boundary split of the classical competitor on the unit circle:
/// f̄ = 3·max(cos 2θ, 0), ḡ = 3·min(cos 2θ, 0).
pub fn competitor_boundary(x: f64, y: f64) -> (f64, f64) {
    let th = y.atan2(x);
    let c = 3.0 * (2.0 * th).cos();
    (c.max(0.0), c.min(0.0))
}

/// Grid problem on the unit disk with the example's trace on the boundary
/// (quadrant labeling) and zero inside.
pub fn boundary_problem(h: f64) -> Result<GridField> {
    let d = Arc::new(GridDomain::new(Shape::unit_disk(), 2, h)?);
    Ok(GridField::with_boundary(d, |x| value(x[0], x[1], Labeling::Quadrant), |_| SpecPoint::zero(2, 1)))
}

/// Hausdorff distance between the collapsed set of `u` (collapsed nodes and
/// sign-change crossings) and the diagonals {x = ±y}, the latter sampled at
/// spacing h/4 inside the disk of radius R − h. `None` if `u` has no
/// collapsed set.
pub fn interface_hausdorff(u: &GridField) -> Option<f64> {
    let d = u.domain();
    let h = d.h();
    let rad = match d.shape() {
        Shape::Disk { radius } => radius,
        Shape::Square { half_width } => half_width,
    };
    let set = regions(u).collapsed_set;
    if set.is_empty() {
        return None;
    }
    let to_lines = set
        .iter()
        .map(|x| (x[0] - x[1]).abs().min((x[0] + x[1]).abs()) / std::f64::consts::SQRT_2)
        .fold(0.0, f64::max);
    let reach = rad - h;
    let steps = (2.0 * reach / (h / 4.0)).ceil() as usize;
    let mut to_set: f64 = 0.0;
    for k in 0..=steps {
        let t = -reach + 2.0 * reach * k as f64 / steps as f64;
        for p in [[t, t], [t, -t]] {
            let p = [p[0] / std::f64::consts::SQRT_2, p[1] / std::f64::consts::SQRT_2];
            let near = set.iter().map(|x| (x[0] - p[0]).hypot(x[1] - p[1])).fold(f64::INFINITY, f64::min);
            to_set = to_set.max(near);
        }
    }
    Some(to_lines.max(to_set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specpoints::{classify, RegionLabel};

    #[test]
    fn labelings() {
        assert_eq!(classify(&value(0.5, 0.1, Labeling::Diagonal)), RegionLabel::Positive);
        assert_eq!(classify(&value(-0.5, 0.1, Labeling::Diagonal)), RegionLabel::Negative);
        assert_eq!(classify(&value(-0.5, 0.1, Labeling::Quadrant)), RegionLabel::Positive);
        assert_eq!(classify(&value(0.3, -0.3, Labeling::Quadrant)), RegionLabel::Collapsed);
    }

    #[test]
    fn exact_field_interface_is_the_diagonals() {
        let d = boundary_problem(1.0 / 32.0).unwrap().domain_arc();
        let field = GridField::from_fn(d, |x| value(x[0], x[1], Labeling::Quadrant));
        assert!(interface_hausdorff(&field).unwrap() <= 1.0 / 32.0);
    }
}
