//! Special Q-points: signed Q-points glued along collapsed values, the metric
//! 𝒢ₛ, the triple isometry ι and the pointwise gluing map for compatible triples.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{dim_mismatch, Result, SpecqError};
use crate::qpoints::{dist_sq, metric_g_sq, QPoint};

/// Absolute tolerance used by [`join_triple`] and [`iota_inv`].
pub const COMPAT_TOL: f64 = 1e-9;

/// A special Q-point `(base, sign)`. Collapsed bases always carry sign `+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecPoint {
    base: QPoint,
    sign: i8,
}

/// Region of a special Q-point in the canonical decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    Positive,
    Negative,
    Collapsed,
}

impl RegionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::Positive => "positive",
            RegionLabel::Negative => "negative",
            RegionLabel::Collapsed => "collapsed",
        }
    }
}

/// The product representation `(v, w, z)` with η(v) = η(w) = 0 and min(|v|,|w|) = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleForm {
    pub v: QPoint,
    pub w: QPoint,
    pub z: Vec<f64>,
}

impl SpecPoint {
    /// Builds `(base, sign)`; any nonzero `sign` is reduced to ±1 and collapsed
    /// bases are normalized to `+1`.
    pub fn new(base: QPoint, sign: i8) -> Self {
        let sign = if base.is_collapsed() || sign >= 0 { 1 } else { -1 };
        SpecPoint { base, sign }
    }

    pub fn positive(base: QPoint) -> Self {
        Self::new(base, 1)
    }

    pub fn negative(base: QPoint) -> Self {
        Self::new(base, -1)
    }

    /// Q⟦p⟧.
    pub fn collapsed(q: usize, p: &[f64]) -> Self {
        SpecPoint { base: QPoint::collapsed(q, p), sign: 1 }
    }

    pub fn zero(q: usize, n: usize) -> Self {
        SpecPoint { base: QPoint::zero(q, n), sign: 1 }
    }

    pub fn base(&self) -> &QPoint {
        &self.base
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn q(&self) -> usize {
        self.base.q()
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn eta(&self) -> Vec<f64> {
        self.base.eta()
    }

    pub fn norm(&self) -> f64 {
        self.base.norm()
    }

    pub fn norm_sq(&self) -> f64 {
        self.base.norm_sq()
    }

    pub fn is_collapsed(&self) -> bool {
        self.base.is_collapsed()
    }

    /// Positive part u⁺: the base on the positive side, Q⟦η⟧ otherwise.
    pub fn f_plus(&self) -> QPoint {
        if self.sign > 0 {
            self.base.clone()
        } else {
            QPoint::collapsed(self.q(), &self.eta())
        }
    }

    /// Negative part u⁻: the base on the negative side, Q⟦η⟧ otherwise.
    pub fn f_minus(&self) -> QPoint {
        if self.sign < 0 || self.is_collapsed() {
            self.base.clone()
        } else {
            QPoint::collapsed(self.q(), &self.eta())
        }
    }

    /// Same base translated by `v`.
    pub fn translate(&self, v: &[f64], sign: i8) -> SpecPoint {
        SpecPoint::new(self.base.translate(v, sign), self.sign)
    }
}

/// Region label of a special Q-point.
pub fn classify(p: &SpecPoint) -> RegionLabel {
    if p.is_collapsed() {
        RegionLabel::Collapsed
    } else if p.sign > 0 {
        RegionLabel::Positive
    } else {
        RegionLabel::Negative
    }
}

/// Squared special metric 𝒢ₛ(P,R)².
pub fn metric_gs_sq(p: &SpecPoint, r: &SpecPoint) -> Result<f64> {
    p.base.check_compatible(&r.base)?;
    if p.sign == r.sign {
        return metric_g_sq(&p.base, &r.base);
    }
    let ep = p.base.eta();
    let er = r.base.eta();
    let q = p.q() as f64;
    Ok(p.base.centered().norm_sq() + r.base.centered().norm_sq() + q * dist_sq(&ep, &er))
}

/// Squared length of the shortest path from P to R inside the space. It
/// agrees with 𝒢ₛ² for equal signs; for opposite signs the path runs
/// through the collapsed set, giving (|P − η(P)| + |R − η(R)|)² + Q|η(P) − η(R)|².
pub fn metric_gs_intrinsic_sq(p: &SpecPoint, r: &SpecPoint) -> Result<f64> {
    p.base.check_compatible(&r.base)?;
    if p.sign == r.sign {
        return metric_g_sq(&p.base, &r.base);
    }
    let q = p.q() as f64;
    let a = p.base.centered().norm() + r.base.centered().norm();
    Ok(a * a + q * dist_sq(&p.base.eta(), &r.base.eta()))
}

/// Special metric 𝒢ₛ(P,R).
pub fn metric_gs(p: &SpecPoint, r: &SpecPoint) -> Result<f64> {
    metric_gs_sq(p, r).map(f64::sqrt)
}

/// The isometry ι.
pub fn iota(p: &SpecPoint) -> TripleForm {
    let z = p.eta();
    let c = p.base.translate(&z, -1);
    let zero = QPoint::zero(p.q(), p.n());
    if p.sign > 0 {
        TripleForm { v: c, w: zero, z }
    } else {
        TripleForm { v: zero, w: c, z }
    }
}

/// The inverse of ι. Rejects triples with min(|v|,|w|) > 1e−9.
pub fn iota_inv(t: &TripleForm) -> Result<SpecPoint> {
    t.v.check_compatible(&t.w)?;
    if t.z.len() != t.v.n() {
        return Err(dim_mismatch(t.v.n(), t.z.len()));
    }
    let nv = t.v.norm();
    let nw = t.w.norm();
    if nv.min(nw) > COMPAT_TOL {
        return Err(SpecqError::InvalidTriple(format!(
            "min(|v|,|w|) = {} exceeds tolerance",
            nv.min(nw)
        )));
    }
    if nw == 0.0 || nv >= nw {
        Ok(SpecPoint::new(t.v.translate(&t.z, 1), 1))
    } else {
        Ok(SpecPoint::new(t.w.translate(&t.z, 1), -1))
    }
}

/// Product distance of two triples, sqrt(𝒢(v,v')² + 𝒢(w,w')² + Q|z−z'|²).
pub fn triple_distance(a: &TripleForm, b: &TripleForm) -> Result<f64> {
    let q = a.v.q() as f64;
    Ok((metric_g_sq(&a.v, &b.v)? + metric_g_sq(&a.w, &b.w)? + q * dist_sq(&a.z, &b.z)).sqrt())
}

/// Glues a compatible triple `(g⁺, g⁻, g)` into one special Q-point.
pub fn join_triple(gplus: &QPoint, gminus: &QPoint, g: &[f64]) -> Result<SpecPoint> {
    gplus.check_compatible(gminus)?;
    if g.len() != gplus.n() {
        return Err(dim_mismatch(gplus.n(), g.len()));
    }
    let plus_collapsed = gplus.sep() == 0.0;
    let minus_collapsed = gminus.sep() == 0.0;
    if !plus_collapsed && !minus_collapsed {
        return Err(SpecqError::CompatibilityViolation(
            "neither separation vanishes".into(),
        ));
    }
    let check = |p: &QPoint, which: &str| -> Result<()> {
        let d = dist_sq(&p.eta(), g).sqrt();
        if d > COMPAT_TOL {
            return Err(SpecqError::CompatibilityViolation(format!(
                "barycenter of collapsed {which} part is off by {d}"
            )));
        }
        Ok(())
    };
    if plus_collapsed {
        check(gplus, "positive")?;
    }
    if minus_collapsed {
        check(gminus, "negative")?;
    }
    if minus_collapsed {
        Ok(SpecPoint::new(gplus.clone(), 1))
    } else {
        Ok(SpecPoint::new(gminus.clone(), -1))
    }
}

/// Multiplies every atom by `lambda ≥ 0`, keeping the sign.
pub fn cone_scale(p: &SpecPoint, lambda: f64) -> SpecPoint {
    assert!(lambda >= 0.0, "cone_scale needs lambda >= 0");
    SpecPoint::new(p.base.scale(lambda), p.sign)
}

/// Radial projection onto the ball of radius `m`.
pub fn cone_project(p: &SpecPoint, m: f64) -> SpecPoint {
    assert!(m >= 0.0, "cone_project needs m >= 0");
    let nrm = p.norm();
    if nrm <= m {
        p.clone()
    } else {
        cone_scale(p, m / nrm)
    }
}

#[derive(Serialize, Deserialize)]
struct SpecPointRepr {
    sign: i8,
    atoms: QPoint,
}

impl Serialize for SpecPoint {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        SpecPointRepr { sign: self.sign, atoms: self.base.clone() }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for SpecPoint {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = SpecPointRepr::deserialize(de)?;
        if r.sign != 1 && r.sign != -1 {
            return Err(serde::de::Error::custom("sign must be +1 or -1"));
        }
        Ok(SpecPoint::new(r.atoms, r.sign))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(v: &[f64], s: i8) -> SpecPoint {
        SpecPoint::new(QPoint::scalars(v), s)
    }

    #[test]
    fn metric_gs_examples() {
        assert_eq!(metric_gs(&sp(&[0.0, 2.0], 1), &sp(&[0.0, 2.0], -1)).unwrap(), 2.0);
        assert_eq!(metric_gs(&sp(&[3.0, 3.0], 1), &sp(&[3.0, 3.0], -1)).unwrap(), 0.0);
        let p = sp(&[-1.0, 4.0], -1);
        assert_eq!(metric_gs(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn iota_example() {
        let t = iota(&sp(&[0.0, 2.0], 1));
        assert_eq!(t.v, QPoint::scalars(&[-1.0, 1.0]));
        assert_eq!(t.w, QPoint::zero(2, 1));
        assert_eq!(t.z, vec![1.0]);
        assert_eq!(iota_inv(&t).unwrap(), sp(&[0.0, 2.0], 1));
    }

    #[test]
    fn iota_inv_rejects_two_nonzero_parts() {
        let t = TripleForm {
            v: QPoint::scalars(&[-1.0, 1.0]),
            w: QPoint::scalars(&[-1.0, 1.0]),
            z: vec![0.0],
        };
        assert!(matches!(iota_inv(&t), Err(SpecqError::InvalidTriple(_))));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&sp(&[0.0, 2.0], 1)), RegionLabel::Positive);
        assert_eq!(classify(&sp(&[5.0, 5.0], -1)), RegionLabel::Collapsed);
        assert_eq!(classify(&sp(&[0.0, 1.0], -1)), RegionLabel::Negative);
    }

    #[test]
    fn collapsed_sign_normalized() {
        assert_eq!(sp(&[2.0, 2.0], -1), sp(&[2.0, 2.0], 1));
        assert_eq!(sp(&[2.0, 2.0], -1).sign(), 1);
    }

    #[test]
    fn join_triple_examples() {
        let a = QPoint::scalars(&[0.0, 2.0]);
        let j = join_triple(&a, &QPoint::scalars(&[1.0, 1.0]), &[1.0]).unwrap();
        assert_eq!(j, sp(&[0.0, 2.0], 1));
        let c = QPoint::scalars(&[3.0, 3.0]);
        let j = join_triple(&c, &c, &[3.0]).unwrap();
        assert!(j.is_collapsed());
        assert_eq!(j.base(), &c);
        let err = join_triple(&a, &QPoint::scalars(&[0.0, 4.0]), &[1.0]);
        assert!(matches!(err, Err(SpecqError::CompatibilityViolation(_))));
        let err = join_triple(&a, &QPoint::scalars(&[2.0, 2.0]), &[1.0]);
        assert!(matches!(err, Err(SpecqError::CompatibilityViolation(_))));
    }

    #[test]
    fn cone_examples() {
        let p = sp(&[-6.0, 8.0], -1);
        assert_eq!(p.norm(), 10.0);
        assert_eq!(cone_project(&p, 5.0), sp(&[-3.0, 4.0], -1));
        assert_eq!(cone_project(&p, 20.0), p);
        let z = cone_scale(&p, 0.0);
        assert!(z.is_collapsed());
        assert_eq!(z.norm(), 0.0);
    }

    #[test]
    fn parts_of_negative_point() {
        let p = sp(&[0.0, 2.0], -1);
        assert_eq!(p.f_plus(), QPoint::scalars(&[1.0, 1.0]));
        assert_eq!(p.f_minus(), QPoint::scalars(&[0.0, 2.0]));
        let j = join_triple(&p.f_plus(), &p.f_minus(), &p.eta()).unwrap();
        assert_eq!(j, p);
    }

    #[test]
    fn json_format() {
        let j = serde_json::to_string(&sp(&[2.0, 0.0], -1)).unwrap();
        assert_eq!(j, r#"{"sign":-1,"atoms":[[0.0],[2.0]]}"#);
        let c: SpecPoint = serde_json::from_str(r#"{"sign":-1,"atoms":[[1.0],[1.0]]}"#).unwrap();
        assert_eq!(c.sign(), 1);
        assert!(serde_json::from_str::<SpecPoint>(r#"{"sign":0,"atoms":[[1.0]]}"#).is_err());
    }
}
