//! Graphs of special multi-valued maps given by polynomial sheets over planar
//! domains: mass and its Taylor expansion, cylindrical excess, first
//! variation, and reparametrization over a tilted plane.

pub mod poly;
pub mod quad;
pub mod reparam;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Result, SpecqError};
use crate::minimize::{Bump, ScalarTest};
use crate::qpoints::QPoint;
use crate::specpoints::SpecPoint;
pub use poly::Polynomial;
pub use quad::{panel_rule, PlanarDomain, QuadPoint};
pub use reparam::{reparametrize_tilted, ReparamReport};

/// Default tensor Gauss order per panel.
pub const DEFAULT_ORDER: usize = 6;

/// Sheets of a special multi-valued map on a planar domain (m = 2). The sign
/// is that of `predicate` (positive where it is absent or zero). `positive`
/// holds Q sheets of n component polynomials; `negative`, when present,
/// replaces them where the predicate is negative.
#[derive(Clone, Debug, PartialEq)]
pub struct SheetSpec {
    pub q: usize,
    pub n: usize,
    pub m: usize,
    pub predicate: Option<Polynomial>,
    pub positive: Vec<Vec<Polynomial>>,
    pub negative: Option<Vec<Vec<Polynomial>>>,
}

impl SheetSpec {
    pub fn new(positive: Vec<Vec<Polynomial>>, predicate: Option<Polynomial>) -> Result<Self> {
        let q = positive.len();
        let n = positive.first().map_or(0, Vec::len);
        let spec = SheetSpec { q, n, m: 2, predicate, positive, negative: None };
        spec.validate()?;
        Ok(spec)
    }

    /// Sheets {0, s·3(x² − y²)}, positive where |x| > |y|.
    pub fn enneper(s: f64) -> Self {
        let g = Polynomial { vars: 2, terms: vec![(3.0 * s, vec![2, 0]), (-3.0 * s, vec![0, 2])] };
        let pred = Polynomial { vars: 2, terms: vec![(1.0, vec![2, 0]), (-1.0, vec![0, 2])] };
        SheetSpec::new(vec![vec![Polynomial::zero(2)], vec![g]], Some(pred)).unwrap()
    }

    /// Q copies of the linear map x ↦ A x, A row-major n×2.
    pub fn linear(q: usize, a: &[f64]) -> Result<Self> {
        if a.is_empty() || a.len() % 2 != 0 {
            return Err(SpecqError::InvalidParameter("linear map needs an n×2 matrix".into()));
        }
        let comps: Vec<Polynomial> = a.chunks(2).map(Polynomial::linear).collect();
        SheetSpec::new(vec![comps; q], None)
    }

    fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(SpecqError::InvalidParameter(s));
        if self.q == 0 || self.n == 0 {
            return bad("sheet spec needs Q ≥ 1 sheets with n ≥ 1 components".into());
        }
        if self.m != 2 {
            return bad("only planar domains (m = 2) are supported".into());
        }
        for sheets in std::iter::once(&self.positive).chain(self.negative.as_ref()) {
            if sheets.len() != self.q || sheets.iter().any(|s| s.len() != self.n || s.iter().any(|p| p.vars != 2)) {
                return bad(format!("expected {} sheets of {} polynomials in 2 variables", self.q, self.n));
            }
        }
        if self.predicate.as_ref().is_some_and(|p| p.vars != 2) {
            return bad("predicate must have 2 variables".into());
        }
        Ok(())
    }

    pub fn sign_at(&self, x: &[f64]) -> i8 {
        match &self.predicate {
            Some(p) if p.eval(x) < 0.0 => -1,
            _ => 1,
        }
    }

    fn sheets_at(&self, x: &[f64]) -> (i8, &Vec<Vec<Polynomial>>) {
        let s = self.sign_at(x);
        match (&self.negative, s) {
            (Some(neg), -1) => (s, neg),
            _ => (s, &self.positive),
        }
    }

    /// Value of sheet `k` at `x` (n components).
    pub fn sheet_value(&self, k: usize, x: &[f64]) -> Vec<f64> {
        self.sheets_at(x).1[k].iter().map(|p| p.eval(x)).collect()
    }

    /// Gradient of sheet `k` at `x`, row-major n×2.
    pub fn sheet_gradient(&self, k: usize, x: &[f64]) -> Vec<f64> {
        self.sheets_at(x).1[k].iter().flat_map(|p| p.gradient(x)).collect()
    }

    pub fn value(&self, x: &[f64]) -> SpecPoint {
        let (s, sheets) = self.sheets_at(x);
        let flat = sheets.iter().flat_map(|c| c.iter().map(|p| p.eval(x))).collect();
        SpecPoint::new(QPoint::from_flat(self.q, self.n, flat), s)
    }

    /// The sheetwise scaling f ↦ ε f.
    pub fn scaled(&self, eps: f64) -> SheetSpec {
        let sc = |v: &Vec<Vec<Polynomial>>| v.iter().map(|c| c.iter().map(|p| p.scale(eps)).collect()).collect();
        SheetSpec { positive: sc(&self.positive), negative: self.negative.as_ref().map(sc), ..self.clone() }
    }

    /// max over sample points of the Frobenius norm of the sheet gradients.
    pub fn lipschitz_estimate(&self, dom: &PlanarDomain) -> Result<f64> {
        let pts = sample_points(dom)?;
        Ok(pts
            .iter()
            .flat_map(|x| (0..self.q).map(move |k| norm_sq(&self.sheet_gradient(k, x)).sqrt()))
            .fold(0.0, f64::max))
    }

    /// max over sample points of the sheet values' Euclidean norms.
    pub fn sup_norm(&self, dom: &PlanarDomain) -> Result<f64> {
        let pts = sample_points(dom)?;
        Ok(pts
            .iter()
            .flat_map(|x| (0..self.q).map(move |k| norm_sq(&self.sheet_value(k, x)).sqrt()))
            .fold(0.0, f64::max))
    }

    pub fn to_json(&self) -> Value {
        let sheets = |v: &Vec<Vec<Polynomial>>| -> Value {
            v.iter().map(|c| c.iter().map(Polynomial::to_json).collect::<Vec<_>>()).collect::<Vec<_>>().into()
        };
        let mut o = json!({ "q": self.q, "n": self.n, "m": self.m, "sheets": sheets(&self.positive) });
        if let Some(p) = &self.predicate {
            o["predicate"] = p.to_json();
        }
        if let Some(neg) = &self.negative {
            o["negative_sheets"] = sheets(neg);
        }
        o
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| SpecqError::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        let sheets = |key: &str| -> Result<Option<Vec<Vec<Polynomial>>>> {
            let Some(raw) = v.get(key) else { return Ok(None) };
            let outer = raw.as_array().ok_or_else(|| SpecqError::Parse(format!("{key}: expected an array of sheets")))?;
            outer
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    s.as_array()
                        .ok_or_else(|| SpecqError::Parse(format!("{key}[{i}]: expected an array of polynomials")))?
                        .iter()
                        .enumerate()
                        .map(|(a, p)| Polynomial::from_json(p, &format!("{key}[{i}][{a}]")))
                        .collect()
                })
                .collect::<Result<Vec<_>>>()
                .map(Some)
        };
        let positive = sheets("sheets")?.ok_or_else(|| SpecqError::Parse("missing \"sheets\"".into()))?;
        let negative = sheets("negative_sheets")?;
        let predicate = v.get("predicate").map(|p| Polynomial::from_json(p, "predicate")).transpose()?;
        let q = positive.len();
        let n = positive.first().map_or(0, Vec::len);
        let m = v.get("m").and_then(Value::as_u64).unwrap_or(2) as usize;
        for (key, want) in [("q", q), ("n", n)] {
            if let Some(got) = v.get(key).and_then(Value::as_u64) {
                if got as usize != want {
                    return Err(SpecqError::Parse(format!("{key} = {got} but sheets imply {want}")));
                }
            }
        }
        let spec = SheetSpec { q, n, m, predicate, positive, negative };
        spec.validate().map_err(|e| SpecqError::Parse(e.to_string()))?;
        Ok(spec)
    }
}

fn sample_points(dom: &PlanarDomain) -> Result<Vec<[f64; 2]>> {
    Ok(panel_rule(dom, 8, None)?.into_iter().flatten().map(|p| p.x).collect())
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Determinant of a k×k row-major matrix by elimination with partial pivoting.
pub(crate) fn det(mut a: Vec<f64>, k: usize) -> f64 {
    let mut d = 1.0;
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| a[i * k + c].abs().total_cmp(&a[j * k + c].abs())).unwrap();
        if a[p * k + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for j in 0..k {
                a.swap(p * k + j, c * k + j);
            }
            d = -d;
        }
        d *= a[c * k + c];
        for i in (c + 1)..k {
            let f = a[i * k + c] / a[c * k + c];
            for j in c..k {
                a[i * k + j] -= f * a[c * k + j];
            }
        }
    }
    d
}

/// All k-subsets of 0..n in lexicographic order.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] != i + n - k) else { return out };
        cur[i] += 1;
        for j in (i + 1)..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// (|D|², M) for an n×m matrix D, where det(I + DᵀD) = 1 + |D|² + M and M
/// is the sum of squared k×k minors for k ≥ 2.
pub(crate) fn area_parts(d: &[f64], n: usize, m: usize) -> (f64, f64) {
    let mut higher = 0.0;
    for k in 2..=n.min(m) {
        for rows in subsets(n, k) {
            for cols in subsets(m, k) {
                let sub: Vec<f64> = rows.iter().flat_map(|&r| cols.iter().map(move |&c| d[r * m + c])).collect();
                higher += det(sub, k).powi(2);
            }
        }
    }
    (norm_sq(d), higher)
}

/// Area factor J(D) = √det(I + DᵀD).
pub fn area_factor(d: &[f64], n: usize, m: usize) -> f64 {
    let (a, b) = area_parts(d, n, m);
    (1.0 + a + b).sqrt()
}

/// J(D) − 1 − ½|D|², evaluated without cancellation.
pub fn area_remainder(d: &[f64], n: usize, m: usize) -> f64 {
    let (a, b) = area_parts(d, n, m);
    let j = (1.0 + a + b).sqrt();
    (2.0 * b - a * (a + b) / (1.0 + j)) / (2.0 * (1.0 + j))
}

/// The unit simple m-vector orienting the graph of a linear map with
/// matrix D (n×m): the m×m minors of [I; D] over J(D), rows chosen in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MVector {
    pub m: usize,
    pub n: usize,
    pub coords: Vec<f64>,
}

impl MVector {
    pub fn from_gradient(d: &[f64], n: usize, m: usize) -> Self {
        let row = |r: usize| -> Vec<f64> {
            if r < m {
                (0..m).map(|c| if c == r { 1.0 } else { 0.0 }).collect()
            } else {
                d[(r - m) * m..(r - m + 1) * m].to_vec()
            }
        };
        let mut coords: Vec<f64> = subsets(m + n, m)
            .iter()
            .map(|rows| det(rows.iter().flat_map(|&r| row(r)).collect(), m))
            .collect();
        let nrm = norm_sq(&coords).sqrt();
        coords.iter_mut().for_each(|c| *c /= nrm);
        MVector { m, n, coords }
    }

    pub fn norm(&self) -> f64 {
        norm_sq(&self.coords).sqrt()
    }

    pub fn negated(&self) -> MVector {
        MVector { coords: self.coords.iter().map(|c| -c).collect(), ..self.clone() }
    }

    pub fn dist_sq(&self, other: &MVector) -> f64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Non-oriented squared distance min(|a − b|², |a + b|²).
    pub fn no_dist_sq(&self, other: &MVector) -> f64 {
        let plus: f64 = self.coords.iter().zip(&other.coords).map(|(a, b)| (a + b) * (a + b)).sum();
        self.dist_sq(other).min(plus)
    }
}

/// Integrates a vector-valued integrand over the panel rule, panels in
/// parallel and summed in a fixed order.
fn integrate<F>(dom: &PlanarDomain, order: usize, pred: Option<&Polynomial>, width: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64; 2]) -> Vec<f64> + Sync,
{
    let panels = panel_rule(dom, order, pred)?;
    let sums: Vec<Vec<f64>> = panels
        .par_iter()
        .map(|pts| {
            let mut acc = vec![0.0; width];
            for p in pts {
                for (a, v) in acc.iter_mut().zip(f(&p.x)) {
                    *a += p.w * v;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; width];
    for s in sums {
        for (t, v) in total.iter_mut().zip(s) {
            *t += v;
        }
    }
    Ok(total)
}

/// Mass of the graph current and the terms of its expansion.
#[derive(Clone, Debug, Serialize)]
pub struct MassReport {
    pub mass: f64,
    /// Q|Ω|.
    pub flat: f64,
    /// Σ_i ∫ |Df_i|².
    pub dirichlet: f64,
    /// mass − Q|Ω| − ½ Dir, integrated pointwise without cancellation.
    pub remainder: f64,
    /// Σ_i ∫ |Df_i|⁴.
    pub quartic: f64,
}

pub fn mass_expansion(spec: &SheetSpec, dom: &PlanarDomain, order: usize) -> Result<MassReport> {
    let (n, m) = (spec.n, spec.m);
    let v = integrate(dom, order, spec.predicate.as_ref(), 4, |x| {
        let mut r = vec![0.0; 4];
        for k in 0..spec.q {
            let d = spec.sheet_gradient(k, x);
            let a = norm_sq(&d);
            r[0] += area_factor(&d, n, m);
            r[1] += a;
            r[2] += area_remainder(&d, n, m);
            r[3] += a * a;
        }
        r
    })?;
    Ok(MassReport { mass: v[0], flat: spec.q as f64 * dom.area(), dirichlet: v[1], remainder: v[2], quartic: v[3] })
}

/// Σ over sheets of ∫ J(Df_i); the orientation does not affect mass.
pub fn graph_mass(spec: &SheetSpec, dom: &PlanarDomain, order: usize) -> Result<f64> {
    mass_expansion(spec, dom, order).map(|r| r.mass)
}

/// A log-log order fit of a quantity against ε.
#[derive(Clone, Debug, Serialize)]
pub struct OrderFit {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl OrderFit {
    /// Least-squares slope of log|value| against log ε. All-zero values pass
    /// with slope +∞.
    pub fn new(eps: Vec<f64>, values: Vec<f64>, threshold: f64) -> Self {
        let slope = if values.iter().all(|v| *v == 0.0) {
            f64::INFINITY
        } else {
            let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
            let ys: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
            fit_slope(&xs, &ys)
        };
        OrderFit { eps, values, slope, threshold, passed: slope >= threshold }
    }
}

pub(crate) fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn check_eps(eps: &[f64]) -> Result<()> {
    if eps.len() < 3 {
        return Err(SpecqError::InvalidParameter("order fits need at least 3 ε values".into()));
    }
    if eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(SpecqError::InvalidParameter("ε values must lie in (0, 1]".into()));
    }
    Ok(())
}

/// Largest ε·Lip allowed in expansion fits.
pub const EXPANSION_LIP: f64 = 0.3;

fn check_expansion_lip(spec: &SheetSpec, dom: &PlanarDomain, eps: &[f64]) -> Result<()> {
    let lip = spec.lipschitz_estimate(dom)?;
    if lip > 1.0 + 1e-9 {
        return Err(SpecqError::InvalidParameter(format!("expansion tests need Lip(g) ≤ 1, estimated {lip}")));
    }
    let emax = eps.iter().copied().fold(0.0, f64::max);
    if emax * lip > EXPANSION_LIP {
        return Err(SpecqError::InvalidParameter(format!("ε·Lip(g) = {} exceeds {EXPANSION_LIP}", emax * lip)));
    }
    Ok(())
}

/// Remainder |mass(εg) − Q|Ω| − ½Dir(εg)| for each ε, with a quartic order fit
/// (threshold 3.8).
pub fn taylor_mass_check(spec: &SheetSpec, dom: &PlanarDomain, eps: &[f64], order: usize) -> Result<OrderFit> {
    check_eps(eps)?;
    check_expansion_lip(spec, dom, eps)?;
    let values = eps
        .iter()
        .map(|&e| mass_expansion(&spec.scaled(e), dom, order).map(|r| r.remainder.abs()))
        .collect::<Result<Vec<_>>>()?;
    Ok(OrderFit::new(eps.to_vec(), values, 3.8))
}

/// The expansion remainder on sub-domains E together with C = remainder / ∫Σ|Df|⁴.
#[derive(Clone, Debug, Serialize)]
pub struct SubdomainReport {
    pub fits: Vec<OrderFit>,
    /// constants[e][k]: ratio on domain e at ε_k.
    pub constants: Vec<Vec<f64>>,
    pub c_min: f64,
    pub c_max: f64,
}

pub fn mass_subdomain_check(spec: &SheetSpec, sets: &[PlanarDomain], eps: &[f64], order: usize) -> Result<SubdomainReport> {
    check_eps(eps)?;
    if sets.is_empty() {
        return Err(SpecqError::EmptyInput("sub-domains".into()));
    }
    let mut fits = Vec::new();
    let mut constants = Vec::new();
    for e in sets {
        check_expansion_lip(spec, e, eps)?;
        let reps = eps.iter().map(|&x| mass_expansion(&spec.scaled(x), e, order)).collect::<Result<Vec<_>>>()?;
        constants.push(reps.iter().map(|r| if r.quartic > 0.0 { r.remainder.abs() / r.quartic } else { 0.0 }).collect());
        fits.push(OrderFit::new(eps.to_vec(), reps.iter().map(|r| r.remainder.abs()).collect(), 3.8));
    }
    let all: Vec<f64> = constants.iter().flatten().copied().filter(|c| *c > 0.0).collect();
    let c_min = all.iter().copied().fold(f64::INFINITY, f64::min);
    let c_max = all.iter().copied().fold(0.0, f64::max);
    Ok(SubdomainReport { fits, constants, c_min, c_max })
}

/// Both sides of the excess comparison on B_s(0).
#[derive(Clone, Debug, Serialize)]
pub struct ExcessReport {
    pub s: f64,
    /// The comparison slope L (n×m, row-major).
    pub l: Vec<f64>,
    /// ∫ Σ_i |G⃗_i − τ⃗|²_no J_i.
    pub lhs: f64,
    /// ∫ Σ_i |Df_i − L|².
    pub rhs: f64,
    pub remainder: f64,
}

pub fn cylindrical_excess(spec: &SheetSpec, s: f64, l: Option<Vec<f64>>, order: usize) -> Result<ExcessReport> {
    let dom = PlanarDomain::disk(s);
    let (n, m, q) = (spec.n, spec.m, spec.q);
    let pred = spec.predicate.as_ref();
    let l = match l {
        Some(l) if l.len() == n * m => l,
        Some(l) => return Err(crate::error::dim_mismatch(n * m, l.len())),
        None => {
            let tot = integrate(&dom, order, pred, n * m, |x| {
                let mut g = vec![0.0; n * m];
                for k in 0..q {
                    for (a, b) in g.iter_mut().zip(spec.sheet_gradient(k, x)) {
                        *a += b / q as f64;
                    }
                }
                g
            })?;
            tot.into_iter().map(|v| v / dom.area()).collect()
        }
    };
    let tau = MVector::from_gradient(&l, n, m);
    let v = integrate(&dom, order, pred, 2, |x| {
        let sign = spec.sign_at(x);
        let mut r = vec![0.0; 2];
        for k in 0..q {
            let d = spec.sheet_gradient(k, x);
            let mut g = MVector::from_gradient(&d, n, m);
            if sign < 0 {
                g = g.negated();
            }
            r[0] += g.no_dist_sq(&tau) * area_factor(&d, n, m);
            r[1] += d.iter().zip(&l).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        r
    })?;
    Ok(ExcessReport { s, l, lhs: v[0], rhs: v[1], remainder: (v[0] - v[1]).abs() })
}

/// Excess remainder under f ↦ εf, L recomputed for each ε; quartic fit.
pub fn excess_order_fit(spec: &SheetSpec, s: f64, eps: &[f64], order: usize) -> Result<OrderFit> {
    check_eps(eps)?;
    check_expansion_lip(spec, &PlanarDomain::disk(s), eps)?;
    let values = eps
        .iter()
        .map(|&e| cylindrical_excess(&spec.scaled(e), s, None, order).map(|r| r.remainder))
        .collect::<Result<Vec<_>>>()?;
    Ok(OrderFit::new(eps.to_vec(), values, 3.8))
}

/// ζ(x, y) = b(x)·p(x, y) with a C² bump b in x and polynomials p in (x, y).
#[derive(Clone, Debug)]
pub struct TestMap {
    pub bump: Bump,
    /// n polynomials in m + n variables.
    pub components: Vec<Polynomial>,
}

impl TestMap {
    pub fn new(center: [f64; 2], radius: f64, components: Vec<Polynomial>) -> Self {
        TestMap { bump: Bump::new(center.to_vec(), radius), components }
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let b = self.bump.value(x);
        let xy: Vec<f64> = x.iter().chain(y).copied().collect();
        self.components.iter().map(|p| b * p.eval(&xy)).collect()
    }

    /// (D_xζ as n×m, D_yζ as n×n), row-major.
    pub fn jacobians(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = x.len();
        let n = y.len();
        let b = self.bump.value(x);
        let gb = self.bump.gradient(x);
        let xy: Vec<f64> = x.iter().chain(y).copied().collect();
        let mut jx = vec![0.0; n * m];
        let mut jy = vec![0.0; n * n];
        for (a, p) in self.components.iter().enumerate() {
            let pv = p.eval(&xy);
            let g = p.gradient(&xy);
            for l in 0..m {
                jx[a * m + l] = gb[l] * pv + b * g[l];
            }
            for c in 0..n {
                jy[a * n + c] = b * g[m + c];
            }
        }
        (jx, jy)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| SpecqError::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        let center: [f64; 2] = v
            .get("center")
            .and_then(|c| serde_json::from_value(c.clone()).ok())
            .ok_or_else(|| SpecqError::Parse("center: expected [x, y]".into()))?;
        let radius = v.get("radius").and_then(Value::as_f64).ok_or_else(|| SpecqError::Parse("radius: expected a number".into()))?;
        let comps = v
            .get("components")
            .and_then(Value::as_array)
            .ok_or_else(|| SpecqError::Parse("components: expected an array".into()))?
            .iter()
            .enumerate()
            .map(|(i, p)| Polynomial::from_json(p, &format!("components[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        Ok(TestMap::new(center, radius, comps))
    }
}

/// Numerical first variation of the graph mass along f_i + tζ(x, f_i),
/// the main term of its expansion, and the cubic error weight.
#[derive(Clone, Debug, Serialize)]
pub struct FirstVariation {
    pub numeric: f64,
    /// ∫ Σ_i (D_xζ(x,f_i) + D_yζ(x,f_i)·Df_i) : Df_i.
    pub formula: f64,
    pub discrepancy: f64,
    /// ∫ Σ_i |Dζ(x,f_i)| |Df_i|³.
    pub cubic_weight: f64,
}

pub fn first_variation_graph(spec: &SheetSpec, zeta: &TestMap, dom: &PlanarDomain, order: usize) -> Result<FirstVariation> {
    let (n, m, q) = (spec.n, spec.m, spec.q);
    if zeta.components.len() != n || zeta.components.iter().any(|p| p.vars != m + n) {
        return Err(SpecqError::InvalidParameter(format!("test map needs {n} polynomials in {} variables", m + n)));
    }
    if !dom.contains_ball(&zeta.bump.center, zeta.bump.radius) {
        return Err(SpecqError::SupportTouchesBoundary);
    }
    let v = integrate(dom, order, spec.predicate.as_ref(), 3, |x| {
        let mut r = vec![0.0; 3];
        for k in 0..q {
            let d = spec.sheet_gradient(k, x);
            let y = spec.sheet_value(k, x);
            let (jx, jy) = zeta.jacobians(x, &y);
            let e: Vec<f64> = (0..n * m)
                .map(|i| {
                    let (a, l) = (i / m, i % m);
                    jx[i] + (0..n).map(|c| jy[a * n + c] * d[c * m + l]).sum::<f64>()
                })
                .collect();
            let diff = |t: f64| {
                let plus: Vec<f64> = d.iter().zip(&e).map(|(a, b)| a + t * b).collect();
                let minus: Vec<f64> = d.iter().zip(&e).map(|(a, b)| a - t * b).collect();
                (area_factor(&plus, n, m) - area_factor(&minus, n, m)) / (2.0 * t)
            };
            r[0] += (4.0 * diff(5e-4) - diff(1e-3)) / 3.0;
            r[1] += e.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
            let dz = (norm_sq(&jx) + norm_sq(&jy)).sqrt();
            r[2] += dz * norm_sq(&d).powf(1.5);
        }
        r
    })?;
    Ok(FirstVariation { numeric: v[0], formula: v[1], discrepancy: (v[0] - v[1]).abs(), cubic_weight: v[2] })
}

/// Discrepancy of the first-variation main term under f ↦ εf (cubic fit,
/// threshold 2.8) and the ratios discrepancy / cubic weight.
#[derive(Clone, Debug, Serialize)]
pub struct VariationScaling {
    pub fit: OrderFit,
    pub ratios: Vec<f64>,
}

pub fn variation_order_fit(spec: &SheetSpec, zeta: &TestMap, dom: &PlanarDomain, eps: &[f64], order: usize) -> Result<VariationScaling> {
    check_eps(eps)?;
    check_expansion_lip(spec, dom, eps)?;
    let reps = eps
        .iter()
        .map(|&e| first_variation_graph(&spec.scaled(e), zeta, dom, order))
        .collect::<Result<Vec<_>>>()?;
    let ratios = reps.iter().map(|r| if r.cubic_weight > 0.0 { r.discrepancy / r.cubic_weight } else { 0.0 }).collect();
    Ok(VariationScaling { fit: OrderFit::new(eps.to_vec(), reps.iter().map(|r| r.discrepancy).collect(), 2.8), ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_vec, rng};

    #[test]
    fn subsets_lexicographic() {
        assert_eq!(subsets(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(subsets(2, 3), Vec::<Vec<usize>>::new());
    }

    #[test]
    fn mvector_unit_and_cauchy_binet() {
        let mut r = rng(4);
        for (n, m) in [(1, 2), (2, 2), (3, 2), (2, 3)] {
            for _ in 0..50 {
                let d = random_vec(&mut r, n * m, 2.0);
                let v = MVector::from_gradient(&d, n, m);
                assert!((v.norm() - 1.0).abs() < 1e-12);
                let raw: f64 = {
                    let a: Vec<f64> = (0..m * m)
                        .map(|i| {
                            let (k, l) = (i / m, i % m);
                            (k == l) as u8 as f64 + (0..n).map(|c| d[c * m + k] * d[c * m + l]).sum::<f64>()
                        })
                        .collect();
                    det(a, m).sqrt()
                };
                assert!((area_factor(&d, n, m) - raw).abs() < 1e-12 * raw);
            }
        }
    }

    #[test]
    fn no_distance_symmetry() {
        let mut r = rng(5);
        let a = MVector::from_gradient(&random_vec(&mut r, 2, 1.0), 1, 2);
        let b = MVector::from_gradient(&random_vec(&mut r, 2, 1.0), 1, 2);
        assert_eq!(a.no_dist_sq(&b), b.no_dist_sq(&a));
        assert_eq!(a.negated().no_dist_sq(&b), a.no_dist_sq(&b));
        assert_eq!(a.no_dist_sq(&a.negated()), 0.0);
    }

    #[test]
    fn remainder_is_stable() {
        let d = [1e-5, -2e-5];
        let naive = area_factor(&d, 1, 2) - 1.0 - 0.5 * norm_sq(&d);
        let stable = area_remainder(&d, 1, 2);
        let series = -norm_sq(&d).powi(2) / 8.0;
        assert!((stable - series).abs() < 1e-9 * series.abs());
        assert!((naive - series).abs() > (stable - series).abs());
    }

    #[test]
    fn constant_and_linear_mass() {
        let c = SheetSpec::new(vec![vec![Polynomial::constant(2, 0.3)]; 3], None).unwrap();
        let sq = PlanarDomain::Rect { lo: [-0.5, -0.5], hi: [0.5, 0.5] };
        assert!((graph_mass(&c, &sq, 4).unwrap() - 3.0).abs() < 1e-13);
        let l = SheetSpec::linear(2, &[0.6, -0.8]).unwrap();
        assert!((graph_mass(&l, &sq, 4).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn enneper_mass_closed_form() {
        // π + 2π ∫₀¹ r√(1 + 36r²) dr.
        let exact = std::f64::consts::PI * (1.0 + (37f64.powf(1.5) - 1.0) / 54.0);
        let m = graph_mass(&SheetSpec::enneper(1.0), &PlanarDomain::disk(1.0), DEFAULT_ORDER).unwrap();
        assert!((m - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn mass_is_at_least_flat() {
        let mut r = rng(6);
        for _ in 0..20 {
            let a = random_vec(&mut r, 2, 1.0);
            let s = SheetSpec::linear(2, &a).unwrap();
            let rep = mass_expansion(&s, &PlanarDomain::disk(0.5), 4).unwrap();
            assert!(rep.mass >= rep.flat);
        }
    }

    #[test]
    fn linear_taylor_matches_series() {
        let a = [0.6, 0.8];
        let s = SheetSpec::linear(1, &a).unwrap();
        let sq = PlanarDomain::Rect { lo: [0.0, 0.0], hi: [1.0, 1.0] };
        let fit = taylor_mass_check(&s, &sq, &[0.1, 0.05, 0.025], 4).unwrap();
        for (e, v) in fit.eps.iter().zip(&fit.values) {
            let exact = 1.0 + 0.5 * e * e - (1.0 + e * e).sqrt();
            assert!((v - exact).abs() < 1e-15, "{v} {exact}");
        }
        assert!(fit.slope > 3.95 && fit.passed);
        let zero = SheetSpec::new(vec![vec![Polynomial::zero(2)]], None).unwrap();
        assert!(taylor_mass_check(&zero, &sq, &[0.1, 0.05, 0.025], 4).unwrap().passed);
        assert!(taylor_mass_check(&s, &sq, &[0.1, 0.05], 4).is_err());
        assert!(taylor_mass_check(&SheetSpec::linear(1, &[3.0, 0.0]).unwrap(), &sq, &[0.1, 0.05, 0.025], 4).is_err());
    }

    #[test]
    fn excess_vanishes_for_linear_and_flipped_flat() {
        let s = SheetSpec::linear(2, &[0.3, -0.2]).unwrap();
        let r = cylindrical_excess(&s, 0.5, None, 4).unwrap();
        assert!(r.lhs.abs() < 1e-24 && r.rhs.abs() < 1e-24, "{r:?}");
        let flip = SheetSpec::new(vec![vec![Polynomial::zero(2)]; 2], Some(Polynomial::linear(&[1.0, 0.0]))).unwrap();
        let r = cylindrical_excess(&flip, 0.5, None, 4).unwrap();
        assert_eq!(r.lhs, 0.0);
    }

    #[test]
    fn first_variation_linear_and_constant() {
        let zeta = TestMap::new([0.1, 0.0], 0.5, vec![Polynomial::linear(&[0.3, -0.5, 0.0]).add(&Polynomial::constant(3, 0.2))]);
        let dom = PlanarDomain::disk(1.0);
        let c = SheetSpec::new(vec![vec![Polynomial::constant(2, 0.4)]; 2], None).unwrap();
        let r = first_variation_graph(&c, &zeta, &dom, 6).unwrap();
        assert!(r.numeric.abs() < 1e-12 && r.formula == 0.0);
        let l = SheetSpec::linear(1, &[0.2, 0.1]).unwrap();
        let r = first_variation_graph(&l, &zeta, &dom, 6).unwrap();
        assert!((r.numeric - r.formula).abs() < 1e-5, "{r:?}");
        let far = TestMap::new([0.8, 0.0], 0.5, zeta.components.clone());
        assert!(matches!(first_variation_graph(&l, &far, &dom, 6), Err(SpecqError::SupportTouchesBoundary)));
    }

    #[test]
    fn spec_json_round_trip() {
        let s = SheetSpec::enneper(1.0);
        let back = SheetSpec::from_json(&s.to_json().to_string()).unwrap();
        assert_eq!(back, s);
        let e = SheetSpec::from_json("{\"sheets\": [[{\"vars\": 2, \"terms\": [[\"x\", [1, 0]]]}]]}").unwrap_err();
        assert!(e.to_string().contains("sheets[0][0].terms[0]"), "{e}");
        assert!(SheetSpec::from_json("{\"sheets\": [").unwrap_err().to_string().contains("line 1"));
    }
}
