//! Grid-discretized special Q-valued maps: lattice domains, the edge-sum
//! Dirichlet energy, region partitions, circle traces and file formats.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::embedret::Zeta;
use crate::error::{Result, SpecqError};
use crate::specpoints::{classify, metric_gs_sq, RegionLabel, SpecPoint};

/// Domain shape. Squares are centered at the origin; disks too.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Square { half_width: f64 },
    Disk { radius: f64 },
}

impl Shape {
    pub fn unit_square() -> Self {
        Shape::Square { half_width: 1.0 }
    }

    pub fn unit_disk() -> Self {
        Shape::Disk { radius: 1.0 }
    }

    fn extent(&self) -> f64 {
        match *self {
            Shape::Square { half_width } => half_width,
            Shape::Disk { radius } => radius,
        }
    }
}

const NONE: u32 = u32::MAX;

/// A lattice `hℤᵐ ∩ [−M h, M h]ᵐ` masked to a shape.
#[derive(Clone, Debug)]
pub struct GridDomain {
    shape: Shape,
    m: usize,
    h: f64,
    half: i64,
    side: usize,
    active: Vec<usize>,
    lattice_to_active: Vec<u32>,
    boundary: Vec<bool>,
    neighbors: Vec<u32>,
}

impl GridDomain {
    /// Builds the lattice. Squares need `half_width / h` to be an integer.
    pub fn new(shape: Shape, m: usize, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(SpecqError::InvalidParameter(format!("spacing must be positive, got {h}")));
        }
        if m < 1 || m > 3 {
            return Err(SpecqError::InvalidParameter(format!("dimension m={m} not in 1..=3")));
        }
        let ext = shape.extent();
        if !(ext > 0.0) {
            return Err(SpecqError::InvalidParameter("shape extent must be positive".into()));
        }
        let half = match shape {
            Shape::Square { half_width } => {
                let k = (half_width / h).round();
                if (k * h - half_width).abs() > 1e-9 * half_width {
                    return Err(SpecqError::InvalidParameter(format!(
                        "half width {half_width} is not a multiple of h = {h}"
                    )));
                }
                k as i64
            }
            Shape::Disk { radius } => {
                if m != 2 {
                    return Err(SpecqError::InvalidParameter("disk domains need m = 2".into()));
                }
                (radius / h + 1e-9).floor() as i64
            }
        };
        if half < 1 {
            return Err(SpecqError::InvalidParameter("spacing too coarse for the domain".into()));
        }
        let side = (2 * half + 1) as usize;
        let total = side.pow(m as u32);
        let mut lattice_to_active = vec![NONE; total];
        let mut active = Vec::new();
        for lin in 0..total {
            let inside = match shape {
                Shape::Square { .. } => true,
                Shape::Disk { radius } => {
                    let mut r2 = 0.0;
                    let mut rem = lin;
                    for _ in 0..m {
                        let c = ((rem % side) as i64 - half) as f64 * h;
                        r2 += c * c;
                        rem /= side;
                    }
                    r2 <= radius * radius * (1.0 + 1e-12)
                }
            };
            if inside {
                lattice_to_active[lin] = active.len() as u32;
                active.push(lin);
            }
        }
        let mut d = GridDomain {
            shape,
            m,
            h,
            half,
            side,
            active,
            lattice_to_active,
            boundary: Vec::new(),
            neighbors: Vec::new(),
        };
        let mut neighbors = vec![NONE; d.active.len() * 2 * m];
        let mut boundary = vec![false; d.active.len()];
        for (i, &lin) in d.active.iter().enumerate() {
            let idx = d.lattice_index(lin);
            for k in 0..m {
                for (s, dir) in [(-1i64, 0usize), (1, 1)] {
                    let mut j = idx.clone();
                    j[k] += s;
                    let nb = d.active_at(&j);
                    match nb {
                        Some(a) => neighbors[(i * m + k) * 2 + dir] = a as u32,
                        None => boundary[i] = true,
                    }
                }
            }
        }
        d.neighbors = neighbors;
        d.boundary = boundary;
        Ok(d)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Lattice half-extent M: indices run over −M..=M per axis.
    pub fn half(&self) -> i64 {
        self.half
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    fn lattice_index(&self, lin: usize) -> Vec<i64> {
        let mut rem = lin;
        (0..self.m)
            .map(|_| {
                let c = (rem % self.side) as i64 - self.half;
                rem /= self.side;
                c
            })
            .collect()
    }

    /// Centered integer index of active node `i`.
    pub fn index(&self, i: usize) -> Vec<i64> {
        self.lattice_index(self.active[i])
    }

    /// Active node at a centered integer index.
    pub fn active_at(&self, idx: &[i64]) -> Option<usize> {
        let mut lin = 0usize;
        let mut mul = 1usize;
        for &c in idx {
            if c < -self.half || c > self.half {
                return None;
            }
            lin += (c + self.half) as usize * mul;
            mul *= self.side;
        }
        match self.lattice_to_active[lin] {
            NONE => None,
            a => Some(a as usize),
        }
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        self.index(i).iter().map(|&c| c as f64 * self.h).collect()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    /// Neighbor of `i` along `axis` in direction −1 (`dir = 0`) or +1 (`dir = 1`).
    pub fn neighbor(&self, i: usize, axis: usize, dir: usize) -> Option<usize> {
        match self.neighbors[(i * self.m + axis) * 2 + dir] {
            NONE => None,
            a => Some(a as usize),
        }
    }

    /// Up to 2m neighbors with their edge weights.
    pub fn neighbors_of(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.m).flat_map(move |k| {
            (0..2).filter_map(move |dir| self.neighbor(i, k, dir).map(|j| (j, self.edge_weight(i, k))))
        })
    }

    /// Quadrature weight of the edge from `i` along `axis`. Edges lying on
    /// k faces of a square carry weight 2⁻ᵏ (trapezoid rule); disk edges weigh 1.
    pub fn edge_weight(&self, i: usize, axis: usize) -> f64 {
        match self.shape {
            Shape::Disk { .. } => 1.0,
            Shape::Square { .. } => {
                let idx = self.index(i);
                let faces = (0..self.m).filter(|&l| l != axis && idx[l].abs() == self.half).count();
                0.5f64.powi(faces as i32)
            }
        }
    }

    /// All edges `(i, j, weight)` with `j` the +1 neighbor of `i`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.len() * self.m);
        for i in 0..self.len() {
            for k in 0..self.m {
                if let Some(j) = self.neighbor(i, k, 1) {
                    out.push((i, j, self.edge_weight(i, k)));
                }
            }
        }
        out
    }

    /// h^{m−2}, the scaling of edge sums.
    pub fn energy_scale(&self) -> f64 {
        self.h.powi(self.m as i32 - 2)
    }

    /// Distance from `x0` to the boundary of the shape.
    pub fn dist_to_boundary(&self, x0: &[f64]) -> f64 {
        match self.shape {
            Shape::Disk { radius } => radius - x0.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Shape::Square { half_width } => x0.iter().map(|v| half_width - v.abs()).fold(f64::INFINITY, f64::min),
        }
    }
}

/// A special-Q-point-valued map on the active nodes of a [`GridDomain`].
#[derive(Clone, Debug)]
pub struct GridField {
    domain: Arc<GridDomain>,
    q: usize,
    n: usize,
    pub values: Vec<SpecPoint>,
    pub fixed: Vec<bool>,
}

impl GridField {
    /// Samples `f` at every node; boundary nodes are fixed.
    pub fn from_fn<F: Fn(&[f64]) -> SpecPoint>(domain: Arc<GridDomain>, f: F) -> Self {
        let values: Vec<SpecPoint> = (0..domain.len()).map(|i| f(&domain.coords(i))).collect();
        let fixed = (0..domain.len()).map(|i| domain.is_boundary(i)).collect();
        let q = values[0].q();
        let n = values[0].n();
        GridField { domain, q, n, values, fixed }
    }

    /// Samples `boundary` on boundary nodes and `interior` elsewhere.
    pub fn with_boundary<F, G>(domain: Arc<GridDomain>, boundary: F, interior: G) -> Self
    where
        F: Fn(&[f64]) -> SpecPoint,
        G: Fn(&[f64]) -> SpecPoint,
    {
        let values: Vec<SpecPoint> = (0..domain.len())
            .map(|i| {
                let x = domain.coords(i);
                if domain.is_boundary(i) {
                    boundary(&x)
                } else {
                    interior(&x)
                }
            })
            .collect();
        let fixed = (0..domain.len()).map(|i| domain.is_boundary(i)).collect();
        let q = values[0].q();
        let n = values[0].n();
        GridField { domain, q, n, values, fixed }
    }

    /// Builds a field from explicit values; all values must share (Q, n).
    pub fn from_values(domain: Arc<GridDomain>, values: Vec<SpecPoint>, fixed: Vec<bool>) -> Result<Self> {
        if values.len() != domain.len() || fixed.len() != domain.len() {
            return Err(SpecqError::DimensionMismatch {
                expected: format!("{} nodes", domain.len()),
                found: format!("{} values, {} flags", values.len(), fixed.len()),
            });
        }
        let q = values[0].q();
        let n = values[0].n();
        if values.iter().any(|v| v.q() != q || v.n() != n) {
            return Err(SpecqError::InvalidParameter("values do not share (Q, n)".into()));
        }
        Ok(GridField { domain, q, n, values, fixed })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn domain_arc(&self) -> Arc<GridDomain> {
        self.domain.clone()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn free_count(&self) -> usize {
        self.fixed.iter().filter(|f| !**f).count()
    }

    /// Applies `f` to every value.
    pub fn map_values<F: Fn(&SpecPoint) -> SpecPoint>(&self, f: F) -> GridField {
        GridField {
            domain: self.domain.clone(),
            q: self.q,
            n: self.n,
            values: self.values.iter().map(f).collect(),
            fixed: self.fixed.clone(),
        }
    }

    /// ζ-coordinates of all nodes, flattened node-major.
    pub fn embedded(&self, zeta: &Zeta) -> Vec<f64> {
        let d = zeta.dim();
        let mut out = vec![0.0; d * self.values.len()];
        for (v, chunk) in self.values.iter().zip(out.chunks_exact_mut(d)) {
            zeta.zeta_into(v, chunk);
        }
        out
    }
}

/// Total energy and per-node density (energy per unit volume).
#[derive(Clone, Debug)]
pub struct EnergyReport {
    pub total: f64,
    pub density: Vec<f64>,
}

/// Squared 𝒢ₛ of every edge, paired with the edge list of the domain.
pub fn edge_energies(u: &GridField) -> Result<Vec<(usize, usize, f64, f64)>> {
    u.domain
        .edges()
        .into_iter()
        .map(|(i, j, w)| Ok((i, j, w, metric_gs_sq(&u.values[i], &u.values[j])?)))
        .collect()
}

/// E_h(u) = h^{m−2} Σ_edges w_e 𝒢ₛ(u(a),u(b))² with per-node density.
pub fn dirichlet_energy(u: &GridField) -> Result<EnergyReport> {
    let d = &u.domain;
    let scale = d.energy_scale();
    let vol = d.h().powi(d.m() as i32);
    let mut density = vec![0.0; d.len()];
    let mut total = 0.0;
    for (i, j, w, e) in edge_energies(u)? {
        let c = scale * w * e;
        total += c;
        density[i] += 0.5 * c / vol;
        density[j] += 0.5 * c / vol;
    }
    Ok(EnergyReport { total, density })
}

/// Shorthand for the total of [`dirichlet_energy`].
pub fn energy(u: &GridField) -> Result<f64> {
    dirichlet_energy(u).map(|r| r.total)
}

/// Edge-sum energy of an embedded field (Euclidean, node-major, dimension `dim`).
pub fn embedded_energy(domain: &GridDomain, data: &[f64], dim: usize) -> f64 {
    let mut total = 0.0;
    for (i, j, w) in domain.edges() {
        let a = &data[i * dim..(i + 1) * dim];
        let b = &data[j * dim..(j + 1) * dim];
        total += w * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    }
    total * domain.energy_scale()
}

/// (total, centered, barycenter) energies with total = centered + Q·barycenter.
#[derive(Clone, Copy, Debug)]
pub struct SplitEnergy {
    pub total: f64,
    pub centered: f64,
    pub barycenter: f64,
}

/// Evaluates the three parts of the energy splitting independently.
pub fn split_energy_check(u: &GridField) -> Result<SplitEnergy> {
    let d = &u.domain;
    let scale = d.energy_scale();
    let centered: Vec<SpecPoint> = u
        .values
        .iter()
        .map(|p| SpecPoint::new(p.base().centered(), p.sign()))
        .collect();
    let etas: Vec<Vec<f64>> = u.values.iter().map(|p| p.eta()).collect();
    let mut s = SplitEnergy { total: 0.0, centered: 0.0, barycenter: 0.0 };
    for (i, j, w) in d.edges() {
        s.total += w * metric_gs_sq(&u.values[i], &u.values[j])?;
        s.centered += w * metric_gs_sq(&centered[i], &centered[j])?;
        s.barycenter += w * etas[i].iter().zip(&etas[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    s.total *= scale;
    s.centered *= scale;
    s.barycenter *= scale;
    Ok(s)
}

/// Signed amplitude ε·|S ⊖ η(S)|, zero on collapsed values.
pub fn signed_amplitude(p: &SpecPoint) -> f64 {
    if p.is_collapsed() {
        0.0
    } else {
        p.sign() as f64 * p.base().centered().norm()
    }
}

/// Region labels, interface nodes and sign-change crossings of a field.
#[derive(Clone, Debug)]
pub struct RegionMap {
    pub labels: Vec<RegionLabel>,
    /// Collapsed nodes adjacent to a non-collapsed node.
    pub interface: Vec<usize>,
    /// Points where the signed amplitude changes sign along an edge
    /// (linear interpolation), together with the collapsed nodes themselves.
    pub collapsed_set: Vec<Vec<f64>>,
}

impl RegionMap {
    pub fn count(&self, label: RegionLabel) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }
}

/// Labels with a tolerance: a node whose centered part has norm ≤ `tol` is
/// counted as collapsed. `tol = 0` reproduces [`classify`].
pub fn regions_with_tol(u: &GridField, tol: f64) -> RegionMap {
    let d = &u.domain;
    let amp: Vec<f64> = u.values.iter().map(signed_amplitude).collect();
    let labels: Vec<RegionLabel> = u
        .values
        .iter()
        .zip(&amp)
        .map(|(p, a)| if a.abs() <= tol { RegionLabel::Collapsed } else { classify(p) })
        .collect();
    let mut interface = Vec::new();
    let mut collapsed_set = Vec::new();
    for i in 0..d.len() {
        if labels[i] == RegionLabel::Collapsed {
            collapsed_set.push(d.coords(i));
            if d.neighbors_of(i).any(|(j, _)| labels[j] != RegionLabel::Collapsed) {
                interface.push(i);
            }
        }
    }
    for (i, j, _) in d.edges() {
        let (li, lj) = (labels[i], labels[j]);
        let opposite = (li == RegionLabel::Positive && lj == RegionLabel::Negative)
            || (li == RegionLabel::Negative && lj == RegionLabel::Positive);
        if opposite {
            let t = amp[i] / (amp[i] - amp[j]);
            let xi = d.coords(i);
            let xj = d.coords(j);
            collapsed_set.push(xi.iter().zip(&xj).map(|(a, b)| a + t * (b - a)).collect());
        }
    }
    RegionMap { labels, interface, collapsed_set }
}

/// Per-node region labels and interface.
pub fn regions(u: &GridField) -> RegionMap {
    regions_with_tol(u, 0.0)
}

/// A field together with its ζ-coordinates, for interpolation.
pub struct EmbeddedGrid<'a> {
    pub field: &'a GridField,
    pub zeta: Zeta,
    pub data: Vec<f64>,
}

impl<'a> EmbeddedGrid<'a> {
    pub fn new(field: &'a GridField) -> Result<Self> {
        let zeta = Zeta::for_dims(field.q, field.n)?;
        let data = field.embedded(&zeta);
        Ok(EmbeddedGrid { field, zeta, data })
    }

    /// Bilinear interpolation of ζ-coordinates at `x` (m = 2). Returns `None`
    /// when a corner of the containing cell is outside the domain.
    pub fn interpolate(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = self.field.domain();
        let h = d.h();
        let fx = x[0] / h;
        let fy = x[1] / h;
        let i0 = fx.floor() as i64;
        let j0 = fy.floor() as i64;
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let dim = self.zeta.dim();
        let mut out = vec![0.0; dim];
        for (di, dj, w) in [
            (0, 0, (1.0 - tx) * (1.0 - ty)),
            (1, 0, tx * (1.0 - ty)),
            (0, 1, (1.0 - tx) * ty),
            (1, 1, tx * ty),
        ] {
            let a = d.active_at(&[i0 + di, j0 + dj])?;
            if w != 0.0 {
                for (o, v) in out.iter_mut().zip(&self.data[a * dim..(a + 1) * dim]) {
                    *o += w * v;
                }
            }
        }
        Some(out)
    }

    /// Trace on the circle ∂B_r(x0) at `k` equally spaced angles.
    pub fn trace_circle(&self, x0: &[f64], r: f64, k: usize) -> Result<Vec<SpecPoint>> {
        let d = self.field.domain();
        let max = d.dist_to_boundary(x0);
        if !(r > 0.0 && r < max) || d.m() != 2 {
            return Err(SpecqError::RadiusOutOfRange { r, max });
        }
        (0..k)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                let x = [x0[0] + r * th.cos(), x0[1] + r * th.sin()];
                let e = self.interpolate(&x).ok_or(SpecqError::RadiusOutOfRange { r, max })?;
                self.zeta.zeta_inv(&self.zeta.varrho(&e))
            })
            .collect()
    }
}

/// Default number of angular samples, ⌈2πr/h⌉.
pub fn default_trace_samples(r: f64, h: f64) -> usize {
    ((2.0 * std::f64::consts::PI * r / h).ceil() as usize).max(8)
}

/// Trace of `u` on ∂B_r(x0); `k` defaults to ⌈2πr/h⌉.
pub fn trace_circle(u: &GridField, x0: &[f64], r: f64, k: Option<usize>) -> Result<Vec<SpecPoint>> {
    let k = k.unwrap_or_else(|| default_trace_samples(r, u.domain().h()));
    EmbeddedGrid::new(u)?.trace_circle(x0, r, k)
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    index: Vec<i64>,
    fixed: bool,
    #[serde(flatten)]
    value: SpecPoint,
}

#[derive(Serialize, Deserialize)]
struct FieldFile {
    format: String,
    version: u32,
    q: usize,
    n: usize,
    m: usize,
    shape: Shape,
    h: f64,
    nodes: Vec<NodeRecord>,
}

pub const FIELD_FORMAT: &str = "specq-field";
pub const FIELD_VERSION: u32 = 1;

/// Serializes a field to the JSON field format.
pub fn field_to_json(u: &GridField) -> serde_json::Value {
    let d = u.domain();
    let f = FieldFile {
        format: FIELD_FORMAT.into(),
        version: FIELD_VERSION,
        q: u.q,
        n: u.n,
        m: d.m(),
        shape: d.shape(),
        h: d.h(),
        nodes: (0..d.len())
            .map(|i| NodeRecord { index: d.index(i), fixed: u.fixed[i], value: u.values[i].clone() })
            .collect(),
    };
    serde_json::to_value(f).expect("field serialization cannot fail")
}

/// Parses the JSON field format; errors carry the line and column.
pub fn field_from_json(text: &str) -> Result<GridField> {
    let f: FieldFile = serde_json::from_str(text).map_err(|e| SpecqError::Parse(e.to_string()))?;
    if f.format != FIELD_FORMAT {
        return Err(SpecqError::Parse(format!("unexpected format tag {:?}", f.format)));
    }
    if f.version != FIELD_VERSION {
        return Err(SpecqError::Parse(format!("unsupported field version {}", f.version)));
    }
    let domain = Arc::new(GridDomain::new(f.shape, f.m, f.h)?);
    let mut values: Vec<Option<SpecPoint>> = vec![None; domain.len()];
    let mut fixed = vec![false; domain.len()];
    for rec in f.nodes {
        let i = domain
            .active_at(&rec.index)
            .ok_or_else(|| SpecqError::Parse(format!("node {:?} outside the domain", rec.index)))?;
        if rec.value.q() != f.q || rec.value.n() != f.n {
            return Err(SpecqError::Parse(format!("node {:?} has wrong (Q, n)", rec.index)));
        }
        fixed[i] = rec.fixed;
        values[i] = Some(rec.value);
    }
    let values: Option<Vec<SpecPoint>> = values.into_iter().collect();
    let values = values.ok_or_else(|| SpecqError::Parse("field file is missing nodes".into()))?;
    GridField::from_values(domain, values, fixed)
}

/// CSV with node coordinates, energy density and region label.
pub fn write_density_csv<W: Write>(u: &GridField, out: &mut W) -> std::io::Result<()> {
    let d = u.domain();
    let rep = dirichlet_energy(u).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    let labels = regions(u).labels;
    let axes = ["x", "y", "z"];
    writeln!(out, "{},density,label", axes[..d.m()].join(","))?;
    for i in 0..d.len() {
        let c: Vec<String> = d.coords(i).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{},{},{}", c.join(","), rep.density[i], labels[i].as_str())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qpoints::QPoint;

    fn single_valued(domain: Arc<GridDomain>, a: [f64; 2]) -> GridField {
        GridField::from_fn(domain, move |x| SpecPoint::collapsed(2, &[a[0] * x[0] + a[1] * x[1]]))
    }

    #[test]
    fn disk_boundary_is_exterior_adjacent() {
        let d = GridDomain::new(Shape::unit_disk(), 2, 0.25).unwrap();
        let c = d.active_at(&[0, 0]).unwrap();
        assert!(!d.is_boundary(c));
        let e = d.active_at(&[4, 0]).unwrap();
        assert!(d.is_boundary(e));
        assert!(d.active_at(&[4, 1]).is_none());
    }

    #[test]
    fn square_rejects_incommensurate_spacing() {
        assert!(GridDomain::new(Shape::unit_square(), 2, 0.3).is_err());
    }

    #[test]
    fn constant_field_has_zero_energy() {
        let d = Arc::new(GridDomain::new(Shape::unit_disk(), 2, 0.125).unwrap());
        let p = SpecPoint::new(QPoint::scalars(&[1.0, 4.0]), -1);
        let u = GridField::from_fn(d, |_| p.clone());
        assert_eq!(energy(&u).unwrap(), 0.0);
    }

    #[test]
    fn linear_field_on_unit_square_is_exact() {
        for h in [0.25, 0.125, 0.0625] {
            let d = Arc::new(GridDomain::new(Shape::Square { half_width: 0.5 }, 2, h).unwrap());
            let e = energy(&single_valued(d, [1.0, 0.0])).unwrap();
            assert!((e - 2.0).abs() < 1e-12, "h={h}: {e}");
        }
    }

    #[test]
    fn density_integrates_to_total() {
        let d = Arc::new(GridDomain::new(Shape::unit_disk(), 2, 0.125).unwrap());
        let u = GridField::from_fn(d.clone(), |x| {
            SpecPoint::new(QPoint::scalars(&[x[0], x[1] * x[1]]), if x[0] > 0.0 { 1 } else { -1 })
        });
        let r = dirichlet_energy(&u).unwrap();
        let s: f64 = r.density.iter().sum::<f64>() * d.h() * d.h();
        assert!((s - r.total).abs() < 1e-12);
    }

    #[test]
    fn split_identity_for_translational_field() {
        let d = Arc::new(GridDomain::new(Shape::unit_square(), 2, 0.25).unwrap());
        let u = single_valued(d, [1.0, -2.0]);
        let s = split_energy_check(&u).unwrap();
        assert!(s.centered.abs() < 1e-28);
        assert!((s.total - 2.0 * s.barycenter).abs() < 1e-12);
    }

    #[test]
    fn all_positive_and_single_valued_regions() {
        let d = Arc::new(GridDomain::new(Shape::unit_disk(), 2, 0.125).unwrap());
        let u = GridField::from_fn(d.clone(), |x| SpecPoint::positive(QPoint::scalars(&[x[0], x[0] + 1.0])));
        assert_eq!(regions(&u).count(RegionLabel::Collapsed), 0);
        let v = single_valued(d.clone(), [1.0, 0.0]);
        assert_eq!(regions(&v).count(RegionLabel::Collapsed), d.len());
    }

    #[test]
    fn trace_of_constant_field() {
        let d = Arc::new(GridDomain::new(Shape::unit_disk(), 2, 0.0625).unwrap());
        let p = SpecPoint::new(QPoint::scalars(&[-1.0, 0.5]), -1);
        let u = GridField::from_fn(d, |_| p.clone());
        let t = trace_circle(&u, &[0.0, 0.0], 0.5, None).unwrap();
        assert_eq!(t.len(), default_trace_samples(0.5, 0.0625));
        assert!(t.iter().all(|v| metric_gs_sq(v, &p).unwrap() < 1e-28));
        assert!(trace_circle(&u, &[0.0, 0.0], 1.2, None).is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = Arc::new(GridDomain::new(Shape::unit_disk(), 2, 0.25).unwrap());
        let u = GridField::from_fn(d, |x| SpecPoint::negative(QPoint::scalars(&[x[0], 2.0])));
        let text = serde_json::to_string(&field_to_json(&u)).unwrap();
        let v = field_from_json(&text).unwrap();
        assert_eq!(u.values, v.values);
        assert_eq!(u.fixed, v.fixed);
        let err = field_from_json("{\"format\": 3").unwrap_err();
        assert!(matches!(err, SpecqError::Parse(ref m) if m.contains("line")));
    }
}
