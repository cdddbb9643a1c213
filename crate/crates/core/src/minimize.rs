//! Discrete Dirichlet minimization with fixed boundary values, and the
//! inner/outer variation residuals used to check stationarity.
//!
//! Strategy A works in ζ-coordinates. Each free node is moved to the nearest
//! point of 𝒬 to the weighted mean of its neighbors, which is the exact
//! minimizer of the node's share of the edge energy; an over-relaxed candidate
//! is used instead whenever it does not raise that share. Nodes are swept in
//! red-black order, so updates within a color are independent.

use rayon::prelude::*;
use serde::Serialize;

use crate::embedret::Zeta;
use crate::error::{Result, SpecqError};
use crate::fields::{embedded_energy, signed_amplitude, GridDomain, GridField, Shape};
use crate::qpoints::QPoint;
use crate::specpoints::{metric_gs_intrinsic_sq, SpecPoint};

/// Solver options.
#[derive(Clone, Debug, Serialize)]
pub struct SolveOptions {
    /// Stop when the relative energy decrease over a sweep falls below this.
    pub tol: f64,
    /// Optional extra requirement: the largest nodal update must fall below this.
    pub step_tol: Option<f64>,
    pub max_iters: usize,
    /// Over-relaxation factor; `None` picks the optimal value for the Laplacian.
    pub omega: Option<f64>,
    /// Recorded for reproducibility; the sweep order does not depend on it.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-10, step_tol: None, max_iters: 100_000, omega: None, seed: 0 }
    }
}

/// Diagnostics of a solver run.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub strategy: String,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Energy after initialization and after every sweep of the main phase.
    pub energy_trace: Vec<f64>,
    /// Sweeps whose energy rose by more than roundoff; should be zero.
    pub monotonicity_violations: usize,
    pub omega: f64,
    pub seed: u64,
}

fn auto_omega(domain: &GridDomain) -> f64 {
    let ext = match domain.shape() {
        Shape::Square { half_width } => 2.0 * half_width,
        Shape::Disk { radius } => 2.0 * radius,
    };
    let s = (std::f64::consts::PI * domain.h() / ext).sin();
    2.0 / (1.0 + s)
}

struct Stencil {
    /// Free nodes of color 0 and color 1.
    colors: [Vec<usize>; 2],
    /// Neighbor lists (node, weight).
    nbrs: Vec<Vec<(usize, f64)>>,
}

fn stencil(u: &GridField) -> Stencil {
    let d = u.domain();
    let mut colors = [Vec::new(), Vec::new()];
    for i in 0..d.len() {
        if !u.fixed[i] {
            let parity = d.index(i).iter().sum::<i64>().rem_euclid(2) as usize;
            colors[parity].push(i);
        }
    }
    let nbrs = (0..d.len()).map(|i| d.neighbors_of(i).collect()).collect();
    Stencil { colors, nbrs }
}

/// One red-black sweep over `data` (node-major, `dim` per node). `project`
/// maps a point to the constraint set in place. Returns the largest update.
fn sweep<P>(st: &Stencil, data: &mut [f64], dim: usize, omega: f64, project: &P) -> f64
where
    P: Fn(&mut [f64]) + Sync,
{
    let mut max_step: f64 = 0.0;
    for color in &st.colors {
        let mut buf = vec![0.0; color.len() * dim];
        {
            let snapshot: &[f64] = data;
            buf.par_chunks_mut(dim).zip(color.par_iter()).for_each(|(out, &i)| {
                let mut mean = vec![0.0; dim];
                let mut wsum = 0.0;
                for &(j, w) in &st.nbrs[i] {
                    wsum += w;
                    for (mk, xk) in mean.iter_mut().zip(&snapshot[j * dim..(j + 1) * dim]) {
                        *mk += w * xk;
                    }
                }
                mean.iter_mut().for_each(|v| *v /= wsum);
                let x = &snapshot[i * dim..(i + 1) * dim];
                let mut exact = mean.clone();
                project(&mut exact);
                if omega == 1.0 {
                    out.copy_from_slice(&exact);
                    return;
                }
                let mut relaxed: Vec<f64> = x.iter().zip(&mean).map(|(a, m)| a + omega * (m - a)).collect();
                project(&mut relaxed);
                let d_relaxed: f64 = relaxed.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum();
                let d_current: f64 = x.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum();
                if d_relaxed <= d_current {
                    out.copy_from_slice(&relaxed);
                } else {
                    out.copy_from_slice(&exact);
                }
            });
        }
        for (k, &i) in color.iter().enumerate() {
            let new = &buf[k * dim..(k + 1) * dim];
            for (o, nv) in data[i * dim..(i + 1) * dim].iter_mut().zip(new) {
                max_step = max_step.max((nv - *o).abs());
                *o = *nv;
            }
        }
    }
    max_step
}

struct Descent {
    sweeps: usize,
    converged: bool,
    trace: Vec<f64>,
    violations: usize,
}

fn descend<P>(
    domain: &GridDomain,
    st: &Stencil,
    data: &mut [f64],
    dim: usize,
    omega: f64,
    opts: &SolveOptions,
    project: &P,
) -> Descent
where
    P: Fn(&mut [f64]) + Sync,
{
    let mut e = embedded_energy(domain, data, dim);
    let mut out = Descent { sweeps: 0, converged: false, trace: vec![e], violations: 0 };
    while out.sweeps < opts.max_iters {
        let step = sweep(st, data, dim, omega, project);
        out.sweeps += 1;
        let e_new = embedded_energy(domain, data, dim);
        out.trace.push(e_new);
        if e_new > e * (1.0 + 1e-12) + 1e-300 {
            out.violations += 1;
        }
        let rel = if e > 0.0 { (e - e_new) / e } else { 0.0 };
        e = e_new;
        let step_ok = opts.step_tol.map_or(true, |t| step < t);
        if (rel < opts.tol || e == 0.0) && step_ok {
            out.converged = true;
            break;
        }
    }
    out
}

/// Strategy A: projected Gauss–Seidel/SOR in ζ-coordinates. Boundary nodes
/// are kept exactly; the returned energy never exceeds that of `u0`.
pub fn solve_dirichlet(u0: &GridField, opts: &SolveOptions) -> Result<(GridField, SolveReport)> {
    if u0.free_count() == 0 {
        return Err(SpecqError::NoFreeNodes);
    }
    let zeta = Zeta::for_dims(u0.q(), u0.n())?;
    let dim = zeta.dim();
    let domain = u0.domain();
    let st = stencil(u0);
    let omega = opts.omega.unwrap_or_else(|| auto_omega(domain));
    let start = u0.embedded(&zeta);
    let e_start = embedded_energy(domain, &start, dim);

    // Harmonic extension per coordinate, then nodewise retraction.
    let mut init = start.clone();
    for &i in st.colors.iter().flatten() {
        init[i * dim..(i + 1) * dim].iter_mut().for_each(|v| *v = 0.0);
    }
    let lin_opts = SolveOptions { tol: opts.tol.min(1e-10), ..opts.clone() };
    descend(domain, &st, &mut init, dim, omega, &lin_opts, &|_: &mut [f64]| {});
    for &i in st.colors.iter().flatten() {
        let r = zeta.varrho(&init[i * dim..(i + 1) * dim]);
        init[i * dim..(i + 1) * dim].copy_from_slice(&r);
    }
    let e_init = embedded_energy(domain, &init, dim);
    let mut data = if e_init <= e_start { init } else { start };

    let run = descend(domain, &st, &mut data, dim, omega, opts, &|e: &mut [f64]| zeta.project_nearest(e));
    let mut out = u0.clone();
    for &i in st.colors.iter().flatten() {
        out.values[i] = zeta.zeta_inv(&data[i * dim..(i + 1) * dim])?;
    }
    let report = SolveReport {
        strategy: "embedded".into(),
        energy_initial: e_start,
        energy_final: *run.trace.last().unwrap(),
        sweeps: run.sweeps,
        converged: run.converged,
        energy_trace: run.trace,
        monotonicity_violations: run.violations,
        omega,
        seed: opts.seed,
    };
    Ok((out, report))
}

/// Discrete harmonic extension of a scalar field: values at `fixed` nodes
/// are kept, the rest solve the weighted 5-point equations. Returns the
/// discrete energy.
pub fn harmonic_scalar(domain: &GridDomain, values: &mut [f64], fixed: &[bool], opts: &SolveOptions) -> Result<f64> {
    if values.len() != domain.len() || fixed.len() != domain.len() {
        return Err(SpecqError::DimensionMismatch {
            expected: format!("{} nodes", domain.len()),
            found: format!("{} values, {} flags", values.len(), fixed.len()),
        });
    }
    let mut colors = [Vec::new(), Vec::new()];
    for i in 0..domain.len() {
        if !fixed[i] {
            colors[domain.index(i).iter().sum::<i64>().rem_euclid(2) as usize].push(i);
        }
    }
    let nbrs = (0..domain.len()).map(|i| domain.neighbors_of(i).collect()).collect();
    let st = Stencil { colors, nbrs };
    let omega = opts.omega.unwrap_or_else(|| auto_omega(domain));
    let run = descend(domain, &st, values, 1, omega, opts, &|_: &mut [f64]| {});
    Ok(*run.trace.last().unwrap())
}

/// Energy of the classical competitor (f̄, ḡ) on the disk of the given grid:
/// two independent discrete harmonic extensions.
pub fn competitor_energy(domain: &GridDomain, opts: &SolveOptions) -> Result<f64> {
    let nn = domain.len();
    let fixed: Vec<bool> = (0..nn).map(|i| domain.is_boundary(i)).collect();
    let mut f = vec![0.0; nn];
    let mut g = vec![0.0; nn];
    for i in 0..nn {
        if fixed[i] {
            let x = domain.coords(i);
            let (a, b) = crate::enneper::competitor_boundary(x[0], x[1]);
            f[i] = a;
            g[i] = b;
        }
    }
    Ok(harmonic_scalar(domain, &mut f, &fixed, opts)? + harmonic_scalar(domain, &mut g, &fixed, opts)?)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Label {
    Pos,
    Neg,
    Col,
}

/// Strategy B for Q = 2, n = 1 on a disk: alternate between solving the
/// sheet equations for fixed region labels and relabelling nodes by the
/// locally cheapest of the three labels (ties go to Collapsed).
pub fn solve_two_sheet(u0: &GridField, opts: &SolveOptions) -> Result<(GridField, SolveReport)> {
    if u0.q() != 2 || u0.n() != 1 {
        return Err(SpecqError::InvalidParameter("two-sheet solver needs Q = 2, n = 1".into()));
    }
    if !matches!(u0.domain().shape(), Shape::Disk { .. }) {
        return Err(SpecqError::InvalidParameter("two-sheet solver needs a disk domain".into()));
    }
    // Initial labels from the harmonic extension of the signed amplitude.
    let domain = u0.domain();
    let st = stencil(u0);
    let omega = opts.omega.unwrap_or_else(|| auto_omega(domain));
    let nn = domain.len();
    let lin = SolveOptions { tol: opts.tol.min(1e-13), ..opts.clone() };
    let mut sa: Vec<f64> = (0..nn).map(|i| if u0.fixed[i] { signed_amplitude(&u0.values[i]) } else { 0.0 }).collect();
    harmonic_scalar(domain, &mut sa, &u0.fixed, &lin)?;
    let mut z: Vec<f64> = (0..nn).map(|i| if u0.fixed[i] { u0.values[i].eta()[0] } else { 0.0 }).collect();
    harmonic_scalar(domain, &mut z, &u0.fixed, &lin)?;
    let mut t: Vec<f64> = sa.iter().map(|v| v.abs()).collect();
    let mut lab: Vec<Label> = sa
        .iter()
        .map(|&s| match s {
            s if s > 0.0 => Label::Pos,
            s if s < 0.0 => Label::Neg,
            _ => Label::Col,
        })
        .collect();

    let q = 2.0;
    let energy = |t: &[f64], z: &[f64], lab: &[Label]| -> f64 {
        let mut e = 0.0;
        for i in 0..nn {
            for &(j, w) in &st.nbrs[i] {
                if j > i {
                    let same = lab[i] == lab[j] && lab[i] != Label::Col;
                    let dt = if same { (t[i] - t[j]).powi(2) } else { t[i] * t[i] + t[j] * t[j] };
                    e += w * (dt + q * (z[i] - z[j]).powi(2));
                }
            }
        }
        e * domain.energy_scale()
    };

    let e_start = {
        let zs: Vec<f64> = u0.values.iter().map(|p| p.eta()[0]).collect();
        let ts: Vec<f64> = u0.values.iter().map(|p| signed_amplitude(p).abs()).collect();
        let ls: Vec<Label> = u0
            .values
            .iter()
            .map(|p| match signed_amplitude(p) {
                s if s > 0.0 => Label::Pos,
                s if s < 0.0 => Label::Neg,
                _ => Label::Col,
            })
            .collect();
        energy(&ts, &zs, &ls)
    };
    let mut e = energy(&t, &z, &lab);
    let mut trace = vec![e];
    let mut violations = 0;
    let mut sweeps = 0;
    let mut converged = false;
    let free: Vec<usize> = st.colors.iter().flatten().copied().collect();
    while sweeps < opts.max_iters {
        // Sheet solve with labels frozen: projected SOR on t ≥ 0.
        for color in &st.colors {
            for &i in color {
                if lab[i] == Label::Col {
                    t[i] = 0.0;
                    continue;
                }
                let mut a = 0.0;
                let mut wsum = 0.0;
                for &(j, w) in &st.nbrs[i] {
                    wsum += w;
                    if lab[j] == lab[i] {
                        a += w * t[j];
                    }
                }
                t[i] = ((1.0 - omega) * t[i] + omega * a / wsum).max(0.0);
            }
        }
        // Label update, Gauss–Seidel order.
        let mut changes = 0;
        for &i in &free {
            let (mut ap, mut an, mut wsum) = (0.0, 0.0, 0.0);
            for &(j, w) in &st.nbrs[i] {
                wsum += w;
                match lab[j] {
                    Label::Pos => ap += w * t[j],
                    Label::Neg => an += w * t[j],
                    Label::Col => {}
                }
            }
            let best = if ap > an {
                Label::Pos
            } else if an > ap {
                Label::Neg
            } else {
                Label::Col
            };
            // Relabel only when it strictly lowers the local energy.
            if best != lab[i] {
                let cur = match lab[i] {
                    Label::Pos => ap,
                    Label::Neg => an,
                    Label::Col => 0.0,
                };
                let gain = match best {
                    Label::Pos => ap,
                    Label::Neg => an,
                    Label::Col => 0.0,
                };
                let local = |lbl_a: f64, ti: f64| wsum * ti * ti - 2.0 * ti * lbl_a;
                let e_cur = local(cur, t[i]);
                let t_new = gain / wsum;
                let e_new = local(gain, t_new);
                if e_new < e_cur || (e_new == e_cur && best == Label::Col) {
                    lab[i] = best;
                    t[i] = t_new;
                    changes += 1;
                }
            }
        }
        sweeps += 1;
        let e_new = energy(&t, &z, &lab);
        trace.push(e_new);
        if e_new > e * (1.0 + 1e-12) + 1e-300 {
            violations += 1;
        }
        let rel = if e > 0.0 { (e - e_new) / e } else { 0.0 };
        e = e_new;
        if changes == 0 && (rel < opts.tol || e == 0.0) {
            converged = true;
            break;
        }
    }
    let s2 = std::f64::consts::SQRT_2;
    let mut out = u0.clone();
    for &i in &free {
        out.values[i] = match lab[i] {
            Label::Col => SpecPoint::collapsed(2, &[z[i]]),
            l => SpecPoint::new(
                QPoint::scalars(&[z[i] - t[i] / s2, z[i] + t[i] / s2]),
                if l == Label::Pos { 1 } else { -1 },
            ),
        };
    }
    let report = SolveReport {
        strategy: "two-sheet".into(),
        energy_initial: e_start,
        energy_final: e,
        sweeps,
        converged,
        energy_trace: trace,
        monotonicity_violations: violations,
        omega,
        seed: opts.seed,
    };
    Ok((out, report))
}

/// A compactly supported test vector field φ: ℝᵐ → ℝᵐ.
pub trait VectorTest: Sync {
    fn value(&self, x: &[f64]) -> Vec<f64>;
    /// Row-major Jacobian, entry `[k*m + l] = ∂_l φ_k`.
    fn jacobian(&self, x: &[f64]) -> Vec<f64>;
    /// A ball containing the support: (center, radius).
    fn support(&self) -> (Vec<f64>, f64);
}

/// A compactly supported scalar test function φ̃.
pub trait ScalarTest: Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn support(&self) -> (Vec<f64>, f64);
}

/// The C² bump b(x) = (1 − |x − c|²/ρ²)³ inside B_ρ(c), zero outside.
#[derive(Clone, Debug)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Bump {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        Bump { center, radius }
    }

    fn s(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (self.radius * self.radius)
    }
}

impl ScalarTest for Bump {
    fn value(&self, x: &[f64]) -> f64 {
        let s = self.s(x);
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - s).powi(3)
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let s = self.s(x);
        if s >= 1.0 {
            return vec![0.0; x.len()];
        }
        let f = -6.0 * (1.0 - s).powi(2) / (self.radius * self.radius);
        x.iter().zip(&self.center).map(|(a, b)| f * (a - b)).collect()
    }

    fn support(&self) -> (Vec<f64>, f64) {
        (self.center.clone(), self.radius)
    }
}

/// φ(x) = b(x)·(A x + c) for a bump `b`, a matrix `A` and a vector `c`.
#[derive(Clone, Debug)]
pub struct BumpVector {
    pub bump: Bump,
    /// Row-major m×m.
    pub a: Vec<f64>,
    pub c: Vec<f64>,
}

impl BumpVector {
    fn affine(&self, x: &[f64]) -> Vec<f64> {
        let m = x.len();
        (0..m).map(|k| self.c[k] + (0..m).map(|l| self.a[k * m + l] * x[l]).sum::<f64>()).collect()
    }
}

impl VectorTest for BumpVector {
    fn value(&self, x: &[f64]) -> Vec<f64> {
        let b = self.bump.value(x);
        self.affine(x).into_iter().map(|v| b * v).collect()
    }

    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let m = x.len();
        let b = self.bump.value(x);
        let gb = self.bump.gradient(x);
        let v = self.affine(x);
        let mut j = vec![0.0; m * m];
        for k in 0..m {
            for l in 0..m {
                j[k * m + l] = gb[l] * v[k] + b * self.a[k * m + l];
            }
        }
        j
    }

    fn support(&self) -> (Vec<f64>, f64) {
        self.bump.support()
    }
}

/// Cell stress tensor T_kl ≈ Σ_i ∂_k u_i · ∂_l u_i from directional energies:
/// T_kk averages squared intrinsic distances along the axis-k edges of the
/// cell, T_kl compares the two diagonals of each (k, l) face. `corners[c]` is
/// the node at offset bits `c`. Row-major m×m.
pub(crate) fn cell_stress(u: &GridField, corners: &[usize]) -> Result<Vec<f64>> {
    let m = u.domain().m();
    let h2 = u.domain().h().powi(2);
    let dist = |a: usize, b: usize| metric_gs_intrinsic_sq(&u.values[corners[a]], &u.values[corners[b]]);
    let mut t = vec![0.0; m * m];
    let nc = corners.len();
    for k in 0..m {
        let bk = 1 << k;
        let mut acc = 0.0;
        for c in (0..nc).filter(|c| c & bk == 0) {
            acc += dist(c, c | bk)?;
        }
        t[k * m + k] = acc / ((nc / 2) as f64 * h2);
        for l in (k + 1)..m {
            let bl = 1 << l;
            let mut acc = 0.0;
            let mut count = 0;
            for c in (0..nc).filter(|c| c & (bk | bl) == 0) {
                acc += dist(c, c | bk | bl)? - dist(c | bk, c | bl)?;
                count += 1;
            }
            let v = acc / (4.0 * count as f64 * h2);
            t[k * m + l] = v;
            t[l * m + k] = v;
        }
    }
    Ok(t)
}

/// Active corners of the cell with lower corner `base`, or `None`.
pub(crate) fn cell_corners(d: &GridDomain, base: &[i64]) -> Option<Vec<usize>> {
    (0..(1usize << base.len()))
        .map(|c| {
            let idx: Vec<i64> = base.iter().enumerate().map(|(l, b)| b + ((c >> l) & 1) as i64).collect();
            d.active_at(&idx)
        })
        .collect()
}

/// Multilinear shape functions on the unit cell at local coordinates `t ∈ [0,1]ᵐ`,
/// with derivatives scaled by 1/h. Corner `c` has offset bit `l` = (c >> l) & 1.
pub(crate) fn shape_functions(t: &[f64], h: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = t.len();
    let nc = 1 << m;
    let mut w = vec![1.0; nc];
    let mut dw = vec![vec![1.0 / h; m]; nc];
    for c in 0..nc {
        for l in 0..m {
            let bit = (c >> l) & 1;
            let f = if bit == 1 { t[l] } else { 1.0 - t[l] };
            let df = if bit == 1 { 1.0 } else { -1.0 };
            w[c] *= f;
            for (k, dk) in dw[c].iter_mut().enumerate() {
                *dk *= if k == l { df } else { f };
            }
        }
    }
    (w, dw)
}

/// Stress tensor and Σ_i u_i·∂_l u_i = ½∂_l|u|² at a point.
pub(crate) struct LocalJet {
    pub stress: Vec<f64>,
    pub half_grad_norm_sq: Vec<f64>,
}

fn jet_in_cell(u: &GridField, corners: &[usize], t: &[f64]) -> Result<LocalJet> {
    let stress = cell_stress(u, corners)?;
    let (_, dw) = shape_functions(t, u.domain().h());
    let half_grad_norm_sq = (0..t.len())
        .map(|l| 0.5 * corners.iter().zip(&dw).map(|(&a, g)| g[l] * u.values[a].norm_sq()).sum::<f64>())
        .collect();
    Ok(LocalJet { stress, half_grad_norm_sq })
}

/// Central (one-sided at the boundary) difference of |u|² at node `a` along `axis`.
fn nodal_norm_sq_derivative(u: &GridField, a: usize, axis: usize) -> f64 {
    let d = u.domain();
    let h = d.h();
    let f = |i: usize| u.values[i].norm_sq();
    match (d.neighbor(a, axis, 1), d.neighbor(a, axis, 0)) {
        (Some(p), Some(n)) => (f(p) - f(n)) / (2.0 * h),
        (Some(p), None) => (f(p) - f(a)) / h,
        (None, Some(n)) => (f(a) - f(n)) / h,
        (None, None) => 0.0,
    }
}

/// Local jet at an arbitrary point: the containing cell's stress and the
/// multilinear interpolation of nodal central differences of ½|u|². `None`
/// when a cell corner is inactive.
pub(crate) fn point_jet(u: &GridField, x: &[f64]) -> Result<Option<LocalJet>> {
    let h = u.domain().h();
    let base: Vec<i64> = x.iter().map(|v| (v / h).floor() as i64).collect();
    let t: Vec<f64> = x.iter().zip(&base).map(|(v, b)| v / h - *b as f64).collect();
    let Some(corners) = cell_corners(u.domain(), &base) else { return Ok(None) };
    let stress = cell_stress(u, &corners)?;
    let (w, _) = shape_functions(&t, h);
    let half_grad_norm_sq = (0..t.len())
        .map(|l| 0.5 * corners.iter().zip(&w).map(|(&a, wc)| wc * nodal_norm_sq_derivative(u, a, l)).sum::<f64>())
        .collect();
    Ok(Some(LocalJet { stress, half_grad_norm_sq }))
}

/// Inner and outer variation residuals, with scales for relative comparison.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VariationResiduals {
    pub inner: f64,
    pub outer: f64,
    /// ∫ |T||Dφ| + |Du|²|div φ|, the size of the inner integrand.
    pub inner_scale: f64,
    /// ∫ |u||Du||∇φ̃| + |φ̃||Du|², the size of the outer integrand.
    pub outer_scale: f64,
}

/// Midpoint-rule evaluation of the inner variation against `phi` and the
/// outer variation against ψ(x,u) = φ̃(x)·u, over cells with all corners active.
/// The integrands are 2⟨T, Dφ⟩ − tr T·div φ and ½∇|u|²·∇φ̃ + φ̃·tr T.
pub fn variation_residuals(u: &GridField, phi: &dyn VectorTest, psi: &dyn ScalarTest) -> Result<VariationResiduals> {
    let d = u.domain();
    let h = d.h();
    let m = d.m();
    for (c, r) in [phi.support(), psi.support()] {
        if d.dist_to_boundary(&c) <= r + 2.0 * h {
            return Err(SpecqError::SupportTouchesBoundary);
        }
    }
    let vol = h.powi(m as i32);
    let mut res = VariationResiduals { inner: 0.0, outer: 0.0, inner_scale: 0.0, outer_scale: 0.0 };
    for i in 0..d.len() {
        let base = d.index(i);
        let Some(corners) = cell_corners(d, &base) else { continue };
        let center: Vec<f64> = base.iter().map(|&b| (b as f64 + 0.5) * h).collect();
        let jphi = phi.jacobian(&center);
        let ps = psi.value(&center);
        let gps = psi.gradient(&center);
        let phi_active = jphi.iter().any(|v| *v != 0.0);
        let psi_active = ps != 0.0 || gps.iter().any(|v| *v != 0.0);
        if !phi_active && !psi_active {
            continue;
        }
        let jet = jet_in_cell(u, &corners, &vec![0.5; m])?;
        let tr: f64 = (0..m).map(|k| jet.stress[k * m + k]).sum();
        if phi_active {
            let div: f64 = (0..m).map(|k| jphi[k * m + k]).sum();
            let mut tdp = 0.0;
            let mut tdp_abs = 0.0;
            for k in 0..m {
                for l in 0..m {
                    tdp += jet.stress[k * m + l] * jphi[k * m + l];
                    tdp_abs += (jet.stress[k * m + l] * jphi[k * m + l]).abs();
                }
            }
            res.inner += vol * (2.0 * tdp - tr * div);
            res.inner_scale += vol * (2.0 * tdp_abs + tr * div.abs());
        }
        if psi_active {
            let cross: f64 = (0..m).map(|l| jet.half_grad_norm_sq[l] * gps[l]).sum();
            res.outer += vol * (cross + ps * tr);
            res.outer_scale += vol * (cross.abs() + ps.abs() * tr);
        }
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{energy, GridDomain, Shape};
    use crate::specpoints::metric_gs;
    use std::sync::Arc;

    fn disk(h: f64) -> Arc<GridDomain> {
        Arc::new(GridDomain::new(Shape::unit_disk(), 2, h).unwrap())
    }

    fn lu_harmonic(d: &GridDomain, g: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        use nalgebra::{DMatrix, DVector};
        let free: Vec<usize> = (0..d.len()).filter(|&i| !d.is_boundary(i)).collect();
        let mut pos = vec![usize::MAX; d.len()];
        for (k, &i) in free.iter().enumerate() {
            pos[i] = k;
        }
        let mut a = DMatrix::<f64>::zeros(free.len(), free.len());
        let mut b = DVector::<f64>::zeros(free.len());
        for (k, &i) in free.iter().enumerate() {
            for (j, w) in d.neighbors_of(i) {
                a[(k, k)] += w;
                if pos[j] == usize::MAX {
                    b[k] += w * g(&d.coords(j));
                } else {
                    a[(k, pos[j])] -= w;
                }
            }
        }
        let x = a.lu().solve(&b).unwrap();
        let mut out: Vec<f64> = (0..d.len()).map(|i| g(&d.coords(i))).collect();
        for (k, &i) in free.iter().enumerate() {
            out[i] = x[k];
        }
        out
    }

    #[test]
    fn collapsed_data_matches_lu_laplacian() {
        let d = disk(1.0 / 16.0);
        let g = |x: &[f64]| x[0] * x[0] * x[0] - 0.5 * x[1] + (2.0 * x[0]).sin();
        let exact = lu_harmonic(&d, g);
        let u0 = GridField::with_boundary(d.clone(), |x| SpecPoint::collapsed(2, &[g(x)]), |_| SpecPoint::zero(2, 1));
        let opts = SolveOptions { tol: 1e-15, step_tol: Some(1e-13), ..Default::default() };
        let (u, _) = solve_dirichlet(&u0, &opts).unwrap();
        for (p, e) in u.values.iter().zip(&exact) {
            assert!(p.is_collapsed());
            assert!((p.eta()[0] - e).abs() < 1e-9, "{} vs {}", p.eta()[0], e);
        }
        let mut vals: Vec<f64> = (0..d.len()).map(|i| if d.is_boundary(i) { g(&d.coords(i)) } else { 0.0 }).collect();
        let fixed: Vec<bool> = (0..d.len()).map(|i| d.is_boundary(i)).collect();
        harmonic_scalar(&d, &mut vals, &fixed, &opts).unwrap();
        for (a, e) in vals.iter().zip(&exact) {
            assert!((a - e).abs() < 1e-9);
        }
    }

    #[test]
    fn separated_positive_data_factorizes() {
        // Sheets z ± t/√2 with t > 0 on the boundary stay separated and harmonic.
        let d = disk(1.0 / 16.0);
        let t = |x: &[f64]| 2.0 + x[0] * x[1];
        let z = |x: &[f64]| x[0] - x[1] * x[1];
        let s2 = std::f64::consts::SQRT_2;
        let bd = |x: &[f64]| SpecPoint::positive(QPoint::scalars(&[z(x) - t(x) / s2, z(x) + t(x) / s2]));
        let u0 = GridField::with_boundary(d.clone(), bd, |_| SpecPoint::zero(2, 1));
        let te = lu_harmonic(&d, t);
        let ze = lu_harmonic(&d, z);
        let opts = SolveOptions { tol: 1e-15, step_tol: Some(1e-13), ..Default::default() };
        for solve in [solve_dirichlet, solve_two_sheet] {
            let (u, _) = solve(&u0, &opts).unwrap();
            for i in 0..d.len() {
                assert_eq!(u.values[i].sign(), 1);
                assert!((u.values[i].eta()[0] - ze[i]).abs() < 1e-7);
                assert!((signed_amplitude(&u.values[i]) - te[i]).abs() < 1e-7, "{} {}", signed_amplitude(&u.values[i]), te[i]);
            }
        }
    }

    #[test]
    fn strategies_agree_on_random_problems() {
        use crate::sampling::rng;
        use rand::Rng;
        let d = disk(1.0 / 16.0);
        for seed in 0..10u64 {
            let mut r = rng(seed);
            let c: Vec<f64> = (0..6).map(|_| r.gen_range(-1.0..1.0)).collect();
            let bd = |x: &[f64]| {
                let s = c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * (x[0] * x[0] - x[1] * x[1]);
                let z = c[4] * x[0] + c[5] * x[1];
                let a = s.abs() / std::f64::consts::SQRT_2;
                SpecPoint::new(QPoint::scalars(&[z - a, z + a]), if s >= 0.0 { 1 } else { -1 })
            };
            let u0 = GridField::with_boundary(d.clone(), bd, |_| SpecPoint::zero(2, 1));
            let opts = SolveOptions { tol: 1e-13, ..Default::default() };
            let (_, ra) = solve_dirichlet(&u0, &opts).unwrap();
            let (_, rb) = solve_two_sheet(&u0, &opts).unwrap();
            let rel = (ra.energy_final - rb.energy_final).abs() / ra.energy_final.max(1e-12);
            assert!(rel < 1e-6, "seed {seed}: {} vs {}", ra.energy_final, rb.energy_final);
        }
    }

    #[test]
    fn competitor_energy_matches_fourier_value() {
        // ½(E(3cos2θ) + E(3|cos2θ|)) = 9π + 36/π for the harmonic extensions.
        let exact = 9.0 * std::f64::consts::PI + 36.0 / std::f64::consts::PI;
        let d = disk(1.0 / 32.0);
        let e = competitor_energy(&d, &SolveOptions::default()).unwrap();
        assert!((e / exact - 1.0).abs() < 0.06, "{e} vs {exact}");
        assert!(e < crate::enneper::ENERGY);
    }

    #[test]
    fn zero_boundary_gives_zero() {
        let d = disk(0.125);
        let u0 = GridField::with_boundary(d, |_| SpecPoint::zero(2, 1), |x| {
            SpecPoint::new(QPoint::scalars(&[x[0], 1.0]), -1)
        });
        let (u, r) = solve_dirichlet(&u0, &SolveOptions::default()).unwrap();
        assert_eq!(r.energy_final, 0.0);
        assert!(u.values.iter().all(|p| p.norm() == 0.0));
    }

    #[test]
    fn no_free_nodes_is_an_error() {
        let d = Arc::new(GridDomain::new(Shape::Square { half_width: 0.5 }, 2, 0.5).unwrap());
        let n = d.len();
        let u0 = GridField::from_values(d, vec![SpecPoint::zero(2, 1); n], vec![true; n]).unwrap();
        assert!(matches!(solve_dirichlet(&u0, &SolveOptions::default()), Err(SpecqError::NoFreeNodes)));
    }

    #[test]
    fn energy_never_exceeds_start() {
        let d = disk(0.125);
        let u0 = GridField::from_fn(d, |x| {
            SpecPoint::new(QPoint::scalars(&[x[0] * x[1], 1.0 - x[0]]), if x[1] > 0.2 { 1 } else { -1 })
        });
        let e0 = energy(&u0).unwrap();
        let (u, r) = solve_dirichlet(&u0, &SolveOptions::default()).unwrap();
        assert!(r.energy_final <= e0);
        assert_eq!(r.monotonicity_violations, 0);
        assert!((energy(&u).unwrap() - r.energy_final).abs() < 1e-9 * e0.max(1.0));
        for i in 0..u.values.len() {
            if u.fixed[i] {
                assert_eq!(u.values[i], u0.values[i]);
            }
        }
    }

    #[test]
    fn two_sheet_constant_boundary() {
        let d = disk(0.125);
        let p = SpecPoint::new(QPoint::scalars(&[-0.5, 1.5]), -1);
        let u0 = GridField::with_boundary(d, |_| p.clone(), |_| SpecPoint::zero(2, 1));
        let (u, _) = solve_two_sheet(&u0, &SolveOptions::default()).unwrap();
        assert!(u.values.iter().all(|v| metric_gs(v, &p).unwrap() < 1e-8));
    }

    #[test]
    fn two_sheet_rejects_other_q() {
        let d = disk(0.25);
        let u0 = GridField::from_fn(d, |_| SpecPoint::zero(3, 1));
        assert!(solve_two_sheet(&u0, &SolveOptions::default()).is_err());
    }

    #[test]
    fn shape_functions_partition_unity() {
        let (w, dw) = shape_functions(&[0.3, 0.8], 0.5);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for l in 0..2 {
            assert!(dw.iter().map(|g| g[l]).sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn constant_field_has_zero_residuals() {
        let d = disk(0.0625);
        let p = SpecPoint::new(QPoint::scalars(&[-0.5, 1.5]), -1);
        let u = GridField::from_fn(d, |_| p.clone());
        let phi = BumpVector { bump: Bump::new(vec![0.1, 0.0], 0.5), a: vec![1.0, 0.5, 0.0, 1.0], c: vec![0.2, -0.1] };
        let psi = Bump::new(vec![0.0, 0.2], 0.5);
        let r = variation_residuals(&u, &phi, &psi).unwrap();
        assert_eq!(r.inner, 0.0);
        assert_eq!(r.outer.abs(), 0.0);
        let far = Bump::new(vec![0.6, 0.0], 0.5);
        assert!(matches!(variation_residuals(&u, &phi, &far), Err(SpecqError::SupportTouchesBoundary)));
    }
}
