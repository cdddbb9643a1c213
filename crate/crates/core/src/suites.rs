//! Property suites: the eight acceptance checks, shared by the acceptance
//! test target and `specq verify`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::embedret::{luckhaus_bound, luckhaus_interpolate, r_pair, Zeta};
use crate::enneper::{self, Labeling};
use crate::error::Result;
use crate::fields::{GridDomain, GridField, Shape};
use crate::frequency::{check_monotone, default_monotone_tol, default_radii, frequency_profile, geometric_radii, key_identity_residuals};
use crate::graphs::{
    excess_order_fit, mass_subdomain_check, reparametrize_tilted, taylor_mass_check, variation_order_fit, PlanarDomain, Polynomial,
    SheetSpec, TestMap, DEFAULT_ORDER,
};
use crate::minimize::{competitor_energy, solve_dirichlet, variation_residuals, Bump, BumpVector, SolveOptions, SolveReport};
use crate::qpoints::{brute_force_assignment, hungarian_assignment, metric_g, QPoint};
use crate::sampling::{random_specpoint, random_vec, rng};
use crate::specpoints::{iota, metric_gs, triple_distance, SpecPoint};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// The headline measured quantity, when there is one.
    pub value: Option<f64>,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail, value: None }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub seconds: f64,
    /// Runtime budget in seconds.
    pub budget: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.seconds <= self.budget
    }

    /// One line: status, suite, failing checks (or all details when passing).
    pub fn summary(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| format!("{}{}: {}", if c.passed { "" } else { "!" }, c.name, c.detail))
            .collect();
        format!("{status} {} ({:.1}s / {:.0}s budget) {}", self.suite, self.seconds, self.budget, parts.join("; "))
    }
}

/// Suite names in acceptance order.
pub const SUITES: [&str; 8] = ["metric", "embedding", "enneper", "monotonicity", "variation", "taylor", "reparam", "luckhaus"];

/// Boundary problems on the unit disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Problem {
    Enneper,
    /// Signed amplitude c₀ + c₁x + c₂y + c₃(x² − y²) + c₄xy and mean c₅x + c₆y,
    /// coefficients drawn from the seed.
    Random(u64),
    /// Collapsed linear field 0.7x − 0.4y.
    Linear,
}

impl Problem {
    pub fn name(&self) -> String {
        match self {
            Problem::Enneper => "enneper".into(),
            Problem::Random(s) => format!("random-{s}"),
            Problem::Linear => "linear".into(),
        }
    }

    pub fn field(&self, h: f64) -> Result<GridField> {
        match *self {
            Problem::Enneper => enneper::boundary_problem(h),
            Problem::Random(seed) => {
                let mut r = rng(seed);
                let c: Vec<f64> = (0..7).map(|_| r.gen_range(-1.0..1.0)).collect();
                let d = Arc::new(GridDomain::new(Shape::unit_disk(), 2, h)?);
                Ok(GridField::with_boundary(
                    d,
                    move |x| {
                        let s = c[0] + c[1] * x[0] + c[2] * x[1] + 2.0 * c[3] * (x[0] * x[0] - x[1] * x[1]) + 2.0 * c[4] * x[0] * x[1];
                        let z = c[5] * x[0] + c[6] * x[1];
                        let a = s.abs() / std::f64::consts::SQRT_2;
                        SpecPoint::new(QPoint::scalars(&[z - a, z + a]), if s >= 0.0 { 1 } else { -1 })
                    },
                    |_| SpecPoint::zero(2, 1),
                ))
            }
            Problem::Linear => {
                let d = Arc::new(GridDomain::new(Shape::unit_disk(), 2, h)?);
                Ok(GridField::with_boundary(d, |x| SpecPoint::collapsed(2, &[0.7 * x[0] - 0.4 * x[1]]), |_| SpecPoint::zero(2, 1)))
            }
        }
    }
}

/// Radii at which the radial identities are evaluated.
pub const KEY_RADII: [f64; 4] = [0.35, 0.45, 0.55, 0.65];

pub type Solved = Arc<(GridField, SolveReport)>;
type Slot = Arc<OnceLock<std::result::Result<Solved, String>>>;

/// Configuration and a cache of solver outputs shared between suites.
pub struct Workbench {
    pub seed: u64,
    /// Finest grid spacing (criteria 3 and 5).
    pub h_fine: f64,
    pub opts: SolveOptions,
    cache: Mutex<HashMap<(Problem, u64), Slot>>,
}

impl Workbench {
    pub fn new(seed: u64, h_fine: f64) -> Self {
        Workbench { seed, h_fine, opts: SolveOptions { tol: 1e-13, seed, ..Default::default() }, cache: Mutex::new(HashMap::new()) }
    }

    /// Solves `problem` at spacing `h` once; later calls share the result.
    pub fn solve(&self, problem: Problem, h: f64) -> std::result::Result<Solved, String> {
        let slot = self.cache.lock().unwrap().entry((problem, h.to_bits())).or_default().clone();
        slot.get_or_init(|| {
            let u0 = problem.field(h).map_err(|e| e.to_string())?;
            solve_dirichlet(&u0, &self.opts).map(Arc::new).map_err(|e| format!("{}: {e}", problem.name()))
        })
        .clone()
    }

    pub fn run(&self, suite: &str) -> Option<SuiteReport> {
        let t = Instant::now();
        let (checks, budget) = match suite {
            "metric" => (metric_checks(self.seed), 30.0),
            "embedding" => (embedding_checks(self.seed), 120.0),
            "enneper" => (self.enneper_checks(), 600.0),
            "monotonicity" => (self.monotonicity_checks(), 600.0),
            "variation" => (self.variation_checks(), 600.0),
            "taylor" => (taylor_checks(), 300.0),
            "reparam" => (reparam_checks(), 300.0),
            "luckhaus" => (luckhaus_checks(), 300.0),
            _ => return None,
        };
        Some(SuiteReport { suite: suite.to_string(), checks, seconds: t.elapsed().as_secs_f64(), budget })
    }

    fn enneper_checks(&self) -> Vec<Check> {
        let h = self.h_fine;
        let (u, rep) = match self.solve(Problem::Enneper, h) {
            Ok(s) => (s.0.clone(), s.1.clone()),
            Err(e) => return vec![check("solve", false, e)],
        };
        let mut out = Vec::new();
        let e = rep.energy_final;
        let dev = (e - enneper::ENERGY).abs() / enneper::ENERGY;
        out.push(check("energy", dev <= 0.02, format!("E = {e:.4}, |E/18π − 1| = {dev:.4} (≤ 0.02)")));
        match competitor_energy(u.domain(), &self.opts) {
            Ok(c) => out.push(check("competitor", c < enneper::ENERGY, format!("E = {c:.4} < 18π = {:.4}", enneper::ENERGY))),
            Err(err) => out.push(check("competitor", false, err.to_string())),
        }
        let hd = enneper::interface_hausdorff(&u);
        out.push(check(
            "interface",
            hd.is_some_and(|d| d <= 3.0 * h),
            format!("Hausdorff = {} (≤ 3h = {:.5})", hd.map_or("none".into(), |d| format!("{d:.5}")), 3.0 * h),
        ));
        match frequency_profile(&u, &[0.0, 0.0], &geometric_radii(0.2, 0.7, 12)) {
            Ok(p) => {
                let worst = p.i.iter().map(|v| v.map_or(f64::INFINITY, |v| (v - 2.0).abs() / 2.0)).fold(0.0, f64::max);
                out.push(check("frequency", worst <= 0.02, format!("max |I/2 − 1| on [0.2, 0.7] = {worst:.4} (≤ 0.02)")));
            }
            Err(err) => out.push(check("frequency", false, err.to_string())),
        }
        out
    }

    fn monotonicity_checks(&self) -> Vec<Check> {
        let problems = [Problem::Enneper, Problem::Random(1), Problem::Random(2), Problem::Random(3), Problem::Random(4)];
        let hs = [1.0 / 32.0, 1.0 / 64.0];
        let mut out = Vec::new();
        for p in problems {
            let mut drops = Vec::new();
            let mut ok = true;
            let mut detail = Vec::new();
            for h in hs {
                let res = self.solve(p, h).and_then(|s| {
                    let u = &s.0;
                    let radii = default_radii(u, &[0.0, 0.0]).map_err(|e| e.to_string())?;
                    let prof = frequency_profile(u, &[0.0, 0.0], &radii).map_err(|e| e.to_string())?;
                    Ok(check_monotone(&prof, default_monotone_tol(h)))
                });
                match res {
                    Ok(m) => {
                        ok &= m.passed;
                        drops.push(m.max_drop);
                        detail.push(format!("h={h}: {} violations, max drop {:.2e}", m.violations.len(), m.max_drop));
                    }
                    Err(e) => {
                        ok = false;
                        detail.push(e);
                    }
                }
            }
            let shrinking = drops.len() == 2 && (drops[1] <= drops[0] || drops[1] == 0.0);
            out.push(check(&p.name(), ok && shrinking, detail.join(", ")));
        }
        out
    }

    fn variation_checks(&self) -> Vec<Check> {
        let hs = [4.0 * self.h_fine, 2.0 * self.h_fine, self.h_fine];
        let phi = BumpVector { bump: Bump::new(vec![0.1, -0.05], 0.6), a: vec![0.3, -0.2, 0.5, 0.1], c: vec![0.2, -0.4] };
        let psi = Bump::new(vec![0.05, 0.1], 0.6);
        let names = ["inner", "outer", "outer-boundary", "D'", "H'"];
        let residuals = |u: &GridField| -> std::result::Result<[f64; 5], String> {
            let v = variation_residuals(u, &phi, &psi).map_err(|e| e.to_string())?;
            // Radial identities: mean absolute residual over several radii.
            let mut k = [0.0; 3];
            for r in KEY_RADII {
                let ki = key_identity_residuals(u, &[0.0, 0.0], r).map_err(|e| e.to_string())?;
                k[0] += ki.residual_outer / KEY_RADII.len() as f64;
                k[1] += ki.residual_d_prime / KEY_RADII.len() as f64;
                k[2] += ki.residual_h_prime / KEY_RADII.len() as f64;
            }
            Ok([v.inner.abs() / v.inner_scale, v.outer.abs() / v.outer_scale, k[0], k[1], k[2]])
        };
        let mut table = Vec::new();
        for h in hs {
            match self.solve(Problem::Enneper, h).and_then(|s| residuals(&s.0)) {
                Ok(r) => table.push(r),
                Err(e) => return vec![check("solve", false, e)],
            }
        }
        let mut out = Vec::new();
        let lh: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        for (j, name) in names.iter().enumerate() {
            let vals: Vec<f64> = table.iter().map(|r| r[j]).collect();
            let order = crate::graphs::fit_slope(&lh, &vals.iter().map(|v| v.ln()).collect::<Vec<_>>());
            let txt: Vec<String> = vals.iter().map(|v| format!("{v:.2e}")).collect();
            let mut c = check(name, order >= 1.0, format!("[{}] order {order:.2} (≥ 1)", txt.join(", ")));
            c.value = Some(order);
            out.push(c);
        }
        match self.solve(Problem::Linear, self.h_fine).and_then(|s| residuals(&s.0)) {
            Ok(r) => {
                let worst = r.iter().copied().fold(0.0, f64::max);
                out.push(check("linear", worst <= 1e-3, format!("max residual {worst:.2e} (≤ 1e-3)")));
            }
            Err(e) => out.push(check("linear", false, e)),
        }
        out
    }
}

/// Criterion 1: metric axioms, assignment agreement and the isometry ι.
pub fn metric_checks(seed: u64) -> Vec<Check> {
    let mut r = rng(seed);
    let (mut axioms_g, mut axioms_gs, mut iso) = (0usize, 0usize, 0f64);
    for _ in 0..10_000 {
        let q = r.gen_range(1..=4);
        let n = r.gen_range(1..=3);
        let p: Vec<SpecPoint> = (0..3).map(|_| random_specpoint(&mut r, q, n, 2.0)).collect();
        let g = |a: &SpecPoint, b: &SpecPoint| metric_g(a.base(), b.base()).unwrap();
        let gs = |a: &SpecPoint, b: &SpecPoint| metric_gs(a, b).unwrap();
        for (d, bad, same) in [
            (&g as &dyn Fn(&SpecPoint, &SpecPoint) -> f64, &mut axioms_g, p[0].base() == p[1].base()),
            (&gs as &dyn Fn(&SpecPoint, &SpecPoint) -> f64, &mut axioms_gs, p[0] == p[1]),
        ] {
            let (ab, ba, bc, ac) = (d(&p[0], &p[1]), d(&p[1], &p[0]), d(&p[1], &p[2]), d(&p[0], &p[2]));
            let ok = d(&p[0], &p[0]) == 0.0 && ab == ba && ac <= ab + bc + 1e-12 * (1.0 + ab + bc) && (same || ab > 0.0);
            *bad += usize::from(!ok);
        }
        let t = triple_distance(&iota(&p[0]), &iota(&p[1])).unwrap();
        iso = iso.max((t - gs(&p[0], &p[1])).abs());
    }
    let mut assign_bad = 0usize;
    for q in 1..=5 {
        for _ in 0..2000 {
            let n = r.gen_range(1..=3);
            let a = QPoint::from_flat(q, n, random_vec(&mut r, q * n, 1.0));
            let b = QPoint::from_flat(q, n, random_vec(&mut r, q * n, 1.0));
            let c = crate::qpoints::cost_matrix(&a, &b);
            let (_, cb) = brute_force_assignment(&c, q);
            let (_, ch) = hungarian_assignment(&c, q);
            assign_bad += usize::from(cb != ch);
        }
    }
    vec![
        check("G axioms", axioms_g == 0, format!("{axioms_g} failures in 10^4 triples")),
        check("Gs axioms", axioms_gs == 0, format!("{axioms_gs} failures in 10^4 triples")),
        check("assignment", assign_bad == 0, format!("{assign_bad} disagreements in 10^4 problems, Q ≤ 5")),
        check("isometry", iso <= 1e-12, format!("max |d(ι) − Gs| = {iso:.1e} (≤ 1e-12)")),
    ]
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Distance from `e` to the image 𝒬.
fn dist_to_image(z: &Zeta, e: &[f64]) -> f64 {
    let mut p = e.to_vec();
    z.project_nearest(&mut p);
    dist(e, &p)
}

/// Random closed-form curve t ↦ ζ(P(t)) + noise(t) in ℝ^{2N+1}, sampled at
/// `k` + 1 points of [0, 1].
fn random_curve<R: Rng>(r: &mut R, z: &Zeta, k: usize, noise: f64) -> Vec<Vec<f64>> {
    let (f1, f2) = (r.gen_range(1.0..3.0), r.gen_range(1.0..3.0));
    let (ph, amp) = (r.gen_range(0.0..2.0 * PI), r.gen_range(0.2..1.5));
    let dirs: Vec<Vec<f64>> = (0..2).map(|_| random_vec(r, z.dim(), 1.0)).collect();
    (0..=k)
        .map(|i| {
            let t = i as f64 / k as f64;
            let s = amp * (2.0 * PI * f1 * t + ph).sin();
            let c = 0.5 * (2.0 * PI * f2 * t).cos();
            let a = s.abs() / std::f64::consts::SQRT_2;
            let p = SpecPoint::new(QPoint::scalars(&[c - a, c + a]), if s >= 0.0 { 1 } else { -1 });
            let mut e = z.zeta(&p);
            let w = [(2.0 * PI * 3.0 * t).sin(), (2.0 * PI * 5.0 * t + ph).cos()];
            for (j, ej) in e.iter_mut().enumerate() {
                *ej += noise * (w[0] * dirs[0][j] + w[1] * dirs[1][j]);
            }
            e
        })
        .collect()
}

fn curve_energy(c: &[Vec<f64>], near: Option<&[bool]>, want: bool) -> f64 {
    let dt = 1.0 / (c.len() - 1) as f64;
    c.windows(2)
        .enumerate()
        .filter(|(i, _)| near.map_or(true, |nr| (nr[*i] && nr[i + 1]) == want))
        .map(|(_, w)| dist(&w[0], &w[1]).powi(2) / dt)
        .sum()
}

/// Criterion 2: embedding norms, Lip(R), retraction identity and the ϱ*_δ bounds.
pub fn embedding_checks(seed: u64) -> Vec<Check> {
    let mut r = rng(seed.wrapping_add(1));
    let mut norm_err: f64 = 0.0;
    let mut ident_bad = 0usize;
    for _ in 0..10_000 {
        let q = r.gen_range(1..=4);
        let z = Zeta::for_dims(q, 1).unwrap();
        let p = random_specpoint(&mut r, q, 1, 2.0);
        let e = z.zeta(&p);
        norm_err = norm_err.max((dist(&e, &vec![0.0; e.len()]) - p.norm()).abs());
        ident_bad += usize::from(z.varrho(&e) != e);
    }
    let mut lip: f64 = 0.0;
    for i in 0..100_000 {
        let nn = r.gen_range(1..=4);
        let x = random_vec(&mut r, 2 * nn, 1.0);
        let scale = if i % 2 == 0 { 1.0 } else { 1e-3 };
        let y: Vec<f64> = x.iter().zip(random_vec(&mut r, 2 * nn, scale)).map(|(a, b)| a + b).collect();
        let (ra, rb) = r_pair(&x[..nn], &x[nn..]);
        let (sa, sb) = r_pair(&y[..nn], &y[nn..]);
        let num = (dist(&ra, &sa).powi(2) + dist(&rb, &sb).powi(2)).sqrt();
        let den = dist(&x, &y);
        if den > 0.0 {
            lip = lip.max(num / den);
        }
    }
    let z = Zeta::for_dims(2, 1).unwrap();
    let nq = 2i32;
    let deltas = [0.2, 0.1, 0.05];
    let disp_rate = |d: f64| d.powf(8f64.powi(-nq));
    let energy_rate = |d: f64| d.powf(8f64.powi(-nq - 1));
    // Displacement on 𝒬 and energy of curves near 𝒬, per δ.
    // χ_δ saturates at 1, so the displacement bound is sampled on 𝒬 ∩ B₁.
    let pts: Vec<Vec<f64>> = (0..1000)
        .map(|_| {
            let p = random_specpoint(&mut r, 2, 1, 1.0);
            let s = p.norm().max(1.0);
            z.zeta(&SpecPoint::new(p.base().scale(1.0 / s), p.sign()))
        })
        .collect();
    let curves: Vec<Vec<Vec<f64>>> = (0..20).map(|i| random_curve(&mut r, &z, 400, if i % 2 == 0 { 1e-3 } else { 0.05 })).collect();
    let mut disp_c = Vec::new();
    let mut energy_c = Vec::new();
    let mut energy_terms = Vec::new();
    for &d in &deltas {
        let disp = pts.iter().map(|e| dist(&z.varrho_star(e, d).unwrap(), e)).fold(0.0, f64::max);
        disp_c.push(disp / disp_rate(d));
        let mut terms = Vec::new();
        for c in &curves {
            let near: Vec<bool> = c.iter().map(|e| dist_to_image(&z, e) <= d.powi(nq + 1)).collect();
            let star: Vec<Vec<f64>> = c.iter().map(|e| z.varrho_star(e, d).unwrap()).collect();
            terms.push((curve_energy(&star, None, true), curve_energy(c, Some(&near), true), curve_energy(c, Some(&near), false)));
        }
        let a = energy_rate(d);
        energy_c.push(terms.iter().map(|(e, n, f)| ((e - n) / (a * n + f)).max(0.0)).fold(0.0, f64::max));
        energy_terms.push(terms);
    }
    // Fit once at the largest δ, then check the smaller ones with that constant.
    let (cd, ce) = (disp_c[0], energy_c[0]);
    let disp_ok = disp_c.iter().all(|c| *c <= cd * (1.0 + 1e-12));
    let energy_ok = deltas.iter().zip(&energy_terms).all(|(&d, terms)| {
        terms.iter().all(|(e, n, f)| *e <= (1.0 + ce * energy_rate(d)) * n + ce * f + 1e-12 * (n + f))
    });
    vec![
        check("norm", norm_err <= 1e-12, format!("max ||ζ(P)| − |P|| = {norm_err:.1e} (≤ 1e-12)")),
        check("Lip(R)", lip <= 2f64.sqrt() + 1e-6, format!("sampled Lip = {lip:.6} over 10^5 pairs (≤ √2 + 1e-6)")),
        check("retraction identity", ident_bad == 0, format!("{ident_bad} of 10^4 points moved")),
        check(
            "displacement",
            disp_ok,
            format!("C fitted at δ=0.2: {cd:.4}; per-δ constants {}", fmt_list(&disp_c)),
        ),
        check(
            "energy",
            energy_ok,
            format!("C fitted at δ=0.2: {ce:.4}; per-δ constants {}", fmt_list(&energy_c)),
        ),
    ]
}

fn fmt_list(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", "))
}

/// Criterion 6: quartic fits of the mass, excess and sub-square remainders,
/// cubic fit of the first-variation discrepancy.
pub fn taylor_checks() -> Vec<Check> {
    let g = SheetSpec::enneper(1.0 / 6.0);
    let dom = PlanarDomain::disk(1.0);
    let eps = [0.1, 0.05, 0.025];
    let mut out = Vec::new();
    let fit_line = |name: &str, f: Result<crate::graphs::OrderFit>| match f {
        Ok(f) => check(name, f.passed, format!("slope {:.3} (≥ {})", f.slope, f.threshold)),
        Err(e) => check(name, false, e.to_string()),
    };
    out.push(fit_line("mass", taylor_mass_check(&g, &dom, &eps, DEFAULT_ORDER)));
    out.push(fit_line("excess", excess_order_fit(&g, 0.5, &eps, DEFAULT_ORDER)));
    let squares = [
        PlanarDomain::Rect { lo: [0.0, 0.0], hi: [0.5, 0.5] },
        PlanarDomain::Rect { lo: [-0.6, -0.2], hi: [-0.1, 0.3] },
        PlanarDomain::Rect { lo: [-0.3, -0.6], hi: [0.3, 0.0] },
    ];
    match mass_subdomain_check(&g, &squares, &eps, DEFAULT_ORDER) {
        Ok(l) => {
            let slopes: Vec<f64> = l.fits.iter().map(|f| f.slope).collect();
            let stable = l.c_max <= 1.25 * l.c_min;
            out.push(check(
                "sub-squares",
                l.fits.iter().all(|f| f.passed) && stable,
                format!("slopes {} (≥ 3.8), C in [{:.4}, {:.4}] (ratio ≤ 1.25)", fmt_list(&slopes), l.c_min, l.c_max),
            ));
        }
        Err(e) => out.push(check("sub-squares", false, e.to_string())),
    }
    let zeta = TestMap::new([0.1, -0.1], 0.6, vec![Polynomial::linear(&[0.5, -0.3, 0.4]).add(&Polynomial::constant(3, 1.0))]);
    match variation_order_fit(&g, &zeta, &dom, &eps, DEFAULT_ORDER) {
        Ok(v) => {
            let (lo, hi) = v.ratios.iter().fold((f64::INFINITY, 0f64), |(a, b), r| (a.min(*r), b.max(*r)));
            out.push(check(
                "first variation",
                v.fit.passed && hi <= 1.25 * lo,
                format!("slope {:.3} (≥ 2.8), C in [{lo:.2e}, {hi:.2e}]", v.fit.slope),
            ));
        }
        Err(e) => out.push(check("first variation", false, e.to_string())),
    }
    out
}

/// Criterion 7: closed-form rotation of linear maps and mass invariance.
pub fn reparam_checks() -> Vec<Check> {
    let mut worst: f64 = 0.0;
    let mut err = None;
    for (a, th) in [(0.3, 0.1), (-0.5, 0.2), (0.0, -0.3), (1.2, 0.05), (-0.8, -0.4)] {
        let spec = SheetSpec::linear(2, &[a, 0.0]).unwrap();
        match reparametrize_tilted(&spec, th, 0.5, 1.0 / 16.0) {
            Ok(r) => {
                let slope = (f64::atan(a) - th).tan();
                for (y, v) in r.nodes.iter().zip(&r.values) {
                    for atom in v.base().atoms() {
                        worst = worst.max((atom[0] - slope * y[0]).abs());
                    }
                }
            }
            Err(e) => err = Some(e.to_string()),
        }
    }
    let mut out = vec![check("linear rotation", err.is_none() && worst <= 1e-10, err.unwrap_or(format!("max error {worst:.1e} (≤ 1e-10)")))];
    match reparametrize_tilted(&SheetSpec::enneper(1.0), 0.05, 0.5, 1.0 / 32.0) {
        Ok(r) => out.push(check(
            "mass invariance",
            r.mass_rel_diff <= 1e-4,
            format!("M(G_g) = {:.10}, M(G_f) = {:.10}, rel diff {:.1e} (≤ 1e-4)", r.mass_g, r.mass_f, r.mass_rel_diff),
        )),
        Err(e) => out.push(check("mass invariance", false, e.to_string())),
    }
    out
}

fn circle(k: usize, f: impl Fn(f64) -> SpecPoint) -> Vec<SpecPoint> {
    (0..k).map(|j| f(2.0 * PI * j as f64 / k as f64)).collect()
}

fn pair_point(a: f64, b: f64, s: i8) -> SpecPoint {
    SpecPoint::new(QPoint::scalars(&[a, b]), s)
}

/// Five boundary pairs (f on ∂B₁, g on ∂B_{1−λ}) sampled at `k` angles.
pub fn luckhaus_pairs(k: usize) -> Vec<(Vec<SpecPoint>, Vec<SpecPoint>)> {
    let sgn = |v: f64| if v >= 0.0 { 1 } else { -1 };
    vec![
        (circle(k, |_| pair_point(-1.0, 1.0, 1)), circle(k, |_| pair_point(-1.0, 1.0, -1))),
        (
            circle(k, |t| enneper::value(t.cos(), t.sin(), Labeling::Quadrant)),
            circle(k, |t| enneper::value(0.7 * t.cos(), 0.7 * t.sin(), Labeling::Quadrant)),
        ),
        (circle(k, |t| pair_point(t.cos(), 2.0 * t.sin(), 1)), circle(k, |t| pair_point(0.5 * (2.0 * t).sin(), -0.5, 1))),
        (
            circle(k, |t| pair_point(t.cos() - 0.5, t.cos() + 0.5, sgn(t.sin()))),
            circle(k, |t| pair_point(0.3 * t.sin(), 0.3 * t.sin(), 1)),
        ),
        (
            circle(k, |t| pair_point(0.0, 2.0 * (2.0 * t).cos(), sgn((2.0 * t).cos()))),
            circle(k, |t| pair_point(0.0, 2.0 * (2.0 * t).sin(), sgn((2.0 * t).sin()))),
        ),
    ]
}

/// Criterion 8: exact traces and a λ-stable energy constant.
pub fn luckhaus_checks() -> Vec<Check> {
    let z = Zeta::for_dims(2, 1).unwrap();
    let pairs = luckhaus_pairs(256);
    let mut trace_bad = 0usize;
    for (f, g) in &pairs {
        match luckhaus_interpolate(&z, f, g, 0.2, 8) {
            Ok(u) => {
                let k = u.angles;
                let last = u.radii.len() - 1;
                for j in 0..k {
                    trace_bad += usize::from(u.at(last, j) != &f[j]) + usize::from(u.at(0, j) != &g[j]);
                }
            }
            Err(_) => trace_bad += 1,
        }
    }
    let lambdas = [0.1, 0.2, 0.4];
    let mut per_lambda = Vec::new();
    let mut err = None;
    for &l in &lambdas {
        let mut c: f64 = 0.0;
        for (f, g) in &pairs {
            match luckhaus_bound(&z, f, g, l) {
                Ok(b) => c = c.max(b.ratio),
                Err(e) => err = Some(e.to_string()),
            }
        }
        per_lambda.push(c);
    }
    let fitted = per_lambda.iter().sum::<f64>() / per_lambda.len() as f64;
    let stable = per_lambda.iter().all(|c| (c / fitted - 1.0).abs() <= 0.25);
    vec![
        check("traces", trace_bad == 0, format!("{trace_bad} node mismatches")),
        check(
            "energy constant",
            err.is_none() && stable,
            err.unwrap_or(format!("C = {fitted:.4}; per-λ {} within ±25%", fmt_list(&per_lambda))),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite() {
        assert!(Workbench::new(0, 0.125).run("nope").is_none());
    }

    #[test]
    fn cache_returns_same_solution() {
        let w = Workbench::new(0, 0.125);
        let a = w.solve(Problem::Linear, 0.125).unwrap();
        let b = w.solve(Problem::Linear, 0.125).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn summary_marks_failures() {
        let r = SuiteReport { suite: "x".into(), checks: vec![check("a", true, "ok".into()), check("b", false, "bad".into())], seconds: 0.0, budget: 1.0 };
        assert!(!r.passed());
        assert!(r.summary().starts_with("FAIL x") && r.summary().contains("!b: bad"));
    }
}
