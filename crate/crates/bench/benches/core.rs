use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use specq_bench::specpoint_pairs;
use specq_core::enneper;
use specq_core::frequency::{frequency_profile, geometric_radii};
use specq_core::graphs::{mass_expansion, PlanarDomain, SheetSpec, DEFAULT_ORDER};
use specq_core::minimize::{solve_dirichlet, solve_two_sheet, SolveOptions};
use specq_core::{metric_gs, Zeta};

fn metric(c: &mut Criterion) {
    let mut g = c.benchmark_group("metric_gs");
    for q in [2, 4, 6] {
        let pairs = specpoint_pairs(256, q, 3);
        g.bench_with_input(BenchmarkId::from_parameter(q), &pairs, |b, pairs| {
            b.iter(|| pairs.iter().map(|(x, y)| metric_gs(x, y).unwrap()).sum::<f64>())
        });
    }
    g.finish();
}

fn retraction(c: &mut Criterion) {
    let z = Zeta::for_dims(4, 1).unwrap();
    let pts: Vec<Vec<f64>> = specpoint_pairs(256, 4, 1)
        .into_iter()
        .map(|(a, b)| z.zeta(&a).iter().zip(z.zeta(&b)).map(|(u, v)| 0.5 * (u + v)).collect())
        .collect();
    c.bench_function("varrho_q4", |b| b.iter(|| pts.iter().map(|e| z.varrho(black_box(e))[0]).sum::<f64>()));
}

fn solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("enneper_solve");
    g.sample_size(10);
    let opts = SolveOptions::default();
    for k in [16, 32] {
        let u0 = enneper::boundary_problem(1.0 / k as f64).unwrap();
        g.bench_with_input(BenchmarkId::new("embedded", k), &u0, |b, u0| b.iter(|| solve_dirichlet(u0, &opts).unwrap().1.energy_final));
        g.bench_with_input(BenchmarkId::new("two_sheet", k), &u0, |b, u0| b.iter(|| solve_two_sheet(u0, &opts).unwrap().1.energy_final));
    }
    g.finish();
}

fn frequency(c: &mut Criterion) {
    let u0 = enneper::boundary_problem(1.0 / 32.0).unwrap();
    let u = solve_dirichlet(&u0, &SolveOptions::default()).unwrap().0;
    let radii = geometric_radii(0.2, 0.7, 12);
    c.bench_function("frequency_profile_h32", |b| b.iter(|| frequency_profile(&u, &[0.0, 0.0], &radii).unwrap().i.len()));
}

fn graph_mass(c: &mut Criterion) {
    let spec = SheetSpec::enneper(1.0 / 6.0);
    let dom = PlanarDomain::disk(1.0);
    c.bench_function("graph_mass_enneper", |b| b.iter(|| mass_expansion(&spec, &dom, DEFAULT_ORDER).unwrap().mass));
}

criterion_group!(benches, metric, retraction, solvers, frequency, graph_mass);
criterion_main!(benches);
