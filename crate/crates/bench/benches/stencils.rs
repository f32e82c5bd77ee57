use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use wkg_core::data::{initial_state, DataProfile};
use wkg_core::energies::{energy_report, EnergyConfig};
use wkg_core::evolution::{rhs, step};
use wkg_core::nullforms::identities::{catalog, run_catalog};
use wkg_core::regions::all_region_masks;
use wkg_core::{time_deriv_closure, Axis, EvolutionConfig, Grid, GridSpec, NullFormSpec, Scheme, State};

fn spec() -> NullFormSpec {
    NullFormSpec::new([1.0, 0.5, -0.5, 0.25], [0.5, -0.25, 0.5, 1.0], Axis::X1).unwrap()
}

fn setup(n: usize) -> (Grid, State) {
    let g = Grid::new(GridSpec::new(n, 16.0, 0.4, 4).unwrap()).unwrap();
    let s = initial_state(&g, &DataProfile { amplitude: 0.05, width: 2.0, ..Default::default() }).unwrap();
    (g, s)
}

fn stencils(c: &mut Criterion) {
    let mut group = c.benchmark_group("stencils");
    for n in [128, 256, 512] {
        let (g, s) = setup(n);
        group.bench_with_input(BenchmarkId::new("d1", n), &n, |b, _| b.iter(|| g.d1(black_box(&s.u), Axis::X1)));
        group.bench_with_input(BenchmarkId::new("laplacian", n), &n, |b, _| b.iter(|| g.laplacian(black_box(&s.u))));
    }
    group.finish();
}

fn time_stepping(c: &mut Criterion) {
    let mut group = c.benchmark_group("time_stepping");
    for n in [128, 256] {
        let (g, s) = setup(n);
        group.bench_with_input(BenchmarkId::new("rhs", n), &n, |b, _| b.iter(|| rhs(&g, black_box(&s), &spec()).unwrap()));
        for scheme in [Scheme::Leapfrog, Scheme::Rk4] {
            let cfg = EvolutionConfig { spec: spec(), scheme, ..Default::default() };
            group.bench_with_input(BenchmarkId::new(format!("step_{scheme:?}"), n), &n, |b, _| {
                b.iter(|| step(&g, black_box(&s), &cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn diagnostics(c: &mut Criterion) {
    let (g, s) = setup(128);
    let mut group = c.benchmark_group("diagnostics");
    group.sample_size(20);
    group.bench_function("closure_k5", |b| b.iter(|| time_deriv_closure(&g, black_box(&s), &spec(), 5).unwrap()));
    group.bench_function("energy_report", |b| {
        b.iter(|| energy_report(&g, black_box(&s), &spec(), &EnergyConfig::default(), None).unwrap())
    });
    group.bench_function("region_masks", |b| b.iter(|| all_region_masks(&g, black_box(6.0))));
    let cat = catalog();
    group.bench_function("identity_catalog_5_trials", |b| b.iter(|| run_catalog(&cat, 5, 3, 1).unwrap()));
    group.finish();
}

criterion_group!(benches, stencils, time_stepping, diagnostics);
criterion_main!(benches);
