//! Known-answer checks across modules.

use wkg_core::data::{initial_state, DataProfile};
use wkg_core::diagnostics::lifespan_sweep;
use wkg_core::energies::{energy_e, energy_en, energy_evf, Normalization};
use wkg_core::evolution::{evolve_all_steps, picard_solve};
use wkg_core::nullforms::identities::{catalog, catalog_with_mutation, run_catalog};
use wkg_core::regions::norms::{hyperboloid_integral, XtAccumulator};
use wkg_core::{evolve, time_deriv_closure, Axis, EvolutionConfig, ExitReason, Grid, GridSpec, NullFormSpec, Scheme, State};

fn grid(n: usize, l: f64) -> Grid {
    Grid::new(GridSpec::new(n, l, 0.4, 4).unwrap()).unwrap()
}

fn spec() -> NullFormSpec {
    NullFormSpec::new([1.0, 0.5, -0.5, 0.25], [0.5, -0.25, 0.5, 1.0], Axis::X2).unwrap()
}

#[test]
fn zero_spec_picard_is_exact_after_one_iterate() {
    let g = grid(32, 8.0);
    let data = initial_state(&g, &DataProfile::default()).unwrap();
    let res = picard_solve(&g, &data, 1.0, &NullFormSpec::zero(), 1e-12, 5, Scheme::Leapfrog).unwrap();
    assert_eq!(res.diff_norms.len(), 1);
    let direct = evolve_all_steps(&g, &data, &EvolutionConfig { horizon: 1.0, ..Default::default() }).unwrap();
    assert_eq!(direct.len(), res.solution.len());
    let last = (direct.last().unwrap(), res.solution.last().unwrap());
    assert!(energy_e(&g, &last.0.difference(last.1)) < 1e-24);
}

#[test]
fn zero_amplitude_lifespan_reaches_horizon() {
    let g = grid(32, 8.0);
    let cfg = EvolutionConfig { spec: spec(), horizon: 2.0, ..Default::default() };
    let rows = lifespan_sweep(&g, &[0.0, 0.01], &DataProfile::default(), &cfg).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r.reason, ExitReason::Horizon);
        assert!((r.t_star - 2.0).abs() < 1e-12);
    }
    assert_eq!(rows[0].eps, 0.0);
    assert!(rows[0].energy.iter().all(|&(_, e)| e == 0.0));
}

#[test]
fn leapfrog_converges_to_rk4_at_second_order() {
    let data_on = |g: &Grid| initial_state(g, &DataProfile { amplitude: 0.1, ..Default::default() }).unwrap();
    let gap = |cfl: f64| {
        let g = Grid::new(GridSpec::new(64, 8.0, cfl, 4).unwrap()).unwrap();
        let data = data_on(&g);
        let run = |scheme| {
            let cfg = EvolutionConfig { spec: spec(), scheme, horizon: 1.0, ..Default::default() };
            evolve(&g, &data, &cfg, &mut []).unwrap().last
        };
        let (a, b) = (run(Scheme::Leapfrog), run(Scheme::Rk4));
        energy_e(&g, &a.difference(&b)).sqrt() / energy_e(&g, &a).sqrt()
    };
    let (coarse, fine) = (gap(0.4), gap(0.2));
    assert!(coarse < 1e-2, "{coarse}");
    let order = (coarse / fine).log2();
    assert!((order - 2.0).abs() < 0.3, "observed order {order}");
}

#[test]
fn each_mutation_is_caught_alone() {
    let cat = catalog();
    for ident in cat.iter().step_by(5) {
        let mutated = catalog_with_mutation(&ident.name).unwrap();
        let reports = run_catalog(&mutated, 3, 2, 9).unwrap();
        let failed: Vec<_> = reports.iter().filter(|r| !r.passed()).map(|r| r.name.clone()).collect();
        assert_eq!(failed, vec![ident.name.clone()]);
    }
    assert!(catalog_with_mutation("no such identity").is_err());
}

#[test]
fn capped_vector_field_energy_below_weight_is_plain_energy() {
    // |γ| = |α| + h|β| ≤ cap < h admits no vector field at all
    let g = grid(32, 8.0);
    let data = initial_state(&g, &DataProfile { amplitude: 0.2, ..Default::default() }).unwrap();
    let c = time_deriv_closure(&g, &data, &spec(), 4).unwrap();
    for cap in 0..3 {
        let evf = energy_evf(&g, &c, cap, 3, Normalization::Plain).unwrap();
        let en = energy_en(&g, &c, cap, Normalization::Plain).unwrap();
        assert!((evf - en).abs() <= 1e-12 * en, "cap {cap}: {evf} vs {en}");
    }
}

#[test]
fn hyperboloid_integral_of_constant_is_area() {
    // ρ² = T, T = 4: {t = √(ρ² + r²), t ∈ [4, 8]} projects to the annulus 12 ≤ r² ≤ 60
    let g = grid(256, 9.0);
    let samples: Vec<(f64, _)> = (0..=100).map(|k| (3.9 + 0.045 * k as f64, g.field(|_, _| 1.0))).collect();
    let v = hyperboloid_integral(&g, 2, 4.0, &samples).unwrap();
    let exact = std::f64::consts::PI * (60.0 - 12.0);
    assert!((v - exact).abs() / exact < 0.02, "{v} vs {exact}");
}

#[test]
fn xt_of_zero_perturbation_vanishes_and_needs_coverage() {
    let g = grid(64, 16.0);
    let mut acc = XtAccumulator::new(&g, 1, None).unwrap();
    for k in 0..=10 {
        acc.push(&State::zeros(64, 2.0 + 0.2 * k as f64)).unwrap();
    }
    assert_eq!(acc.finish().unwrap().total(), 0.0);
    let mut partial = XtAccumulator::new(&g, 1, None).unwrap();
    partial.push(&State::zeros(64, 2.5)).unwrap();
    assert!(partial.finish().is_err());
}
