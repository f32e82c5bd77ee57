//! Invariants checked over random inputs.

use proptest::prelude::*;
use std::collections::BTreeSet;
use wkg_core::data::{initial_state, DataProfile};
use wkg_core::diagnostics::{bootstrap_check, decay_fit, finite_speed_check, growth_exponent, Bound, BootstrapConfig};
use wkg_core::energies::energy_e;
use wkg_core::evolution::{cutoff, cutoff_derivatives};
use wkg_core::regions::norms::YtAccumulator;
use wkg_core::regions::{classify_tr, from_hyperbolic, to_hyperbolic, Chart, HyperCoords, RegionKind};
use wkg_core::{time_deriv_closure, Axis, EvolutionConfig, Field, Grid, GridSpec, NullFormSpec, State};

fn small_grid() -> Grid {
    Grid::new(GridSpec::new(32, 8.0, 0.4, 4).unwrap()).unwrap()
}

fn spec() -> NullFormSpec {
    NullFormSpec::new([1.0, 0.5, -0.5, 0.25], [0.5, -0.25, 0.5, 1.0], Axis::X1).unwrap()
}

proptest! {
    #[test]
    fn region_tags_are_consistent(t in 0.0f64..200.0, r in 0.0f64..300.0) {
        let id = classify_tr(t, r);
        if t >= 1.0 {
            prop_assert!(id.t_scale() <= t && t < 2.0 * id.t_scale());
        } else {
            prop_assert_eq!(id.t_exp, 0);
        }
        match id.kind {
            RegionKind::Outer => prop_assert!(t <= (1.0 + r) / 4.0),
            RegionKind::Shell => prop_assert!((t - r).abs() < 1.0 && t > (1.0 + r) / 4.0),
            RegionKind::Interior | RegionKind::Exterior => {
                let gap = (t - r).abs();
                let s = id.s_scale().unwrap();
                prop_assert!(gap >= 1.0 && s <= gap && gap < 2.0 * s);
                prop_assert_eq!(id.kind == RegionKind::Interior, t > r);
            }
        }
        prop_assert_eq!(id.s_exp.is_some(), matches!(id.kind, RegionKind::Interior | RegionKind::Exterior));
    }

    #[test]
    fn decay_fit_recovers_exponents_and_absorbs_scaling(
        a in -2.0f64..0.5, b in -2.0f64..0.5, c in 0.01f64..10.0, lambda in 0.01f64..100.0,
    ) {
        let samples: Vec<(f64, f64, f64)> = [8.0f64, 16.0, 32.0]
            .iter()
            .flat_map(|&t| [1.0, 2.0, 4.0, 8.0].map(move |s: f64| (t, s, c * t.powf(a) * s.powf(b))))
            .collect();
        let f = decay_fit(&samples).unwrap();
        prop_assert!((f.a_t - a).abs() < 1e-9 && (f.a_s - b).abs() < 1e-9);
        let scaled: Vec<_> = samples.iter().map(|&(t, s, v)| (t, s, lambda * v)).collect();
        let g = decay_fit(&scaled).unwrap();
        prop_assert!((g.a_t - f.a_t).abs() < 1e-9 && (g.a_s - f.a_s).abs() < 1e-9);
    }

    #[test]
    fn growth_exponent_is_additive_under_products(
        p in -1.0f64..1.0, q in -1.0f64..1.0, wiggle in prop::collection::vec(0.5f64..2.0, 9),
    ) {
        let times: Vec<f64> = (0..9).map(|k| 2f64.powf(k as f64 * 0.5)).collect();
        let f: Vec<(f64, f64)> = times.iter().zip(&wiggle).map(|(&t, &w)| (t, w * t.powf(p))).collect();
        let g: Vec<(f64, f64)> = times.iter().map(|&t| (t, 3.0 * t.powf(q))).collect();
        let fg: Vec<(f64, f64)> = f.iter().zip(&g).map(|(a, b)| (a.0, a.1 * b.1)).collect();
        let (pf, pg, pfg) = (growth_exponent(&f).unwrap(), growth_exponent(&g).unwrap(), growth_exponent(&fg).unwrap());
        prop_assert!((pfg - pf - pg).abs() < 1e-9);
        prop_assert!((pg - q).abs() < 1e-9);
    }

    #[test]
    fn cutoff_is_a_monotone_bridge(t0 in 0.1f64..10.0, x in -1.0f64..3.0) {
        let t = t0 * (1.0 + x);
        let c = cutoff(t, t0);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert!(cutoff(t + 0.01 * t0, t0) <= c + 1e-15);
        let d = cutoff_derivatives(t, t0, 2);
        prop_assert!(d[1] <= 1e-15);
    }

    #[test]
    fn chart_round_trip(sigma in -2.0f64..3.0, phi in 0.01f64..3.0, theta in -3.1f64..3.1, interior in any::<bool>()) {
        let chart = if interior { Chart::Interior } else { Chart::Exterior };
        let hc = HyperCoords { sigma, phi, theta, chart };
        let (t, x) = from_hyperbolic(&hc);
        let back = to_hyperbolic(t, x, chart).unwrap();
        prop_assert!((back.sigma - sigma).abs() < 1e-9);
        prop_assert!((back.phi - phi).abs() < 1e-9 * (1.0 + phi));
        prop_assert!((back.theta - theta).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_is_quadratic(lambda in -3.0f64..3.0, w in 0.8f64..2.0) {
        let g = small_grid();
        let s = initial_state(&g, &DataProfile { amplitude: 1.0, width: w, components: [1.0, 0.3, -0.5, 0.7], ..Default::default() }).unwrap();
        let e = energy_e(&g, &s);
        prop_assert!((energy_e(&g, &s.scaled(lambda)) - lambda * lambda * e).abs() <= 1e-12 * e.max(1e-300) * (1.0 + lambda * lambda));
    }

    #[test]
    fn bootstrap_violations_shrink_as_constants_grow(
        eps in 0.01f64..0.5, c1 in 0.05f64..20.0, grow in 1.0f64..10.0, d1 in 0.01f64..0.2, dgrow in 0.0f64..0.25,
    ) {
        let g = small_grid();
        let s = initial_state(&g, &DataProfile { amplitude: eps, width: 1.2, ..Default::default() }).unwrap();
        let c = time_deriv_closure(&g, &s, &spec(), 4).unwrap();
        let violated = |cfg: &BootstrapConfig| -> BTreeSet<Bound> {
            bootstrap_check(&g, &c, eps, cfg, None).unwrap().into_iter().map(|v| v.bound).collect()
        };
        let base = BootstrapConfig { c: c1, delta: d1, ..Default::default() };
        let bigger_c = BootstrapConfig { c: c1 * grow, ..base.clone() };
        prop_assert!(violated(&bigger_c).is_subset(&violated(&base)));
        // δ enters with a positive sign only in the Zu and ∂u weights
        let which = vec![Bound::VectorFieldU, Bound::GradientU];
        let narrow = BootstrapConfig { which: which.clone(), ..base.clone() };
        let wider = BootstrapConfig { delta: (d1 + dgrow).min(0.49), which, ..base };
        prop_assert!(violated(&wider).is_subset(&violated(&narrow)));
    }

    #[test]
    fn yt_is_monotone_under_pointwise_enlargement(scale in 1.0f64..4.0, amp in 0.1f64..2.0) {
        let g = Grid::new(GridSpec::new(32, 16.0, 0.4, 4).unwrap()).unwrap();
        let base = |t: f64| g.field(move |a, b| amp * (-(a * a + b * b) / (t * t)).exp());
        let run = |k: f64| {
            let mut acc = YtAccumulator::new(&g, 2);
            for j in 0..=16 {
                let t = 4.0 + 0.25 * j as f64;
                let f = base(t);
                acc.push(t, &f.scale(k), &f.scale(0.5)).unwrap();
            }
            acc.finish().unwrap()
        };
        prop_assert!(run(scale) >= run(1.0));
    }
}

#[test]
fn finite_speed_check_is_symmetric() {
    let g = small_grid();
    let a = initial_state(&g, &DataProfile { amplitude: 0.1, width: 1.0, ..Default::default() }).unwrap();
    let mut b = a.clone();
    b.v = b.v.add(&g.field(|x, y| 0.05 * (-((x - 7.0).powi(2) + (y - 7.0).powi(2))).exp()));
    let cfg = EvolutionConfig { spec: spec(), horizon: 2.0, ..Default::default() };
    let ab = finite_speed_check(&g, &a, &b, [0.0, 0.0], 5.0, &cfg).unwrap();
    let ba = finite_speed_check(&g, &b, &a, [0.0, 0.0], 5.0, &cfg).unwrap();
    assert_eq!(ab.max_difference, ba.max_difference);
    assert!(ab.relative() < 1e-8, "{}", ab.relative());
}

#[test]
fn state_difference_is_antisymmetric_in_energy() {
    let g = small_grid();
    let a = initial_state(&g, &DataProfile::default()).unwrap();
    let b = State { u: Field::zeros(32), ..a.scaled(0.5) };
    assert_eq!(energy_e(&g, &a.difference(&b)), energy_e(&g, &b.difference(&a)));
}
