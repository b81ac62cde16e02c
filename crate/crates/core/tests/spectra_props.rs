//! Property suites for the limiting spectral distribution: Stieltjes
//! inversion, psi and its inverse, support geometry, CDF and quantiles, and
//! the m-transforms against closed forms derived from psi.

use num_complex::Complex64;
use proptest::prelude::*;
use spikelab::fluct::{m_transforms, m_transforms_with_tol};
use spikelab::spectra::{analyze, lsd_of_sn, psi_inverse, stieltjes, stieltjes_real};
use spikelab::{AtomicMeasure, MPModel};

prop_compose! {
    /// One to four atoms in (0.2, 20), at least 0.3 apart, random weights.
    fn atomic_model()(
        y in 0.05f64..2.5,
        raw in prop::collection::vec((0.2f64..20.0, 0.1f64..1.0), 1..=4),
    ) -> MPModel {
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for (t, w) in raw {
            if atoms.iter().all(|a| (a.0 - t).abs() >= 0.3) {
                atoms.push((t, w));
            }
        }
        MPModel::new(y, AtomicMeasure::from_weights(atoms).unwrap()).unwrap()
    }
}

fn top(m: &MPModel) -> f64 {
    m.base().max_location()
}

/// A positive alpha with psi' > 0, placed at relative position `s` inside a
/// random increasing stretch (clipped to finite, positive ranges).
fn increasing_alpha(m: &MPModel, pick: usize, s: f64) -> Option<f64> {
    let stretches: Vec<(f64, f64)> = analyze(m)
        .increasing_intervals()
        .into_iter()
        .filter(|&(_, hi)| hi > 0.0)
        .map(|(lo, hi)| (lo.max(0.0), hi.min(3.0 * top(m) + 10.0)))
        .filter(|&(lo, hi)| hi - lo > 1e-3)
        .collect();
    if stretches.is_empty() {
        return None;
    }
    let (lo, hi) = stretches[pick % stretches.len()];
    let a = lo + (hi - lo) * (0.02 + 0.96 * s);
    (a > 0.0).then_some(a)
}

fn min_atom_distance(m: &MPModel, a: f64) -> f64 {
    m.base()
        .locations()
        .map(|t| (t - a).abs())
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stieltjes_inverts_the_g_map(m in atomic_model()) {
        let scale = top(&m) * (1.0 + m.y().sqrt()).powi(2);
        let mut worst: f64 = 0.0;
        for i in 0..10 {
            for j in 0..10 {
                let re = -0.5 * scale + 2.0 * scale * i as f64 / 9.0;
                let im = 1e-3 * 10f64.powf(j as f64 * 3.5 / 9.0);
                let z = Complex64::new(re, im);
                let v = stieltjes(&m, z).unwrap();
                prop_assert!(v.m.im > 0.0, "Im m must be positive at {z}");
                worst = worst.max((m.g_map(v.m).unwrap() - z).norm());
            }
        }
        prop_assert!(worst <= 1e-10, "residual {worst:e}");
    }

    #[test]
    fn psi_inverse_undoes_psi(m in atomic_model(), pick in 0usize..8, s in 0.0f64..1.0) {
        let Some(a) = increasing_alpha(&m, pick, s) else { return Ok(()) };
        let back = psi_inverse(&m, m.psi(a).unwrap()).unwrap();
        prop_assert!((back - a).abs() <= 1e-8 * a.max(1.0), "{a} -> {back}");
    }

    #[test]
    fn derivatives_match_finite_differences(m in atomic_model(), a in 0.05f64..40.0) {
        prop_assume!(min_atom_distance(&m, a) >= 0.5);
        let h = 1e-5;
        let fd1 = (m.psi(a + h).unwrap() - m.psi(a - h).unwrap()) / (2.0 * h);
        let d1 = m.psi_derivative(a, 1).unwrap();
        prop_assert!((fd1 - d1).abs() <= 1e-6 * d1.abs().max(1.0), "{d1} vs {fd1}");

        // Second difference of psi' with one Richardson step.
        let p1 = |x: f64| m.psi_derivative(x, 1).unwrap();
        let second = |h: f64| (p1(a + h) - 2.0 * p1(a) + p1(a - h)) / (h * h);
        let h = 5e-3;
        let fd3 = (4.0 * second(h / 2.0) - second(h)) / 3.0;
        let d3 = m.psi_derivative(a, 3).unwrap();
        prop_assert!((fd3 - d3).abs() <= 1e-6 * d3.abs().max(1.0), "{d3} vs {fd3}");
    }

    #[test]
    fn psi_prime_is_concave_between_atoms(m in atomic_model(), a in 0.05f64..40.0, b in 0.05f64..40.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        // Same component: no atom in [lo, hi].
        prop_assume!(m.base().mass_open(lo, hi) == 0.0 && !m.base().is_atom(lo) && !m.base().is_atom(hi));
        let d = |x: f64| m.psi_derivative(x, 1).unwrap();
        let mid = d(0.5 * (lo + hi));
        let avg = 0.5 * (d(lo) + d(hi));
        prop_assert!(mid >= avg - 1e-9 * avg.abs().max(1.0));
    }

    #[test]
    fn outside_support_maps_to_increasing_psi(m in atomic_model(), x in 0.01f64..1.5) {
        // Off the support, alpha = -1/m(lambda) lands where psi is increasing.
        let analysis = analyze(&m);
        let lambda = x * 1.5 * analysis.support.upper_edge().unwrap();
        prop_assume!(analysis.support.distance(lambda) > 1e-4);
        let mf = stieltjes_real(&m, lambda).unwrap();
        let alpha = -1.0 / mf;
        prop_assert!(!m.base().is_atom(alpha));
        prop_assert!(m.psi_derivative(alpha, 1).unwrap() > 0.0);
        prop_assert!((m.psi(alpha).unwrap() - lambda).abs() <= 1e-7 * lambda.max(1.0));
    }

    #[test]
    fn increasing_psi_lands_outside_support(m in atomic_model(), pick in 0usize..8, s in 0.0f64..1.0) {
        let Some(a) = increasing_alpha(&m, pick, s) else { return Ok(()) };
        let supp = analyze(&m).support;
        prop_assert!(supp.distance(m.psi(a).unwrap()) > 0.0);
    }

    #[test]
    fn support_endpoints_are_critical_values(m in atomic_model()) {
        let analysis = analyze(&m);
        let values: Vec<f64> = analysis
            .critical_points
            .iter()
            .map(|&c| m.psi(c).unwrap())
            .collect();
        for &(lo, hi) in &analysis.support.intervals {
            for e in [lo, hi] {
                if e > 0.0 {
                    prop_assert!(
                        values.iter().any(|v| (v - e).abs() <= 1e-9 * e.max(1.0)),
                        "endpoint {e} not in {values:?}"
                    );
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quantile_inverts_cdf(m in atomic_model(), u in 0.0f64..1.0) {
        let g = lsd_of_sn(&m).unwrap();
        prop_assert!((g.total_mass() - 1.0).abs() < 1e-6);
        let gamma = g.zero_mass() + (1.0 - g.zero_mass()) * (0.01 + 0.98 * u);
        let x = g.quantile(gamma).unwrap();
        prop_assert!((g.cdf(x).unwrap() - gamma).abs() <= 1e-6, "gamma {gamma}, x {x}");
    }

    #[test]
    fn m_transforms_match_closed_forms(m in atomic_model(), pick in 0usize..8, s in 0.0f64..1.0) {
        // With alpha = psi^-1(lambda): m_F = -1/alpha, m_F' = 1/(alpha^2 psi'),
        // and G = (F - (1-y) delta_0)/y gives m_G and m_G'.
        let Some(alpha) = increasing_alpha(&m, pick, s) else { return Ok(()) };
        let lambda = m.psi(alpha).unwrap();
        prop_assume!(lambda > 1e-3 && analyze(&m).support.distance(lambda) > 1e-3);
        let y = m.y();
        let mf = -1.0 / alpha;
        let dmf = 1.0 / (alpha * alpha * m.psi_derivative(alpha, 1).unwrap());
        let mg = (mf + (1.0 - y) / lambda) / y;
        let dmg = (dmf - (1.0 - y) / (lambda * lambda)) / y;
        let t = m_transforms(&m, lambda).unwrap();
        let m1 = -1.0 - lambda * mg;
        let m2 = 1.0 + 2.0 * lambda * mg + lambda * lambda * dmg;
        let m3 = mg + lambda * dmg;
        for (got, want, name) in [(t.m1, m1, "m1"), (t.m2, m2, "m2"), (t.m3, m3, "m3")] {
            prop_assert!(
                (got - want).abs() <= 1e-5 * want.abs().max(1.0),
                "{name} at {lambda}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn m3_is_minus_the_derivative_of_m1(m in atomic_model(), x in 1.05f64..3.0) {
        let lambda = x * analyze(&m).support.upper_edge().unwrap();
        let h = 1e-4 * lambda;
        let m1 = |l: f64| m_transforms(&m, l).unwrap().m1;
        let fd = -(m1(lambda + h) - m1(lambda - h)) / (2.0 * h);
        let m3 = m_transforms(&m, lambda).unwrap().m3;
        prop_assert!((fd - m3).abs() <= 1e-3 * m3.abs(), "{fd} vs {m3}");
    }

    #[test]
    fn m1_matches_the_real_axis_transform(m in atomic_model(), x in 1.05f64..3.0) {
        let lambda = x * analyze(&m).support.upper_edge().unwrap();
        let y = m.y();
        let mg = (stieltjes_real(&m, lambda).unwrap() + (1.0 - y) / lambda) / y;
        let m1 = m_transforms(&m, lambda).unwrap().m1;
        prop_assert!((m1 - (-1.0 - lambda * mg)).abs() <= 1e-4);
    }
}

#[test]
fn m_transforms_above_the_bulk_are_positive() {
    let m = MPModel::new(0.3, AtomicMeasure::uniform(&[1.0, 4.0, 10.0]).unwrap()).unwrap();
    let t = m_transforms(&m, 18.65).unwrap();
    assert!(t.m2 > 0.0 && t.m3 > 0.0);
    // Mean-value bounds with the support [0.32, 18.0].
    assert!(t.m2 >= t.m3 * 0.3177 && t.m2 <= t.m3 * 18.01);
}

#[test]
fn m_transforms_agree_across_tolerances() {
    let m = MPModel::new(0.3, AtomicMeasure::uniform(&[1.0, 4.0, 10.0]).unwrap()).unwrap();
    let a = m_transforms_with_tol(&m, 18.65, 1e-8).unwrap();
    let b = m_transforms_with_tol(&m, 18.65, 1e-11).unwrap();
    for (x, z) in [(a.m1, b.m1), (a.m2, b.m2), (a.m3, b.m3)] {
        assert!((x - z).abs() <= 1e-6, "{x} vs {z}");
    }
}

#[test]
fn m_transforms_reject_points_in_the_support() {
    let m = MPModel::new(0.3, AtomicMeasure::uniform(&[1.0, 4.0, 10.0]).unwrap()).unwrap();
    assert!(m_transforms(&m, 5.0).is_err());
    assert!(m_transforms(&m, -1.0).is_err());
}

#[test]
fn psi_prime_diverges_at_atoms() {
    let m = MPModel::new(0.3, AtomicMeasure::uniform(&[1.0, 4.0, 10.0]).unwrap()).unwrap();
    for t in [1.0, 4.0, 10.0] {
        let mut prev = f64::INFINITY;
        for k in 1..8 {
            let d = m.psi_derivative(t + 10f64.powi(-k), 1).unwrap();
            assert!(d < prev, "psi' must keep falling near {t}");
            prev = d;
        }
        assert!(prev < -1e6);
    }
}

#[test]
fn grid_scan_finds_the_same_critical_points() {
    let m = MPModel::new(0.3, AtomicMeasure::uniform(&[1.0, 4.0, 10.0]).unwrap()).unwrap();
    let mut scanned = Vec::new();
    let d = |x: f64| m.psi_derivative(x, 1).unwrap();
    let pieces = [(1e-6, 1.0), (1.0, 4.0), (4.0, 10.0), (10.0, 200.0)];
    for (lo, hi) in pieces {
        let grid: Vec<f64> = (1..100_000).map(|i| lo + (hi - lo) * i as f64 / 100_000.0).collect();
        for w in grid.windows(2) {
            if d(w[0]).signum() != d(w[1]).signum() {
                scanned.push(0.5 * (w[0] + w[1]));
            }
        }
    }
    let found = analyze(&m).critical_points;
    assert_eq!(found.len(), scanned.len(), "{found:?} vs {scanned:?}");
    for (a, b) in found.iter().zip(&scanned) {
        assert!((a - b).abs() < 2e-3, "{a} vs {b}");
    }
}
