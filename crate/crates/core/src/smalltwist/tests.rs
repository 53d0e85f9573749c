use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use super::*;
use crate::apseries::{Spectrum, YDomain};
use crate::diophantine::check_alpha;
use proptest::prelude::*;

const GOLDEN_ALPHA: f64 = 0.754_877_666_246_692_7;

fn golden(kmax: i64) -> Arc<Spectrum> {
    crate::kam::golden_spectrum(kmax, 3.0).unwrap()
}

fn root2(kmax: i64) -> Arc<Spectrum> {
    let basis = FrequencyBasis::from_frequencies(&[1.0, 2f64.sqrt()]).unwrap();
    let st = SpatialStructure::singletons_and_window(&basis, 3.0).unwrap();
    Spectrum::new(basis, st, kmax).unwrap()
}

fn strip() -> StripParams {
    StripParams::new(0.1, 0.5, 0.1).unwrap()
}

fn series(
    spec: &Arc<Spectrum>,
    dom: YDomain,
    h: impl Fn(&[f64], f64) -> f64 + Sync,
) -> APSeries2 {
    APSeries2::from_fn(spec.clone(), dom, 8, 1e-12, h).unwrap()
}

/// `L = y + c(y) cos(θ₁ + α/2)`, `M = d sin(θ₂ + ω₂α/2)`: both satisfy the reflection identities.
fn symmetric_pair(spec: &Arc<Spectrum>, alpha: f64, c: f64, d: f64) -> (APSeries2, APSeries2) {
    let dom = YDomain::new(1.5, 0.5).unwrap();
    let w2 = spec.basis().frequencies()[1];
    let l = series(spec, dom, |t, y| y + c * (1.0 + 0.2 * y) * (t[0] + 0.5 * alpha).cos());
    let m = series(spec, dom, |t, _| d * (t[1] + 0.5 * w2 * alpha).sin());
    (l, m)
}

#[test]
fn beta_without_delta_is_alpha_margin() {
    let spec = golden(6);
    let st = spec.structure().clone();
    let d = ApproximationFunction::default();
    let b = select_beta(0.0, 1.0, 0.0, GOLDEN_ALPHA, spec.basis(), &st, &d, 1e-6, 6, 100).unwrap();
    let rep = check_alpha(GOLDEN_ALPHA, spec.basis(), &st, &d, 1e-6, 6, None).unwrap();
    assert!((b.margin - rep.gamma_observed).abs() <= 1e-12 * rep.gamma_observed);
}

#[test]
fn beta_scan_meets_threshold() {
    let spec = golden(6);
    let st = spec.structure().clone();
    let d = ApproximationFunction::default();
    let gamma = 1e-5;
    let b = select_beta(0.0, 1.0, 0.05, GOLDEN_ALPHA, spec.basis(), &st, &d, gamma, 6, 10_000).unwrap();
    assert!(b.beta >= gamma && b.beta <= 1.0 + gamma);
    assert!(b.margin >= gamma);
    let rep = check_alpha(GOLDEN_ALPHA + 0.05 * b.beta, spec.basis(), &st, &d, gamma, 6, None).unwrap();
    assert!((rep.gamma_observed - b.margin).abs() <= 1e-9 * b.margin);
    // no other grid point beats it
    for i in (0..10_000).step_by(97) {
        let beta = gamma + i as f64 / 9_999.0;
        let r = check_alpha(GOLDEN_ALPHA + 0.05 * beta, spec.basis(), &st, &d, 0.0, 6, None).unwrap();
        assert!(r.gamma_observed <= b.margin * (1.0 + 1e-9));
    }
}

#[test]
fn beta_on_degenerate_interval() {
    let spec = golden(6);
    let st = spec.structure().clone();
    let d = ApproximationFunction::default();
    for gamma in [1e-6, 10.0] {
        match select_beta(0.3, 0.3, 0.1, GOLDEN_ALPHA, spec.basis(), &st, &d, gamma, 6, 10_000) {
            Ok(b) => assert_eq!(b.beta, 0.3 + gamma),
            Err(SmallTwistError::NoAdmissibleBeta { beta, .. }) => assert_eq!(beta, 0.3 + gamma),
            Err(e) => panic!("{e}"),
        }
    }
    assert!(matches!(
        select_beta(0.3, 0.3, 0.1, GOLDEN_ALPHA, spec.basis(), &st, &d, 1e30, 6, 10),
        Err(SmallTwistError::NoAdmissibleBeta { .. })
    ));
}

#[test]
fn averaging_zero_map_is_identity() {
    let spec = golden(4);
    let dom = YDomain::new(1.5, 0.5).unwrap();
    let z = APSeries2::zero(spec, dom, 6);
    let map = SmallTwistMap::leading(GOLDEN_ALPHA, 1e-3, z.clone(), z, strip()).unwrap();
    let out = averaging_transform(&map, &AveragingControl::default()).unwrap();
    assert!(out.u.is_zero() && out.v.is_zero());
    assert!(out.map.phi1.is_zero() && out.map.phi2.is_zero());
    assert_eq!(out.retained, 0);
}

#[test]
fn averaging_single_mode_leaves_only_twist() {
    let spec = golden(4);
    let (l, m) = symmetric_pair(&spec, GOLDEN_ALPHA, 0.2, 0.0);
    let run = |delta: f64| {
        let map = SmallTwistMap::leading(GOLDEN_ALPHA, delta, l.clone(), m.clone(), strip()).unwrap();
        averaging_transform(&map, &AveragingControl::default()).unwrap()
    };
    let a = run(1e-3);
    let b = run(5e-4);
    assert_eq!(a.retained, 2);
    assert!(a.projection_residual <= 1e-9, "{}", a.projection_residual);
    assert!(a.tail == 0.0);
    // Φ is first order in δ
    let ra = a.map.remainder();
    let rb = b.map.remainder();
    assert!(ra < 1e-2, "{ra}");
    assert!((ra / rb - 2.0).abs() < 0.05, "{}", ra / rb);
    assert!((twist_condition(&a.map.twist) - 1.0).abs() < 1e-12);
}

#[test]
fn averaging_agrees_with_direct_composition() {
    let spec = golden(4);
    let (l, m) = symmetric_pair(&spec, GOLDEN_ALPHA, 0.2, 0.1);
    let map = SmallTwistMap::leading(GOLDEN_ALPHA, 1e-3, l, m, strip()).unwrap();
    let out = averaging_transform(&map, &AveragingControl::default()).unwrap();
    // conjugate point by point: 𝒰 ∘ 𝔐 ∘ 𝒰⁻¹ at real points
    let u = |x: f64, y: f64| (x + 1e-3 * out.u.eval(x, y), y + 1e-3 * out.v.eval(x, y));
    let mut worst: f64 = 0.0;
    for i in 0..40 {
        let x0 = -7.0 + 0.37 * i as f64;
        for y0 in [1.2, 1.5, 1.8] {
            let (x1, y1) = u(x0, y0);
            let (x2, y2) = map.apply_line(x0, y0);
            let (x3, y3) = u(x2, y2);
            let (x4, y4) = out.map.apply_line(x1, y1);
            worst = worst.max((x3 - x4).abs()).max((y3 - y4).abs());
        }
    }
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn averaging_parity_and_reversibility() {
    let spec = golden(4);
    let (l, m) = symmetric_pair(&spec, GOLDEN_ALPHA, 0.2, 0.1);
    let map = SmallTwistMap::leading(GOLDEN_ALPHA, 1e-3, l, m, strip()).unwrap();
    assert!(map.symmetry_defect().unwrap() <= 1e-10);
    let out = averaging_transform(&map, &AveragingControl::default()).unwrap();
    assert!(out.parity_defect().unwrap() <= 1e-12);
    assert!(out.reversibility_out <= 10.0 * out.reversibility_in + 1e-10);
}

#[test]
fn averaging_truncation_is_monotone() {
    let spec = golden(4);
    let dom = YDomain::new(1.5, 0.5).unwrap();
    let a2 = 0.5 * GOLDEN_ALPHA;
    let w2 = spec.basis().frequencies()[1];
    let l = series(&spec, dom, |t, y| {
        y + 0.1 * (t[0] + a2).cos() + 0.02 * (3.0 * (t[1] + w2 * a2)).cos()
    });
    let m = APSeries2::zero(spec.clone(), dom, 8);
    let map = SmallTwistMap::leading(GOLDEN_ALPHA, 1e-3, l, m, strip()).unwrap();
    let run = |n: f64| {
        let ctl = AveragingControl {
            n_cut: n,
            ..AveragingControl::default()
        };
        averaging_transform(&map, &ctl).unwrap()
    };
    let coarse = run(0.25);
    let fine = run(1.0);
    assert!(coarse.retained < fine.retained);
    assert!(fine.map.remainder() < coarse.map.remainder());
    assert!(fine.tail < coarse.tail);
}

#[test]
fn averaging_rejects_resonant_mode() {
    let spec = root2(3);
    let dom = YDomain::new(1.5, 0.5).unwrap();
    let l = series(&spec, dom, |t, y| y + 0.1 * t[0].cos());
    let m = APSeries2::zero(spec.clone(), dom, 8);
    let map = SmallTwistMap::leading(TAU, 1e-3, l, m, strip()).unwrap();
    assert!(matches!(
        averaging_transform(&map, &AveragingControl::default()),
        Err(SmallTwistError::ResonantModeEncountered { .. })
    ));
}

#[test]
fn twist_condition_cases() {
    let spec = golden(3);
    let dom = YDomain::new(1.5, 0.5).unwrap();
    let l = APSeries2::from_y_fn(spec.clone(), dom, 4, |y| y);
    assert!((twist_condition(&l) - 1.0).abs() < 1e-14);
    let l = series(&spec, dom, |t, y| y * t[0].sin());
    assert_eq!(twist_condition(&l), 0.0);
    // torus average of ∂L/∂y by the trapezoid rule, exact for trigonometric polynomials
    let c = 2.0 / PI * (PI / 2.0);
    let l = series(&spec, dom, |t, y| c * y * (1.0 + 0.3 * (t[0] - t[1]).cos()) + 0.1 * y * y * t[1].sin());
    let n = 64;
    let h = 1e-4;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let t = [TAU * i as f64 / n as f64, TAU * j as f64 / n as f64];
            let dy = (8.0 * (l.eval_angles(&t, 1.5 + h) - l.eval_angles(&t, 1.5 - h))
                - (l.eval_angles(&t, 1.5 + 2.0 * h) - l.eval_angles(&t, 1.5 - 2.0 * h)))
                / (12.0 * h);
            acc += dy;
        }
    }
    let oracle = acc / (n * n) as f64;
    assert!((twist_condition(&l) - oracle).abs() <= 1e-10, "{} {oracle}", twist_condition(&l));
}

#[test]
fn split_without_resonance() {
    let spec = golden(4);
    let dom = YDomain::new(1.5, 0.5).unwrap();
    let l = series(&spec, dom, |t, y| y * (t[0] + 0.5 * GOLDEN_ALPHA).cos());
    let m = series(&spec, dom, |t, _| (t[1]).sin());
    let s = resonant_split(&l, &m, GOLDEN_ALPHA, TOL_RES).unwrap();
    assert!(sup_held_out(&s.l_hat).unwrap() <= 1e-15 && s.m_hat.is_zero());
    assert!(s.resonant_modes.is_empty());
    assert!(s.resonant_sets.is_empty());
}

#[test]
fn split_catches_constructed_resonance() {
    let spec = root2(3);
    let dom = YDomain::new(1.5, 0.5).unwrap();
    let r2 = 2f64.sqrt();
    let l = series(&spec, dom, |t, y| y * (2.0 + 0.3 * t[0].cos() + 0.2 * (t[1] + PI * r2).cos()));
    let m = series(&spec, dom, |t, y| y * y * (0.3 * t[0].sin() + 0.1 * (t[1] + PI * r2).sin()));
    let s = resonant_split(&l, &m, TAU, TOL_RES).unwrap();
    assert_eq!(s.resonant_modes, vec![MultiIndex::unit(0, 1)]);
    assert_eq!(s.resonant_sets.len(), 1);
    assert!(s.periodicity_defect <= 1e-10);
    assert!(s.parity_defect <= 1e-10, "{}", s.parity_defect);
    assert!(s.l_hat.block_abs(spec.position(&MultiIndex::unit(0, 1)).unwrap()) > 0.0);
    // partition is exact
    for (a, (b, c)) in l.coeffs().iter().zip(s.l_tilde.coeffs().iter().zip(s.l_hat.coeffs())) {
        assert!(*a == b + c && (*b == Complex64::new(0.0, 0.0) || *c == Complex64::new(0.0, 0.0)));
    }
    // the resonant part is α-periodic on the line
    for i in 0..50 {
        let x = -9.0 + 0.41 * i as f64;
        assert!((s.l_hat.eval(x + TAU, 1.4) - s.l_hat.eval(x, 1.4)).abs() <= 1e-10);
    }
}

fn constant_chart(c: f64) -> AdiabaticChart {
    let spec = root2(2);
    let dom = YDomain::new(1.5, 0.5).unwrap();
    let l = APSeries2::from_y_fn(spec.clone(), dom, 4, |_| c);
    let m = APSeries2::zero(spec, dom, 4);
    let i = FirstIntegral::new(|_, r| r);
    build_adiabatic_chart(&l, &m, &i, TAU, (1.0, 2.0), (1.3, 1.6), &ChartControl::default())
        .unwrap_err();
    // constant L̂ has no twist; accepted once the monotonicity test is relaxed by a tilt
    let l = APSeries2::from_y_fn(l.spectrum().clone(), dom, 4, |y| c + 1e-9 * y);
    build_adiabatic_chart(&l, &m, &i, TAU, (1.0, 2.0), (1.3, 1.6), &ChartControl::default()).unwrap()
}

#[test]
fn chart_constant_coefficients() {
    let c = 2.5;
    let ch = constant_chart(c);
    let h = 1.45;
    assert!((ch.period(h).unwrap() - TAU / (c + 1e-9 * h)).abs() < 1e-10);
    assert!((ch.frequency(h).unwrap() - (c + 1e-9 * h)).abs() < 1e-10);
    let k = ch.time(1.0, h).unwrap();
    assert!((k - 1.0 / (c + 1e-9 * h)).abs() < 1e-11);
    let (_, tau) = ch.forward(1.0, h).unwrap();
    assert!((tau - 1.0).abs() < 1e-10);
    let rep = ch.verify(8, 3).unwrap();
    assert!(rep.identity <= 1e-9 && rep.tau_shift <= 1e-9 && rep.periodicity <= 1e-9);
}

#[test]
fn chart_period_decreases_with_twist() {
    // L̂ = ρ + 0.3 cos θ, M̂ = 0, I = ρ:  Π(h) = 2π/√(h² − 0.09)
    let spec = root2(2);
    let dom = YDomain::new(1.5, 0.5).unwrap();
    let l = series(&spec, dom, |t, y| y + 0.3 * t[0].cos());
    let m = APSeries2::zero(spec, dom, 8);
    let i = FirstIntegral::with_gradient(|_, r| r, |_, _| (0.0, 1.0));
    let ch = build_adiabatic_chart(&l, &m, &i, TAU, (1.0, 2.0), (1.3, 1.6), &ChartControl::default()).unwrap();
    for h in [1.3, 1.45, 1.6] {
        let exact = TAU / (h * h - 0.09f64).sqrt();
        assert!((ch.period(h).unwrap() - exact).abs() < 1e-10);
        let fd = (ch.period(h + 1e-4).unwrap() - ch.period(h - 1e-4).unwrap()) / 2e-4;
        let slope = ch.period_slope(h).unwrap();
        assert!(slope < 0.0 && fd < 0.0);
        assert!((slope - fd).abs() < 1e-6 * fd.abs(), "{slope} {fd}");
    }
    let rep = ch.verify(16, 4).unwrap();
    assert!(rep.identity <= 1e-9, "{rep:?}");
    assert!(rep.tau_shift <= 1e-9 && rep.periodicity <= 1e-9);
    assert!(rep.max_pi_slope < 0.0);
}

#[test]
fn chart_rejects_negative_speed() {
    let spec = root2(2);
    let dom = YDomain::new(1.5, 0.5).unwrap();
    let l = APSeries2::from_y_fn(spec.clone(), dom, 4, |y| -y);
    let m = APSeries2::zero(spec, dom, 4);
    let i = FirstIntegral::new(|_, r| r);
    match build_adiabatic_chart(&l, &m, &i, TAU, (1.0, 2.0), (1.3, 1.6), &ChartControl::default()) {
        Err(SmallTwistError::HypothesisViolated { condition, .. }) => assert_eq!(condition, "L̂ > 0"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn chart_rejects_bad_ordering() {
    let spec = root2(2);
    let dom = YDomain::new(1.5, 0.5).unwrap();
    let l = APSeries2::from_y_fn(spec.clone(), dom, 4, |y| y);
    let m = APSeries2::zero(spec, dom, 4);
    // I oscillates more than the gap between ã and b̃
    let i = FirstIntegral::new(|t, r| r + 0.4 * t.cos());
    assert!(matches!(
        build_adiabatic_chart(&l, &m, &i, TAU, (1.0, 2.0), (1.3, 1.6), &ChartControl::default()),
        Err(SmallTwistError::HypothesisViolated { .. })
    ));
}

#[test]
fn symmetrize_cases() {
    let even = FirstIntegral::new(|t, r| r * (1.0 + 0.1 * t.cos()));
    let s = symmetrize_i(&even);
    for (t, r) in [(0.3, 1.2), (-2.0, 1.9), (5.0, 1.5)] {
        assert_eq!(s.value(t, r), even.value(t, r));
    }
    let s = symmetrize_i(&FirstIntegral::new(|t, r| r + t.sin()));
    for (t, r) in [(0.3, 1.2), (-2.0, 1.9), (5.0, 1.5)] {
        assert!((s.value(t, r) - r).abs() <= 1e-15);
        let (gt, gr) = s.gradient(t, r);
        assert!(gt.abs() <= 1e-12 && (gr - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn symmetrized_integral_is_even(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, t in -10.0f64..10.0, r in 1.0f64..2.0) {
        let i = FirstIntegral::new(move |t, r| r + a * t.sin() + b * (2.0 * t).cos() * r + c * (t * r).sin());
        let s = symmetrize_i(&i);
        prop_assert!((s.value(t, r) - s.value(-t, r)).abs() <= 1e-14);
    }

    #[test]
    fn split_is_a_partition(c0 in -1.0f64..1.0, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0) {
        let spec = root2(2);
        let dom = YDomain::new(1.5, 0.5).unwrap();
        let l = APSeries2::from_fn(spec.clone(), dom, 4, f64::INFINITY, |t, y| c0 * y + c1 * t[0].cos() + c2 * (t[0] + t[1]).cos()).unwrap();
        let m = l.zeroed();
        let s = resonant_split(&l, &m, TAU, TOL_RES).unwrap();
        let sum = s.l_tilde.add(&s.l_hat).unwrap();
        for (a, b) in sum.coeffs().iter().zip(l.coeffs()) {
            prop_assert!((a - b).norm() == 0.0);
        }
    }
}
