use super::*;
use crate::apseries::{APSeries, MultiIndex};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn single(eps: f64) -> (ReversibleTwistMap, KamSchedule) {
    let inst = GoldenInstance::single_mode(eps);
    (inst.build().unwrap(), inst.schedule())
}

#[test]
fn zero_perturbation_step_is_identity() {
    let g = GoldenInstance::default();
    let sched = g.schedule();
    let map = ReversibleTwistMap::integrable(g.alpha, g.spectrum().unwrap(), sched.strip(0), 4).unwrap();
    let out = kam_step(&map, &sched.strip(1), &StepControl::default()).unwrap();
    assert!(out.pair.is_identity());
    assert!(out.new_map.f.is_zero() && out.new_map.g.is_zero());
    assert_eq!(out.eps_out, 0.0);
    assert_eq!(verify_reversibility(&map, &ReversibilityGrid::default()), 0.0);
}

#[test]
fn zero_perturbation_gives_flat_curve() {
    let g = GoldenInstance::default();
    let sched = g.schedule();
    let map = ReversibleTwistMap::integrable(g.alpha, g.spectrum().unwrap(), sched.strip(0), 4).unwrap();
    let run = kam_iterate(&map, &sched, &StepControl::default()).unwrap();
    assert_eq!(run.status, RunStatus::Converged);
    assert!(run.curve.phi_curve.is_zero());
    assert_eq!(run.curve.conjugacy_defect, 0.0);
    assert!(run.trace.is_empty());
}

#[test]
fn leapfrog_map_is_reversible() {
    let (map, _) = single(1e-4);
    assert!(verify_reversibility(&map, &ReversibilityGrid::default()) <= 1e-15);
}

#[test]
fn nonsymmetric_noise_is_flagged() {
    let (mut map, _) = single(1e-4);
    let dom = map.domain();
    let noise = APSeries::cos_mode(map.spectrum().clone(), &MultiIndex::unit(0, 1), 1e-3).unwrap();
    map.f = map
        .f
        .add(&APSeries2::from_series(&noise, dom, map.f.degree()))
        .unwrap();
    let d = verify_reversibility(&map, &ReversibilityGrid::default());
    assert!(d > 1e-4 && d < 1e-2, "{d}");
}

/// Sup over held-out points of `‖𝔐(Φ(ξ,η)) − Φ(ξ₁,η₁)‖` with `ξ₁, η₁` from the new map.
fn conjugation_residual(map: &ReversibleTwistMap, out: &StepOutcome) -> f64 {
    let spec = map.spectrum().clone();
    let proj = spec.projector().unwrap();
    let nm = &out.new_map;
    let mut worst: f64 = 0.0;
    for t in proj.held_out() {
        for eta in nm.f.y_probe() {
            let (p, q) = out.pair.increments(t, 0.0, eta);
            let (x1, y1) = map.apply(t, p, eta + q);
            let (d1, e1) = nm.apply(t, 0.0, eta);
            let (p1, q1) = out.pair.increments(t, d1, e1);
            worst = worst.max((x1 - d1 - p1).abs()).max((y1 - e1 - q1).abs());
        }
    }
    worst
}

#[test]
fn single_mode_step_contracts() {
    let (map, sched) = single(1e-5);
    let out = kam_step(&map, &sched.strip(1), &StepControl::default()).unwrap();
    assert!(out.eps_out <= 0.5 * out.eps_in);
    assert!(out.reversibility_out <= 1e-10);
    assert!(conjugation_residual(&map, &out) <= 1e-11);
    let (odd, even) = out.pair.parity_gaps().unwrap();
    assert!(odd <= 1e-10 && even <= 1e-10, "{odd} {even}");
}

#[test]
fn step_rejects_large_theta() {
    let (map, sched) = single(1e-4);
    let ctl = StepControl {
        c6: 1e300,
        ..StepControl::default()
    };
    assert!(matches!(
        kam_step(&map, &sched.strip(1), &ctl),
        Err(KamError::SmallnessViolated { .. })
    ));
}

#[test]
fn step_rejects_unnested_strips() {
    let (map, sched) = single(1e-4);
    assert!(matches!(
        kam_step(&map, &sched.strip(0), &StepControl::default()),
        Err(KamError::InvalidSchedule(_))
    ));
}

#[test]
fn golden_run_converges_with_calibrated_gate() {
    let g = GoldenInstance::default();
    let cal = g.calibrate(&StepControl::default()).unwrap();
    let ctl = StepControl {
        c6: cal.c6,
        ..StepControl::default()
    };
    let run = kam_iterate(&g.build().unwrap(), &g.schedule(), &ctl).unwrap();
    assert_eq!(run.status, RunStatus::Converged);
    assert!(run.trace.len() <= 10);
    assert!(run.curve.conjugacy_defect <= 1e-8);
    assert!(run.curve.restriction_defect <= run.curve.conjugacy_defect);
    assert!(run.curve.invariance_defect <= 1e-8);
    for row in &run.trace {
        assert!(row.accepted && row.eps_out <= 0.5 * row.eps_in);
        assert!(row.theta < 0.25);
        assert!(row.map_ok);
    }
}

fn random_pair(spec: &std::sync::Arc<crate::apseries::Spectrum>, dom: YDomain, amp: f64, seed: u64) -> TransformPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let low: Vec<usize> = spec
        .positive()
        .iter()
        .copied()
        .filter(|&i| spec.mode(i).abs() <= 2)
        .collect();
    let make = |rng: &mut ChaCha8Rng| {
        let mut s = APSeries2::zero(spec.clone(), dom, 6);
        for &i in &low {
            for j in 0..3 {
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * amp
                    / (1 + j) as f64;
                s.block_mut(i)[j] = c;
                s.block_mut(spec.neg(i))[j] = c.conj();
            }
        }
        s
    };
    TransformPair {
        phi: make(&mut rng),
        psi: make(&mut rng),
    }
}

#[test]
fn composition_trivial_cases() {
    let spec = golden_spectrum(8, 3.0).unwrap();
    let dom = YDomain::symmetric(1e-2).unwrap();
    let a = random_pair(&spec, dom, 1e-4, 1);
    let one = compose_transforms(std::slice::from_ref(&a)).unwrap();
    assert_eq!(one.phi.coeffs(), a.phi.coeffs());
    let z = TransformPair::identity(spec.clone(), dom, 6);
    let two = compose_transforms(&[a.clone(), z]).unwrap();
    for (u, v) in two.phi.coeffs().iter().zip(a.phi.coeffs()) {
        assert!((u - v).norm() <= 1e-17);
    }
}

#[test]
fn composition_matches_pointwise_chain() {
    let spec = golden_spectrum(8, 3.0).unwrap();
    let pairs: Vec<TransformPair> = (0..3)
        .map(|i| {
            let dom = YDomain::symmetric(1e-2 * 0.7f64.powi(i)).unwrap();
            random_pair(&spec, dom, 2e-5 * 0.5f64.powi(i), 10 + i as u64)
        })
        .collect();
    let comp = compose_transforms(&pairs).unwrap();
    let pts = crate::apseries::torus_samples(2, 128, 77);
    let dom = pairs[2].domain();
    let mut worst: f64 = 0.0;
    for t in &pts {
        for eta in [dom.lo(), 0.0, 0.3 * dom.hi()] {
            let (mut d, mut y) = (0.0, eta);
            for p in pairs.iter().rev() {
                let (a, b) = p.increments(t, d, y);
                d += a;
                y += b;
            }
            let (p, q) = comp.increments(t, 0.0, eta);
            worst = worst.max((p - d).abs()).max((q - (y - eta)).abs());
        }
    }
    assert!(worst <= 1e-11, "{worst}");
}

#[test]
fn composition_detects_escape() {
    let spec = golden_spectrum(4, 3.0).unwrap();
    let dom = YDomain::symmetric(1e-3).unwrap();
    let outer = random_pair(&spec, dom, 1e-4, 3);
    let mut inner = TransformPair::identity(spec.clone(), dom, 6);
    inner.psi = APSeries2::from_y_fn(spec, dom, 6, |_| 5e-3);
    assert!(matches!(
        compose_pair(&outer, &inner, dom),
        Err(KamError::DomainEscape { .. })
    ));
}

#[test]
fn smallness_vanishes_without_constant() {
    let s = KamSchedule::from_eps0(1e-4, 10, 1e-12);
    let d = crate::diophantine::ApproximationFunction::default();
    assert_eq!(smallness(1e-4, &s.strip(0), &s.strip(1), 0.0, &d), 0.0);
    let a = smallness(1e-4, &s.strip(0), &s.strip(1), 1.0, &d);
    let b = smallness(2e-4, &s.strip(0), &s.strip(1), 1.0, &d);
    assert!((b / a - 2.0).abs() < 1e-12);
}

#[test]
fn trace_has_header_and_rows() {
    let g = GoldenInstance::single_mode(1e-5);
    let run = kam_iterate(&g.build().unwrap(), &g.schedule(), &StepControl::default()).unwrap();
    let tsv = run.trace_tsv();
    assert!(tsv.starts_with("step\t"));
    assert_eq!(tsv.lines().filter(|l| !l.starts_with('#')).count(), run.trace.len() + 1);
}

proptest! {
    #[test]
    fn schedule_is_nested(eps0 in 1e-9f64..1e-2, n in 0usize..40) {
        let s = KamSchedule::from_eps0(eps0, 50, 0.0);
        let (a, b) = (s.strip(n), s.strip(n + 1));
        prop_assert!(b.m < a.m && b.r < a.r && b.s < a.s);
        prop_assert!(b.m > 0.5 * s.m0 && b.r > 0.5 * s.r0 && b.s > 0.0);
        prop_assert!((s.eps(n + 1) - 0.5 * s.eps(n)).abs() <= 1e-15 * s.eps(n));
    }
}
