//! The ten acceptance criteria, one line each; exits nonzero if any fails.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::Arc;
use std::time::{Duration, Instant};

use apkam::apseries::{APSeries, FrequencyBasis, MultiIndex, SpatialStructure, Spectrum};
use apkam::diophantine::{check_alpha, ApproximationFunction};
use apkam::homological::{coefficient_mass, solve_difference, DEFAULT_TOL_DIV};
use apkam::kam::{kam_iterate, kam_step, verify_reversibility, GoldenInstance, ReversibilityGrid, StepControl};
use apkam::oscillator::{
    boundedness_experiment, check_j_asymptotics, compute_j, expansion_order, mean_twist,
    radial_inits, resonant_chart, Damping, MapGrid, OscillatorSpec, Restoring,
};
use apkam::smalltwist::ChartControl;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Check {
    Check { pass, detail }
}

fn spectrum(omega: &[f64], kmax: i64) -> Arc<Spectrum> {
    let basis = FrequencyBasis::from_frequencies(omega).unwrap();
    let st = SpatialStructure::singletons_and_window(&basis, 3.0).unwrap();
    Spectrum::new(basis, st, kmax).unwrap()
}

fn sines(spec: &Arc<Spectrum>, amps: &[f64]) -> APSeries {
    let mut f = APSeries::zero(spec.clone());
    for (j, &a) in amps.iter().enumerate() {
        let m = APSeries::sin_mode(spec.clone(), &MultiIndex::unit(j as i64, 1), a).unwrap();
        f = apkam::apseries::ModeSeries::add(&f, &m).unwrap();
    }
    f
}

fn nonresonant() -> OscillatorSpec {
    let s = spectrum(&[2f64.sqrt(), 1.0 + GOLDEN], 3);
    OscillatorSpec::new(
        1.0,
        Restoring::arctan(),
        Damping::Gauss { amplitude: 1.0 },
        sines(&s, &[0.3, 0.2]),
        Some(FRAC_PI_2),
    )
    .unwrap()
}

fn random_h(spec: &Arc<Spectrum>, rng: &mut ChaCha8Rng) -> APSeries {
    let pos = spec.positive();
    let n = rng.random_range(1..=40);
    let modes: Vec<(MultiIndex, Complex64)> = (0..n)
        .map(|_| {
            let i = pos[rng.random_range(0..pos.len())];
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (spec.mode(i).clone(), z)
        })
        .collect();
    APSeries::from_modes(spec.clone(), &modes).unwrap()
}

fn line_grid() -> impl Iterator<Item = f64> {
    (0..2000).map(|j| -250.0 + 0.25 * j as f64 + 0.013)
}

/// α and the homological spectrum with `α` checked against a scanned `γ₀`.
fn homological_setup() -> (Arc<Spectrum>, f64, f64) {
    let alpha = GoldenInstance::default().alpha;
    let spec = spectrum(&[1.0, GOLDEN], 8);
    let delta = ApproximationFunction::default();
    let scan = check_alpha(alpha, spec.basis(), spec.structure(), &delta, 0.0, 8, None).unwrap();
    let gamma0 = 0.5 * scan.gamma_observed;
    check_alpha(alpha, spec.basis(), spec.structure(), &delta, gamma0, 8, None).unwrap();
    (spec, alpha, gamma0)
}

fn homological_residual() -> Check {
    let (spec, alpha, gamma0) = homological_setup();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let h = random_h(&spec, &mut rng);
        let l = solve_difference(&h, alpha, DEFAULT_TOL_DIV).unwrap().l;
        let bound = 1e-10 * (1.0 + coefficient_mass(&h));
        let res = line_grid()
            .map(|x| (l.eval(x + alpha) - l.eval(x) - h.eval(x)).abs())
            .fold(0.0, f64::max);
        worst = worst.max(res / bound);
    }
    check(worst <= 1.0, format!("γ₀ = {gamma0:.3e}, worst residual/bound = {worst:.3e}"))
}

fn parity() -> Check {
    let (spec, alpha, _) = homological_setup();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for n in 0..50 {
        let raw = random_h(&spec, &mut rng);
        let (sym, anti) = apkam::apseries::ModeSeries::parity_decompose(&raw, alpha);
        // h(−x−α) = h(x) forces odd l; h(−x−α) = −h(x) forces even l
        let (h, sign) = if n % 2 == 0 { (sym, -1.0) } else { (anti, 1.0) };
        let l = solve_difference(&h, alpha, DEFAULT_TOL_DIV).unwrap().l;
        let d = line_grid()
            .map(|x| (l.eval(-x) - sign * l.eval(x)).abs())
            .fold(0.0, f64::max);
        worst = worst.max(d);
    }
    check(worst <= 1e-10, format!("worst parity defect = {worst:.3e}"))
}

fn step_contraction() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for eps in [1e-4, 1e-5, 1e-6] {
        let inst = GoldenInstance::single_mode(eps);
        let map = inst.build().unwrap();
        let out = kam_step(&map, &inst.schedule().strip(1), &StepControl::default()).unwrap();
        let rev = verify_reversibility(&out.new_map, &ReversibilityGrid::default());
        ok &= out.eps_out <= 0.5 * eps && rev <= 1e-10;
        parts.push(format!("ε={eps:.0e}: out {:.3e}, rev {rev:.1e}", out.eps_out));
    }
    check(ok, parts.join("; "))
}

fn full_iteration() -> Check {
    let g = GoldenInstance::default();
    let cal = g.calibrate(&StepControl::default()).unwrap();
    let ctl = StepControl {
        c6: cal.c6,
        ..StepControl::default()
    };
    let map = g.build().unwrap();
    let run = kam_iterate(&map, &g.schedule(), &ctl).unwrap();
    let c = &run.curve;
    let inv = (0..512)
        .map(|j| {
            let x = 0.37 * j as f64;
            let (x1, y1) = map.apply(&[0.0, 0.0], x, c.phi_curve.eval(x));
            (c.phi_curve.eval(x1) - y1).abs()
        })
        .fold(0.0, f64::max);
    let pass = run.trace.len() <= 10
        && c.conjugacy_defect <= 1e-8
        && c.restriction_defect <= 1e-8
        && inv <= 1e-8;
    check(
        pass,
        format!(
            "{} steps, conjugacy {:.2e}, restriction {:.2e}, invariance on 512 line points {inv:.2e}",
            run.trace.len(),
            c.conjugacy_defect,
            c.restriction_defect
        ),
    )
}

fn envelope() -> Check {
    let v = ApproximationFunction::Polynomial { tau: 3.0 }.lambda_envelope(1.0);
    let exact = 27.0 * (-2.0f64).exp();
    let rel = (v - exact).abs() / exact;
    check(rel <= 1e-10, format!("Λ(1) = {v:.15}, relative error {rel:.1e}"))
}

fn j_asymptotics() -> Check {
    let spec = nonresonant();
    let k0 = (1e4 * compute_j(&spec, 1e4).unwrap() - 1.0).abs();
    let k1 = check_j_asymptotics(&spec, 1, &[1e4]).unwrap().error();
    check(k0 <= 0.01 && k1 <= 0.03, format!("|ρJ − 1| = {k0:.2e}, |ρ²J' + 1| = {k1:.2e}"))
}

fn expansion() -> Check {
    let fit = expansion_order(&nonresonant(), &[1e-2, 1e-3, 1e-4], &MapGrid::default()).unwrap();
    check(
        (1.8..=2.2).contains(&fit.exponent),
        format!("fitted exponent {:.4}", fit.exponent),
    )
}

fn twist() -> Check {
    let rep = mean_twist(&nonresonant(), 1.0, 1e4).unwrap();
    check(
        rep.relative_error <= 0.01,
        format!(
            "mean {:.6}, target magnitude {:.6}, rel {:.1e}; brute force {:.4}; closed form −4ϖ⁻³φ(+∞) = {:.6}",
            rep.empirical, rep.target_magnitude, rep.relative_error, rep.brute_force, rep.unscaled_limit
        ),
    )
}

fn boundedness() -> Check {
    let radii: Vec<f64> = (1..=10).map(|i| 5.0 * i as f64).collect();
    let rep = boundedness_experiment(&nonresonant(), &radial_inits(&radii), 1e4, 1e-10).unwrap();
    check(
        rep.max_abs_slope <= 1e-5 && rep.max_ratio <= 3.0,
        format!("max |slope| {:.2e}, max envelope ratio {:.3}", rep.max_abs_slope, rep.max_ratio),
    )
}

fn chart() -> Check {
    let s = spectrum(&[1.0, 2f64.sqrt()], 3);
    let spec = OscillatorSpec::new(
        1.0,
        Restoring::arctan(),
        Damping::Gauss { amplitude: 1.0 },
        sines(&s, &[0.1, 0.2]),
        None,
    )
    .unwrap();
    let ch = resonant_chart(&spec, (1.0, 2.0), (1.3, 1.6), 8, &ChartControl::default()).unwrap();
    let rep = ch.chart.verify(16, 5).unwrap();
    let alpha = TAU / spec.varpi;
    check(
        rep.identity <= 1e-9 && rep.tau_shift <= 1e-9 && ch.chart.alpha == alpha,
        format!("identity {:.2e}, τ shift {:.2e}", rep.identity, rep.tau_shift),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Check, Duration);
    let criteria: [Criterion; 10] = [
        ("homological residual", homological_residual, Duration::from_secs(10)),
        ("solution parity", parity, Duration::from_secs(10)),
        ("step contraction", step_contraction, Duration::from_secs(60)),
        ("full iteration", full_iteration, Duration::from_secs(300)),
        ("approximation envelope", envelope, Duration::from_secs(10)),
        ("J asymptotics", j_asymptotics, Duration::from_secs(5)),
        ("expansion order", expansion, Duration::from_secs(120)),
        ("mean twist", twist, Duration::from_secs(30)),
        ("boundedness", boundedness, Duration::from_secs(600)),
        ("resonant chart", chart, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let c = std::panic::catch_unwind(f).unwrap_or_else(|_| check(false, "panicked".into()));
        let took = start.elapsed();
        let pass = c.pass && took <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<24} {} [{:.2}s of {}s] {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs(),
            c.detail
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
