//! The difference equation `l(x+α) − l(x) = h(x)` in coefficient space.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::apseries::{ModeSeries, MultiIndex, SeriesError};

pub const DEFAULT_TOL_DIV: f64 = 1e-10;
/// Relative bound on the mean of a right-hand side.
pub const TOL_MEAN: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomologicalError {
    #[error("right-hand side has mean {mean:e} above {tol:e}")]
    NonzeroMean { mean: f64, tol: f64 },
    #[error("divisor |e^(i⟨k,ω⟩α) − 1| = {divisor:e} at k = {k}")]
    DivisorUnderflow { k: String, divisor: f64 },
    #[error("solution lacks the parity forced by the right-hand side ({0})")]
    ParityViolation(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Clone, Debug)]
pub struct DifferenceSolution<S> {
    pub l: S,
    /// Smallest divisor met on a nonzero mode of `h`.
    pub divisor_floor: f64,
    pub divisor_witness: Option<MultiIndex>,
    /// Mean of `h`, discarded.
    pub dropped_mean: f64,
    /// Sup of `|l(x+α) − l(x) − h(x)|` over held-out samples.
    pub residual: f64,
}

/// `e^{iφ} − 1` without cancellation for small `φ`.
pub fn divisor(phase: f64) -> Complex64 {
    let half = 0.5 * phase;
    Complex64::new(0.0, 2.0 * half.sin()) * Complex64::new(0.0, half).exp()
}

/// Sum of coefficient magnitudes.
pub fn coefficient_mass<S: ModeSeries>(h: &S) -> f64 {
    (0..h.spectrum().len()).map(|i| h.block_abs(i)).sum()
}

pub fn solve_difference<S: ModeSeries>(
    h: &S,
    alpha: f64,
    tol_div: f64,
) -> Result<DifferenceSolution<S>, HomologicalError> {
    let spec = h.spectrum().clone();
    let mass = coefficient_mass(h);
    let mean = h.block_abs(spec.zero());
    let tol = TOL_MEAN * mass;
    if mean > tol {
        return Err(HomologicalError::NonzeroMean { mean, tol });
    }
    let mut l = h.zeroed();
    let mut floor = f64::INFINITY;
    let mut witness = None;
    for i in 0..spec.len() {
        if i == spec.zero() || h.block_abs(i) == 0.0 {
            continue;
        }
        let d = divisor(spec.frequency(i) * alpha);
        let dn = d.norm();
        if dn < floor {
            floor = dn;
            witness = Some(spec.mode(i).clone());
        }
        if dn < tol_div {
            return Err(HomologicalError::DivisorUnderflow {
                k: spec.mode(i).to_string(),
                divisor: dn,
            });
        }
        let inv = d.inv();
        for (o, c) in l.block_mut(i).iter_mut().zip(h.block(i)) {
            *o = c * inv;
        }
    }
    *l.defect_mut() = h.defect() / floor.clamp(f64::MIN_POSITIVE, 2.0);
    let l = l.cleaned();
    let residual = difference_residual(&l, h, alpha)?;
    Ok(DifferenceSolution {
        l,
        divisor_floor: floor,
        divisor_witness: witness,
        dropped_mean: mean,
        residual,
    })
}

/// Sup of `|l(x+α) − l(x) − h(x)|` over the held-out samples and probe `y` values.
pub fn difference_residual<S: ModeSeries>(l: &S, h: &S, alpha: f64) -> Result<f64, HomologicalError> {
    l.check_layout(h)?;
    let spec = l.spectrum().clone();
    let proj = spec.projector()?;
    let shift: Vec<f64> = spec.basis().frequencies().iter().map(|w| w * alpha).collect();
    let ys = l.y_probe();
    Ok(proj
        .held_out()
        .par_iter()
        .map(|t| {
            let mut p0 = Vec::new();
            let mut p1 = Vec::new();
            spec.phases(t, &mut p0);
            let ts: Vec<f64> = t.iter().zip(&shift).map(|(a, b)| a + b).collect();
            spec.phases(&ts, &mut p1);
            ys.iter()
                .map(|&y| (l.eval_at(&p1, y) - l.eval_at(&p0, y) - h.eval_at(&p0, y)).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
    /// No parity forced, or the degenerate zero case.
    None,
}

/// Sup over held-out samples of `|a(−x) ∓ b(x)|`, comparing `l(−x)` against `±l(x)`.
fn reflection_gap<S: ModeSeries>(l: &S, sign: f64) -> Result<f64, HomologicalError> {
    let spec = l.spectrum().clone();
    let proj = spec.projector()?;
    let ys = l.y_probe();
    Ok(proj
        .held_out()
        .par_iter()
        .map(|t| {
            let mut p = Vec::new();
            spec.phases(t, &mut p);
            let q: Vec<Complex64> = p.iter().map(|z| z.conj()).collect();
            ys.iter()
                .map(|&y| (l.eval_at(&q, y) - sign * l.eval_at(&p, y)).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// Parity of `l` forced by the symmetry of `h` about `−α/2`.
pub fn parity_of_solution<S: ModeSeries>(h: &S, alpha: f64, l: &S) -> Result<Parity, HomologicalError> {
    let mass = coefficient_mass(h);
    if mass == 0.0 {
        return Ok(Parity::None);
    }
    let r = h.reflect(alpha);
    let gap = |sign: f64| -> f64 {
        h.coeffs()
            .iter()
            .zip(r.coeffs())
            .map(|(a, b)| (a - b * sign).norm())
            .sum::<f64>()
    };
    let (expected, sign) = if gap(1.0) <= 1e-12 * mass {
        (Parity::Odd, -1.0)
    } else if gap(-1.0) <= 1e-12 * mass {
        (Parity::Even, 1.0)
    } else {
        return Ok(Parity::None);
    };
    let scale = 1.0 + coefficient_mass(l);
    let g = reflection_gap(l, sign)?;
    if g > 1e-10 * scale {
        return Err(HomologicalError::ParityViolation(format!(
            "expected {expected:?}, reflection gap {g:e}"
        )));
    }
    Ok(expected)
}

/// Right-hand sides of the step equations and their solutions.
#[derive(Clone, Debug)]
pub struct StepRhs<S> {
    /// `½(ψ + f + (ψ + f)(−ξ−α, η))`, zero mean.
    pub f_rhs: S,
    /// `½(g − g(−ξ−α, η))`.
    pub g_rhs: S,
    /// Free mean of `ψ`, equal to `−f₀(η)`.
    pub psi0: S,
    pub psi: S,
    pub phi: S,
    pub divisor_floor: f64,
    pub residual: f64,
}

/// Solves for `ψ` from the antisymmetric part of `g`, then for `φ` from the symmetrised `ψ + f`.
pub fn assemble_fg<S: ModeSeries>(
    f: &S,
    g: &S,
    alpha: f64,
    tol_div: f64,
) -> Result<StepRhs<S>, HomologicalError> {
    f.check_layout(g)?;
    let z = f.spectrum().zero();
    let (_, g_rhs) = g.parity_decompose(alpha);
    let mut g_rhs = g_rhs;
    g_rhs.block_mut(z).iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
    let sol_psi = solve_difference(&g_rhs, alpha, tol_div)?;
    let mut psi0 = f.zeroed();
    for (o, c) in psi0.block_mut(z).iter_mut().zip(f.block(z)) {
        *o = -c;
    }
    let mut psi = sol_psi.l;
    psi.block_mut(z).copy_from_slice(psi0.block(z));
    let mut sum = psi.add(f)?;
    sum.block_mut(z).iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
    let (f_rhs, _) = sum.parity_decompose(alpha);
    let sol_phi = solve_difference(&f_rhs, alpha, tol_div)?;
    Ok(StepRhs {
        f_rhs,
        g_rhs,
        psi0,
        psi,
        phi: sol_phi.l,
        divisor_floor: sol_psi.divisor_floor.min(sol_phi.divisor_floor),
        residual: sol_psi.residual.max(sol_phi.residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apseries::{
        APSeries, APSeries2, FrequencyBasis, SpatialStructure, Spectrum, StripParams, YDomain,
    };
    use crate::diophantine::{check_alpha, check_omega, ApproximationFunction};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;
    use std::sync::Arc;

    const ALPHA: f64 = 0.7548776662466927;

    fn golden(kmax: i64) -> Arc<Spectrum> {
        let basis = FrequencyBasis::from_frequencies(&[1.0, (5f64.sqrt() - 1.0) / 2.0]).unwrap();
        let s = SpatialStructure::singletons_and_window(&basis, 3.0).unwrap();
        Spectrum::new(basis, s, kmax).unwrap()
    }

    fn random_series(spec: &Arc<Spectrum>, modes: usize, seed: u64) -> APSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = vec![Complex64::new(0.0, 0.0); spec.len()];
        for _ in 0..modes {
            let i = spec.positive()[rng.random_range(0..spec.positive().len())];
            let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            c[i] = z;
            c[spec.neg(i)] = z.conj();
        }
        APSeries::from_coeffs(spec.clone(), c).unwrap()
    }

    fn random_series2(spec: &Arc<Spectrum>, dom: YDomain, seed: u64) -> APSeries2 {
        let a = random_series(spec, 8, seed);
        let b = random_series(spec, 8, seed + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
        let m = rng.random::<f64>();
        let ya = APSeries2::from_y_fn(spec.clone(), dom, 4, |y| 1.0 + y * y);
        let yb = APSeries2::from_y_fn(spec.clone(), dom, 4, |y| y);
        let c = APSeries2::from_y_fn(spec.clone(), dom, 4, move |y| m * y);
        let fa = APSeries2::from_series(&a, dom, 4).mul(&ya).unwrap();
        let fb = APSeries2::from_series(&b, dom, 4).mul(&yb).unwrap();
        fa.add(&fb).unwrap().add(&c).unwrap()
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let sp = golden(6);
        let h = APSeries::zero(sp);
        let sol = solve_difference(&h, ALPHA, DEFAULT_TOL_DIV).unwrap();
        assert!(sol.l.is_zero());
        assert_eq!(sol.residual, 0.0);
        assert_eq!(parity_of_solution(&h, ALPHA, &sol.l).unwrap(), Parity::None);
    }

    #[test]
    fn single_exponential() {
        let sp = golden(6);
        let k = MultiIndex::unit(0, 1);
        let i = sp.position(&k).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); sp.len()];
        c[i] = Complex64::new(1.0, 0.0);
        // not real, but the solver is linear per mode
        let h = APSeries::from_coeffs(sp.clone(), c).unwrap();
        let sol = solve_difference(&h, ALPHA, DEFAULT_TOL_DIV).unwrap();
        let want = Complex64::new(0.0, ALPHA).exp() - 1.0;
        assert!((sol.l.coefficient(&k) - want.inv()).norm() < 1e-15);
        assert_eq!(sol.divisor_witness, Some(k));
    }

    #[test]
    fn nonzero_mean_rejected() {
        let sp = golden(4);
        let h = APSeries::constant(sp, 0.1);
        assert!(matches!(
            solve_difference(&h, ALPHA, DEFAULT_TOL_DIV),
            Err(HomologicalError::NonzeroMean { .. })
        ));
    }

    #[test]
    fn tiny_divisor_rejected() {
        let sp = golden(4);
        let h = APSeries::cos_mode(sp, &MultiIndex::unit(0, 1), 1.0).unwrap();
        let err = solve_difference(&h, TAU + 1e-12, DEFAULT_TOL_DIV).unwrap_err();
        assert!(matches!(err, HomologicalError::DivisorUnderflow { ref k, .. } if k == "0:1" || k == "0:-1"));
    }

    #[test]
    fn residual_matches_direct_evaluation() {
        let sp = golden(10);
        let h = random_series(&sp, 30, 11);
        let sol = solve_difference(&h, ALPHA, DEFAULT_TOL_DIV).unwrap();
        let mut worst: f64 = 0.0;
        for j in 0..200 {
            let x = -50.0 + 0.5 * j as f64;
            let r = sol.l.eval(x + ALPHA) - sol.l.eval(x) - h.eval(x);
            worst = worst.max(r.abs());
        }
        let p = StripParams::new(1e-3, 1e-3, 1e-3).unwrap();
        assert!(worst <= 1e-10 * (1.0 + h.norm(&p)));
        assert!(sol.residual <= 1e-10 * (1.0 + h.norm(&p)));
    }

    #[test]
    fn symmetric_rhs_gives_odd_solution() {
        let sp = golden(6);
        let k = MultiIndex::unit(0, 1);
        let h = APSeries::cos_mode(sp.clone(), &k, 1.0).unwrap().shift(ALPHA / 2.0);
        let sol = solve_difference(&h, ALPHA, DEFAULT_TOL_DIV).unwrap();
        assert_eq!(parity_of_solution(&h, ALPHA, &sol.l).unwrap(), Parity::Odd);
        for j in 0..20 {
            let x = 0.37 * j as f64;
            assert!((sol.l.eval(-x) + sol.l.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn antisymmetric_rhs_gives_even_solution() {
        let sp = golden(6);
        let k = MultiIndex::unit(1, 1);
        let h = APSeries::sin_mode(sp.clone(), &k, 1.0).unwrap().shift(ALPHA / 2.0);
        let sol = solve_difference(&h, ALPHA, DEFAULT_TOL_DIV).unwrap();
        assert_eq!(parity_of_solution(&h, ALPHA, &sol.l).unwrap(), Parity::Even);
    }

    #[test]
    fn wrong_parity_detected() {
        let sp = golden(6);
        let k = MultiIndex::unit(0, 1);
        let h = APSeries::cos_mode(sp.clone(), &k, 1.0).unwrap().shift(ALPHA / 2.0);
        let l = APSeries::cos_mode(sp, &k, 1.0).unwrap();
        assert!(matches!(
            parity_of_solution(&h, ALPHA, &l),
            Err(HomologicalError::ParityViolation(_))
        ));
    }

    #[test]
    fn estimate_consistency() {
        let sp = golden(10);
        let delta = ApproximationFunction::polynomial(3.0).unwrap();
        let ra = check_alpha(ALPHA, sp.basis(), sp.structure(), &delta, 0.0, 10, None).unwrap();
        let ro = check_omega(sp.basis(), sp.structure(), &delta, 0.0, 10).unwrap();
        let gamma = ra.gamma_observed.min(ro.gamma_observed * ALPHA / TAU);
        let (r, m, d, nu) = (0.3, 0.2, 0.1, 0.05);
        for seed in 0..10 {
            let h = random_series(&sp, 20, seed);
            let l = solve_difference(&h, ALPHA, DEFAULT_TOL_DIV).unwrap().l;
            let lhs = l.norm(&StripParams::new(r - d, 1.0, m - nu).unwrap());
            let rhs = delta.lambda_envelope(d) * delta.lambda_envelope(nu) / gamma
                * h.norm(&StripParams::new(r, 1.0, m).unwrap());
            assert!(lhs <= rhs, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn zero_map_gives_zero_rhs() {
        let sp = golden(4);
        let dom = YDomain::symmetric(0.01).unwrap();
        let z = APSeries2::zero(sp, dom, 4);
        let out = assemble_fg(&z, &z, ALPHA, DEFAULT_TOL_DIV).unwrap();
        assert!(out.f_rhs.is_zero() && out.g_rhs.is_zero() && out.psi0.is_zero());
    }

    #[test]
    fn g_rhs_is_antisymmetric_part() {
        let sp = golden(6);
        let dom = YDomain::symmetric(0.01).unwrap();
        let f = random_series2(&sp, dom, 3);
        let g = random_series2(&sp, dom, 7);
        let out = assemble_fg(&f, &g, ALPHA, DEFAULT_TOL_DIV).unwrap();
        let (_, anti) = g.parity_decompose(ALPHA);
        for i in 1..sp.len() {
            for (a, b) in out.g_rhs.block(i).iter().zip(anti.block(i)) {
                assert_eq!(a, b);
            }
        }
    }

    fn sym_gap(s: &APSeries2, sign: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..40 {
            let x = -20.0 + 1.03 * j as f64;
            for y in [-0.01, 0.0, 0.004] {
                worst = worst.max((s.eval(-x - ALPHA, y) - sign * s.eval(x, y)).abs());
            }
        }
        worst
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn assembled_rhs_properties(seed in 0u64..1000) {
            let sp = golden(6);
            let dom = YDomain::symmetric(0.01).unwrap();
            let f = random_series2(&sp, dom, seed);
            let g = random_series2(&sp, dom, seed + 100);
            let out = assemble_fg(&f, &g, ALPHA, DEFAULT_TOL_DIV).unwrap();
            let mean_f = out.f_rhs.block_abs(0);
            prop_assert!(mean_f <= 1e-14);
            prop_assert!(sym_gap(&out.f_rhs, 1.0) <= 1e-12);
            prop_assert!(sym_gap(&out.g_rhs, -1.0) <= 1e-12);
            prop_assert!(out.residual <= 1e-10 * (1.0 + coefficient_mass(&f) + coefficient_mass(&g)));
            prop_assert_eq!(parity_of_solution(&out.f_rhs, ALPHA, &out.phi).unwrap(), Parity::Odd);
            let psi_var = {
                let mut p = out.psi.clone();
                p.block_mut(0).iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
                p
            };
            prop_assert!(matches!(
                parity_of_solution(&out.g_rhs, ALPHA, &psi_var).unwrap(),
                Parity::Even | Parity::None
            ));
        }

        #[test]
        fn residual_identity(seed in 0u64..1000, modes in 1usize..40) {
            let sp = golden(8);
            let h = random_series(&sp, modes, seed);
            let sol = solve_difference(&h, ALPHA, DEFAULT_TOL_DIV).unwrap();
            prop_assert!(sol.residual <= 1e-10 * (1.0 + coefficient_mass(&h)));
            prop_assert_eq!(sol.l.block_abs(0), 0.0);
        }
    }
}
