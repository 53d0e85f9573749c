use std::cell::Cell;
use std::f64::consts::{E, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::resonant::check_nonresonant;
use super::transforms::QUAD_TOL;
use super::{polar_rhs, OscillatorError, OscillatorSpec};
use crate::apseries::{APSeries2, ModeSeries, StripParams, YDomain};
use crate::numerics::{gauss_kronrod, loglog_slope, Dopri5};
use crate::smalltwist::SmallTwistMap;

/// Integration tolerance of the return map.
pub const POINCARE_TOL: f64 = 1e-13;
const ANNULUS: (f64, f64) = (0.5, 3.0);

/// Return map over `θ ∈ [0, 2π]` of
/// `dρ/dθ = −ερ²ϖ⁻²f(τ) cos θ`, `dτ/dθ = ϖ⁻¹ − (2/π)ερϖ⁻³φ(+∞) + ερϖ⁻³f(τ) sin θ`.
pub fn poincare_numeric(
    spec: &OscillatorSpec,
    eps: f64,
    rho0: f64,
    tau0: f64,
) -> Result<(f64, f64), OscillatorError> {
    if !(eps >= 0.0) {
        return Err(OscillatorError::Invalid(format!("ε = {eps} must be nonnegative")));
    }
    if !(ANNULUS.0..=ANNULUS.1).contains(&rho0) {
        return Err(OscillatorError::AnnulusEscape { theta: 0.0, rho: rho0 });
    }
    let w = spec.varpi;
    let (w2, w3) = (w * w, w * w * w);
    let drift = 2.0 / PI * spec.phi_inf / w3;
    let mut escape: Option<(f64, f64)> = None;
    let end = Dopri5::new(POINCARE_TOL).integrate(
        |theta, y: &[f64; 2]| {
            let (s, c) = theta.sin_cos();
            let f = spec.f(y[1]);
            [
                -eps * y[0] * y[0] * f * c / w2,
                1.0 / w - eps * y[0] * drift + eps * y[0] * f * s / w3,
            ]
        },
        0.0,
        [rho0, tau0],
        TAU,
        |rec| {
            if escape.is_none() && !(ANNULUS.0..=ANNULUS.1).contains(&rec.y1[0]) {
                escape = Some((rec.t1, rec.y1[0]));
            }
        },
    )?;
    if let Some((theta, rho)) = escape {
        return Err(OscillatorError::AnnulusEscape { theta, rho });
    }
    Ok((end[0], end[1]))
}

/// `∫₀^{2π} e^{iνθ} dθ`.
pub fn exp_integral(nu: f64) -> Complex64 {
    if nu == 0.0 {
        return Complex64::new(TAU, 0.0);
    }
    Complex64::from_polar(2.0 * (PI * nu).sin() / nu, PI * nu)
}

/// `∫₀^{2π} e^{iμθ} sin θ dθ`.
pub fn sin_moment(mu: f64) -> Complex64 {
    (exp_integral(mu + 1.0) - exp_integral(mu - 1.0)) / Complex64::new(0.0, 2.0)
}

/// `∫₀^{2π} e^{iμθ} cos θ dθ`.
pub fn cos_moment(mu: f64) -> Complex64 {
    (exp_integral(mu + 1.0) + exp_integral(mu - 1.0)) * 0.5
}

/// `(∫₀^{2π} f(τ+θ/ϖ) sin θ dθ, ∫₀^{2π} f(τ+θ/ϖ) cos θ dθ)` summed mode by mode.
pub fn forcing_moments(spec: &OscillatorSpec, tau: f64) -> (f64, f64) {
    let w = spec.varpi;
    let trig = spec.trig();
    let mut s = trig.mean * sin_moment(0.0).re;
    let mut c = trig.mean * cos_moment(0.0).re;
    for &(lam, coef) in &trig.terms {
        let z = coef * Complex64::new(0.0, lam * tau).exp();
        s += 2.0 * (z * sin_moment(lam / w)).re;
        c += 2.0 * (z * cos_moment(lam / w)).re;
    }
    (s, c)
}

/// First-order coefficients of the return map at `(ρ₀, τ₀)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoefficients {
    /// `−ρ₀²ϖ⁻² ∫ f(τ₀+θ/ϖ) cos θ dθ`.
    pub m: f64,
    /// `ρ₀²ϖ⁻³ ∫ f'(τ₀+θ/ϖ) sin θ dθ`.
    pub m_by_parts: f64,
    /// `ρ₀ϖ⁻³(−4φ(+∞) + ∫ f(τ₀+θ/ϖ) sin θ dθ)`.
    pub l: f64,
}

fn turn_integral(h: impl Fn(f64) -> f64) -> Result<f64, OscillatorError> {
    Ok(gauss_kronrod(h, 0.0, TAU, QUAD_TOL, 1e-13)?)
}

/// `l` alone.
fn l_value(spec: &OscillatorSpec, rho0: f64, tau0: f64) -> Result<f64, OscillatorError> {
    let w = spec.varpi;
    let is = turn_integral(|th| spec.f(tau0 + th / w) * th.sin())?;
    Ok(rho0 * (is - 4.0 * spec.phi_inf) / (w * w * w))
}

pub fn expansion_coefficients(
    spec: &OscillatorSpec,
    rho0: f64,
    tau0: f64,
) -> Result<ExpansionCoefficients, OscillatorError> {
    let w = spec.varpi;
    let (w2, w3) = (w * w, w * w * w);
    let ic = turn_integral(|th| spec.f(tau0 + th / w) * th.cos())?;
    let ip = turn_integral(|th| spec.f_prime(tau0 + th / w) * th.sin())?;
    Ok(ExpansionCoefficients {
        m: -rho0 * rho0 * ic / w2,
        m_by_parts: rho0 * rho0 * ip / w3,
        l: l_value(spec, rho0, tau0)?,
    })
}

/// Grid of `(ρ₀, τ₀)` used for map-level checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapGrid {
    pub rho: (f64, f64),
    pub n_rho: usize,
    pub tau: (f64, f64),
    pub n_tau: usize,
}

impl Default for MapGrid {
    fn default() -> Self {
        Self {
            rho: (1.0, 2.0),
            n_rho: 5,
            tau: (-3.7, 4.1),
            n_tau: 9,
        }
    }
}

impl MapGrid {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let lin = |(a, b): (f64, f64), n: usize, i: usize| {
            if n > 1 {
                a + (b - a) * i as f64 / (n - 1) as f64
            } else {
                0.5 * (a + b)
            }
        };
        (0..self.n_rho)
            .flat_map(|i| (0..self.n_tau).map(move |j| (i, j)))
            .map(|(i, j)| (lin(self.rho, self.n_rho, i), lin(self.tau, self.n_tau, j)))
            .collect()
    }
}

/// The first-order return map `ρ₁ = ρ₀ + εm`, `τ₁ = τ₀ + 2π/ϖ + εl`.
#[derive(Clone, Debug)]
pub struct PoincareExpansion {
    pub spec: OscillatorSpec,
    pub epsilon: f64,
}

fn grid_max(
    grid: &MapGrid,
    h: impl Fn(f64, f64) -> Result<f64, OscillatorError> + Sync,
) -> Result<f64, OscillatorError> {
    Ok(grid
        .points()
        .par_iter()
        .map(|&(r, t)| h(r, t))
        .collect::<Result<Vec<f64>, _>>()?
        .into_iter()
        .fold(0.0, f64::max))
}

impl PoincareExpansion {
    pub fn new(spec: OscillatorSpec, epsilon: f64) -> Self {
        Self { spec, epsilon }
    }

    pub fn coefficients(&self, rho: f64, tau: f64) -> Result<ExpansionCoefficients, OscillatorError> {
        expansion_coefficients(&self.spec, rho, tau)
    }

    pub fn predict(&self, rho: f64, tau: f64) -> Result<(f64, f64), OscillatorError> {
        let c = self.coefficients(rho, tau)?;
        Ok((
            rho + self.epsilon * c.m,
            tau + self.spec.alpha() + self.epsilon * c.l,
        ))
    }

    pub fn numeric(&self, rho: f64, tau: f64) -> Result<(f64, f64), OscillatorError> {
        poincare_numeric(&self.spec, self.epsilon, rho, tau)
    }

    /// Largest gap between the integrated and the predicted map.
    pub fn deviation(&self, grid: &MapGrid) -> Result<f64, OscillatorError> {
        grid_max(grid, |r, t| {
            let a = self.numeric(r, t)?;
            let b = self.predict(r, t)?;
            Ok((a.0 - b.0).abs().max((a.1 - b.1).abs()))
        })
    }

    /// `max |P(ρ₁, −τ₁) − (ρ₀, −τ₀)|` for the integrated map.
    pub fn reversibility_defect(&self, grid: &MapGrid) -> Result<f64, OscillatorError> {
        grid_max(grid, |r, t| {
            let (r1, t1) = self.numeric(r, t)?;
            let (r2, t2) = self.numeric(r1, -t1)?;
            Ok((r2 - r).abs().max((t2 + t).abs()))
        })
    }

    /// `max(|l(ρ,τ) − l(ρ,−τ−α)|, |m(ρ,τ) + m(ρ,−τ−α)|)`.
    pub fn symmetry_defect(&self, grid: &MapGrid) -> Result<f64, OscillatorError> {
        let alpha = self.spec.alpha();
        grid_max(grid, |r, t| {
            let a = self.coefficients(r, t)?;
            let b = self.coefficients(r, -t - alpha)?;
            Ok((a.l - b.l).abs().max((a.m + b.m).abs()))
        })
    }

    /// `l` and `m` as series in `τ` with polynomial dependence on `ρ ∈ dom`.
    pub fn leading_series(
        &self,
        dom: YDomain,
        degree: usize,
    ) -> Result<(APSeries2, APSeries2), OscillatorError> {
        if degree < 2 {
            return Err(OscillatorError::Invalid("ρ-degree below 2".into()));
        }
        let spec = self.spec.forcing.spectrum().clone();
        let w = self.spec.varpi;
        let (w2, w3) = (w * w, w * w * w);
        let lin = APSeries2::from_y_fn(spec.clone(), dom, degree, |y| y);
        let quad = APSeries2::from_y_fn(spec.clone(), dom, degree, |y| y * y);
        let (p1, p2) = (lin.mean_block(), quad.mean_block());
        let b = degree + 1;
        let mut lc = vec![Complex64::new(0.0, 0.0); spec.len() * b];
        let mut mc = lc.clone();
        for i in 0..spec.len() {
            let mu = spec.frequency(i) / w;
            let f = self.spec.forcing.coeffs()[i];
            let mut a = f * sin_moment(mu) / w3;
            if i == spec.zero() {
                a -= 4.0 * self.spec.phi_inf / w3;
            }
            let c = -f * cos_moment(mu) / w2;
            for j in 0..b {
                lc[i * b + j] = a * p1[j];
                mc[i * b + j] = c * p2[j];
            }
        }
        Ok((
            APSeries2::from_coeffs(spec.clone(), dom, degree, lc)?,
            APSeries2::from_coeffs(spec, dom, degree, mc)?,
        ))
    }

    /// The leading map as a small-twist map with `δ = ε` and `α = 2π/ϖ`.
    pub fn small_twist(
        &self,
        dom: YDomain,
        degree: usize,
        strip: StripParams,
    ) -> Result<SmallTwistMap, OscillatorError> {
        let (l, m) = self.leading_series(dom, degree)?;
        Ok(SmallTwistMap::leading(
            self.spec.alpha(),
            self.epsilon,
            l,
            m,
            strip,
        )?)
    }
}

/// Grid deviations of the expansion and the fitted power of `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub eps: Vec<f64>,
    pub deviation: Vec<f64>,
    pub exponent: f64,
}

pub fn expansion_order(
    spec: &OscillatorSpec,
    eps: &[f64],
    grid: &MapGrid,
) -> Result<OrderFit, OscillatorError> {
    let deviation = eps
        .iter()
        .map(|&e| PoincareExpansion::new(spec.clone(), e).deviation(grid))
        .collect::<Result<Vec<f64>, _>>()?;
    let pts: Vec<(f64, f64)> = eps.iter().copied().zip(deviation.iter().copied()).collect();
    Ok(OrderFit {
        eps: eps.to_vec(),
        exponent: loglog_slope(&pts),
        deviation,
    })
}

/// `⟨t(2π) − t(0)⟩ − 2π/ϖ` scaled by `r₀`, averaged over `t₀ = j·e`, `j < samples`, for the
/// untransformed polar flow started at radius `r₀`.
pub fn brute_force_twist(
    spec: &OscillatorSpec,
    r0: f64,
    samples: usize,
) -> Result<f64, OscillatorError> {
    let alpha = spec.alpha();
    let shifts = (0..samples)
        .into_par_iter()
        .map(|j| {
            let t0 = j as f64 * E;
            let fail: Cell<Option<OscillatorError>> = Cell::new(None);
            let end = Dopri5::new(1e-12).integrate(
                |theta, z: &[f64; 2]| match polar_rhs(spec, z[0], theta, z[1]) {
                    Ok((a, b)) => [a, b],
                    Err(e) => {
                        fail.set(Some(e));
                        [0.0, 0.0]
                    }
                },
                0.0,
                [r0, t0],
                TAU,
                |_| {},
            )?;
            if let Some(e) = fail.take() {
                return Err(e);
            }
            Ok(end[1] - t0 - alpha)
        })
        .collect::<Result<Vec<f64>, OscillatorError>>()?;
    Ok(r0 * shifts.iter().sum::<f64>() / samples as f64)
}

/// The `τ₀`-average of `l` and its cross-checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanTwistReport {
    pub rho0: f64,
    pub t_avg: f64,
    /// `T⁻¹ ∫₀^T l(ρ₀, τ₀) dτ₀`.
    pub empirical: f64,
    /// `4ρ₀ϖ⁻³|φ(+∞)|`.
    pub target_magnitude: f64,
    /// `| |empirical| − target | / target`.
    pub relative_error: f64,
    /// `−4ϖ⁻³φ(+∞)`, the closed-form limit without the factor `ρ₀`.
    pub unscaled_limit: f64,
    /// `ρ₀` times the averaged time shift of the untransformed flow at large radius.
    pub brute_force: f64,
    /// Whether `empirical` and `brute_force` share a sign; undefined for a degenerate twist.
    pub sign_consistent: Option<bool>,
    /// `φ(+∞) = 0`, so the mean twist vanishes.
    pub degenerate: bool,
}

/// Radius of the untransformed flow used by the sign check.
const BRUTE_RADIUS: f64 = 2000.0;
const BRUTE_SAMPLES: usize = 200;

pub fn mean_twist(
    spec: &OscillatorSpec,
    rho0: f64,
    t_avg: f64,
) -> Result<MeanTwistReport, OscillatorError> {
    if !(t_avg > 0.0) {
        return Err(OscillatorError::Invalid(format!("averaging window {t_avg} must be positive")));
    }
    check_nonresonant(spec)?;
    let n = 2 * ((t_avg / 0.2).ceil() as usize).max(1);
    let h = t_avg / n as f64;
    let vals = (0..=n)
        .into_par_iter()
        .map(|j| l_value(spec, rho0, j as f64 * h))
        .collect::<Result<Vec<f64>, _>>()?;
    let simpson: f64 = vals
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let w = if j == 0 || j == n {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * v
        })
        .sum::<f64>()
        * h
        / 3.0;
    let empirical = simpson / t_avg;
    let w3 = spec.varpi.powi(3);
    let target = 4.0 * rho0 * spec.phi_inf.abs() / w3;
    let degenerate = spec.phi_inf == 0.0;
    let brute_force = rho0 * brute_force_twist(spec, BRUTE_RADIUS, BRUTE_SAMPLES)?;
    Ok(MeanTwistReport {
        rho0,
        t_avg,
        empirical,
        target_magnitude: target,
        relative_error: if degenerate {
            empirical.abs()
        } else {
            (empirical.abs() - target).abs() / target
        },
        unscaled_limit: -4.0 * spec.phi_inf / w3,
        brute_force,
        sign_consistent: (!degenerate).then(|| empirical.signum() == brute_force.signum()),
        degenerate,
    })
}
