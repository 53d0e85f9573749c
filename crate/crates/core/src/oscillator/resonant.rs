use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poincare::{sin_moment, PoincareExpansion};
use super::{OscillatorError, OscillatorSpec, TrigSum};
use crate::apseries::{APSeries, ModeSeries, MultiIndex, YDomain};
use crate::smalltwist::{
    build_adiabatic_chart, circle_distance, resonant_split, AdiabaticChart, ChartControl,
    FirstIntegral, TOL_RES,
};

/// Forcing modes carrying a coefficient, with `⟨k,ω⟩/ϖ ∈ ℤ` decided up to [`TOL_RES`].
/// The same decision is made through `⟨k,ω⟩α ∈ 2πℤ` with `α = 2π/ϖ`; a disagreement is an error.
fn classify(spec: &OscillatorSpec) -> Result<Vec<(usize, bool)>, OscillatorError> {
    let s = spec.forcing.spectrum();
    let alpha = spec.alpha();
    let mut out = Vec::new();
    for &i in s.positive() {
        if spec.forcing.coeffs()[i] == Complex64::new(0.0, 0.0) {
            continue;
        }
        let x = s.frequency(i) / spec.varpi;
        let by_ratio = TAU * (x - x.round()).abs() <= TOL_RES;
        let by_rotation = circle_distance(s.frequency(i) * alpha) <= TOL_RES;
        if by_ratio != by_rotation {
            return Err(OscillatorError::ResonanceMismatch {
                k: s.mode(i).to_string(),
            });
        }
        out.push((i, by_ratio));
    }
    Ok(out)
}

pub(crate) fn check_nonresonant(spec: &OscillatorSpec) -> Result<(), OscillatorError> {
    let s = spec.forcing.spectrum();
    match classify(spec)?.into_iter().find(|&(_, r)| r) {
        Some((i, _)) => Err(OscillatorError::ResonantForcing {
            k: s.mode(i).to_string(),
        }),
        None => Ok(()),
    }
}

/// `f_𝔖`: the forcing restricted to its resonant modes.
#[derive(Clone, Debug)]
pub struct ResonantComponent {
    pub series: APSeries,
    /// Resonant `k > 0`.
    pub modes: Vec<MultiIndex>,
}

pub fn resonant_component(spec: &OscillatorSpec) -> Result<ResonantComponent, OscillatorError> {
    let s = spec.forcing.spectrum();
    let mut series = spec.forcing.zeroed();
    let mut modes = Vec::new();
    for (i, res) in classify(spec)? {
        if res {
            let j = s.neg(i);
            series.coeffs_mut()[i] = spec.forcing.coeffs()[i];
            series.coeffs_mut()[j] = spec.forcing.coeffs()[j];
            modes.push(s.mode(i).clone());
        }
    }
    Ok(ResonantComponent { series, modes })
}

/// `D(τ) = −4φ(+∞) + ∫₀^{2π} f_𝔖(τ+θ/ϖ) sin θ dθ` and `D'(τ)` from the closed-form moments.
#[derive(Clone, Debug)]
struct TwistFunction {
    phi_inf: f64,
    varpi: f64,
    trig: TrigSum,
}

impl TwistFunction {
    fn new(spec: &OscillatorSpec, comp: &ResonantComponent) -> Self {
        Self {
            phi_inf: spec.phi_inf,
            varpi: spec.varpi,
            trig: TrigSum::from_series(&comp.series),
        }
    }

    fn eval(&self, tau: f64) -> (f64, f64) {
        let mut d = -4.0 * self.phi_inf + self.trig.mean * sin_moment(0.0).re;
        let mut dp = 0.0;
        for &(lam, c) in &self.trig.terms {
            let z = c * Complex64::new(0.0, lam * tau).exp() * sin_moment(lam / self.varpi);
            d += 2.0 * z.re;
            dp += 2.0 * (Complex64::new(0.0, lam) * z).re;
        }
        (d, dp)
    }
}

/// `min |D|` over a uniform grid of one period `2π/ϖ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistMargin {
    pub margin: f64,
    pub argmin: f64,
    /// Sign of `D`, constant on the grid.
    pub sign: f64,
    pub grid: usize,
}

/// On a grid of `10⁴` points.
pub fn twist_margin(spec: &OscillatorSpec) -> Result<TwistMargin, OscillatorError> {
    twist_margin_on(spec, 10_000)
}

pub fn twist_margin_on(spec: &OscillatorSpec, n: usize) -> Result<TwistMargin, OscillatorError> {
    if n == 0 {
        return Err(OscillatorError::Invalid("empty τ₀ grid".into()));
    }
    let d = TwistFunction::new(spec, &resonant_component(spec)?);
    let period = spec.alpha();
    let mut best = (f64::INFINITY, 0.0);
    let mut sign = 0.0;
    for j in 0..n {
        let tau = period * j as f64 / n as f64;
        let v = d.eval(tau).0;
        if v == 0.0 || (sign != 0.0 && v.signum() != sign) {
            return Err(OscillatorError::MarginZero { tau0: tau, value: v });
        }
        sign = v.signum();
        if v.abs() < best.0 {
            best = (v.abs(), tau);
        }
    }
    Ok(TwistMargin {
        margin: best.0,
        argmin: best.1,
        sign,
        grid: n,
    })
}

/// The chart of the resonant leading map and the orientation applied to it.
#[derive(Clone, Debug)]
pub struct OscillatorChart {
    pub chart: AdiabaticChart,
    /// `σ = sign D`; `L̂`, `M̂` and `I` are multiplied by `σ` so that `L̂ > 0`.
    pub orientation: f64,
    pub margin: TwistMargin,
    pub modes: Vec<MultiIndex>,
}

/// Builds `L̂ = ρϖ⁻³D(τ)`, `M̂ = ρ²ϖ⁻³D'(τ)` from the resonant split of the leading map
/// on `ρ ∈ outer` and the first integral `I = σρ/D(τ)`, then the chart.
pub fn resonant_chart(
    spec: &OscillatorSpec,
    outer: (f64, f64),
    inner: (f64, f64),
    degree: usize,
    ctl: &ChartControl,
) -> Result<OscillatorChart, OscillatorError> {
    let dom = YDomain::new(0.5 * (outer.0 + outer.1), 0.5 * (outer.1 - outer.0))?;
    let (l, m) = PoincareExpansion::new(spec.clone(), 0.0).leading_series(dom, degree)?;
    let alpha = spec.alpha();
    let split = resonant_split(&l, &m, alpha, TOL_RES)?;
    let comp = resonant_component(spec)?;
    if let Some(k) = split.resonant_modes.iter().find(|k| !comp.modes.contains(k)) {
        return Err(OscillatorError::ResonanceMismatch { k: k.to_string() });
    }
    let margin = twist_margin(spec)?;
    let sigma = margin.sign;
    let (l_hat, m_hat) = (split.l_hat.scale(sigma), split.m_hat.scale(sigma));
    let d = TwistFunction::new(spec, &comp);
    let dv = d.clone();
    let integral = FirstIntegral::with_gradient(
        move |tau, rho| sigma * rho / dv.eval(tau).0,
        move |tau, rho| {
            let (v, vp) = d.eval(tau);
            (-sigma * rho * vp / (v * v), sigma / v)
        },
    );
    let chart = build_adiabatic_chart(&l_hat, &m_hat, &integral, alpha, outer, inner, ctl)?;
    Ok(OscillatorChart {
        chart,
        orientation: sigma,
        margin,
        modes: comp.modes,
    })
}
