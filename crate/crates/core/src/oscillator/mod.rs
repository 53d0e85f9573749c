//! The forced oscillator `x'' + g(x)x' + ϖ²x + φ(x) = f(t)` with odd `g`, `φ`, `f`.
//!
//! Covers direct simulation, the polar clock `θ`, the near-identity changes that
//! straighten the equations for large amplitude, the return map over one turn of `θ`
//! with its first-order expansion, and the twist and resonance checks that decide
//! whether invariant curves exist.

mod bounded;
mod poincare;
mod resonant;
mod transforms;

pub use bounded::{boundedness_experiment, radial_inits, BoundednessReport, OrbitStats};
pub use poincare::{
    brute_force_twist, cos_moment, exp_integral, expansion_coefficients, expansion_order,
    forcing_moments, mean_twist, poincare_numeric, sin_moment, ExpansionCoefficients, MapGrid,
    MeanTwistReport, OrderFit, PoincareExpansion, POINCARE_TOL,
};
pub use resonant::{
    resonant_chart, resonant_component, twist_margin, twist_margin_on, OscillatorChart,
    ResonantComponent, TwistMargin,
};
pub use transforms::{
    check_j_asymptotics, compute_j, invert_s, j_derivative, remainder_fit, s_remainder,
    t_remainder, transform_s, transform_t, JAsymptotics, Remainder, RemainderFit, QUAD_TOL,
};

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apseries::{APSeries, ModeSeries, SeriesError};
use crate::numerics::{Dopri5, OdeError, QuadError, StepRecord};
use crate::smalltwist::SmallTwistError;

/// Sampled oddness tolerance.
pub const ODD_TOL: f64 = 1e-12;
/// Largest allowed gap between a supplied `φ(+∞)` and its estimate.
pub const PHI_INF_TOL: f64 = 1e-6;
const DECAY_POINTS: [f64; 3] = [1e2, 1e3, 1e4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OscillatorError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{what} is not odd: defect {defect:e}")]
    NotOdd { what: &'static str, defect: f64 },
    #[error("decay check failed for {what}, derivative order {k}: {values:?}")]
    DecayViolated {
        what: &'static str,
        k: usize,
        values: [f64; 3],
    },
    #[error("φ(+∞) = {supplied} disagrees with the estimate {estimated}")]
    PhiInfMismatch { supplied: f64, estimated: f64 },
    #[error("θ' ≤ 0 at r = {r}, θ = {theta}, t = {t} (denominator {denominator:e}); r too small")]
    ThetaNotMonotone {
        r: f64,
        theta: f64,
        t: f64,
        denominator: f64,
    },
    #[error("ρ = {rho} left [1/2, 3] at θ = {theta}")]
    AnnulusEscape { theta: f64, rho: f64 },
    #[error("forcing mode k = {k} satisfies ⟨k,ω⟩/ϖ ∈ ℤ; use the resonant path")]
    ResonantForcing { k: String },
    #[error("twist margin vanishes near τ₀ = {tau0} (value {value:e})")]
    MarginZero { tau0: f64, value: f64 },
    #[error("inverse change of radius stalled at ϱ = {varrho}")]
    InversionStalled { varrho: f64 },
    #[error("resonance tests disagree at k = {k}")]
    ResonanceMismatch { k: String },
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    SmallTwist(#[from] SmallTwistError),
}

/// The odd restoring nonlinearity `φ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Restoring {
    Zero,
    /// `a·arctan(c x)`.
    Arctan { amplitude: f64, scale: f64 },
    /// `a·tanh(c x)`.
    Tanh { amplitude: f64, scale: f64 },
}

impl Restoring {
    pub fn arctan() -> Self {
        Self::Arctan {
            amplitude: 1.0,
            scale: 1.0,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// `φ^{(k)}(x)` for `k ≤ 2`.
    pub fn derivative(&self, x: f64, k: usize) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Arctan { amplitude: a, scale: c } => {
                let q = 1.0 + c * c * x * x;
                match k {
                    0 => a * (c * x).atan(),
                    1 => a * c / q,
                    _ => -2.0 * a * c * c * c * x / (q * q),
                }
            }
            Self::Tanh { amplitude: a, scale: c } => {
                let t = (c * x).tanh();
                match k {
                    0 => a * t,
                    1 => a * c * (1.0 - t * t),
                    _ => -2.0 * a * c * c * t * (1.0 - t * t),
                }
            }
        }
    }
}

/// The odd damping coefficient `g` through its even primitive `G`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Damping {
    Zero,
    /// `g(x) = a x e^{−x²}`, `G(x) = a(1 − e^{−x²})/2`.
    Gauss { amplitude: f64 },
}

impl Damping {
    pub fn g(&self, x: f64) -> f64 {
        self.primitive(x, 1)
    }

    /// `G^{(k)}(x)` for `k ≤ 2`.
    pub fn primitive(&self, x: f64, k: usize) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Gauss { amplitude: a } => {
                let e = (-x * x).exp();
                match k {
                    0 => 0.5 * a * (1.0 - e),
                    1 => a * x * e,
                    _ => a * (1.0 - 2.0 * x * x) * e,
                }
            }
        }
    }
}

/// Active terms `Σ 2 Re(c e^{iλt})` of a real series, for fast evaluation on the line.
#[derive(Clone, Debug, Default)]
pub(crate) struct TrigSum {
    pub(crate) mean: f64,
    pub(crate) terms: Vec<(f64, Complex64)>,
}

impl TrigSum {
    fn from_series(f: &APSeries) -> Self {
        let spec = f.spectrum();
        let terms = spec
            .positive()
            .iter()
            .filter(|&&i| f.coeffs()[i] != Complex64::new(0.0, 0.0))
            .map(|&i| (spec.frequency(i), f.coeffs()[i]))
            .collect();
        Self {
            mean: f.mean(),
            terms,
        }
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        self.terms.iter().fold(self.mean, |acc, &(w, c)| {
            acc + 2.0 * (c * Complex64::new(0.0, w * t).exp()).re
        })
    }

    pub(crate) fn derivative(&self, t: f64) -> f64 {
        self.terms.iter().fold(0.0, |acc, &(w, c)| {
            acc + 2.0 * (Complex64::new(0.0, w) * c * Complex64::new(0.0, w * t).exp()).re
        })
    }
}

/// Samples of `|x^k φ^{(k)}|` (with `φ − φ(+∞)` at `k = 0`) and `|x^k G^{(k)}|` at `x = 10², 10³, 10⁴`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub phi: [[f64; 3]; 3],
    pub damping: [[f64; 3]; 3],
    /// Largest sampled `|x^k G^{(k)}|`.
    pub damping_bound: f64,
}

/// `ϖ`, the nonlinearities and the odd almost periodic forcing.
#[derive(Clone, Debug)]
pub struct OscillatorSpec {
    pub varpi: f64,
    pub phi: Restoring,
    pub damping: Damping,
    pub forcing: APSeries,
    pub phi_inf: f64,
    pub decay: DecayReport,
    trig: TrigSum,
}

/// `2φ(2X) − φ(X)` at `X = 10⁶`, exact for a `1/x` approach.
fn estimate_phi_inf(phi: &Restoring) -> f64 {
    2.0 * phi.value(2e6) - phi.value(1e6)
}

fn decays(v: &[f64; 3]) -> bool {
    v.iter().all(|x| x.is_finite())
        && (v[2] == 0.0 || (v[0] >= v[1] && v[1] >= v[2] && v[2] <= 0.1 * v[0]))
}

impl OscillatorSpec {
    /// Validates oddness, decay and `φ(+∞)`; the limit is estimated when not supplied.
    pub fn new(
        varpi: f64,
        phi: Restoring,
        damping: Damping,
        forcing: APSeries,
        phi_inf: Option<f64>,
    ) -> Result<Self, OscillatorError> {
        if !(varpi > 0.0 && varpi.is_finite()) {
            return Err(OscillatorError::Invalid(format!("ϖ = {varpi} must be positive")));
        }
        let trig = TrigSum::from_series(&forcing);
        let probes: Vec<f64> = (1..=40).map(|i| 0.37 * i as f64 * (1.0 + 0.1 * i as f64)).collect();
        let odd = |h: &dyn Fn(f64) -> f64| {
            probes
                .iter()
                .map(|&x| (h(x) + h(-x)).abs())
                .fold(0.0, f64::max)
        };
        for (what, defect) in [
            ("φ", odd(&|x| phi.value(x))),
            ("g", odd(&|x| damping.g(x))),
            ("f", odd(&|t| trig.value(t))),
        ] {
            if defect > ODD_TOL {
                return Err(OscillatorError::NotOdd { what, defect });
            }
        }
        let estimated = estimate_phi_inf(&phi);
        let phi_inf = match phi_inf {
            Some(s) if (s - estimated).abs() > PHI_INF_TOL => {
                return Err(OscillatorError::PhiInfMismatch {
                    supplied: s,
                    estimated,
                })
            }
            Some(s) => s,
            None => estimated,
        };
        let mut decay = DecayReport {
            phi: [[0.0; 3]; 3],
            damping: [[0.0; 3]; 3],
            damping_bound: 0.0,
        };
        for k in 0..3 {
            for (j, &x) in DECAY_POINTS.iter().enumerate() {
                let p = if k == 0 {
                    phi.value(x) - phi_inf
                } else {
                    x.powi(k as i32) * phi.derivative(x, k)
                };
                decay.phi[k][j] = p.abs();
                decay.damping[k][j] = (x.powi(k as i32) * damping.primitive(x, k)).abs();
            }
            if !decays(&decay.phi[k]) {
                return Err(OscillatorError::DecayViolated {
                    what: "φ",
                    k,
                    values: decay.phi[k],
                });
            }
            let g = decay.damping[k];
            if !g.iter().all(|v| v.is_finite()) || g[2] > 10.0 * g[0].max(g[1]) + 1e-12 {
                return Err(OscillatorError::DecayViolated {
                    what: "G",
                    k,
                    values: g,
                });
            }
        }
        decay.damping_bound = decay.damping.iter().flatten().fold(0.0, |a, &b| a.max(b));
        Ok(Self {
            varpi,
            phi,
            damping,
            forcing,
            phi_inf,
            decay,
            trig,
        })
    }

    /// `2π/ϖ`, the rotation of the return map.
    pub fn alpha(&self) -> f64 {
        TAU / self.varpi
    }

    pub fn f(&self, t: f64) -> f64 {
        self.trig.value(t)
    }

    pub fn f_prime(&self, t: f64) -> f64 {
        self.trig.derivative(t)
    }

    pub(crate) fn trig(&self) -> &TrigSum {
        &self.trig
    }

    /// Same oscillator with another forcing.
    pub fn with_forcing(&self, forcing: APSeries) -> Result<Self, OscillatorError> {
        Self::new(self.varpi, self.phi, self.damping, forcing, Some(self.phi_inf))
    }

    /// Right-hand side of `x' = ϖy − G(x)`, `y' = −ϖx − ϖ⁻¹φ(x) + ϖ⁻¹f(t)`.
    pub fn rhs(&self, t: f64, z: &[f64; 2]) -> [f64; 2] {
        let w = self.varpi;
        [
            w * z[1] - self.damping.primitive(z[0], 0),
            -w * z[0] + (self.f(t) - self.phi.value(z[0])) / w,
        ]
    }

    /// `x'` recovered from the state.
    pub fn velocity(&self, z: &[f64; 2]) -> f64 {
        self.varpi * z[1] - self.damping.primitive(z[0], 0)
    }
}

/// `(dr/dθ, dt/dθ)` in the polar clock `x = r sin θ`, `y = r cos θ`.
pub fn polar_rhs(
    spec: &OscillatorSpec,
    r: f64,
    theta: f64,
    t: f64,
) -> Result<(f64, f64), OscillatorError> {
    let w = spec.varpi;
    let (s, c) = theta.sin_cos();
    let u = r * s;
    let a = spec.f(t) - spec.phi.value(u);
    let g = spec.damping.primitive(u, 0);
    let den = w - a * s / (w * r) - g * c / r;
    if !(den > 0.0) {
        return Err(OscillatorError::ThetaNotMonotone {
            r,
            theta,
            t,
            denominator: den,
        });
    }
    Ok(((a * c / w - g * s) / den, 1.0 / den))
}

/// Accepted steps of one integration with their continuous extensions.
#[derive(Clone, Debug)]
pub struct Trajectory {
    steps: Vec<StepRecord<2>>,
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub t0: f64,
    pub t1: f64,
}

impl Trajectory {
    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Dense output at `t` between the end points.
    pub fn at(&self, t: f64) -> [f64; 2] {
        if self.steps.is_empty() {
            return self.start;
        }
        let fwd = self.t1 >= self.t0;
        let k = self.steps.partition_point(|s| if fwd { s.t1 < t } else { s.t1 > t });
        self.steps[k.min(self.steps.len() - 1)].interpolate(t)
    }

    /// `max |(x, y)|` over step end points.
    pub fn max_radius(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.y1[0].hypot(s.y1[1]))
            .fold(self.start[0].hypot(self.start[1]), f64::max)
    }
}

fn check_tol(tol: f64) -> Result<(), OscillatorError> {
    if (1e-13..1.0).contains(&tol) {
        Ok(())
    } else {
        Err(OscillatorError::Invalid(format!("tolerance {tol:e} outside [1e-13, 1)")))
    }
}

/// Integrates the first-order system from `t_span.0` to `t_span.1`, keeping dense output.
pub fn integrate(
    spec: &OscillatorSpec,
    state0: [f64; 2],
    t_span: (f64, f64),
    tol: f64,
) -> Result<Trajectory, OscillatorError> {
    check_tol(tol)?;
    let mut steps = Vec::new();
    let end = Dopri5::new(tol).integrate(
        |t, z| spec.rhs(t, z),
        t_span.0,
        state0,
        t_span.1,
        |rec| steps.push(rec.clone()),
    )?;
    Ok(Trajectory {
        steps,
        start: state0,
        end,
        t0: t_span.0,
        t1: t_span.1,
    })
}

/// End point only.
pub fn flow(
    spec: &OscillatorSpec,
    state0: [f64; 2],
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<[f64; 2], OscillatorError> {
    check_tol(tol)?;
    Ok(Dopri5::new(tol).integrate(|t, z| spec.rhs(t, z), t0, state0, t1, |_| {})?)
}

/// `(x, y, t) ↦ (−x, y, −t)`, under which the flow is reversible.
pub fn involution(z: [f64; 2]) -> [f64; 2] {
    [-z[0], z[1]]
}

/// Largest `|z̃(−t) − R z(t)|` on `n` times in `[0, T]`, where `z` starts at `z₀` and `z̃`
/// starts at `R z₀` and runs backward.
pub fn reversibility_defect(
    spec: &OscillatorSpec,
    state0: [f64; 2],
    t_end: f64,
    tol: f64,
    n: usize,
) -> Result<f64, OscillatorError> {
    let fwd = integrate(spec, state0, (0.0, t_end), tol)?;
    let bwd = integrate(spec, involution(state0), (0.0, -t_end), tol)?;
    let mut worst: f64 = 0.0;
    for j in 0..=n {
        let t = t_end * j as f64 / n as f64;
        let a = involution(fwd.at(t));
        let b = bwd.at(-t);
        worst = worst.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
    }
    Ok(worst)
}
