use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{polar_rhs, OscillatorError, OscillatorSpec};
use crate::numerics::{adaptive_simpson, gauss_kronrod, loglog_slope};

/// Absolute tolerance of the θ-quadratures.
pub const QUAD_TOL: f64 = 1e-11;

fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64, OscillatorError> {
    Ok(adaptive_simpson(f, a, b, QUAD_TOL)?)
}

/// `∫₀^{2π} h(ρ sin ξ)·w(ξ) dξ` for weights with the symmetries of `sin ξ` or `sin² ξ`:
/// four times the integral over `[0, π/2]`.
fn quarter(h: impl Fn(f64) -> f64) -> Result<f64, OscillatorError> {
    Ok(4.0 * gauss_kronrod(h, 0.0, FRAC_PI_2, 1e-15, 1e-13)?)
}

/// `S(r,θ) = ∫₀^θ [ϖ⁻²φ(r sin ξ)cos ξ + ϖ⁻¹G(r sin ξ) sin ξ] dξ`.
fn s_change(spec: &OscillatorSpec, r: f64, theta: f64) -> Result<f64, OscillatorError> {
    let w = spec.varpi;
    quad(
        |xi| {
            let (s, c) = xi.sin_cos();
            spec.phi.value(r * s) * c / (w * w) + spec.damping.primitive(r * s, 0) * s / w
        },
        0.0,
        theta,
    )
}

/// `(∂S/∂r, ∂S/∂θ)`.
fn s_gradient(spec: &OscillatorSpec, r: f64, theta: f64) -> Result<(f64, f64), OscillatorError> {
    let w = spec.varpi;
    let sr = quad(
        |xi| {
            let (s, c) = xi.sin_cos();
            spec.phi.derivative(r * s, 1) * s * c / (w * w) + spec.damping.g(r * s) * s * s / w
        },
        0.0,
        theta,
    )?;
    let (s, c) = theta.sin_cos();
    let st = spec.phi.value(r * s) * c / (w * w) + spec.damping.primitive(r * s, 0) * s / w;
    Ok((sr, st))
}

/// `ϱ = r + S(r,θ)`.
pub fn transform_s(spec: &OscillatorSpec, r: f64, theta: f64) -> Result<f64, OscillatorError> {
    Ok(r + s_change(spec, r, theta)?)
}

/// `r` with `r + S(r,θ) = ϱ`, by fixed-point iteration.
pub fn invert_s(spec: &OscillatorSpec, varrho: f64, theta: f64) -> Result<f64, OscillatorError> {
    let mut r = varrho;
    for _ in 0..100 {
        let next = varrho - s_change(spec, r, theta)?;
        if (next - r).abs() <= 1e-14 * varrho.abs().max(1.0) {
            return Ok(next);
        }
        r = next;
    }
    Err(OscillatorError::InversionStalled { varrho })
}

/// `ϱ`, `dϱ/dθ` and `dt/dθ` along the polar flow at `(r, θ, t)`.
struct RadialRate {
    varrho: f64,
    rate: f64,
    dt: f64,
}

fn radial_rate(
    spec: &OscillatorSpec,
    r: f64,
    theta: f64,
    t: f64,
) -> Result<RadialRate, OscillatorError> {
    let (p1, p2) = polar_rhs(spec, r, theta, t)?;
    let (sr, st) = s_gradient(spec, r, theta)?;
    Ok(RadialRate {
        varrho: r + s_change(spec, r, theta)?,
        rate: p1 * (1.0 + sr) + st,
        dt: p2,
    })
}

/// `dϱ/dθ − ϖ⁻²f(t) cos θ` at the point with new radius `ϱ`.
pub fn s_remainder(
    spec: &OscillatorSpec,
    varrho: f64,
    theta: f64,
    t: f64,
) -> Result<f64, OscillatorError> {
    let r = invert_s(spec, varrho, theta)?;
    let rr = radial_rate(spec, r, theta, t)?;
    let w = spec.varpi;
    Ok(rr.rate - spec.f(t) * theta.cos() / (w * w))
}

/// `J(ρ) = (2πρ)⁻¹ ∫₀^{2π} φ(ρ sin ξ) sin ξ dξ`.
pub fn compute_j(spec: &OscillatorSpec, rho: f64) -> Result<f64, OscillatorError> {
    if rho <= 0.0 {
        return Err(OscillatorError::Invalid(format!("ρ = {rho} must be positive")));
    }
    let v = quarter(|xi| {
        let s = xi.sin();
        spec.phi.value(rho * s) * s
    })?;
    Ok(v / (TAU * rho))
}

/// `J'(ρ) = −J/ρ + (2πρ)⁻¹ ∫ φ'(ρ sin ξ) sin² ξ dξ`.
pub(crate) fn j_prime_exact(spec: &OscillatorSpec, rho: f64) -> Result<f64, OscillatorError> {
    let v = quarter(|xi| {
        let s = xi.sin();
        spec.phi.derivative(rho * s, 1) * s * s
    })?;
    Ok(-compute_j(spec, rho)? / rho + v / (TAU * rho))
}

/// `J'(ρ)` by central differences at `h = ρ/100` and `h/2` with one Richardson step.
pub fn j_derivative(spec: &OscillatorSpec, rho: f64) -> Result<f64, OscillatorError> {
    let d = |h: f64| -> Result<f64, OscillatorError> {
        Ok((compute_j(spec, rho + h)? - compute_j(spec, rho - h)?) / (2.0 * h))
    };
    let h = 1e-2 * rho;
    let (a, b) = (d(h)?, d(0.5 * h)?);
    Ok((4.0 * b - a) / 3.0)
}

/// `ρ^{k+1} J^{(k)}(ρ)` along a range of `ρ` against the limit `(−1)^k k! (2/π) φ(+∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JAsymptotics {
    pub k: usize,
    pub limit: f64,
    /// `(ρ, ρ^{k+1} J^{(k)}(ρ))`.
    pub rows: Vec<(f64, f64)>,
    /// Fitted exponent of `|J^{(k)}|` against `ρ`; `−(k+1)` in the limit.
    pub slope: f64,
}

impl JAsymptotics {
    /// Deviation from the limit at the largest `ρ`, relative when the limit is nonzero.
    pub fn error(&self) -> f64 {
        let v = self.rows.last().map(|r| r.1).unwrap_or(f64::NAN);
        if self.limit == 0.0 {
            v.abs()
        } else {
            ((v - self.limit) / self.limit).abs()
        }
    }
}

pub fn check_j_asymptotics(
    spec: &OscillatorSpec,
    k: usize,
    rhos: &[f64],
) -> Result<JAsymptotics, OscillatorError> {
    if k > 1 {
        return Err(OscillatorError::Invalid(format!("derivative order {k} not supported")));
    }
    let rows = rhos
        .iter()
        .map(|&rho| {
            let v = if k == 0 {
                compute_j(spec, rho)?
            } else {
                j_derivative(spec, rho)?
            };
            Ok((rho, rho.powi(k as i32 + 1) * v))
        })
        .collect::<Result<Vec<_>, OscillatorError>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|&(rho, v)| (rho, (v / rho.powi(k as i32 + 1)).abs()))
        .collect();
    let sign = if k == 0 { 1.0 } else { -1.0 };
    Ok(JAsymptotics {
        k,
        limit: sign * 2.0 / PI * spec.phi_inf,
        rows,
        slope: loglog_slope(&pts),
    })
}

/// `∫₀^θ φ(ϱ sin ξ) sin ξ dξ` and `∫₀^θ G(ϱ sin ξ) cos ξ dξ`.
fn t_integrals(spec: &OscillatorSpec, varrho: f64, theta: f64) -> Result<(f64, f64), OscillatorError> {
    let a = quad(
        |xi| {
            let s = xi.sin();
            spec.phi.value(varrho * s) * s
        },
        0.0,
        theta,
    )?;
    let b = quad(
        |xi| {
            let (s, c) = xi.sin_cos();
            spec.damping.primitive(varrho * s, 0) * c
        },
        0.0,
        theta,
    )?;
    Ok((a, b))
}

/// `T(ϱ,θ) = ϖ⁻³ϱ⁻¹∫₀^θ[φ(ϱ sin ξ) sin ξ − ϱJ(ϱ)]dξ − ϖ⁻²ϱ⁻¹∫₀^θ G(ϱ sin ξ) cos ξ dξ`,
/// so that `τ = t + T`.
pub fn transform_t(spec: &OscillatorSpec, varrho: f64, theta: f64) -> Result<f64, OscillatorError> {
    let w = spec.varpi;
    let (a, b) = t_integrals(spec, varrho, theta)?;
    let j = compute_j(spec, varrho)?;
    Ok((a / varrho - j * theta) / (w * w * w) - b / (w * w * varrho))
}

/// `(∂T/∂ϱ, ∂T/∂θ)`.
fn t_gradient(spec: &OscillatorSpec, varrho: f64, theta: f64) -> Result<(f64, f64), OscillatorError> {
    let w = spec.varpi;
    let (w2, w3) = (w * w, w * w * w);
    let (a, b) = t_integrals(spec, varrho, theta)?;
    let da = quad(
        |xi| {
            let s = xi.sin();
            spec.phi.derivative(varrho * s, 1) * s * s
        },
        0.0,
        theta,
    )?;
    let db = quad(
        |xi| {
            let (s, c) = xi.sin_cos();
            spec.damping.g(varrho * s) * s * c
        },
        0.0,
        theta,
    )?;
    let j = compute_j(spec, varrho)?;
    let jp = j_prime_exact(spec, varrho)?;
    let v2 = varrho * varrho;
    let t_rho = (-a / v2 + da / varrho - jp * theta) / w3 - (-b / v2 + db / varrho) / w2;
    let (s, c) = theta.sin_cos();
    let t_theta = (spec.phi.value(varrho * s) * s / varrho - j) / w3
        - spec.damping.primitive(varrho * s, 0) * c / (w2 * varrho);
    Ok((t_rho, t_theta))
}

/// `dτ/dθ − ϖ⁻¹ + ϖ⁻³J(ϱ) − ϖ⁻³ϱ⁻¹f(τ) sin θ` at `(ϱ, θ, τ)`.
pub fn t_remainder(
    spec: &OscillatorSpec,
    varrho: f64,
    theta: f64,
    tau: f64,
) -> Result<f64, OscillatorError> {
    let w = spec.varpi;
    let t = tau - transform_t(spec, varrho, theta)?;
    let r = invert_s(spec, varrho, theta)?;
    let rr = radial_rate(spec, r, theta, t)?;
    let (t_rho, t_theta) = t_gradient(spec, rr.varrho, theta)?;
    let dtau = rr.dt + t_theta + t_rho * rr.rate;
    let j = compute_j(spec, varrho)?;
    Ok(dtau - 1.0 / w + j / (w * w * w) - spec.f(tau) * theta.sin() / (w * w * w * varrho))
}

/// Which straightening remainder to measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Remainder {
    /// `dϱ/dθ − ϖ⁻²f cos θ`, expected `O(ϱ⁻¹)`.
    Radius,
    /// `dτ/dθ − ϖ⁻¹ + ϖ⁻³J − ϖ⁻³ϱ⁻¹f sin θ`, expected `O(ϱ⁻²)`.
    Time,
}

/// Grid sup of a remainder at several radii and the fitted power.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderFit {
    pub kind: Remainder,
    pub scales: Vec<f64>,
    pub sup: Vec<f64>,
    pub slope: f64,
}

/// Sup over `n_theta × n_t` grid points of the remainder, at each `ϱ` in `scales`.
pub fn remainder_fit(
    spec: &OscillatorSpec,
    kind: Remainder,
    scales: &[f64],
    n_theta: usize,
    n_t: usize,
) -> Result<RemainderFit, OscillatorError> {
    let pts: Vec<(f64, f64)> = (0..n_theta)
        .flat_map(|i| {
            let theta = TAU * (i as f64 + 0.5) / n_theta as f64;
            (0..n_t).map(move |j| (theta, 1.3 + 7.1 * j as f64 / n_t as f64))
        })
        .collect();
    let mut sup = Vec::with_capacity(scales.len());
    for &v in scales {
        let s = pts
            .par_iter()
            .map(|&(theta, t)| {
                let x = match kind {
                    Remainder::Radius => s_remainder(spec, v, theta, t)?,
                    Remainder::Time => t_remainder(spec, v, theta, t)?,
                };
                Ok(x.abs())
            })
            .collect::<Result<Vec<f64>, OscillatorError>>()?
            .into_iter()
            .fold(0.0, f64::max);
        sup.push(s);
    }
    let fit: Vec<(f64, f64)> = scales.iter().copied().zip(sup.iter().copied()).collect();
    Ok(RemainderFit {
        kind,
        scales: scales.to_vec(),
        slope: loglog_slope(&fit),
        sup,
    })
}
