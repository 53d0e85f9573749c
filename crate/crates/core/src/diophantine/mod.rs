//! Approximation functions, their exponential envelopes and nonresonance scans.

use std::f64::consts::{E, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apseries::{admissible_indices, FrequencyBasis, MultiIndex, SpatialStructure};
use crate::numerics::{gauss_kronrod, golden_max};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiophantineError {
    #[error("approximation function evaluated at t = {0} < 1")]
    DomainError(f64),
    #[error("invalid approximation function: {0}")]
    InvalidFunction(String),
    #[error("resonance at k = {}, j = {} (observed {:e})", .0.argmin_k, .0.argmin_j, .0.gamma_observed)]
    ResonanceFound(Box<NonresonanceReport>),
    #[error("scan bounds must be at least 1")]
    InvalidBounds,
}

/// Nondecreasing weight of small divisors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ApproximationFunction {
    /// `(1 + t)^τ`.
    Polynomial { tau: f64 },
    /// `exp(a·t / log^σ(t + e))`.
    SubExponential { a: f64, sigma: f64 },
}

impl Default for ApproximationFunction {
    fn default() -> Self {
        Self::Polynomial { tau: 3.0 }
    }
}

impl ApproximationFunction {
    pub fn polynomial(tau: f64) -> Result<Self, DiophantineError> {
        let d = Self::Polynomial { tau };
        d.validate()?;
        Ok(d)
    }

    pub fn sub_exponential(a: f64, sigma: f64) -> Result<Self, DiophantineError> {
        let d = Self::SubExponential { a, sigma };
        d.validate()?;
        Ok(d)
    }

    /// Parameter ranges, monotonicity and the `log Δ(t)/t` decay at 100 log-spaced samples.
    pub fn validate(&self) -> Result<(), DiophantineError> {
        match *self {
            Self::Polynomial { tau } if !(tau > 0.0 && tau.is_finite()) => {
                return Err(DiophantineError::InvalidFunction(format!("τ = {tau}")));
            }
            Self::SubExponential { a, sigma }
                if !(a > 0.0 && a.is_finite() && sigma > 1.0 && sigma.is_finite()) =>
            {
                return Err(DiophantineError::InvalidFunction(format!(
                    "a = {a}, σ = {sigma} (need a > 0, σ > 1)"
                )));
            }
            _ => {}
        }
        let ts: Vec<f64> = (0..100).map(|i| 10f64.powf(6.0 * i as f64 / 99.0)).collect();
        let mut prev_val = 0.0;
        let mut prev_ratio = f64::INFINITY;
        for &t in &ts {
            let ld = self.log_value(t);
            if ld < 0.0 || ld < prev_val {
                return Err(DiophantineError::InvalidFunction(format!(
                    "not nondecreasing with Δ ≥ 1 at t = {t}"
                )));
            }
            let ratio = ld / t;
            if ratio > prev_ratio * (1.0 + 1e-12) {
                return Err(DiophantineError::InvalidFunction(format!(
                    "log Δ(t)/t increases at t = {t}"
                )));
            }
            prev_val = ld;
            prev_ratio = ratio;
        }
        Ok(())
    }

    /// `log Δ(t)` by the family formula, valid for every `t ≥ 0`.
    pub fn log_value(&self, t: f64) -> f64 {
        match *self {
            Self::Polynomial { tau } => tau * t.ln_1p(),
            Self::SubExponential { a, sigma } => a * t / (t + E).ln().powf(sigma),
        }
    }

    /// `Δ(t)` for `t ≥ 1`.
    pub fn eval(&self, t: f64) -> Result<f64, DiophantineError> {
        if !(t >= 1.0) {
            return Err(DiophantineError::DomainError(t));
        }
        Ok(self.log_value(t).exp())
    }

    /// `∫_1^∞ log Δ(t)/t² dt`: closed form for the polynomial family, quadrature plus
    /// a tail bound otherwise.
    pub fn log_integral(&self) -> f64 {
        match *self {
            // ∫_1^∞ τ log(1+t)/t² dt = τ·2 log 2
            Self::Polynomial { tau } => 2.0 * tau * 2f64.ln(),
            Self::SubExponential { a, sigma } => {
                let cut = 1e8f64;
                // substitute t = e^u to tame the long range
                let body = gauss_kronrod(
                    |u: f64| a / (u.exp() + E).ln().powf(sigma),
                    0.0,
                    cut.ln(),
                    1e-12,
                    1e-12,
                )
                .unwrap_or(f64::INFINITY);
                // ∫_T^∞ a/(t log^σ t) dt = a/((σ−1) log^{σ−1} T) bounds the tail
                let tail = a / ((sigma - 1.0) * cut.ln().powf(sigma - 1.0));
                body + tail
            }
        }
    }

    /// `log Λ(ρ)` with `Λ(ρ) = sup_{t≥0} Δ(t) e^{−ρt}`.
    pub fn log_lambda_envelope(&self, rho: f64) -> f64 {
        assert!(rho > 0.0, "envelope needs ρ > 0");
        match *self {
            Self::Polynomial { tau } => {
                // stationary point of τ log(1+t) − ρt
                let t_star = tau / rho - 1.0;
                if t_star > 0.0 {
                    tau * (tau / rho).ln() - tau + rho
                } else {
                    0.0
                }
            }
            Self::SubExponential { .. } => {
                let obj = |t: f64| self.log_value(t) - rho * t;
                let mut best = (0.0, obj(0.0));
                let mut best_i = None;
                let grid: Vec<f64> = (0..=3000).map(|i| 10f64.powf(-3.0 + i as f64 * 0.1)).collect();
                for (i, &t) in grid.iter().enumerate() {
                    let v = obj(t);
                    if v > best.1 {
                        best = (t, v);
                        best_i = Some(i);
                    }
                }
                match best_i {
                    None => best.1,
                    Some(i) => {
                        let lo = if i == 0 { 0.0 } else { grid[i - 1] };
                        let hi = grid[(i + 1).min(grid.len() - 1)];
                        let (_, v) = golden_max(obj, lo, hi, 1e-14);
                        v.max(best.1)
                    }
                }
            }
        }
    }

    pub fn lambda_envelope(&self, rho: f64) -> f64 {
        self.log_lambda_envelope(rho).exp()
    }
}

/// Outcome of a nonresonance scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonresonanceReport {
    pub gamma_observed: f64,
    pub argmin_k: MultiIndexText,
    pub argmin_j: i64,
    pub checked_k: i64,
    pub checked_j: i64,
    pub threshold: f64,
}

/// Multi-index in its `index:value,...` text form.
pub type MultiIndexText = String;

impl NonresonanceReport {
    pub fn witness(&self) -> MultiIndex {
        self.argmin_k.parse().unwrap_or_default()
    }

    pub fn passed(&self) -> bool {
        self.gamma_observed > 0.0 && self.gamma_observed >= self.threshold
    }
}

fn finish(report: NonresonanceReport) -> Result<NonresonanceReport, DiophantineError> {
    if report.passed() {
        Ok(report)
    } else {
        Err(DiophantineError::ResonanceFound(Box::new(report)))
    }
}

fn weight_factor(
    k: &MultiIndex,
    structure: &SpatialStructure,
    delta: &ApproximationFunction,
) -> f64 {
    let w = structure
        .support_weight(k)
        .expect("admissible indices are covered");
    (delta.log_value(w) + delta.log_value(k.abs() as f64)).exp()
}

/// Scans `|⟨k,ω⟩| Δ([[k]]) Δ(|k|)` over admissible `0 ≠ k`, `|k| ≤ kmax`.
pub fn check_omega(
    basis: &FrequencyBasis,
    structure: &SpatialStructure,
    delta: &ApproximationFunction,
    gamma: f64,
    kmax: i64,
) -> Result<NonresonanceReport, DiophantineError> {
    if kmax < 1 {
        return Err(DiophantineError::InvalidBounds);
    }
    let ks: Vec<MultiIndex> = admissible_indices(structure, kmax)
        .into_iter()
        .filter(|k| k.is_positive())
        .collect();
    let (idx, v) = ks
        .par_iter()
        .enumerate()
        .map(|(i, k)| {
            let d = k.dot(basis).abs();
            let scale: f64 = k
                .entries()
                .iter()
                .map(|&(l, c)| (c as f64 * basis.frequency(l)).abs())
                .sum();
            let d = if d <= 1e-14 * scale { 0.0 } else { d };
            (i, d * weight_factor(k, structure, delta))
        })
        .reduce(|| (usize::MAX, f64::INFINITY), argmin);
    finish(NonresonanceReport {
        gamma_observed: v,
        argmin_k: ks.get(idx).map(|k| k.to_string()).unwrap_or_default(),
        argmin_j: 0,
        checked_k: kmax,
        checked_j: 0,
        threshold: gamma,
    })
}

fn argmin(a: (usize, f64), b: (usize, f64)) -> (usize, f64) {
    if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
        b
    } else {
        a
    }
}

/// Default `j` bound: `⌈max|⟨k,ω⟩|·|α|/2π⌉ + 1`.
pub fn default_j_bound(basis: &FrequencyBasis, structure: &SpatialStructure, alpha: f64, kmax: i64) -> i64 {
    let m = admissible_indices(structure, kmax)
        .iter()
        .map(|k| k.dot(basis).abs())
        .fold(0.0, f64::max);
    (m * alpha.abs() / TAU).ceil() as i64 + 1
}

/// Scans `|⟨k,ω⟩α/2π − j| Δ([[k]]) Δ(|k|)` over `0 ≠ k`, `0 ≠ j`, `|k| ≤ kmax`, `|j| ≤ jmax`.
pub fn check_alpha(
    alpha: f64,
    basis: &FrequencyBasis,
    structure: &SpatialStructure,
    delta: &ApproximationFunction,
    gamma0: f64,
    kmax: i64,
    jmax: Option<i64>,
) -> Result<NonresonanceReport, DiophantineError> {
    let jmax = jmax.unwrap_or_else(|| default_j_bound(basis, structure, alpha, kmax));
    if kmax < 1 || jmax < 1 {
        return Err(DiophantineError::InvalidBounds);
    }
    let ks: Vec<MultiIndex> = admissible_indices(structure, kmax)
        .into_iter()
        .filter(|k| k.is_positive())
        .collect();
    let best = ks
        .par_iter()
        .enumerate()
        .map(|(i, k)| {
            let x = k.dot(basis) * alpha / TAU;
            let wf = weight_factor(k, structure, delta);
            let mut cands = [x.floor() as i64, x.ceil() as i64, -1, 1];
            cands.sort_unstable();
            let mut best = (i64::MAX, f64::INFINITY);
            for j in cands {
                if j == 0 || j.abs() > jmax || j == best.0 {
                    continue;
                }
                let v = (x - j as f64).abs() * wf;
                if v < best.1 {
                    best = (j, v);
                }
            }
            (i, best.0, best.1)
        })
        .reduce(
            || (usize::MAX, 0, f64::INFINITY),
            |a, b| {
                if b.2 < a.2 || (b.2 == a.2 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    finish(NonresonanceReport {
        gamma_observed: best.2,
        argmin_k: ks.get(best.0).map(|k| k.to_string()).unwrap_or_default(),
        argmin_j: best.1,
        checked_k: kmax,
        checked_j: jmax,
        threshold: gamma0,
    })
}
