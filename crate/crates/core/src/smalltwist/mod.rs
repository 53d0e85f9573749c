//! Maps with a small twist: `x₁ = x + α + δL(x,y) + δf`, `y₁ = y + δM(x,y) + δg`.
//!
//! Covers the choice of the shifted rotation number, averaging of the nonresonant part,
//! the split into resonant and nonresonant modes and the action–angle chart built from a
//! first integral of the resonant part.

mod averaging;
mod chart;

pub use averaging::{averaging_transform, AveragedMap, Averaging, AveragingControl};
pub use chart::{
    build_adiabatic_chart, symmetrize_i, AdiabaticChart, ChartControl, ChartReport, FirstIntegral,
};

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apseries::{
    admissible_indices, APSeries2, FrequencyBasis, ModeSeries, MultiIndex, SeriesError,
    SpatialStructure, StripParams,
};
use crate::diophantine::ApproximationFunction;
use crate::numerics::QuadError;

/// Resonance threshold on `dist(⟨k,ω⟩α, 2πℤ)`.
pub const TOL_RES: f64 = 1e-9;

/// Blocks below this fraction of the largest block are projection noise.
const ACTIVE_REL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmallTwistError {
    #[error("no admissible β: best margin {margin:e} at β = {beta} (needed {gamma:e})")]
    NoAdmissibleBeta { beta: f64, margin: f64, gamma: f64 },
    #[error("mode k = {k} is resonant (distance {distance:e}); use the resonant split")]
    ResonantModeEncountered { k: String, distance: f64 },
    #[error("hypothesis violated: {condition} at θ = {theta}, ρ = {rho} (value {value:e})")]
    HypothesisViolated {
        condition: String,
        theta: f64,
        rho: f64,
        value: f64,
    },
    #[error("inverse change of variables stalled (last change {change:e})")]
    InversionStalled { change: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// `x₁ = x + α + δL + δf(δ)`, `y₁ = y + δM + δg(δ)` on `ℝ × [a, b]`.
#[derive(Clone, Debug)]
pub struct SmallTwistMap {
    pub alpha: f64,
    pub delta: f64,
    pub l: APSeries2,
    pub m: APSeries2,
    /// `f = Σ_j f[j] δ^{j+1}`, so `f(·,·,0) = 0`; at most two terms.
    pub f: Vec<APSeries2>,
    pub g: Vec<APSeries2>,
    pub strip: StripParams,
}

impl SmallTwistMap {
    pub fn new(
        alpha: f64,
        delta: f64,
        l: APSeries2,
        m: APSeries2,
        f: Vec<APSeries2>,
        g: Vec<APSeries2>,
        strip: StripParams,
    ) -> Result<Self, SmallTwistError> {
        if !(0.0..1.0).contains(&delta) {
            return Err(SmallTwistError::Invalid(format!("δ = {delta} not in [0, 1)")));
        }
        if f.len() > 2 || g.len() > 2 {
            return Err(SmallTwistError::Invalid("δ-families above degree 2".into()));
        }
        l.check_layout(&m)?;
        for s in f.iter().chain(&g) {
            l.check_layout(s)?;
        }
        Ok(Self {
            alpha,
            delta,
            l,
            m,
            f,
            g,
            strip,
        })
    }

    /// The map with `f = g = 0`.
    pub fn leading(
        alpha: f64,
        delta: f64,
        l: APSeries2,
        m: APSeries2,
        strip: StripParams,
    ) -> Result<Self, SmallTwistError> {
        Self::new(alpha, delta, l, m, Vec::new(), Vec::new(), strip)
    }

    fn family_at(terms: &[APSeries2], ph: &[Complex64], y: f64, delta: f64) -> f64 {
        let mut p = delta;
        let mut acc = 0.0;
        for t in terms {
            acc += p * t.eval_phases(ph, y);
            p *= delta;
        }
        acc
    }

    /// Image of the hull point `(θ, d, y)`.
    pub fn apply(&self, theta: &[f64], d: f64, y: f64) -> (f64, f64) {
        let spec = self.l.spectrum();
        let mut ph = Vec::new();
        spec.phases(&crate::kam::shifted(spec, theta, d), &mut ph);
        let dl = self.l.eval_phases(&ph, y) + Self::family_at(&self.f, &ph, y, self.delta);
        let dm = self.m.eval_phases(&ph, y) + Self::family_at(&self.g, &ph, y, self.delta);
        (d + self.alpha + self.delta * dl, y + self.delta * dm)
    }

    /// Image of the real point `(x, y)`.
    pub fn apply_line(&self, x: f64, y: f64) -> (f64, f64) {
        let theta = self.l.spectrum().line_angles(x);
        let (d, y1) = self.apply(&theta, 0.0, y);
        (x + d, y1)
    }

    /// Sup of `|L(x,y) − L(−x−α,y)|` and `|M(x,y) + M(−x−α,y)|` over held-out samples.
    pub fn symmetry_defect(&self) -> Result<f64, SmallTwistError> {
        let a = self.l.sub(&self.l.reflect(self.alpha))?;
        let b = self.m.add(&self.m.reflect(self.alpha))?;
        Ok(sup_held_out(&a)?.max(sup_held_out(&b)?))
    }

    pub fn reversibility_defect(&self, grid: &LineGrid) -> f64 {
        line_reversibility(|x, y| self.apply_line(x, y), self.l.domain(), grid)
    }
}

/// Sup over held-out angles and probe values of `y`.
pub(crate) fn sup_held_out(s: &APSeries2) -> Result<f64, SeriesError> {
    let proj = s.spectrum().projector()?;
    Ok(s.sup_on(proj.held_out(), &s.y_probe()))
}

/// Real points `x` and values of `y` used for reversibility checks.
#[derive(Clone, Copy, Debug)]
pub struct LineGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    /// Fraction of the y-domain covered.
    pub y_fill: f64,
}

impl Default for LineGrid {
    fn default() -> Self {
        Self {
            nx: 33,
            ny: 7,
            dx: 0.73,
            y_fill: 0.8,
        }
    }
}

/// `max |Ψ𝔐Ψ𝔐(x,y) − (x,y)|` for `Ψ(x,y) = (−x,y)`.
pub(crate) fn line_reversibility(
    apply: impl Fn(f64, f64) -> (f64, f64) + Sync,
    dom: crate::apseries::YDomain,
    grid: &LineGrid,
) -> f64 {
    let x0 = -0.5 * grid.dx * grid.nx.saturating_sub(1) as f64;
    let ys: Vec<f64> = (0..grid.ny)
        .map(|j| {
            let u = if grid.ny > 1 {
                -1.0 + 2.0 * j as f64 / (grid.ny - 1) as f64
            } else {
                0.0
            };
            dom.from_unit(u * grid.y_fill)
        })
        .collect();
    (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let x = x0 + grid.dx * i as f64;
            ys.iter().fold(0.0f64, |w, &y| {
                let (x1, y1) = apply(x, y);
                let (x2, y2) = apply(-x1, y1);
                w.max((x2 + x).abs()).max((y2 - y).abs())
            })
        })
        .reduce(|| 0.0, f64::max)
}

/// Chosen `β` and its observed nonresonance margin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaChoice {
    pub beta: f64,
    pub margin: f64,
}

/// Margin of `α'` against `|⟨k,ω⟩α'/2π − j| ≥ γ/(Δ([[k]])Δ(|k|))`, `j ≠ 0`.
fn alpha_margin(shifted_alpha: f64, ks: &[(f64, f64)]) -> f64 {
    ks.iter()
        .map(|&(freq, wf)| {
            let x = freq * shifted_alpha / TAU;
            let j = x.round();
            let d = if j == 0.0 {
                1.0 - x.abs()
            } else {
                (x - j).abs()
            };
            d * wf
        })
        .fold(f64::INFINITY, f64::min)
}

/// Scans `β ∈ [a+γ₁, b+γ₁]` on a `grid`-point lattice for the largest margin of `α + δβ`.
#[allow(clippy::too_many_arguments)]
pub fn select_beta(
    a: f64,
    b: f64,
    delta: f64,
    alpha: f64,
    basis: &FrequencyBasis,
    structure: &SpatialStructure,
    approx: &ApproximationFunction,
    gamma1: f64,
    kmax: i64,
    grid: usize,
) -> Result<BetaChoice, SmallTwistError> {
    if !(a <= b) || grid == 0 || kmax < 1 {
        return Err(SmallTwistError::Invalid(format!("interval [{a}, {b}]")));
    }
    let ks: Vec<(f64, f64)> = admissible_indices(structure, kmax)
        .into_iter()
        .filter(MultiIndex::is_positive)
        .map(|k| {
            let w = structure.support_weight(&k).expect("admissible indices are covered");
            let wf = (approx.log_value(w) + approx.log_value(k.abs() as f64)).exp();
            (k.dot(basis), wf)
        })
        .collect();
    let (lo, hi) = (a + gamma1, b + gamma1);
    let n = if lo == hi { 1 } else { grid };
    let best = (0..n)
        .into_par_iter()
        .map(|i| {
            let beta = if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            };
            (beta, alpha_margin(alpha + delta * beta, &ks))
        })
        .reduce(
            || (f64::NAN, f64::NEG_INFINITY),
            |p, q| if q.1 > p.1 || (q.1 == p.1 && q.0 < p.0) { q } else { p },
        );
    if best.1 >= gamma1 && best.1 > 0.0 {
        Ok(BetaChoice {
            beta: best.0,
            margin: best.1,
        })
    } else {
        Err(SmallTwistError::NoAdmissibleBeta {
            beta: best.0,
            margin: best.1,
            gamma: gamma1,
        })
    }
}

/// `L₀'(y)` at the middle of the y-domain, `L₀` being the average of `L` in `x`.
pub fn twist_condition(l: &APSeries2) -> f64 {
    l.derivative_y().mean_at(l.domain().center)
}

/// `dist(φ, 2πℤ)`.
pub fn circle_distance(phase: f64) -> f64 {
    let x = phase / TAU;
    TAU * (x - x.round()).abs()
}

/// Nonresonant (`tilde`) and resonant (`hat`) parts of `L` and `M`.
#[derive(Clone, Debug)]
pub struct ResonantSplit {
    pub l_tilde: APSeries2,
    pub m_tilde: APSeries2,
    pub l_hat: APSeries2,
    pub m_hat: APSeries2,
    /// Structure sets covering the support of a resonant `k ≠ 0`.
    pub resonant_sets: Vec<usize>,
    /// Resonant `k > 0` carrying a coefficient of `L` or `M`.
    pub resonant_modes: Vec<MultiIndex>,
    /// Sup of `|L̂(x+α) − L̂(x)|`, `|M̂(x+α) − M̂(x)|`.
    pub periodicity_defect: f64,
    /// Sup of the four reflection identities of the two parts.
    pub parity_defect: f64,
}

/// Modes with `dist(⟨k,ω⟩α, 2πℤ) ≤ tol_res`, and the mean, go to the resonant part.
pub fn resonant_split(
    l: &APSeries2,
    m: &APSeries2,
    alpha: f64,
    tol_res: f64,
) -> Result<ResonantSplit, SmallTwistError> {
    l.check_layout(m)?;
    let spec = l.spectrum().clone();
    let resonant: Vec<bool> = (0..spec.len())
        .map(|i| i == spec.zero() || circle_distance(spec.frequency(i) * alpha) <= tol_res)
        .collect();
    let pick = |s: &APSeries2, keep: bool| {
        let mut out = s.zeroed();
        for i in 0..spec.len() {
            if resonant[i] == keep {
                out.block_mut(i).copy_from_slice(s.block(i));
            }
        }
        out
    };
    let (l_hat, m_hat) = (pick(l, true), pick(m, true));
    let (l_tilde, m_tilde) = (pick(l, false), pick(m, false));
    let floor = (0..spec.len())
        .map(|i| l.block_abs(i).max(m.block_abs(i)))
        .fold(0.0, f64::max)
        * ACTIVE_REL;
    let mut sets: Vec<usize> = Vec::new();
    let mut modes = Vec::new();
    for i in 0..spec.len() {
        let active = l.block_abs(i) > floor || m.block_abs(i) > floor;
        if resonant[i] && i != spec.zero() && active {
            if spec.mode(i).is_positive() {
                modes.push(spec.mode(i).clone());
            }
            let c = spec.cover(i);
            if !sets.contains(&c) {
                sets.push(c);
            }
        }
    }
    sets.sort_unstable();
    let periodicity_defect = sup_held_out(&l_hat.shift(alpha).sub(&l_hat)?)?
        .max(sup_held_out(&m_hat.shift(alpha).sub(&m_hat)?)?);
    let parity_defect = [
        l_tilde.sub(&l_tilde.reflect(alpha))?,
        m_tilde.add(&m_tilde.reflect(alpha))?,
        l_hat.sub(&l_hat.reflect(0.0))?,
        m_hat.add(&m_hat.reflect(0.0))?,
    ]
    .iter()
    .map(sup_held_out)
    .collect::<Result<Vec<f64>, _>>()?
    .into_iter()
    .fold(0.0, f64::max);
    Ok(ResonantSplit {
        l_tilde,
        m_tilde,
        l_hat,
        m_hat,
        resonant_sets: sets,
        resonant_modes: modes,
        periodicity_defect,
        parity_defect,
    })
}

#[cfg(test)]
mod tests;
