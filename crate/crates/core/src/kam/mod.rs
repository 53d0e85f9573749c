//! Reversible KAM iteration for maps `x₁ = x + α + y + f`, `y₁ = y + g`.
//!
//! Points are handled on the hull: a torus angle `θ` plus a real offset `d` along the
//! frequency direction, so `x = x_θ + d` has angles `θ + ω d`.

mod instances;
mod iterate;
mod step;

pub use instances::{calibrate_c6, golden_map, golden_spectrum, C6Calibration, GoldenInstance};
pub use iterate::{
    compose_pair, compose_transforms, kam_iterate, InvariantCurve, KamRun, KamSchedule, RunStatus,
    TraceRow,
};
pub use step::{kam_step, smallness, StepControl, StepEstimates, StepOutcome};

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::apseries::{APSeries2, ModeSeries, SeriesError, Spectrum, StripParams, YDomain};
use crate::homological::HomologicalError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KamError {
    #[error("smallness parameter θ = {theta:e} is not below 1/4")]
    SmallnessViolated { theta: f64 },
    #[error("implicit solve stalled after {iterations} iterations (last change {change:e})")]
    FixedPointDiverged { iterations: usize, change: f64 },
    #[error("y = {y:e} left the domain of half-width {half:e}")]
    DomainEscape { y: f64, half: f64 },
    #[error("reversibility defect {defect:e} exceeds {bound:e}")]
    ReversibilityLost { defect: f64, bound: f64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Homological(#[from] HomologicalError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// `x₁ = x + α + y + f(x,y)`, `y₁ = y + g(x,y)`.
#[derive(Clone, Debug)]
pub struct ReversibleTwistMap {
    pub alpha: f64,
    pub f: APSeries2,
    pub g: APSeries2,
    pub strip: StripParams,
}

impl ReversibleTwistMap {
    pub fn new(alpha: f64, f: APSeries2, g: APSeries2, strip: StripParams) -> Result<Self, KamError> {
        f.check_layout(&g)?;
        Ok(Self { alpha, f, g, strip })
    }

    /// The unperturbed twist map on `|y| ≤ s`.
    pub fn integrable(
        alpha: f64,
        spectrum: Arc<Spectrum>,
        strip: StripParams,
        degree: usize,
    ) -> Result<Self, KamError> {
        let dom = YDomain::symmetric(strip.s)?;
        let z = APSeries2::zero(spectrum, dom, degree);
        Self::new(alpha, z.clone(), z, strip)
    }

    /// Projects `f(θ, y)` and `g(θ, y)` given on the torus onto `|y| ≤ strip.s`.
    pub fn from_fn(
        alpha: f64,
        spectrum: Arc<Spectrum>,
        strip: StripParams,
        degree: usize,
        tol: f64,
        f: impl Fn(&[f64], f64) -> f64 + Sync,
        g: impl Fn(&[f64], f64) -> f64 + Sync,
    ) -> Result<Self, KamError> {
        let dom = YDomain::symmetric(strip.s)?;
        let fs = APSeries2::from_fn(spectrum.clone(), dom, degree, tol, f)?;
        let gs = APSeries2::from_fn(spectrum, dom, degree, tol, g)?;
        Self::new(alpha, fs, gs, strip)
    }

    pub fn spectrum(&self) -> &Arc<Spectrum> {
        self.f.spectrum()
    }

    pub fn domain(&self) -> YDomain {
        self.f.domain()
    }

    /// `‖f‖ + ‖g‖` at the map's own strip.
    pub fn size(&self) -> f64 {
        self.size_at(&self.strip)
    }

    pub fn size_at(&self, p: &StripParams) -> f64 {
        let dom = YDomain::symmetric(p.s).expect("positive half-width");
        let (f, g) = if dom == self.domain() {
            (self.f.clone(), self.g.clone())
        } else {
            (self.f.restrict_y(dom), self.g.restrict_y(dom))
        };
        f.norm(p) + g.norm(p)
    }

    /// Same map with its expansions re-centred on `|y| ≤ p.s`.
    pub fn restricted(&self, p: StripParams) -> Result<Self, KamError> {
        let dom = YDomain::symmetric(p.s)?;
        Self::new(self.alpha, self.f.restrict_y(dom), self.g.restrict_y(dom), p)
    }

    /// Image of the hull point `(θ, d, y)` as a new offset and `y`.
    pub fn apply(&self, theta: &[f64], d: f64, y: f64) -> (f64, f64) {
        let spec = self.spectrum();
        let mut ph = Vec::new();
        spec.phases(&shifted(spec, theta, d), &mut ph);
        let f = self.f.eval_phases(&ph, y);
        let g = self.g.eval_phases(&ph, y);
        (d + self.alpha + y + f, y + g)
    }
}

/// Angles of `θ` moved by `d` along the line.
pub(crate) fn shifted(spec: &Spectrum, theta: &[f64], d: f64) -> Vec<f64> {
    theta
        .iter()
        .zip(spec.basis().frequencies())
        .map(|(t, w)| t + w * d)
        .collect()
}

/// Grid for the reversibility check.
#[derive(Clone, Copy, Debug)]
pub struct ReversibilityGrid {
    pub nx: usize,
    pub ny: usize,
    /// Spacing of the `x` points on the real line.
    pub dx: f64,
    /// Fraction of the y-domain covered.
    pub y_fill: f64,
}

impl Default for ReversibilityGrid {
    fn default() -> Self {
        Self {
            nx: 33,
            ny: 9,
            dx: 1.0,
            y_fill: 0.9,
        }
    }
}

/// Largest violation of `f(x̃, y+g) + g − f = 0` and `g(x̃, y+g) + g = 0`, `x̃ = −x−α−y−f`.
pub fn verify_reversibility(map: &ReversibleTwistMap, grid: &ReversibilityGrid) -> f64 {
    let spec = map.spectrum().clone();
    let dom = map.domain();
    let x0 = -0.5 * grid.dx * (grid.nx.saturating_sub(1)) as f64;
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
            let mut ph = Vec::new();
            let mut worst: f64 = 0.0;
            for &y in &ys {
                spec.phases(&spec.line_angles(x), &mut ph);
                let f = map.f.eval_phases(&ph, y);
                let g = map.g.eval_phases(&ph, y);
                let xt = -x - map.alpha - y - f;
                spec.phases(&spec.line_angles(xt), &mut ph);
                let f2 = map.f.eval_phases(&ph, y + g);
                let g2 = map.g.eval_phases(&ph, y + g);
                worst = worst.max((f2 + g - f).abs()).max((g2 + g).abs());
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// `x = ξ + φ(ξ,η)`, `y = η + ψ(ξ,η)`.
#[derive(Clone, Debug)]
pub struct TransformPair {
    pub phi: APSeries2,
    pub psi: APSeries2,
}

impl TransformPair {
    pub fn identity(spectrum: Arc<Spectrum>, domain: YDomain, degree: usize) -> Self {
        let z = APSeries2::zero(spectrum, domain, degree);
        Self {
            phi: z.clone(),
            psi: z,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.phi.is_zero() && self.psi.is_zero()
    }

    pub fn domain(&self) -> YDomain {
        self.phi.domain()
    }

    pub fn restricted(&self, dom: YDomain) -> Self {
        Self {
            phi: self.phi.restrict_y(dom),
            psi: self.psi.restrict_y(dom),
        }
    }

    /// `(φ, ψ)` at the hull point `(θ, d, η)`.
    pub fn increments(&self, theta: &[f64], d: f64, eta: f64) -> (f64, f64) {
        let spec = self.phi.spectrum();
        let mut ph = Vec::new();
        spec.phases(&shifted(spec, theta, d), &mut ph);
        (self.phi.eval_phases(&ph, eta), self.psi.eval_phases(&ph, eta))
    }

    /// `‖φ‖ + ‖ψ‖` on `|η| ≤ p.s`.
    pub fn size_at(&self, p: &StripParams) -> f64 {
        let r = self.restricted(YDomain::symmetric(p.s).expect("positive half-width"));
        r.phi.norm(p) + r.psi.norm(p)
    }

    /// `(max(‖∂_ξ φ‖, ‖∂_ξ ψ‖), max(‖∂_η φ‖, ‖∂_η ψ‖))` on `|η| ≤ p.s`.
    pub fn derivative_sizes(&self, p: &StripParams) -> (f64, f64) {
        let r = self.restricted(YDomain::symmetric(p.s).expect("positive half-width"));
        let dx = r.phi.derivative_x().norm(p).max(r.psi.derivative_x().norm(p));
        let dy = r.phi.derivative_y().norm(p).max(r.psi.derivative_y().norm(p));
        (dx, dy)
    }

    /// Sup over held-out angles of `|φ(−ξ,η) + φ(ξ,η)|` and `|ψ(−ξ,η) − ψ(ξ,η)|`.
    pub fn parity_gaps(&self) -> Result<(f64, f64), KamError> {
        let spec = self.phi.spectrum().clone();
        let proj = spec.projector()?;
        let ys = self.phi.y_probe();
        Ok(proj
            .held_out()
            .par_iter()
            .map(|t| {
                let mut p = Vec::new();
                spec.phases(t, &mut p);
                let q: Vec<Complex64> = p.iter().map(|z| z.conj()).collect();
                ys.iter().fold((0.0f64, 0.0f64), |(a, b), &y| {
                    let odd = (self.phi.eval_phases(&q, y) + self.phi.eval_phases(&p, y)).abs();
                    let even = (self.psi.eval_phases(&q, y) - self.psi.eval_phases(&p, y)).abs();
                    (a.max(odd), b.max(even))
                })
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1))))
    }
}

#[cfg(test)]
mod tests;
