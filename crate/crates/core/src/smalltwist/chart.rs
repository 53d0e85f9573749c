use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SmallTwistError;
use crate::apseries::APSeries2;
use crate::numerics::{adaptive_simpson, bisect};

type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Gradient = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// A function `I(θ, ρ)` with its gradient.
#[derive(Clone)]
pub struct FirstIntegral {
    value: Field,
    gradient: Option<Gradient>,
}

impl std::fmt::Debug for FirstIntegral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FirstIntegral")
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl FirstIntegral {
    /// Gradient by fourth-order central differences.
    pub fn new(value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
        }
    }

    pub fn with_gradient(
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Some(Arc::new(gradient)),
        }
    }

    pub fn value(&self, theta: f64, rho: f64) -> f64 {
        (self.value)(theta, rho)
    }

    /// `(∂I/∂θ, ∂I/∂ρ)`.
    pub fn gradient(&self, theta: f64, rho: f64) -> (f64, f64) {
        if let Some(g) = &self.gradient {
            return g(theta, rho);
        }
        let d = |f: &dyn Fn(f64) -> f64, x: f64| {
            let h = 1e-3 * (1.0 + x.abs());
            (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
        };
        (
            d(&|t| self.value(t, rho), theta),
            d(&|r| self.value(theta, r), rho),
        )
    }

    /// Largest `|L̂ ∂I/∂θ + M̂ ∂I/∂ρ|` over the given points.
    pub fn transport_defect(&self, l_hat: &APSeries2, m_hat: &APSeries2, pts: &[(f64, f64)]) -> f64 {
        pts.par_iter()
            .map(|&(t, r)| {
                let (it, ir) = self.gradient(t, r);
                (l_hat.eval(t, r) * it + m_hat.eval(t, r) * ir).abs()
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// `(I(θ,ρ) + I(−θ,ρ))/2`.
pub fn symmetrize_i(i: &FirstIntegral) -> FirstIntegral {
    let a = i.clone();
    let b = i.clone();
    FirstIntegral::with_gradient(
        move |t, r| 0.5 * (a.value(t, r) + a.value(-t, r)),
        move |t, r| {
            let (p, q) = b.gradient(t, r);
            let (p2, q2) = b.gradient(-t, r);
            (0.5 * (p - p2), 0.5 * (q + q2))
        },
    )
}

/// Tolerances and grids of the chart construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChartControl {
    pub root_tol: f64,
    pub quad_tol: f64,
    pub transport_tol: f64,
    /// Points per period in `θ` for hypothesis checks.
    pub n_theta: usize,
    pub n_rho: usize,
}

impl Default for ChartControl {
    fn default() -> Self {
        Self {
            root_tol: 1e-12,
            quad_tol: 1e-11,
            transport_tol: 1e-8,
            n_theta: 64,
            n_rho: 9,
        }
    }
}

/// Action `ϱ = I(θ,ρ)` and angle `τ = Γ(I)K(θ,ρ)` for the resonant part `(L̂, M̂)`.
#[derive(Clone, Debug)]
pub struct AdiabaticChart {
    pub alpha: f64,
    pub l_hat: APSeries2,
    pub m_hat: APSeries2,
    l_hat_y: APSeries2,
    pub integral: FirstIntegral,
    /// `[a, b]`, the bracket of the level-set solve.
    pub outer: (f64, f64),
    /// `[ã, b̃]`.
    pub inner: (f64, f64),
    pub ctl: ChartControl,
}

/// Worst residuals of the chart identities on a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartReport {
    /// `|L̂ ∂K/∂θ + M̂ ∂K/∂ρ − 1|`.
    pub identity: f64,
    /// `|K(θ+α,ρ) − K(θ,ρ) − Π(I(θ,ρ))|`.
    pub periodicity: f64,
    /// `|τ(θ+α,ρ) − τ(θ,ρ) − α|`.
    pub tau_shift: f64,
    /// Largest `Π'(h)` seen; negative when the period decreases along the annulus.
    pub max_pi_slope: f64,
}

impl AdiabaticChart {
    fn quad(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64, SmallTwistError> {
        Ok(adaptive_simpson(f, a, b, self.ctl.quad_tol)?)
    }

    /// `ρ` with `I(θ, ρ) = h`, by bisection on `[a, b]`.
    pub fn level(&self, theta: f64, h: f64) -> Result<f64, SmallTwistError> {
        let (a, b) = self.outer;
        bisect(|r| self.integral.value(theta, r) - h, a, b, self.ctl.root_tol).ok_or_else(|| {
            SmallTwistError::HypothesisViolated {
                condition: "level set of I inside [a, b]".into(),
                theta,
                rho: h,
                value: h,
            }
        })
    }

    /// `1/L̂(s, R(s,h))`.
    fn speed(&self, s: f64, h: f64) -> f64 {
        match self.level(s, h) {
            Ok(r) => 1.0 / self.l_hat.eval(s, r),
            Err(_) => f64::NAN,
        }
    }

    /// `∂/∂h` of [`Self::speed`]: `−L̂_ρ/(L̂² I_ρ)` at `(s, R(s,h))`.
    fn speed_h(&self, s: f64, h: f64) -> f64 {
        match self.level(s, h) {
            Ok(r) => {
                let l = self.l_hat.eval(s, r);
                let ly = self.l_hat_y.eval(s, r);
                -ly / (l * l * self.integral.gradient(s, r).1)
            }
            Err(_) => f64::NAN,
        }
    }

    /// `Π(h) = ∫₀^α dθ / L̂(θ, R(θ,h))`.
    pub fn period(&self, h: f64) -> Result<f64, SmallTwistError> {
        self.quad(|s| self.speed(s, h), 0.0, self.alpha)
    }

    /// `Π'(h)` from the differentiated integral.
    pub fn period_slope(&self, h: f64) -> Result<f64, SmallTwistError> {
        self.quad(|s| self.speed_h(s, h), 0.0, self.alpha)
    }

    /// `Γ(h) = α/Π(h)`.
    pub fn frequency(&self, h: f64) -> Result<f64, SmallTwistError> {
        Ok(self.alpha / self.period(h)?)
    }

    /// `K(θ,ρ) = ∫₀^θ ds / L̂(s, R(s, I(θ,ρ)))`.
    pub fn time(&self, theta: f64, rho: f64) -> Result<f64, SmallTwistError> {
        let h = self.integral.value(theta, rho);
        self.quad(|s| self.speed(s, h), 0.0, theta)
    }

    /// `(∂K/∂θ, ∂K/∂ρ)`.
    pub fn time_gradient(&self, theta: f64, rho: f64) -> Result<(f64, f64), SmallTwistError> {
        let h = self.integral.value(theta, rho);
        let (it, ir) = self.integral.gradient(theta, rho);
        let w = self.quad(|s| self.speed_h(s, h), 0.0, theta)?;
        Ok((self.speed(theta, h) + it * w, ir * w))
    }

    /// `(ϱ, τ)`.
    pub fn forward(&self, theta: f64, rho: f64) -> Result<(f64, f64), SmallTwistError> {
        let h = self.integral.value(theta, rho);
        Ok((h, self.frequency(h)? * self.time(theta, rho)?))
    }

    pub fn identity_residual(&self, theta: f64, rho: f64) -> Result<f64, SmallTwistError> {
        let (kt, kr) = self.time_gradient(theta, rho)?;
        Ok((self.l_hat.eval(theta, rho) * kt + self.m_hat.eval(theta, rho) * kr - 1.0).abs())
    }

    /// Identity, periodicity and `τ`-shift residuals on `n_theta × n_rho` points of the
    /// inner annulus over one period.
    pub fn verify(&self, n_theta: usize, n_rho: usize) -> Result<ChartReport, SmallTwistError> {
        let pts = grid(self.alpha, self.inner, n_theta, n_rho);
        let rows = pts
            .par_iter()
            .map(|&(t, r)| {
                let h = self.integral.value(t, r);
                let pi = self.period(h)?;
                let k0 = self.time(t, r)?;
                let k1 = self.time(t + self.alpha, r)?;
                let gamma = self.alpha / pi;
                Ok((
                    self.identity_residual(t, r)?,
                    (k1 - k0 - pi).abs(),
                    (gamma * k1 - gamma * k0 - self.alpha).abs(),
                    self.period_slope(h)?,
                ))
            })
            .collect::<Result<Vec<_>, SmallTwistError>>()?;
        Ok(rows.into_iter().fold(
            ChartReport {
                identity: 0.0,
                periodicity: 0.0,
                tau_shift: 0.0,
                max_pi_slope: f64::NEG_INFINITY,
            },
            |acc, r| ChartReport {
                identity: acc.identity.max(r.0),
                periodicity: acc.periodicity.max(r.1),
                tau_shift: acc.tau_shift.max(r.2),
                max_pi_slope: acc.max_pi_slope.max(r.3),
            },
        ))
    }
}

fn grid(alpha: f64, (lo, hi): (f64, f64), n_theta: usize, n_rho: usize) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(n_theta * n_rho);
    for i in 0..n_theta {
        let t = alpha * i as f64 / n_theta.max(1) as f64;
        for j in 0..n_rho {
            let u = if n_rho > 1 { j as f64 / (n_rho - 1) as f64 } else { 0.5 };
            pts.push((t, lo + (hi - lo) * u));
        }
    }
    pts
}

fn violated(condition: &str, (theta, rho): (f64, f64), value: f64) -> SmallTwistError {
    SmallTwistError::HypothesisViolated {
        condition: condition.into(),
        theta,
        rho,
        value,
    }
}

/// Checks the positivity, monotonicity, transport and ordering hypotheses, then builds
/// the chart.
pub fn build_adiabatic_chart(
    l_hat: &APSeries2,
    m_hat: &APSeries2,
    integral: &FirstIntegral,
    alpha: f64,
    outer: (f64, f64),
    inner: (f64, f64),
    ctl: &ChartControl,
) -> Result<AdiabaticChart, SmallTwistError> {
    let (a, b) = outer;
    let (ai, bi) = inner;
    if !(a < ai && ai < bi && bi < b) || alpha <= 0.0 {
        return Err(SmallTwistError::Invalid(format!(
            "annuli must satisfy a < ã < b̃ < b, got [{a}, {b}] and [{ai}, {bi}]"
        )));
    }
    let l_hat_y = l_hat.derivative_y();
    let pts = grid(alpha, outer, ctl.n_theta, ctl.n_rho);
    for &p in &pts {
        let l = l_hat.eval(p.0, p.1);
        if !(l > 0.0) {
            return Err(violated("L̂ > 0", p, l));
        }
        let ly = l_hat_y.eval(p.0, p.1);
        if !(ly > 0.0) {
            return Err(violated("∂L̂/∂ρ > 0", p, ly));
        }
        let iy = integral.gradient(p.0, p.1).1;
        if !(iy > 0.0) {
            return Err(violated("∂I/∂ρ > 0", p, iy));
        }
    }
    let worst = pts
        .par_iter()
        .map(|&(t, r)| {
            let (it, ir) = integral.gradient(t, r);
            ((l_hat.eval(t, r) * it + m_hat.eval(t, r) * ir).abs(), (t, r))
        })
        .reduce(|| (0.0, (0.0, 0.0)), |x, y| if y.0 > x.0 { y } else { x });
    if worst.0 > ctl.transport_tol {
        return Err(violated("L̂ ∂I/∂θ + M̂ ∂I/∂ρ = 0", worst.1, worst.0));
    }
    let range = |rho: f64| {
        (0..ctl.n_theta).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let v = integral.value(alpha * i as f64 / ctl.n_theta as f64, rho);
            (lo.min(v), hi.max(v))
        })
    };
    let chain = [range(a), range(ai), range(bi), range(b)];
    let names = ["I_max(a) < I_min(ã)", "I_max(ã) < I_min(b̃)", "I_max(b̃) < I_min(b)"];
    let rhos = [a, ai, bi, b];
    for n in 0..3 {
        let gap = chain[n + 1].0 - chain[n].1;
        if !(gap > 0.0) {
            return Err(violated(names[n], (0.0, rhos[n]), gap));
        }
    }
    Ok(AdiabaticChart {
        alpha,
        l_hat: l_hat.clone(),
        m_hat: m_hat.clone(),
        l_hat_y,
        integral: integral.clone(),
        outer,
        inner,
        ctl: ctl.clone(),
    })
}
