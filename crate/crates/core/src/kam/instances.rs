use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::iterate::KamSchedule;
use super::step::{kam_step, smallness, StepControl};
use super::{KamError, ReversibleTwistMap};
use crate::apseries::{FrequencyBasis, SpatialStructure, Spectrum, StripParams};
use crate::diophantine::ApproximationFunction;

/// Frequencies `(1, (√5−1)/2)` with singleton sets and the full window.
pub fn golden_spectrum(kmax: i64, varrho: f64) -> Result<Arc<Spectrum>, KamError> {
    let basis = FrequencyBasis::from_frequencies(&[1.0, (5f64.sqrt() - 1.0) / 2.0])?;
    let st = SpatialStructure::singletons_and_window(&basis, varrho)?;
    Ok(Spectrum::new(basis, st, kmax)?)
}

/// Leapfrog map with odd forcing `u = c Σ sin⟨k,θ⟩` over the given modes:
/// `y' = y + u(x)/2`, `x₁ = x + α + y'`, `y₁ = y' + u(x₁)/2`.
pub fn golden_map(
    spectrum: Arc<Spectrum>,
    alpha: f64,
    amplitude: f64,
    forcing: &[(i64, i64)],
    strip: StripParams,
    degree: usize,
) -> Result<ReversibleTwistMap, KamError> {
    let omega = spectrum.basis().frequencies().to_vec();
    let forcing = forcing.to_vec();
    let u = move |t: &[f64]| -> f64 {
        amplitude
            * forcing
                .iter()
                .map(|&(a, b)| (a as f64 * t[0] + b as f64 * t[1]).sin())
                .sum::<f64>()
    };
    let tol = 1e-13 * amplitude.abs().max(1e-300);
    ReversibleTwistMap::from_fn(
        alpha,
        spectrum,
        strip,
        degree,
        tol,
        |t, _| 0.5 * u(t),
        |t, y| {
            let ux = u(t);
            let d = alpha + y + 0.5 * ux;
            let t1: Vec<f64> = t.iter().zip(&omega).map(|(a, w)| a + w * d).collect();
            0.5 * (ux + u(&t1))
        },
    )
}

/// Parameters of the two-frequency leapfrog instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GoldenInstance {
    pub alpha: f64,
    /// Target size of the perturbation at the initial strip.
    pub eps0: f64,
    /// Fraction of `eps0` the measured size is scaled to.
    pub fill: f64,
    pub kmax: i64,
    pub degree: usize,
    pub varrho: f64,
    /// Modes `(k₁, k₂)` of the sine forcing.
    pub forcing: Vec<(i64, i64)>,
    pub max_steps: usize,
    pub stop_eps: f64,
}

impl Default for GoldenInstance {
    fn default() -> Self {
        Self {
            alpha: 0.754_877_666_246_692_7,
            eps0: 1e-4,
            fill: 0.9,
            kmax: 8,
            degree: 8,
            varrho: 3.0,
            forcing: vec![(1, 0), (0, 1)],
            max_steps: 10,
            stop_eps: 1e-12,
        }
    }
}

impl GoldenInstance {
    pub fn spectrum(&self) -> Result<Arc<Spectrum>, KamError> {
        golden_spectrum(self.kmax, self.varrho)
    }

    pub fn schedule(&self) -> KamSchedule {
        KamSchedule::from_eps0(self.eps0, self.max_steps, self.stop_eps)
    }

    /// The map, with its forcing scaled so the measured size is `fill·eps0`.
    pub fn build(&self) -> Result<ReversibleTwistMap, KamError> {
        let spec = self.spectrum()?;
        let strip = self.schedule().strip(0);
        let target = self.fill * self.eps0;
        if self.forcing.is_empty() || target == 0.0 {
            return ReversibleTwistMap::integrable(self.alpha, spec, strip, self.degree);
        }
        let build = |amp: f64| golden_map(spec.clone(), self.alpha, amp, &self.forcing, strip, self.degree);
        let mut amp = target / (1.5 * self.forcing.len().max(1) as f64);
        let mut map = build(amp)?;
        for _ in 0..2 {
            amp *= target / map.size();
            map = build(amp)?;
        }
        Ok(map)
    }

    /// Forcing by the single mode `(1, 0)`.
    pub fn single_mode(eps0: f64) -> Self {
        Self {
            eps0,
            forcing: vec![(1, 0)],
            ..Self::default()
        }
    }

    /// Same instance with `eps0` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            eps0: self.eps0 * factor,
            ..self.clone()
        }
    }

    /// Calibrates `c₆` on this instance scaled by 1, 1/2 and 1/4.
    pub fn calibrate(&self, ctl: &StepControl) -> Result<C6Calibration, KamError> {
        let runs = [1.0, 0.5, 0.25]
            .iter()
            .map(|&f| {
                let inst = self.scaled(f);
                Ok((inst.build()?, inst.schedule()))
            })
            .collect::<Result<Vec<_>, KamError>>()?;
        calibrate_c6(&runs, &ctl.delta, ctl)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C6Calibration {
    pub c6: f64,
    /// `(ε, ε₊ / ((s₊ + ε) · θ/c₆))` per calibration run.
    pub ratios: Vec<(f64, f64)>,
}

/// Smallest `c₆` for which `‖f₊‖ + ‖g₊‖ ≤ θ(s₊ + ε)` holds on every run with a factor 2 to spare.
pub fn calibrate_c6(
    runs: &[(ReversibleTwistMap, KamSchedule)],
    delta: &ApproximationFunction,
    ctl: &StepControl,
) -> Result<C6Calibration, KamError> {
    let free = StepControl {
        c6: 0.0,
        delta: *delta,
        ..ctl.clone()
    };
    let mut ratios = Vec::with_capacity(runs.len());
    for (map, sched) in runs {
        let (s0, s1) = (sched.strip(0), sched.strip(1));
        let m = map.restricted(s0)?;
        let out = kam_step(&m, &s1, &free)?;
        let unit = smallness(out.eps_in, &s0, &s1, 1.0, delta);
        let need = out.eps_out / (s1.s + out.eps_in);
        ratios.push((out.eps_in, need / unit));
    }
    let worst = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(C6Calibration {
        c6: 2.0 * worst,
        ratios,
    })
}
