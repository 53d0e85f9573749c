use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{OscillatorError, OscillatorSpec};
use crate::numerics::{Dopri5, RunningFit};

/// Longest horizon accepted by the experiment.
pub const MAX_HORIZON: f64 = 1e5;
/// Spacing of the uniform samples taken from dense output.
const SAMPLE_DT: f64 = 0.05;

/// Statistics of one orbit over `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitStats {
    pub start: [f64; 2],
    /// `sup (|x| + |x'|)`.
    pub sup_abs: f64,
    /// Extremes of the amplitude `√(x² + y²)`.
    pub amp_min: f64,
    pub amp_max: f64,
    /// `amp_max / amp_min`.
    pub envelope_ratio: f64,
    /// Least-squares slope of the amplitude against `t`.
    pub drift_slope: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub t_end: f64,
    pub orbits: Vec<OrbitStats>,
    pub max_envelope: f64,
    pub max_ratio: f64,
    pub max_abs_slope: f64,
}

/// Starting points `(0, r)` for each radius.
pub fn radial_inits(radii: &[f64]) -> Vec<[f64; 2]> {
    radii.iter().map(|&r| [0.0, r]).collect()
}

fn orbit(
    spec: &OscillatorSpec,
    z0: [f64; 2],
    t_end: f64,
    tol: f64,
) -> Result<OrbitStats, OscillatorError> {
    let mut fit = RunningFit::default();
    let mut sup_abs: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut next = 0usize;
    let mut record = |t: f64, z: [f64; 2]| {
        let a = z[0].hypot(z[1]);
        fit.push(t, a);
        lo = lo.min(a);
        hi = hi.max(a);
        sup_abs = sup_abs.max(z[0].abs() + spec.velocity(&z).abs());
    };
    record(0.0, z0);
    next += 1;
    Dopri5::new(tol).integrate(
        |t, z| spec.rhs(t, z),
        0.0,
        z0,
        t_end,
        |rec| {
            while (next as f64) * SAMPLE_DT <= rec.t1 {
                let t = next as f64 * SAMPLE_DT;
                record(t, rec.interpolate(t));
                next += 1;
            }
        },
    )?;
    Ok(OrbitStats {
        start: z0,
        sup_abs,
        amp_min: lo,
        amp_max: hi,
        envelope_ratio: hi / lo,
        drift_slope: fit.slope(),
        samples: fit.count(),
    })
}

/// Integrates every starting point to `t_end` and collects envelope and drift statistics.
pub fn boundedness_experiment(
    spec: &OscillatorSpec,
    inits: &[[f64; 2]],
    t_end: f64,
    tol: f64,
) -> Result<BoundednessReport, OscillatorError> {
    if !(t_end > 0.0 && t_end <= MAX_HORIZON) {
        return Err(OscillatorError::Invalid(format!(
            "horizon {t_end} outside (0, {MAX_HORIZON}]"
        )));
    }
    if !(1e-13..1.0).contains(&tol) {
        return Err(OscillatorError::Invalid(format!("tolerance {tol:e} outside [1e-13, 1)")));
    }
    let orbits = inits
        .par_iter()
        .map(|&z| orbit(spec, z, t_end, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let max = |f: &dyn Fn(&OrbitStats) -> f64| orbits.iter().map(f).fold(0.0, f64::max);
    Ok(BoundednessReport {
        t_end,
        max_envelope: max(&|o| o.sup_abs),
        max_ratio: max(&|o| o.envelope_ratio),
        max_abs_slope: max(&|o| o.drift_slope.abs()),
        orbits,
    })
}
