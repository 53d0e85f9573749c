use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::step::{kam_step, smallness, StepControl};
use super::{KamError, ReversibleTwistMap, TransformPair};
use crate::apseries::{torus_samples, APSeries, APSeries2, ModeSeries, StripParams, YDomain};

const CURVE_SEED: u64 = 0xc0de;
const CURVE_SAMPLES: usize = 512;

/// Strip widths and target sizes along the iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KamSchedule {
    pub m0: f64,
    pub r0: f64,
    pub s0: f64,
    pub eps0: f64,
    pub max_steps: usize,
    pub stop_eps: f64,
}

impl KamSchedule {
    /// `m₀ = r₀ = s₀ = ε₀^{2/3}`.
    pub fn from_eps0(eps0: f64, max_steps: usize, stop_eps: f64) -> Self {
        let w = eps0.powf(2.0 / 3.0);
        Self {
            m0: w,
            r0: w,
            s0: w,
            eps0,
            max_steps,
            stop_eps,
        }
    }

    pub fn validate(&self) -> Result<(), KamError> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if unit(self.m0) && unit(self.r0) && unit(self.s0) && self.eps0 > 0.0 && self.stop_eps >= 0.0 {
            Ok(())
        } else {
            Err(KamError::InvalidSchedule(format!("{self:?}")))
        }
    }

    pub fn eps(&self, n: usize) -> f64 {
        self.eps0 * 0.5f64.powi(n as i32)
    }

    /// `m_n = (m₀/2)(1+2⁻ⁿ)`, `r_n` alike, `s_n = s₀ (ε_n/ε₀)^{2/3}`.
    pub fn strip(&self, n: usize) -> StripParams {
        let h = 0.5f64.powi(n as i32);
        StripParams {
            m: 0.5 * self.m0 * (1.0 + h),
            r: 0.5 * self.r0 * (1.0 + h),
            s: self.s0 * h.powf(2.0 / 3.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RunStatus {
    Converged,
    ScheduleExhausted,
    /// A step did not halve the measured size.
    StepRejected { eps_in: f64, eps_out: f64 },
    StepFailed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub eps_schedule: f64,
    pub eps_in: f64,
    pub eps_out: f64,
    pub theta: f64,
    pub divisor_floor: f64,
    pub iterations: usize,
    pub projection_residual: f64,
    pub reversibility: f64,
    pub transform_ok: bool,
    pub derivative_ok: bool,
    pub map_ok: bool,
    /// `P'₁ + P'₂` of the accumulated transform.
    pub composed_derivative: f64,
    /// `Π(1 + 2θ_i) − 1`.
    pub composed_bound: f64,
    pub accepted: bool,
}

/// `y = φ(x)` together with its conjugacy certificate.
#[derive(Clone, Debug)]
pub struct InvariantCurve {
    pub phi_curve: APSeries,
    pub alpha: f64,
    /// Sup over samples of `‖𝔐(Υ(ξ,0)) − Υ(ξ+α,0)‖` and of the restriction defect.
    pub conjugacy_defect: f64,
    /// Sup of `|ξ₁ − ξ − α|` where `Υ(ξ₁,·)` has the `x` of `𝔐(Υ(ξ,0))`.
    pub restriction_defect: f64,
    /// Sup of `|φ(x₁) − y₁|` for `(x₁,y₁) = 𝔐(x, φ(x))`.
    pub invariance_defect: f64,
    pub strip_out: (f64, f64),
    pub certified: bool,
}

#[derive(Clone, Debug)]
pub struct KamRun {
    pub curve: InvariantCurve,
    pub trace: Vec<TraceRow>,
    pub status: RunStatus,
    pub transform: TransformPair,
    pub final_map: ReversibleTwistMap,
    pub schedule: KamSchedule,
    pub notes: Vec<String>,
}

impl KamRun {
    /// Tab-separated trace with a header line.
    pub fn trace_tsv(&self) -> String {
        let mut out = String::from(
            "step\teps_schedule\teps_in\teps_out\ttheta\tdivisor_floor\titerations\tprojection_residual\treversibility\ttransform_ok\tderivative_ok\tmap_ok\tcomposed_derivative\tcomposed_bound\taccepted\n",
        );
        for r in &self.trace {
            let _ = writeln!(
                out,
                "{}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}\t{}\t{:.3e}\t{:.3e}\t{}\t{}\t{}\t{:.6e}\t{:.6e}\t{}",
                r.step,
                r.eps_schedule,
                r.eps_in,
                r.eps_out,
                r.theta,
                r.divisor_floor,
                r.iterations,
                r.projection_residual,
                r.reversibility,
                r.transform_ok,
                r.derivative_ok,
                r.map_ok,
                r.composed_derivative,
                r.composed_bound,
                r.accepted
            );
        }
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        out
    }
}

/// `p = φ_in + p_out(ξ+φ_in, η+ψ_in)`, `q` alike, expanded on `domain`.
pub fn compose_pair(
    outer: &TransformPair,
    inner: &TransformPair,
    domain: YDomain,
) -> Result<TransformPair, KamError> {
    if outer.is_identity() {
        return Ok(inner.restricted(domain));
    }
    let spec = inner.phi.spectrum().clone();
    let degree = inner.phi.degree();
    let half = outer.domain();
    let proj = spec.projector()?;
    let nodes = domain.nodes(degree);
    let point = |t: &[f64], eta: f64| -> Result<(f64, f64), KamError> {
        let (a, b) = inner.increments(t, 0.0, eta);
        let y = eta + b;
        if (y - half.center).abs() > half.half * (1.0 + 1e-12) {
            return Err(KamError::DomainEscape { y, half: half.half });
        }
        let (c, d) = outer.increments(t, a, y);
        Ok((a + c, b + d))
    };
    let rows: Vec<Vec<(f64, f64)>> = proj
        .samples()
        .par_iter()
        .map(|t| nodes.iter().map(|&eta| point(t, eta)).collect())
        .collect::<Result<_, KamError>>()?;
    let cols = |k: usize| -> Vec<Vec<f64>> {
        (0..nodes.len())
            .map(|n| rows.iter().map(|r| if k == 0 { r[n].0 } else { r[n].1 }).collect())
            .collect()
    };
    Ok(TransformPair {
        phi: APSeries2::from_node_values(spec.clone(), domain, degree, &cols(0))?,
        psi: APSeries2::from_node_values(spec, domain, degree, &cols(1))?,
    })
}

/// `Φ₀ ∘ Φ₁ ∘ … ∘ Φ_n`, expanded on the domain of the last factor.
pub fn compose_transforms(pairs: &[TransformPair]) -> Result<TransformPair, KamError> {
    let (first, rest) = pairs
        .split_first()
        .ok_or_else(|| KamError::InvalidSchedule("no transforms to compose".into()))?;
    rest.iter()
        .try_fold(first.clone(), |acc, p| compose_pair(&acc, p, p.domain()))
}

/// Runs the step along the schedule, then extracts the curve `η = 0`.
pub fn kam_iterate(
    map: &ReversibleTwistMap,
    schedule: &KamSchedule,
    ctl: &StepControl,
) -> Result<KamRun, KamError> {
    schedule.validate()?;
    let mut sched = schedule.clone();
    let mut notes = Vec::new();
    let avail = map.domain().half;
    if avail < sched.s0 {
        notes.push(format!(
            "y-domain half-width {avail:e} below s0 = {:e}; s_n rescaled by {:e}",
            sched.s0,
            avail / sched.s0
        ));
        sched.s0 = avail;
    }
    let mut cur = map.restricted(sched.strip(0))?;
    let eps0 = cur.size();
    let theta0 = smallness(eps0, &sched.strip(0), &sched.strip(1), ctl.c6, &ctl.delta);
    if theta0 >= 0.25 {
        return Err(KamError::SmallnessViolated { theta: theta0 });
    }
    if eps0 > sched.eps0 {
        notes.push(format!("measured size {eps0:e} exceeds eps0 = {:e}", sched.eps0));
    }
    let mut acc: Option<TransformPair> = None;
    let mut trace = Vec::new();
    let mut product = 1.0;
    let mut status = None;
    for n in 0..sched.max_steps {
        let eps_n = cur.size();
        if eps_n < sched.stop_eps {
            status = Some(RunStatus::Converged);
            break;
        }
        let next = sched.strip(n + 1);
        let out = match kam_step(&cur, &next, ctl) {
            Ok(o) => o,
            Err(e) => {
                status = Some(RunStatus::StepFailed(e.to_string()));
                break;
            }
        };
        let accepted = out.eps_out <= 0.5 * eps_n;
        let mut row = TraceRow {
            step: n,
            eps_schedule: sched.eps(n),
            eps_in: eps_n,
            eps_out: out.eps_out,
            theta: out.theta,
            divisor_floor: out.divisor_floor,
            iterations: out.iterations,
            projection_residual: out.projection_residual,
            reversibility: out.reversibility_out,
            transform_ok: out.estimates.transform_ok(),
            derivative_ok: out.estimates.derivative_ok(),
            map_ok: out.estimates.map_ok(),
            composed_derivative: f64::NAN,
            composed_bound: f64::NAN,
            accepted,
        };
        if !accepted {
            trace.push(row);
            status = Some(RunStatus::StepRejected {
                eps_in: eps_n,
                eps_out: out.eps_out,
            });
            break;
        }
        let composed = match &acc {
            None => out.pair.clone(),
            Some(a) => compose_pair(a, &out.pair, out.pair.domain())?,
        };
        product *= 1.0 + 2.0 * out.theta;
        let (d1, d2) = composed.derivative_sizes(&next);
        row.composed_derivative = d1 + d2;
        row.composed_bound = product - 1.0;
        trace.push(row);
        acc = Some(composed);
        cur = out.new_map;
    }
    let status = status.unwrap_or_else(|| {
        if cur.size() < sched.stop_eps {
            RunStatus::Converged
        } else {
            RunStatus::ScheduleExhausted
        }
    });
    let transform = acc.unwrap_or_else(|| {
        TransformPair::identity(cur.spectrum().clone(), cur.domain(), cur.f.degree())
    });
    let mut curve = extract_curve(map, &transform)?;
    curve.strip_out = (cur.strip.m, cur.strip.r);
    curve.certified = status == RunStatus::Converged;
    Ok(KamRun {
        curve,
        trace,
        status,
        transform,
        final_map: cur,
        schedule: sched,
        notes,
    })
}

/// Curve `η = 0` of the accumulated transform, checked against the original map.
fn extract_curve(map: &ReversibleTwistMap, ups: &TransformPair) -> Result<InvariantCurve, KamError> {
    let p0 = ups.phi.at_y(0.0);
    let q0 = ups.psi.at_y(0.0);
    let phi_curve = if p0.is_zero() {
        q0.clone()
    } else {
        let w = p0.invert_time(1.0, 1e-12)?;
        q0.compose_inner(&w, 1e-12)?
    };
    let alpha = map.alpha;
    let spec = map.spectrum().clone();
    let dp = ups.phi.derivative_x();
    let samples = torus_samples(spec.basis().len(), CURVE_SAMPLES, CURVE_SEED);
    let (conj, restr, inv) = samples
        .par_iter()
        .map(|t| {
            let (p, q) = ups.increments(t, 0.0, 0.0);
            let (x1, y1) = map.apply(t, p, q);
            let (pa, qa) = ups.increments(t, alpha, 0.0);
            let conj = (x1 - alpha - pa).abs().max((y1 - qa).abs());
            let mut d = alpha;
            for _ in 0..8 {
                let mut ph = Vec::new();
                spec.phases(&super::shifted(&spec, t, d), &mut ph);
                let h = d + ups.phi.eval_phases(&ph, 0.0) - x1;
                d -= h / (1.0 + dp.eval_phases(&ph, 0.0));
            }
            let restr = (d - alpha).abs();
            let xc = curve_point(&phi_curve, t, 0.0);
            let (cx, cy) = map.apply(t, 0.0, xc);
            let inv = (curve_point(&phi_curve, t, cx) - cy).abs();
            (conj, restr, inv)
        })
        .reduce(
            || (0.0, 0.0, 0.0),
            |a, b| (a.0.max(b.0), a.1.max(b.1), a.2.max(b.2)),
        );
    Ok(InvariantCurve {
        phi_curve,
        alpha,
        conjugacy_defect: conj.max(restr),
        restriction_defect: restr,
        invariance_defect: inv,
        strip_out: (0.0, 0.0),
        certified: false,
    })
}

fn curve_point(c: &APSeries, theta: &[f64], d: f64) -> f64 {
    c.eval_angles(&super::shifted(c.spectrum(), theta, d))
}
