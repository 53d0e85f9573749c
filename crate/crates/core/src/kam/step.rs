use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{shifted, verify_reversibility, KamError, ReversibilityGrid, ReversibleTwistMap, TransformPair};
use crate::apseries::{APSeries2, ModeSeries, Spectrum, StripParams, YDomain};
use crate::diophantine::ApproximationFunction;
use crate::homological::{assemble_fg, DEFAULT_TOL_DIV};

/// Tuning of a single step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepControl {
    /// Constant of the smallness condition; zero disables the gate.
    pub c6: f64,
    pub delta: ApproximationFunction,
    pub tol_div: f64,
    /// Relative tolerance of the implicit solve, scaled by the input size.
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// Absolute slack added to the reversibility bound.
    pub reversibility_slack: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            c6: 0.0,
            delta: ApproximationFunction::default(),
            tol_div: DEFAULT_TOL_DIV,
            fp_tol: 1e-13,
            fp_max_iter: 100,
            reversibility_slack: 1e-11,
        }
    }
}

/// Measured norms against the bounds a step should meet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepEstimates {
    pub transform_norm: f64,
    pub transform_bound: f64,
    pub derivative_norm: f64,
    pub derivative_bound: f64,
    pub map_norm: f64,
    pub map_bound: f64,
}

impl StepEstimates {
    pub fn transform_ok(&self) -> bool {
        self.transform_norm <= self.transform_bound
    }
    pub fn derivative_ok(&self) -> bool {
        self.derivative_norm <= self.derivative_bound
    }
    pub fn map_ok(&self) -> bool {
        self.map_norm <= self.map_bound
    }
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub pair: TransformPair,
    pub new_map: ReversibleTwistMap,
    pub theta: f64,
    pub eps_in: f64,
    pub eps_out: f64,
    pub divisor_floor: f64,
    pub homological_residual: f64,
    /// Most fixed-point iterations used at one collocation point.
    pub iterations: usize,
    /// Deviation of the projected `f₊, g₊` from the implicit solution off the grid.
    pub projection_residual: f64,
    pub reversibility_in: f64,
    pub reversibility_out: f64,
    pub estimates: StepEstimates,
}

/// `c₆ ε Λ²((r−r₊)/10) Λ²((m−m₊)/10) (1/(r−r₊) + 1/(s−s₊))`, evaluated in logs.
pub fn smallness(
    eps: f64,
    cur: &StripParams,
    next: &StripParams,
    c6: f64,
    delta: &ApproximationFunction,
) -> f64 {
    if c6 == 0.0 || eps == 0.0 {
        return 0.0;
    }
    let (dr, dm, ds) = (cur.r - next.r, cur.m - next.m, cur.s - next.s);
    let log = c6.ln()
        + eps.ln()
        + 2.0 * delta.log_lambda_envelope(dr / 10.0)
        + 2.0 * delta.log_lambda_envelope(dm / 10.0)
        + (1.0 / dr + 1.0 / ds).ln();
    log.exp()
}

fn check_nesting(cur: &StripParams, next: &StripParams) -> Result<(), KamError> {
    let ok = |a: f64, b: f64| 0.0 < b && b < a && a < 1.0;
    if ok(cur.m, next.m) && ok(cur.r, next.r) && ok(cur.s, next.s) {
        Ok(())
    } else {
        Err(KamError::InvalidSchedule(format!(
            "strips not nested: {cur:?} -> {next:?}"
        )))
    }
}

struct Implicit<'a> {
    spec: &'a Spectrum,
    map: &'a ReversibleTwistMap,
    pair: &'a TransformPair,
    half: f64,
    tol: f64,
    max_iter: usize,
}

impl Implicit<'_> {
    fn inside(&self, y: f64) -> Result<(), KamError> {
        if y.abs() > self.half * (1.0 + 1e-12) {
            Err(KamError::DomainEscape { y, half: self.half })
        } else {
            Ok(())
        }
    }

    /// `(f₊, g₊)` at `(θ, η)` and the iterations used.
    fn solve(&self, theta: &[f64], p0: &[Complex64], eta: f64) -> Result<(f64, f64, usize), KamError> {
        let (phi, psi) = (&self.pair.phi, &self.pair.psi);
        let pv = phi.eval_phases(p0, eta);
        let qv = psi.eval_phases(p0, eta);
        self.inside(eta + qv)?;
        let mut ph = Vec::new();
        self.spec.phases(&shifted(self.spec, theta, pv), &mut ph);
        let a = self.map.f.eval_phases(&ph, eta + qv) + pv + qv;
        let b = self.map.g.eval_phases(&ph, eta + qv) + qv;
        let (mut fp, mut gp) = (0.0, 0.0);
        let mut change = f64::INFINITY;
        for it in 1..=self.max_iter {
            self.inside(eta + gp)?;
            let d = self.map.alpha + eta + fp;
            self.spec.phases(&shifted(self.spec, theta, d), &mut ph);
            let nf = a - phi.eval_phases(&ph, eta + gp);
            let ng = b - psi.eval_phases(&ph, eta + gp);
            change = (nf - fp).abs() + (ng - gp).abs();
            fp = nf;
            gp = ng;
            if change <= self.tol {
                return Ok((fp, gp, it));
            }
        }
        Err(KamError::FixedPointDiverged {
            iterations: self.max_iter,
            change,
        })
    }
}

/// One conjugation `Φ⁻¹ ∘ 𝔐 ∘ Φ`, with the new map expanded on `|η| ≤ next.s`.
pub fn kam_step(
    map: &ReversibleTwistMap,
    next: &StripParams,
    ctl: &StepControl,
) -> Result<StepOutcome, KamError> {
    let cur = map.strip;
    check_nesting(&cur, next)?;
    let eps = map.size();
    let theta = smallness(eps, &cur, next, ctl.c6, &ctl.delta);
    if theta >= 0.25 {
        return Err(KamError::SmallnessViolated { theta });
    }
    let rev_in = verify_reversibility(map, &ReversibilityGrid::default());
    let rhs = assemble_fg(&map.f, &map.g, map.alpha, ctl.tol_div)?;
    let pair = TransformPair {
        phi: rhs.phi,
        psi: rhs.psi,
    };
    let spec = map.spectrum().clone();
    let dom = YDomain::symmetric(next.s)?;
    let degree = map.f.degree();
    let solver = Implicit {
        spec: &spec,
        map,
        pair: &pair,
        half: map.domain().half,
        tol: ctl.fp_tol * eps,
        max_iter: ctl.fp_max_iter,
    };
    let proj = spec.projector()?;
    let nodes = dom.nodes(degree);
    type Row = (Vec<f64>, Vec<f64>, usize);
    let rows: Vec<Row> = proj
        .samples()
        .par_iter()
        .map(|t| {
            let mut p0 = Vec::new();
            spec.phases(t, &mut p0);
            let mut fr = Vec::with_capacity(nodes.len());
            let mut gr = Vec::with_capacity(nodes.len());
            let mut most = 0;
            for &eta in &nodes {
                let (a, b, it) = solver.solve(t, &p0, eta)?;
                fr.push(a);
                gr.push(b);
                most = most.max(it);
            }
            Ok((fr, gr, most))
        })
        .collect::<Result<_, KamError>>()?;
    let iterations = rows.iter().map(|r| r.2).max().unwrap_or(0);
    let column = |pick: &dyn Fn(&Row) -> &Vec<f64>| -> Vec<Vec<f64>> {
        (0..nodes.len())
            .map(|n| rows.iter().map(|r| pick(r)[n]).collect())
            .collect()
    };
    let f_new = APSeries2::from_node_values(spec.clone(), dom, degree, &column(&|r| &r.0))?;
    let g_new = APSeries2::from_node_values(spec.clone(), dom, degree, &column(&|r| &r.1))?;
    let ys = f_new.y_probe();
    let projection_residual = proj
        .held_out()
        .par_iter()
        .map(|t| {
            let mut p0 = Vec::new();
            spec.phases(t, &mut p0);
            let mut worst: f64 = 0.0;
            for &eta in &ys {
                let (a, b, _) = solver.solve(t, &p0, eta)?;
                worst = worst
                    .max((f_new.eval_phases(&p0, eta) - a).abs())
                    .max((g_new.eval_phases(&p0, eta) - b).abs());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>, KamError>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let new_map = ReversibleTwistMap::new(map.alpha, f_new, g_new, *next)?;
    let rev_out = verify_reversibility(&new_map, &ReversibilityGrid::default());
    let bound = 10.0 * rev_in + ctl.reversibility_slack;
    if rev_out > bound {
        return Err(KamError::ReversibilityLost {
            defect: rev_out,
            bound,
        });
    }
    let eps_out = new_map.size();
    let (dx, dy) = pair.derivative_sizes(next);
    let inv_gap = 1.0 / (cur.r - next.r) + 1.0 / (cur.s - next.s);
    let estimates = StepEstimates {
        transform_norm: pair.size_at(next),
        transform_bound: theta / inv_gap,
        derivative_norm: dx + dy,
        derivative_bound: theta,
        map_norm: eps_out,
        map_bound: theta * (next.s + eps),
    };
    Ok(StepOutcome {
        pair,
        new_map,
        theta,
        eps_in: eps,
        eps_out,
        divisor_floor: rhs.divisor_floor,
        homological_residual: rhs.residual,
        iterations,
        projection_residual,
        reversibility_in: rev_in,
        reversibility_out: rev_out,
        estimates,
    })
}
