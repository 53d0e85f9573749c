use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{circle_distance, line_reversibility, LineGrid, SmallTwistError, SmallTwistMap, TOL_RES};
use crate::apseries::{APSeries2, ModeSeries, StripParams};
use crate::homological::divisor;
use crate::kam::shifted;

/// Truncation `0 < μ[[k]] + ν|k| < N` and the numerics of the conjugation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AveragingControl {
    pub mu: f64,
    pub nu: f64,
    pub n_cut: f64,
    pub tol_res: f64,
    /// Absolute tolerance of the inverse change of variables.
    pub fp_tol: f64,
    pub fp_max_iter: usize,
}

impl Default for AveragingControl {
    fn default() -> Self {
        Self {
            mu: 0.1,
            nu: 0.1,
            n_cut: 10.0,
            tol_res: TOL_RES,
            fp_tol: 1e-15,
            fp_max_iter: 200,
        }
    }
}

/// `θ₁ = θ + α + δL₀(ρ) + δΦ₁(θ,ρ)`, `ρ₁ = ρ + δΦ₂(θ,ρ)`.
#[derive(Clone, Debug)]
pub struct AveragedMap {
    pub alpha: f64,
    pub delta: f64,
    /// `L₀(ρ)`, stored as a series with only the mean block.
    pub twist: APSeries2,
    pub phi1: APSeries2,
    pub phi2: APSeries2,
    pub strip: StripParams,
}

impl AveragedMap {
    pub fn apply(&self, theta: &[f64], d: f64, rho: f64) -> (f64, f64) {
        let spec = self.phi1.spectrum();
        let mut ph = Vec::new();
        spec.phases(&shifted(spec, theta, d), &mut ph);
        let a = self.twist.mean_at(rho) + self.phi1.eval_phases(&ph, rho);
        let b = self.phi2.eval_phases(&ph, rho);
        (d + self.alpha + self.delta * a, rho + self.delta * b)
    }

    pub fn apply_line(&self, x: f64, y: f64) -> (f64, f64) {
        let theta = self.phi1.spectrum().line_angles(x);
        let (d, y1) = self.apply(&theta, 0.0, y);
        (x + d, y1)
    }

    /// `‖Φ₁‖ + ‖Φ₂‖`.
    pub fn remainder(&self) -> f64 {
        self.phi1.norm(&self.strip) + self.phi2.norm(&self.strip)
    }

    pub fn reversibility_defect(&self, grid: &LineGrid) -> f64 {
        line_reversibility(|x, y| self.apply_line(x, y), self.phi1.domain(), grid)
    }
}

#[derive(Clone, Debug)]
pub struct Averaging {
    pub u: APSeries2,
    pub v: APSeries2,
    pub map: AveragedMap,
    /// Number of `k ≠ 0` modes kept by the truncation.
    pub retained: usize,
    pub divisor_floor: f64,
    /// Measured `‖L − H₁ − L₀‖ + ‖M − H₂‖`.
    pub tail: f64,
    /// `e^{−N}(‖L‖ + ‖M‖)`.
    pub tail_bound: f64,
    /// Deviation of the projected `Φ₁, Φ₂` from the pointwise conjugation off the grid.
    pub projection_residual: f64,
    pub reversibility_in: f64,
    pub reversibility_out: f64,
}

impl Averaging {
    /// Sup of `|U(−x,y) + U(x,y)|` and `|V(−x,y) − V(x,y)|`.
    pub fn parity_defect(&self) -> Result<f64, SmallTwistError> {
        let a = self.u.add(&self.u.reflect(0.0))?;
        let b = self.v.sub(&self.v.reflect(0.0))?;
        Ok(super::sup_held_out(&a)?.max(super::sup_held_out(&b)?))
    }
}

struct Conjugation<'a> {
    map: &'a SmallTwistMap,
    u: &'a APSeries2,
    v: &'a APSeries2,
    tol: f64,
    max_iter: usize,
}

impl Conjugation<'_> {
    /// `(Φ₁, Φ₂)` at the hull point `(θ, 0, ρ)`.
    fn remainder_at(&self, theta: &[f64], rho: f64) -> Result<(f64, f64), SmallTwistError> {
        let spec = self.u.spectrum();
        let delta = self.map.delta;
        let mut ph = Vec::new();
        let (mut d, mut y) = (0.0, rho);
        let mut change = f64::INFINITY;
        let mut done = false;
        for _ in 0..self.max_iter {
            spec.phases(&shifted(spec, theta, d), &mut ph);
            let nd = -delta * self.u.eval_phases(&ph, y);
            let ny = rho - delta * self.v.eval_phases(&ph, y);
            change = (nd - d).abs() + (ny - y).abs();
            d = nd;
            y = ny;
            if change <= self.tol {
                done = true;
                break;
            }
        }
        if !done {
            return Err(SmallTwistError::InversionStalled { change });
        }
        let (d1, y1) = self.map.apply(theta, d, y);
        spec.phases(&shifted(spec, theta, d1), &mut ph);
        let t1 = d1 + delta * self.u.eval_phases(&ph, y1);
        let r1 = y1 + delta * self.v.eval_phases(&ph, y1);
        let twist = self.map.l.mean_at(rho);
        Ok((
            (t1 - self.map.alpha) / delta - twist,
            (r1 - rho) / delta,
        ))
    }
}

/// Removes the truncated nonresonant oscillation of `L` and `M` to first order in `δ`.
pub fn averaging_transform(
    map: &SmallTwistMap,
    ctl: &AveragingControl,
) -> Result<Averaging, SmallTwistError> {
    if map.delta <= 0.0 {
        return Err(SmallTwistError::Invalid("averaging needs δ > 0".into()));
    }
    let spec = map.l.spectrum().clone();
    let (l, m) = (&map.l, &map.m);
    let mut u = l.zeroed();
    let mut v = m.zeroed();
    let mut tail_l = l.clone();
    let mut tail_m = m.clone();
    tail_l.block_mut(spec.zero()).fill(Complex64::new(0.0, 0.0));
    let mut retained = 0;
    let mut floor = f64::INFINITY;
    for i in 0..spec.len() {
        if i == spec.zero() {
            continue;
        }
        let k = spec.mode(i);
        let level = ctl.mu * spec.support_weight(i) + ctl.nu * k.abs() as f64;
        if !(level > 0.0 && level < ctl.n_cut) {
            continue;
        }
        if l.block_abs(i) == 0.0 && m.block_abs(i) == 0.0 {
            continue;
        }
        let phase = spec.frequency(i) * map.alpha;
        let distance = circle_distance(phase);
        if distance <= ctl.tol_res {
            return Err(SmallTwistError::ResonantModeEncountered {
                k: k.to_string(),
                distance,
            });
        }
        retained += 1;
        let dv = divisor(phase);
        floor = floor.min(dv.norm());
        let inv = -dv.inv();
        for (o, c) in u.block_mut(i).iter_mut().zip(l.block(i)) {
            *o = c * inv;
        }
        for (o, c) in v.block_mut(i).iter_mut().zip(m.block(i)) {
            *o = c * inv;
        }
        tail_l.block_mut(i).fill(Complex64::new(0.0, 0.0));
        tail_m.block_mut(i).fill(Complex64::new(0.0, 0.0));
    }
    let (u, v) = (u.cleaned(), v.cleaned());
    let p = &map.strip;
    let tail = tail_l.norm(p) + tail_m.norm(p);
    let tail_bound = (-ctl.n_cut).exp() * (l.norm(p) + m.norm(p));

    let conj = Conjugation {
        map,
        u: &u,
        v: &v,
        tol: ctl.fp_tol,
        max_iter: ctl.fp_max_iter,
    };
    let proj = spec.projector()?;
    let dom = l.domain();
    let degree = l.degree();
    let nodes = dom.nodes(degree);
    let rows: Vec<(Vec<f64>, Vec<f64>)> = proj
        .samples()
        .par_iter()
        .map(|t| {
            let mut a = Vec::with_capacity(nodes.len());
            let mut b = Vec::with_capacity(nodes.len());
            for &rho in &nodes {
                let (p1, p2) = conj.remainder_at(t, rho)?;
                a.push(p1);
                b.push(p2);
            }
            Ok((a, b))
        })
        .collect::<Result<_, SmallTwistError>>()?;
    let col = |first: bool| -> Vec<Vec<f64>> {
        (0..nodes.len())
            .map(|n| {
                rows.iter()
                    .map(|r| if first { r.0[n] } else { r.1[n] })
                    .collect()
            })
            .collect()
    };
    let phi1 = APSeries2::from_node_values(spec.clone(), dom, degree, &col(true))?;
    let phi2 = APSeries2::from_node_values(spec.clone(), dom, degree, &col(false))?;
    let ys = phi1.y_probe();
    let projection_residual = proj
        .held_out()
        .par_iter()
        .map(|t| {
            let mut ph = Vec::new();
            spec.phases(t, &mut ph);
            let mut w: f64 = 0.0;
            for &rho in &ys {
                let (a, b) = conj.remainder_at(t, rho)?;
                w = w
                    .max((phi1.eval_phases(&ph, rho) - a).abs())
                    .max((phi2.eval_phases(&ph, rho) - b).abs());
            }
            Ok(w)
        })
        .collect::<Result<Vec<f64>, SmallTwistError>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut twist = l.zeroed();
    twist
        .block_mut(spec.zero())
        .copy_from_slice(l.block(spec.zero()));
    let out = AveragedMap {
        alpha: map.alpha,
        delta: map.delta,
        twist,
        phi1,
        phi2,
        strip: map.strip,
    };
    let grid = LineGrid::default();
    Ok(Averaging {
        reversibility_in: map.reversibility_defect(&grid),
        reversibility_out: out.reversibility_defect(&grid),
        u,
        v,
        map: out,
        retained,
        divisor_floor: floor,
        tail,
        tail_bound,
        projection_residual,
    })
}
