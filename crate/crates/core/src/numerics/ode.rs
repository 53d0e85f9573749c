//! Dormand–Prince 5(4) with step-size control and continuous output.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its continuous extension.
#[derive(Clone, Debug)]
pub struct StepRecord<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    cont: [[f64; N]; 4],
}

impl<const N: usize> StepRecord<N> {
    /// State at `t` within the step.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let s = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        let s1 = 1.0 - s;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = self.y0[i]
                + s * (self.cont[0][i]
                    + s1 * (self.cont[1][i] + s * (self.cont[2][i] + s1 * self.cont[3][i])));
        }
        out
    }
}

/// Integrator settings.
#[derive(Clone, Copy, Debug)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_max: f64,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            max_steps: 50_000_000,
            h_max: f64::INFINITY,
        }
    }

    pub fn with_h_max(mut self, h: f64) -> Self {
        self.h_max = h;
        self
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction); `observe` sees
    /// every accepted step.
    pub fn integrate<const N: usize>(
        &self,
        f: impl Fn(f64, &[f64; N]) -> [f64; N],
        t0: f64,
        y0: [f64; N],
        t1: f64,
        mut observe: impl FnMut(&StepRecord<N>),
    ) -> Result<[f64; N], OdeError> {
        if t0 == t1 {
            return Ok(y0);
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let mut h = self.initial_step(&f, t, &y, &k1, dir).min(span).min(self.h_max);
        let mut steps = 0usize;
        let mut err_prev = 1e-4f64;
        let mut rejected = false;
        loop {
            if steps >= self.max_steps {
                return Err(OdeError::TooManySteps(self.max_steps));
            }
            steps += 1;
            let remaining = (t1 - t).abs();
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let hs = h * dir;
            let stage = |base: &[f64; N], terms: &[(f64, &[f64; N])]| -> [f64; N] {
                let mut out = *base;
                for (c, k) in terms {
                    for i in 0..N {
                        out[i] += hs * c * k[i];
                    }
                }
                out
            };
            let k2 = f(t + C2 * hs, &stage(&y, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &stage(&y, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * hs, &stage(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * hs,
                &stage(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + hs,
                &stage(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let ynew = stage(&y, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let tnew = if last { t1 } else { t + hs };
            let k7 = f(tnew, &ynew);
            let mut err = 0.0;
            for i in 0..N {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                if h < 1e-14 * (1.0 + t.abs()) {
                    return Err(OdeError::NonFinite { t });
                }
                h *= 0.1;
                rejected = true;
                continue;
            }
            if err <= 1.0 {
                let mut cont = [[0.0; N]; 4];
                for i in 0..N {
                    let dy = ynew[i] - y[i];
                    let bspl = hs * k1[i] - dy;
                    cont[0][i] = dy;
                    cont[1][i] = bspl;
                    cont[2][i] = dy - hs * k7[i] - bspl;
                    cont[3][i] = hs
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]);
                }
                observe(&StepRecord {
                    t0: t,
                    t1: tnew,
                    y0: y,
                    y1: ynew,
                    cont,
                });
                t = tnew;
                y = ynew;
                k1 = k7;
                if last {
                    return Ok(y);
                }
                // PI controller
                let mut fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
                fac = fac.clamp(0.2, 10.0);
                if rejected {
                    fac = fac.min(1.0);
                }
                h = (h * fac).min(self.h_max);
                err_prev = err.max(1e-4);
                rejected = false;
            } else {
                let fac = (0.9 * err.powf(-0.2)).max(0.2);
                h *= fac;
                rejected = true;
            }
            if h < 1e-15 * (1.0 + t.abs()) {
                return Err(OdeError::StepSizeUnderflow { t });
            }
        }
    }

    fn initial_step<const N: usize>(
        &self,
        f: &impl Fn(f64, &[f64; N]) -> [f64; N],
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        dir: f64,
    ) -> f64 {
        let sc = |i: usize| self.atol + self.rtol * y[i].abs();
        let d0 = (0..N).map(|i| (y[i] / sc(i)).powi(2)).sum::<f64>().sqrt() / (N as f64).sqrt();
        let d1 = (0..N).map(|i| (k1[i] / sc(i)).powi(2)).sum::<f64>().sqrt() / (N as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let mut y1 = *y;
        for i in 0..N {
            y1[i] += dir * h0 * k1[i];
        }
        let k2 = f(t + dir * h0, &y1);
        let d2 = (0..N)
            .map(|i| ((k2[i] - k1[i]) / sc(i)).powi(2))
            .sum::<f64>()
            .sqrt()
            / (N as f64).sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn harmonic_period() {
        let w = 1.7;
        let ode = Dopri5::new(1e-12);
        let y = ode
            .integrate(|_, y: &[f64; 2]| [y[1], -w * w * y[0]], 0.0, [1.0, 0.0], TAU / w, |_| {})
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
    }

    #[test]
    fn backward_integration() {
        let ode = Dopri5::new(1e-12);
        let y = ode
            .integrate(|_, y: &[f64; 1]| [y[0]], 1.0, [1f64.exp()], 0.0, |_| {})
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn dense_output_is_accurate() {
        let ode = Dopri5::new(1e-10);
        let mut worst = 0.0f64;
        ode.integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            20.0,
            |s| {
                for j in 1..10 {
                    let t = s.t0 + (s.t1 - s.t0) * j as f64 / 10.0;
                    let y = s.interpolate(t);
                    worst = worst.max((y[0] - t.sin()).abs()).max((y[1] - t.cos()).abs());
                }
            },
        )
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }
}
