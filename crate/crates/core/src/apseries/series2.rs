use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::chebyshev;
use super::series::{APSeries, ModeSeries};
use super::spectrum::Spectrum;
use super::SeriesError;

pub const DEFAULT_CHEB_DEGREE: usize = 16;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The y-interval `[center − half, center + half]` of a Chebyshev expansion.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct YDomain {
    pub center: f64,
    pub half: f64,
}

impl YDomain {
    pub fn new(center: f64, half: f64) -> Result<Self, SeriesError> {
        if half > 0.0 && half.is_finite() && center.is_finite() {
            Ok(Self { center, half })
        } else {
            Err(SeriesError::InvalidStrip(format!(
                "y-domain center {center}, half-width {half}"
            )))
        }
    }

    pub fn symmetric(s: f64) -> Result<Self, SeriesError> {
        Self::new(0.0, s)
    }

    pub fn to_unit(&self, y: f64) -> f64 {
        (y - self.center) / self.half
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        self.center + self.half * u
    }

    pub fn lo(&self) -> f64 {
        self.center - self.half
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half
    }

    pub fn contains(&self, y: f64) -> bool {
        (y - self.center).abs() <= self.half
    }

    /// Chebyshev nodes mapped into the domain.
    pub fn nodes(&self, degree: usize) -> Vec<f64> {
        chebyshev::nodes(degree)
            .into_iter()
            .map(|u| self.from_unit(u))
            .collect()
    }
}

/// Almost periodic in `x`, Chebyshev in `y`.
#[derive(Clone, Debug)]
pub struct APSeries2 {
    spectrum: Arc<Spectrum>,
    domain: YDomain,
    degree: usize,
    coeffs: Vec<Complex64>,
    defect: f64,
}

impl ModeSeries for APSeries2 {
    fn spectrum(&self) -> &Arc<Spectrum> {
        &self.spectrum
    }
    fn block_len(&self) -> usize {
        self.degree + 1
    }
    fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
    fn defect(&self) -> f64 {
        self.defect
    }
    fn defect_mut(&mut self) -> &mut f64 {
        &mut self.defect
    }
    fn same_layout(&self, other: &Self) -> bool {
        self.degree == other.degree
            && self.domain == other.domain
            && self.spectrum.compatible(&other.spectrum)
    }
    fn eval_at(&self, ph: &[Complex64], y: f64) -> f64 {
        self.eval_phases(ph, y)
    }
    fn y_probe(&self) -> Vec<f64> {
        [-1.0, -0.5, 0.0, 0.5, 1.0]
            .iter()
            .map(|&u| self.domain.from_unit(u))
            .collect()
    }
}

impl APSeries2 {
    pub fn zero(spectrum: Arc<Spectrum>, domain: YDomain, degree: usize) -> Self {
        let n = spectrum.len() * (degree + 1);
        Self {
            spectrum,
            domain,
            degree,
            coeffs: vec![ZERO; n],
            defect: 0.0,
        }
    }

    /// Raw coefficients, mode-major with `degree + 1` Chebyshev entries per mode.
    pub fn from_coeffs(
        spectrum: Arc<Spectrum>,
        domain: YDomain,
        degree: usize,
        coeffs: Vec<Complex64>,
    ) -> Result<Self, SeriesError> {
        if coeffs.len() != spectrum.len() * (degree + 1) {
            return Err(SeriesError::BasisMismatch);
        }
        Ok(Self {
            spectrum,
            domain,
            degree,
            coeffs,
            defect: 0.0,
        }
        .cleaned())
    }

    /// `f(x)` regarded as constant in `y`.
    pub fn from_series(f: &APSeries, domain: YDomain, degree: usize) -> Self {
        let mut out = Self::zero(f.spectrum().clone(), domain, degree);
        for i in 0..f.spectrum().len() {
            out.coeffs[i * (degree + 1)] = f.coeffs()[i];
        }
        out.defect = f.defect();
        out
    }

    /// A function of `y` alone.
    pub fn from_y_fn(
        spectrum: Arc<Spectrum>,
        domain: YDomain,
        degree: usize,
        h: impl Fn(f64) -> f64,
    ) -> Self {
        let vals: Vec<f64> = domain.nodes(degree).into_iter().map(h).collect();
        let c = chebyshev::interpolate_real(&vals);
        let mut out = Self::zero(spectrum, domain, degree);
        for (j, v) in c.into_iter().enumerate() {
            out.coeffs[j] = Complex64::new(v, 0.0);
        }
        out.cleaned()
    }

    /// Projects `h(θ, y)` given on the torus: least squares in `θ`, interpolation in `y`.
    /// The fit is checked against `h` on held-out points when `tol` is finite.
    pub fn from_fn(
        spectrum: Arc<Spectrum>,
        domain: YDomain,
        degree: usize,
        tol: f64,
        h: impl Fn(&[f64], f64) -> f64 + Sync,
    ) -> Result<Self, SeriesError> {
        let proj = spectrum.projector()?;
        let ys = domain.nodes(degree);
        let samples = proj.samples();
        let cols: Vec<Vec<f64>> = ys
            .par_iter()
            .map(|&y| samples.iter().map(|t| h(t, y)).collect())
            .collect();
        let out = Self::from_node_values(spectrum.clone(), domain, degree, &cols)?;
        if tol.is_finite() {
            let residual = out.residual_against(&h);
            if residual > tol {
                return Err(SeriesError::ProjectionResidualExceeded { residual, tol });
            }
        }
        Ok(out)
    }

    /// Builds from values at the projector samples, one column per Chebyshev node.
    pub fn from_node_values(
        spectrum: Arc<Spectrum>,
        domain: YDomain,
        degree: usize,
        cols: &[Vec<f64>],
    ) -> Result<Self, SeriesError> {
        let proj = spectrum.projector()?;
        let m = proj.samples().len();
        let mut mat = DMatrix::<f64>::zeros(m, degree + 1);
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                mat[(r, c)] = *v;
            }
        }
        let per_node = proj.project_columns(&spectrum, &mat);
        let mut out = Self::zero(spectrum.clone(), domain, degree);
        let mut vals = vec![ZERO; degree + 1];
        for i in 0..spectrum.len() {
            for (n, v) in vals.iter_mut().enumerate() {
                *v = per_node[n][i];
            }
            let c = chebyshev::interpolate(&vals);
            out.coeffs[i * (degree + 1)..(i + 1) * (degree + 1)].copy_from_slice(&c);
        }
        Ok(out.cleaned())
    }

    /// Largest deviation from `h` over held-out angles and off-node `y` values.
    pub fn residual_against(&self, h: &(impl Fn(&[f64], f64) -> f64 + Sync)) -> f64 {
        let proj = match self.spectrum.projector() {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        let ys: Vec<f64> = [-1.0, -0.61, -0.13, 0.29, 0.77, 1.0]
            .iter()
            .map(|&u| self.domain.from_unit(u))
            .collect();
        proj.held_out()
            .par_iter()
            .map(|t| {
                ys.iter()
                    .map(|&y| (self.eval_angles(t, y) - h(t, y)).abs())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    pub fn domain(&self) -> YDomain {
        self.domain
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Chebyshev coefficients of the mean `f_0(y)`.
    pub fn mean_block(&self) -> &[Complex64] {
        self.block(0)
    }

    pub fn mean_at(&self, y: f64) -> f64 {
        chebyshev::clenshaw(self.mean_block(), self.domain.to_unit(y)).re
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.eval_angles(&self.spectrum.line_angles(x), y)
    }

    pub fn eval_angles(&self, theta: &[f64], y: f64) -> f64 {
        let mut ph = Vec::new();
        self.spectrum.phases(theta, &mut ph);
        self.eval_phases(&ph, y)
    }

    /// Value given precomputed mode phases.
    pub fn eval_phases(&self, ph: &[Complex64], y: f64) -> f64 {
        let mut tv = Vec::with_capacity(self.degree + 1);
        chebyshev::basis_values(self.domain.to_unit(y), self.degree, &mut tv);
        let b = self.degree + 1;
        let dot = |i: usize| -> Complex64 {
            self.coeffs[i * b..(i + 1) * b]
                .iter()
                .zip(&tv)
                .map(|(c, t)| c * t)
                .sum()
        };
        let mut acc = dot(0).re;
        for &i in self.spectrum.positive() {
            let c = dot(i);
            if c != ZERO {
                acc += 2.0 * (c * ph[i]).re;
            }
        }
        acc
    }

    /// Shell value at complex angles with `|Im θ|∞ ≤ r` and real `y`.
    pub fn eval_shell(&self, theta: &[Complex64], y: f64, r: f64) -> Result<Complex64, SeriesError> {
        let im = theta.iter().map(|t| t.im.abs()).fold(0.0, f64::max);
        if im > r {
            return Err(SeriesError::DomainExceeded { im, r });
        }
        let mut ph = Vec::new();
        self.spectrum.phases_complex(theta, &mut ph);
        let u = self.domain.to_unit(y);
        Ok((0..self.spectrum.len())
            .map(|i| chebyshev::clenshaw(self.block(i), u) * ph[i])
            .sum())
    }

    /// The series in `x` obtained by fixing `y`.
    pub fn at_y(&self, y: f64) -> APSeries {
        let u = self.domain.to_unit(y);
        let c = (0..self.spectrum.len())
            .map(|i| chebyshev::clenshaw(self.block(i), u))
            .collect();
        APSeries::from_coeffs(self.spectrum.clone(), c).expect("length matches spectrum")
    }

    pub fn derivative_y(&self) -> Self {
        let mut out = self.clone();
        let inv = 1.0 / self.domain.half;
        for i in 0..self.spectrum.len() {
            let d = chebyshev::derivative(self.block(i));
            for (o, v) in out.block_mut(i).iter_mut().zip(d) {
                *o = v * inv;
            }
        }
        out.cleaned()
    }

    /// Re-expands every mode on a new y-domain, keeping the degree.
    pub fn restrict_y(&self, domain: YDomain) -> Self {
        let mut out = Self::zero(self.spectrum.clone(), domain, self.degree);
        let old = (self.domain.center, self.domain.half);
        let new = (domain.center, domain.half);
        for i in 0..self.spectrum.len() {
            if self.block(i).iter().all(|c| *c == ZERO) {
                continue;
            }
            let c = chebyshev::reexpand(self.block(i), old, new, self.degree);
            out.block_mut(i).copy_from_slice(&c);
        }
        out.defect = self.defect;
        out.cleaned()
    }

    /// Product truncated to retained modes and the Chebyshev degree.
    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_layout(other)?;
        let spec = &self.spectrum;
        let mut out = Self::zero(spec.clone(), self.domain, self.degree);
        let b = self.degree + 1;
        let nz = |s: &Self| -> Vec<usize> {
            (0..spec.len())
                .filter(|&i| s.block(i).iter().any(|c| *c != ZERO))
                .collect()
        };
        let (na, nb) = (nz(self), nz(other));
        let mut lost = 0.0;
        let one = Complex64::new(1.0, 0.0);
        for &i in &na {
            for &j in &nb {
                match spec.position(&spec.mode(i).add(spec.mode(j))) {
                    Some(s) => {
                        lost += chebyshev::multiply_into(
                            self.block(i),
                            other.block(j),
                            &mut out.coeffs[s * b..(s + 1) * b],
                            one,
                        );
                    }
                    None => lost += self.block_abs(i) * other.block_abs(j),
                }
            }
        }
        out.defect = lost + self.defect + other.defect;
        Ok(out.cleaned())
    }

    /// Largest `|f|` over torus points times Chebyshev nodes.
    pub fn sup_on(&self, points: &[Vec<f64>], ys: &[f64]) -> f64 {
        points
            .par_iter()
            .map(|t| {
                let mut ph = Vec::new();
                self.spectrum.phases(t, &mut ph);
                ys.iter()
                    .map(|&y| self.eval_phases(&ph, y).abs())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }
}
