use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::MultiIndex;
use super::spectrum::Spectrum;
use super::SeriesError;

/// Coefficients below this fraction of the largest one are dropped after every operation.
pub const DROP_TOL: f64 = 1e-16;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Strip half-width `r`, y-radius `s` and weight exponent `m` of a norm.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StripParams {
    pub r: f64,
    pub s: f64,
    pub m: f64,
}

impl StripParams {
    pub fn new(r: f64, s: f64, m: f64) -> Result<Self, SeriesError> {
        if r > 0.0 && s > 0.0 && m > 0.0 && r.is_finite() && s.is_finite() && m.is_finite() {
            Ok(Self { r, s, m })
        } else {
            Err(SeriesError::InvalidStrip(format!("r={r}, s={s}, m={m}")))
        }
    }
}

/// Shared mode-wise structure of [`APSeries`] and `APSeries2`.
///
/// Coefficients are stored as one contiguous block per mode; blocks have length 1
/// for series in `x` alone and `degree + 1` for Chebyshev-in-`y` series.
pub trait ModeSeries: Clone + Send + Sync {
    fn spectrum(&self) -> &Arc<Spectrum>;
    fn block_len(&self) -> usize;
    fn coeffs(&self) -> &[Complex64];
    fn coeffs_mut(&mut self) -> &mut [Complex64];
    /// Accumulated magnitude of everything truncated away so far.
    fn defect(&self) -> f64;
    fn defect_mut(&mut self) -> &mut f64;
    /// Same spectrum and, where applicable, same y-domain and degree.
    fn same_layout(&self, other: &Self) -> bool;
    /// Real value given mode phases; `y` is ignored by series in `x` alone.
    fn eval_at(&self, ph: &[Complex64], y: f64) -> f64;
    /// Representative `y` values for grid checks.
    fn y_probe(&self) -> Vec<f64>;

    fn block(&self, i: usize) -> &[Complex64] {
        let b = self.block_len();
        &self.coeffs()[i * b..(i + 1) * b]
    }

    fn block_mut(&mut self, i: usize) -> &mut [Complex64] {
        let b = self.block_len();
        &mut self.coeffs_mut()[i * b..(i + 1) * b]
    }

    /// `|f_k|_y`: sum of coefficient moduli in mode `i`.
    fn block_abs(&self, i: usize) -> f64 {
        self.block(i).iter().map(|c| c.norm()).sum()
    }

    fn zeroed(&self) -> Self {
        let mut z = self.clone();
        z.coeffs_mut().fill(ZERO);
        *z.defect_mut() = 0.0;
        z
    }

    fn is_zero(&self) -> bool {
        self.coeffs().iter().all(|c| *c == ZERO)
    }

    /// Zeroes coefficients below [`DROP_TOL`] times the largest and books their mass as defect.
    fn cleaned(mut self) -> Self {
        let top = self.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = DROP_TOL * top;
        let mut lost = 0.0;
        for c in self.coeffs_mut() {
            let n = c.norm();
            if n != 0.0 && n < cut {
                lost += n;
                *c = ZERO;
            }
        }
        *self.defect_mut() += lost;
        self
    }

    fn check_layout(&self, other: &Self) -> Result<(), SeriesError> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(SeriesError::BasisMismatch)
        }
    }

    fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_layout(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs_mut().iter_mut().zip(other.coeffs()) {
            *a += b;
        }
        *out.defect_mut() += other.defect();
        Ok(out.cleaned())
    }

    fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_layout(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs_mut().iter_mut().zip(other.coeffs()) {
            *a -= b;
        }
        *out.defect_mut() += other.defect();
        Ok(out.cleaned())
    }

    fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for a in out.coeffs_mut() {
            *a *= c;
        }
        *out.defect_mut() *= c.abs();
        out.cleaned()
    }

    /// Multiplies every block by `factor(i)`.
    fn map_modes(&self, factor: impl Fn(usize) -> Complex64) -> Self {
        let mut out = self.clone();
        for i in 0..self.spectrum().len() {
            let f = factor(i);
            for c in out.block_mut(i) {
                *c *= f;
            }
        }
        out.cleaned()
    }

    /// `x ↦ f(x + dx)`.
    fn shift(&self, dx: f64) -> Self {
        let spec = self.spectrum().clone();
        self.map_modes(|i| Complex64::new(0.0, spec.frequency(i) * dx).exp())
    }

    fn derivative_x(&self) -> Self {
        let spec = self.spectrum().clone();
        self.map_modes(|i| Complex64::new(0.0, spec.frequency(i)))
    }

    /// `x ↦ f(−x − α)`.
    fn reflect(&self, alpha: f64) -> Self {
        let spec = self.spectrum().clone();
        let mut out = self.zeroed();
        for i in 0..spec.len() {
            let ph = Complex64::new(0.0, spec.frequency(i) * alpha).exp();
            let j = spec.neg(i);
            for (o, c) in out.block_mut(i).iter_mut().zip(self.block(j)) {
                *o = c * ph;
            }
        }
        *out.defect_mut() = self.defect();
        out.cleaned()
    }

    /// Parts with `h(−x−α) = h(x)` and `h(−x−α) = −h(x)`.
    fn parity_decompose(&self, alpha: f64) -> (Self, Self) {
        let r = self.reflect(alpha);
        let mut sym = self.clone();
        let mut anti = self.clone();
        for ((s, a), c) in sym
            .coeffs_mut()
            .iter_mut()
            .zip(anti.coeffs_mut().iter_mut())
            .zip(r.coeffs())
        {
            let h = *s;
            *s = (h + c) * 0.5;
            *a = (h - c) * 0.5;
        }
        (sym.cleaned(), anti.cleaned())
    }

    /// Weighted majorant `Σ_k |f_k|_y e^{r|k|} e^{m[[k]]}`.
    fn norm(&self, p: &StripParams) -> f64 {
        let spec = self.spectrum();
        (0..spec.len())
            .map(|i| {
                let a = self.block_abs(i);
                if a == 0.0 {
                    0.0
                } else {
                    a * (p.r * spec.mode(i).abs() as f64 + p.m * spec.support_weight(i)).exp()
                }
            })
            .sum()
    }

    /// Largest deviation from the reality condition `c_{−k} = conj(c_k)`.
    fn reality_defect(&self) -> f64 {
        let spec = self.spectrum();
        (0..spec.len())
            .map(|i| {
                self.block(i)
                    .iter()
                    .zip(self.block(spec.neg(i)))
                    .map(|(a, b)| (a - b.conj()).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Mode block of `k`, if retained.
    fn coefficient_block(&self, k: &MultiIndex) -> Option<&[Complex64]> {
        self.spectrum().position(k).map(|i| self.block(i))
    }
}

/// Truncated almost periodic function of one real variable.
#[derive(Clone, Debug)]
pub struct APSeries {
    spectrum: Arc<Spectrum>,
    coeffs: Vec<Complex64>,
    defect: f64,
}

impl ModeSeries for APSeries {
    fn spectrum(&self) -> &Arc<Spectrum> {
        &self.spectrum
    }
    fn block_len(&self) -> usize {
        1
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
        self.spectrum.compatible(&other.spectrum)
    }
    fn eval_at(&self, ph: &[Complex64], _y: f64) -> f64 {
        self.eval_phases(ph)
    }
    fn y_probe(&self) -> Vec<f64> {
        vec![0.0]
    }
}

impl APSeries {
    pub fn zero(spectrum: Arc<Spectrum>) -> Self {
        let n = spectrum.len();
        Self {
            spectrum,
            coeffs: vec![ZERO; n],
            defect: 0.0,
        }
    }

    pub fn constant(spectrum: Arc<Spectrum>, c: f64) -> Self {
        let mut s = Self::zero(spectrum);
        s.coeffs[0] = Complex64::new(c, 0.0);
        s
    }

    /// Raw coefficients in spectrum order; the caller keeps them real-symmetric.
    pub fn from_coeffs(spectrum: Arc<Spectrum>, coeffs: Vec<Complex64>) -> Result<Self, SeriesError> {
        if coeffs.len() != spectrum.len() {
            return Err(SeriesError::BasisMismatch);
        }
        Ok(Self {
            spectrum,
            coeffs,
            defect: 0.0,
        }
        .cleaned())
    }

    /// Sets `f_k = c` and `f_{−k} = conj(c)` for every listed pair.
    pub fn from_modes(
        spectrum: Arc<Spectrum>,
        modes: &[(MultiIndex, Complex64)],
    ) -> Result<Self, SeriesError> {
        let mut s = Self::zero(spectrum);
        for (k, c) in modes {
            s.set_mode(k, *c)?;
        }
        Ok(s)
    }

    /// `amp · cos(⟨k,ω⟩x)`.
    pub fn cos_mode(spectrum: Arc<Spectrum>, k: &MultiIndex, amp: f64) -> Result<Self, SeriesError> {
        if k.is_zero() {
            return Ok(Self::constant(spectrum, amp));
        }
        Self::from_modes(spectrum, &[(k.clone(), Complex64::new(amp / 2.0, 0.0))])
    }

    /// `amp · sin(⟨k,ω⟩x)`.
    pub fn sin_mode(spectrum: Arc<Spectrum>, k: &MultiIndex, amp: f64) -> Result<Self, SeriesError> {
        if k.is_zero() {
            return Ok(Self::zero(spectrum));
        }
        Self::from_modes(spectrum, &[(k.clone(), Complex64::new(0.0, -amp / 2.0))])
    }

    fn set_mode(&mut self, k: &MultiIndex, c: Complex64) -> Result<(), SeriesError> {
        let i = self.locate(k)?;
        let j = self.spectrum.neg(i);
        if i == j {
            self.coeffs[i] = Complex64::new(c.re, 0.0);
        } else {
            self.coeffs[i] = c;
            self.coeffs[j] = c.conj();
        }
        Ok(())
    }

    fn locate(&self, k: &MultiIndex) -> Result<usize, SeriesError> {
        if let Some(i) = self.spectrum.position(k) {
            return Ok(i);
        }
        if self.spectrum.structure().covering_set(&k.support()).is_none() {
            Err(SeriesError::NoCoveringSet(k.to_string()))
        } else {
            Err(SeriesError::ModeNotRetained(k.to_string()))
        }
    }

    pub fn coefficient(&self, k: &MultiIndex) -> Complex64 {
        self.spectrum
            .position(k)
            .map(|i| self.coeffs[i])
            .unwrap_or(ZERO)
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Value at torus angles, using the pairing of `±k`.
    pub fn eval_angles(&self, theta: &[f64]) -> f64 {
        let mut ph = Vec::new();
        self.spectrum.phases(theta, &mut ph);
        self.eval_phases(&ph)
    }

    /// Value given precomputed mode phases.
    pub fn eval_phases(&self, ph: &[Complex64]) -> f64 {
        let mut acc = self.coeffs[0].re;
        for &i in self.spectrum.positive() {
            let c = self.coeffs[i];
            if c != ZERO {
                acc += 2.0 * (c * ph[i]).re;
            }
        }
        acc
    }

    /// `Σ_k f_k e^{i⟨k,ω⟩t}` over every mode, imaginary part kept.
    pub fn eval_complex(&self, t: f64) -> Complex64 {
        let mut ph = Vec::new();
        self.spectrum.phases(&self.spectrum.line_angles(t), &mut ph);
        self.coeffs.iter().zip(&ph).map(|(c, p)| c * p).sum()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_angles(&self.spectrum.line_angles(t))
    }

    /// Shell function at complex angles with `|Im θ|∞ ≤ r`.
    pub fn eval_shell(&self, theta: &[Complex64], r: f64) -> Result<Complex64, SeriesError> {
        let im = theta.iter().map(|t| t.im.abs()).fold(0.0, f64::max);
        if im > r {
            return Err(SeriesError::DomainExceeded { im, r });
        }
        let mut ph = Vec::new();
        self.spectrum.phases_complex(theta, &mut ph);
        Ok(self.coeffs.iter().zip(&ph).map(|(c, p)| c * p).sum())
    }

    /// Product truncated to the retained modes; dropped mass goes to the defect.
    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_layout(other)?;
        let spec = &self.spectrum;
        let mut out = Self::zero(spec.clone());
        let nz_a: Vec<usize> = (0..spec.len()).filter(|&i| self.coeffs[i] != ZERO).collect();
        let nz_b: Vec<usize> = (0..spec.len()).filter(|&i| other.coeffs[i] != ZERO).collect();
        let mut lost = 0.0;
        for &i in &nz_a {
            for &j in &nz_b {
                let p = self.coeffs[i] * other.coeffs[j];
                match spec.position(&spec.mode(i).add(spec.mode(j))) {
                    Some(s) => out.coeffs[s] += p,
                    None => lost += p.norm(),
                }
            }
        }
        out.defect = lost + self.defect + other.defect;
        Ok(out.cleaned())
    }

    /// `x ↦ g(x + f(x))` by collocation and least-squares re-projection.
    pub fn compose_inner(&self, f: &Self, tol: f64) -> Result<Self, SeriesError> {
        self.check_layout(f)?;
        if f.is_zero() {
            return Ok(self.clone());
        }
        let spec = self.spectrum.clone();
        let omega = spec.basis().frequencies().to_vec();
        let value_at = |theta: &[f64]| -> f64 {
            let fx = f.eval_angles(theta);
            let moved: Vec<f64> = theta.iter().zip(&omega).map(|(t, w)| t + w * fx).collect();
            self.eval_angles(&moved)
        };
        let proj = spec.projector()?;
        let values: Vec<f64> = proj.samples().par_iter().map(|t| value_at(t)).collect();
        let out = Self::from_coeffs(spec.clone(), proj.project(&spec, &values))?;
        let residual = proj
            .held_out()
            .par_iter()
            .map(|t| (out.eval_angles(t) - value_at(t)).abs())
            .reduce(|| 0.0, f64::max);
        if residual > tol {
            return Err(SeriesError::ProjectionResidualExceeded { residual, tol });
        }
        Ok(out)
    }

    /// Solves `τ = βt + f(t)` as `t = τ/β + g(τ)` and returns `g` on the basis `ω/β`.
    pub fn invert_time(&self, beta: f64, tol: f64) -> Result<Self, SeriesError> {
        let spec = self.spectrum.clone();
        let new_spec = spec.with_scaled_basis(1.0 / beta)?;
        if self.is_zero() {
            return Ok(Self::zero(new_spec));
        }
        let proj = spec.projector()?;
        let slope = self.derivative_x();
        let min_slope = proj
            .samples()
            .par_iter()
            .chain(proj.held_out().par_iter())
            .map(|t| beta + slope.eval_angles(t))
            .reduce(|| f64::INFINITY, f64::min);
        if !(min_slope > 0.0) {
            return Err(SeriesError::NotMonotone { min_slope });
        }
        let omega = spec.basis().frequencies().to_vec();
        let at = |psi: &[f64], u: f64| -> Vec<f64> {
            psi.iter().zip(&omega).map(|(p, w)| p + w * u).collect()
        };
        let solve = |psi: &[f64]| -> f64 {
            let mut u = -self.eval_angles(psi) / beta;
            for _ in 0..60 {
                let th = at(psi, u);
                let h = beta * u + self.eval_angles(&th);
                let dh = beta + slope.eval_angles(&th);
                let step = h / dh;
                u -= step;
                if step.abs() <= 1e-16 * (1.0 + u.abs()) {
                    break;
                }
            }
            u
        };
        let values: Vec<f64> = proj.samples().par_iter().map(|p| solve(p)).collect();
        let g = Self::from_coeffs(new_spec.clone(), proj.project(&spec, &values))?;
        let defect = proj
            .held_out()
            .par_iter()
            .map(|psi| {
                let u = g.eval_angles(psi);
                (beta * u + self.eval_angles(&at(psi, u))).abs()
            })
            .reduce(|| 0.0, f64::max);
        if defect > tol {
            return Err(SeriesError::ProjectionResidualExceeded {
                residual: defect,
                tol,
            });
        }
        Ok(g)
    }

    /// Largest `|f|` over the given torus points.
    pub fn sup_on(&self, points: &[Vec<f64>]) -> f64 {
        points
            .par_iter()
            .map(|t| self.eval_angles(t).abs())
            .reduce(|| 0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::super::basis::{FrequencyBasis, SpatialStructure};
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn golden(kmax: i64) -> Arc<Spectrum> {
        let basis = FrequencyBasis::from_frequencies(&[1.0, (5f64.sqrt() - 1.0) / 2.0]).unwrap();
        let s = SpatialStructure::singletons_and_window(&basis, 3.0).unwrap();
        Spectrum::new(basis, s, kmax).unwrap()
    }

    fn random_series(spec: &Arc<Spectrum>, modes: usize, scale: f64, seed: u64) -> APSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = spec.positive();
        let mut list = Vec::new();
        for _ in 0..modes {
            let i = pos[rng.random_range(0..pos.len().min(40))];
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            list.push((spec.mode(i).clone(), c * scale));
        }
        let mut s = APSeries::from_modes(spec.clone(), &list).unwrap();
        s.coeffs[0] = Complex64::new(rng.random_range(-1.0..1.0) * scale, 0.0);
        s
    }

    fn k(a: i64, b: i64) -> MultiIndex {
        MultiIndex::dense(0, &[a, b])
    }

    #[test]
    fn zero_series_evaluates_to_zero() {
        let z = APSeries::zero(golden(4));
        assert_eq!(z.eval(3.7), 0.0);
    }

    #[test]
    fn single_pair_is_cosine() {
        let spec = golden(4);
        let f = APSeries::from_modes(spec, &[(k(1, 0), Complex64::new(0.5, 0.0))]).unwrap();
        for t in [0.0, 1.3, -7.9, 100.25] {
            assert!((f.eval(t) - t.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn evaluation_matches_termwise_sum() {
        let spec = golden(8);
        let f = random_series(&spec, 20, 1.0, 7);
        for n in 0..100 {
            let t = -50.0 + n as f64 * 1.013;
            let terms = (0..spec.len()).flat_map(|i| {
                let arg = spec.frequency(i) * t;
                let c = f.coeffs[i];
                [c.re * arg.cos(), -c.im * arg.sin()]
            });
            let want = super::super::basis::compensated_sum(terms);
            assert!((f.eval(t) - want).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn shell_evaluation_rejects_wide_strip() {
        let f = APSeries::constant(golden(3), 1.0);
        let theta = [Complex64::new(0.0, 0.2), Complex64::new(1.0, -0.6)];
        assert!(matches!(
            f.eval_shell(&theta, 0.5),
            Err(SeriesError::DomainExceeded { .. })
        ));
        assert!(f.eval_shell(&theta, 0.6).is_ok());
    }

    #[test]
    fn single_mode_norm() {
        let spec = golden(4);
        let kk = k(1, -1);
        let f = APSeries::from_modes(spec.clone(), &[(kk.clone(), Complex64::new(0.3, 0.4))]).unwrap();
        let p = StripParams::new(0.2, 1.0, 0.1).unwrap();
        let w = spec.structure().support_weight(&kk).unwrap();
        let want = 2.0 * 0.5 * (0.2 * 2.0 + 0.1 * w).exp();
        assert!((f.norm(&p) - want).abs() < 1e-15);
        assert_eq!(APSeries::zero(spec).norm(&p), 0.0);
    }

    #[test]
    fn product_of_single_modes() {
        let spec = golden(6);
        let a = APSeries::from_coeffs(spec.clone(), {
            let mut c = vec![ZERO; spec.len()];
            c[spec.position(&k(1, 0)).unwrap()] = Complex64::new(2.0, 1.0);
            c
        })
        .unwrap();
        let b = APSeries::from_coeffs(spec.clone(), {
            let mut c = vec![ZERO; spec.len()];
            c[spec.position(&k(0, 2)).unwrap()] = Complex64::new(0.5, -1.0);
            c
        })
        .unwrap();
        let p = a.mul(&b).unwrap();
        let want = Complex64::new(2.0, 1.0) * Complex64::new(0.5, -1.0);
        assert_eq!(p.coefficient(&k(1, 2)), want);
        let nonzero = p.coeffs().iter().filter(|c| **c != ZERO).count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn product_truncation_is_reported() {
        let spec = golden(2);
        let a = APSeries::cos_mode(spec.clone(), &k(2, 0), 1.0).unwrap();
        let p = a.mul(&a).unwrap();
        // cos² = 1/2 + cos(2·)/2, the second harmonic (4,0) lies outside |k| ≤ 2
        assert!((p.mean() - 0.5).abs() < 1e-15);
        assert!((p.defect() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn basis_mismatch_detected() {
        let a = APSeries::zero(golden(3));
        let b = APSeries::zero(golden(4));
        assert!(matches!(a.add(&b), Err(SeriesError::BasisMismatch)));
    }

    #[test]
    fn uncovered_mode_rejected() {
        let basis = FrequencyBasis::from_frequencies(&[1.0, 2f64.sqrt()]).unwrap();
        let gens = vec![[0].into(), [1].into()];
        let st = SpatialStructure::new(gens, 3.0).unwrap();
        let spec = Spectrum::new(basis, st, 4).unwrap();
        let r = APSeries::cos_mode(spec, &k(1, 1), 1.0);
        assert!(matches!(r, Err(SeriesError::NoCoveringSet(_))));
    }

    #[test]
    fn derivative_of_cosine() {
        let spec = golden(4);
        let f = APSeries::cos_mode(spec.clone(), &k(1, 0), 1.0).unwrap();
        let d = f.derivative_x();
        for t in [0.3, 2.0, -5.5] {
            assert!((d.eval(t) + t.sin()).abs() < 1e-14);
        }
        assert!(APSeries::constant(spec, 3.0).derivative_x().is_zero());
    }

    #[test]
    fn parity_of_shifted_sine() {
        let spec = golden(4);
        let alpha = 0.77;
        let f = APSeries::sin_mode(spec, &k(1, 0), 1.0).unwrap().shift(alpha / 2.0);
        let (sym, anti) = f.parity_decompose(alpha);
        for t in [0.1, 1.9, -3.3] {
            assert!(sym.eval(t).abs() < 1e-15);
            assert!((anti.eval(t) - (t + alpha / 2.0).sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn compose_with_zero_is_exact() {
        let spec = golden(6);
        let g = random_series(&spec, 10, 1.0, 3);
        let h = g.compose_inner(&APSeries::zero(spec), 1e-12).unwrap();
        assert_eq!(h.coeffs(), g.coeffs());
    }

    #[test]
    fn compose_with_constant_is_shift() {
        let spec = golden(6);
        let g = APSeries::cos_mode(spec.clone(), &k(1, 1), 1.0).unwrap();
        let c = APSeries::constant(spec, 0.3);
        let h = g.compose_inner(&c, 1e-12).unwrap();
        let s = g.shift(0.3);
        for (a, b) in h.coeffs().iter().zip(s.coeffs()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn compose_small_inner_matches_direct() {
        let spec = golden(12);
        let g = APSeries::cos_mode(spec.clone(), &k(1, 0), 1.0)
            .unwrap()
            .add(&APSeries::sin_mode(spec.clone(), &k(0, 1), 0.5).unwrap())
            .unwrap();
        let f = random_series(&spec, 3, 1e-3, 11);
        let f = APSeries::from_coeffs(
            spec.clone(),
            f.coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| if spec.mode(i).abs() <= 2 { *c } else { ZERO })
                .collect(),
        )
        .unwrap();
        let h = g.compose_inner(&f, 1e-10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let x: f64 = rng.random_range(-100.0..100.0);
            let want = g.eval(x + f.eval(x));
            assert!((h.eval(x) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn invert_time_zero_and_scaled_basis() {
        let spec = golden(4);
        let g = APSeries::zero(spec.clone()).invert_time(2.0, 1e-12).unwrap();
        assert!(g.is_zero());
        let w = spec.basis().frequencies();
        let w2 = g.spectrum().basis().frequencies();
        assert_eq!(w2[0], w[0] / 2.0);
        assert_eq!(w2[1], w[1] / 2.0);
    }

    #[test]
    fn invert_time_round_trip() {
        let spec = golden(12);
        let eps = 1e-3;
        let f = APSeries::cos_mode(spec, &k(1, 0), eps).unwrap();
        let g = f.invert_time(1.0, 1e-10).unwrap();
        // independent oracle: bisection on t for each τ
        for n in 0..50 {
            let tau = -30.0 + 1.21 * n as f64;
            let (mut lo, mut hi) = (tau - 2.0 * eps, tau + 2.0 * eps);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid + eps * mid.cos() < tau {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            let t_oracle = 0.5 * (lo + hi);
            let t = tau + g.eval(tau);
            assert!((t - t_oracle).abs() < 1e-10, "tau={tau}");
            assert!((t + eps * t.cos() - tau).abs() < 1e-10);
        }
    }

    #[test]
    fn invert_time_detects_fold() {
        let spec = golden(4);
        let f = APSeries::sin_mode(spec, &k(1, 0), 2.0).unwrap();
        assert!(matches!(
            f.invert_time(1.0, 1e-10),
            Err(SeriesError::NotMonotone { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn evaluation_is_real(seed in 0u64..1000) {
            let spec = golden(6);
            let f = random_series(&spec, 15, 1.0, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..1000 {
                let t: f64 = rng.random_range(-1e3..1e3);
                let z = f.eval_complex(t);
                prop_assert!(z.im.abs() <= 1e-12 * (1.0 + z.re.abs()));
            }
        }

        #[test]
        fn shift_composes(seed in 0u64..1000, a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let spec = golden(6);
            let f = random_series(&spec, 12, 1.0, seed);
            let lhs = f.shift(a + b);
            let rhs = f.shift(a).shift(b);
            for (x, y) in lhs.coeffs().iter().zip(rhs.coeffs()) {
                prop_assert!((x - y).norm() <= 1e-13);
            }
        }

        #[test]
        fn norm_is_monotone(seed in 0u64..1000, r in 0.01f64..1.0, m in 0.01f64..1.0, fr in 0.0f64..1.0, fm in 0.0f64..1.0) {
            let spec = golden(6);
            let f = random_series(&spec, 12, 1.0, seed);
            let big = StripParams::new(r, 1.0, m).unwrap();
            let small = StripParams::new(r * fr + 1e-9, 1.0, m * fm + 1e-9).unwrap();
            prop_assert!(f.norm(&small) <= f.norm(&big));
        }

        #[test]
        fn parity_parts_recompose(seed in 0u64..1000, alpha in -3.0f64..3.0) {
            let spec = golden(6);
            let f = random_series(&spec, 12, 1.0, seed);
            let (s, a) = f.parity_decompose(alpha);
            let back = s.add(&a).unwrap();
            for (x, y) in back.coeffs().iter().zip(f.coeffs()) {
                prop_assert!((x - y).norm() <= 1e-14);
            }
            let rs = s.reflect(alpha);
            let ra = a.reflect(alpha);
            for i in 0..spec.len() {
                prop_assert!((rs.coeffs()[i] - s.coeffs()[i]).norm() <= 1e-14);
                prop_assert!((ra.coeffs()[i] + a.coeffs()[i]).norm() <= 1e-14);
            }
        }

        #[test]
        fn add_zero_is_identity(seed in 0u64..1000) {
            let spec = golden(5);
            let f = random_series(&spec, 8, 1.0, seed);
            let g = f.add(&APSeries::zero(spec)).unwrap();
            prop_assert_eq!(g.coeffs(), f.coeffs());
            let s0 = f.shift(0.0);
            prop_assert_eq!(s0.coeffs(), f.coeffs());
        }
    }
}
