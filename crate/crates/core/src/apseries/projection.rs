//! Least-squares projection of sampled real functions onto the retained modes.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spectrum::Spectrum;
use super::SeriesError;

const SAMPLE_SEED: u64 = 0x5eed_a11e;
const OVERSAMPLING: usize = 4;
const HELD_OUT: usize = 256;

/// Uniform samples on the torus of angles, one coordinate per basis index.
pub fn torus_samples(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random::<f64>() * TAU).collect())
        .collect()
}

/// Collocation points plus the pseudo-inverse of the real cos/sin design matrix.
#[derive(Debug)]
pub struct Projector {
    samples: Vec<Vec<f64>>,
    held_out: Vec<Vec<f64>>,
    pinv: DMatrix<f64>,
}

impl Projector {
    pub fn new(spectrum: &Spectrum) -> Result<Self, SeriesError> {
        let dim = spectrum.basis().len();
        let params = spectrum.len();
        let samples = torus_samples(dim, OVERSAMPLING * params.max(4), SAMPLE_SEED);
        let held_out = torus_samples(dim, HELD_OUT, SAMPLE_SEED ^ 0xffff);
        let mut design = DMatrix::<f64>::zeros(samples.len(), params);
        let mut ph = Vec::new();
        for (row, theta) in samples.iter().enumerate() {
            spectrum.phases(theta, &mut ph);
            design[(row, 0)] = 1.0;
            for (n, &i) in spectrum.positive().iter().enumerate() {
                design[(row, 1 + 2 * n)] = ph[i].re;
                design[(row, 2 + 2 * n)] = ph[i].im;
            }
        }
        let qr = design.qr();
        let r = qr.r();
        let min_diag = (0..params).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        let max_diag = (0..params).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        if !(min_diag > 1e-10 * max_diag) {
            return Err(SeriesError::ProjectionResidualExceeded {
                residual: f64::INFINITY,
                tol: 0.0,
            });
        }
        let pinv = r
            .solve_upper_triangular(&qr.q().transpose())
            .expect("triangular factor checked nonsingular");
        Ok(Self {
            samples,
            held_out,
            pinv,
        })
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn held_out(&self) -> &[Vec<f64>] {
        &self.held_out
    }

    /// Complex coefficients (in spectrum order) of the least-squares fit to `values`.
    pub fn project(&self, spectrum: &Spectrum, values: &[f64]) -> Vec<Complex64> {
        let v = DVector::from_column_slice(values);
        let p = &self.pinv * v;
        unpack(spectrum, p.as_slice())
    }

    /// Projects several columns at once; `values` is samples × columns.
    pub fn project_columns(&self, spectrum: &Spectrum, values: &DMatrix<f64>) -> Vec<Vec<Complex64>> {
        let p = &self.pinv * values;
        (0..p.ncols())
            .map(|c| unpack(spectrum, &p.column(c).iter().copied().collect::<Vec<_>>()))
            .collect()
    }
}

fn unpack(spectrum: &Spectrum, params: &[f64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); spectrum.len()];
    out[spectrum.zero()] = Complex64::new(params[0], 0.0);
    for (n, &i) in spectrum.positive().iter().enumerate() {
        // a cos + b sin = Re((a - ib) e^{iφ})
        let c = Complex64::new(params[1 + 2 * n], -params[2 + 2 * n]) * 0.5;
        out[i] = c;
        out[spectrum.neg(i)] = c.conj();
    }
    out
}
