use std::f64::consts::FRAC_PI_2;

use apkam::apseries::{APSeries, FrequencyBasis, ModeSeries, MultiIndex, SpatialStructure, Spectrum};
use apkam::oscillator::{Damping, OscillatorSpec, Restoring};

/// `x'' + g(x)x' + x + arctan x = Σ aⱼ sin ωⱼt` with `g(x) = x e^{−x²}`.
pub fn oscillator(omega: &[f64], amps: &[f64], phi_inf: Option<f64>) -> OscillatorSpec {
    let basis = FrequencyBasis::from_frequencies(omega).unwrap();
    let st = SpatialStructure::singletons_and_window(&basis, 3.0).unwrap();
    let spec = Spectrum::new(basis, st, 3).unwrap();
    let mut f = APSeries::zero(spec.clone());
    for (j, &a) in amps.iter().enumerate() {
        f = f.add(&APSeries::sin_mode(spec.clone(), &MultiIndex::unit(j as i64, 1), a).unwrap()).unwrap();
    }
    OscillatorSpec::new(1.0, Restoring::arctan(), Damping::Gauss { amplitude: 1.0 }, f, phi_inf).unwrap()
}

#[allow(dead_code)]
pub fn nonresonant() -> OscillatorSpec {
    oscillator(&[2f64.sqrt(), (1.0 + 5f64.sqrt()) / 2.0], &[0.3, 0.2], Some(FRAC_PI_2))
}

#[allow(dead_code)]
pub fn resonant() -> OscillatorSpec {
    oscillator(&[1.0, 2f64.sqrt()], &[0.1, 0.2], None)
}
