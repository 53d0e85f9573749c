//! Builds a two-frequency almost periodic series, multiplies it, and round-trips it through text.

use apkam::apseries::{
    read_series, write_series, APSeries, FrequencyBasis, ModeSeries, MultiIndex, SpatialStructure,
    Spectrum,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let basis = FrequencyBasis::from_frequencies(&[1.0, 2f64.sqrt()])?;
    let st = SpatialStructure::singletons_and_window(&basis, 3.0)?;
    let spec = Spectrum::new(basis, st, 4)?;
    println!("{} modes up to |k| = 4", spec.len());

    let a = APSeries::cos_mode(spec.clone(), &MultiIndex::unit(0, 1), 1.0)?;
    let b = APSeries::sin_mode(spec.clone(), &MultiIndex::unit(1, 1), 0.5)?;
    let s = a.add(&b)?;
    let sq = s.mul(&s)?;
    for t in [0.0, 1.0, 10.0, 100.0] {
        let direct = s.eval(t).powi(2);
        println!("t = {t:>5}: s² = {:+.12}, product series = {:+.12}", direct, sq.eval(t));
    }
    println!("mean of s² = {:.6} (expected 0.625)", sq.mean());

    let text = write_series(&sq);
    let back = read_series(&text)?;
    println!("round trip differs by {:e}", (back.eval(3.7) - sq.eval(3.7)).abs());
    Ok(())
}
