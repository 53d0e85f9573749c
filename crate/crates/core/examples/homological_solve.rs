//! Solves `l(x + α) − l(x) = h(x)` for a small zero-mean forcing and checks the residual and parity.

use apkam::apseries::{APSeries, ModeSeries, MultiIndex};
use apkam::homological::{difference_residual, parity_of_solution, solve_difference, DEFAULT_TOL_DIV};
use apkam::kam::golden_spectrum;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = golden_spectrum(8, 3.0)?;
    let alpha = 0.754_877_666_246_692_7;
    let h = APSeries::cos_mode(spec.clone(), &MultiIndex::unit(0, 1), 1.0)?
        .add(&APSeries::sin_mode(spec.clone(), &MultiIndex::unit(1, 2), 0.3)?)?;
    let (sym, anti) = h.parity_decompose(alpha);

    for (name, h) in [("raw", h), ("symmetric", sym), ("antisymmetric", anti)] {
        let sol = solve_difference(&h, alpha, DEFAULT_TOL_DIV)?;
        let res = difference_residual(&sol.l, &h, alpha)?;
        let parity = parity_of_solution(&h, alpha, &sol.l)?;
        println!(
            "{name:>13}: residual {res:.2e}, smallest divisor {:.3e}, parity {parity:?}",
            sol.divisor_floor
        );
    }
    Ok(())
}
