//! Resonant forcing: split off the resonant part of the return map and build an action-angle chart
//! for it.

mod common;

use apkam::apseries::YDomain;
use apkam::oscillator::{resonant_chart, resonant_component, PoincareExpansion};
use apkam::smalltwist::{resonant_split, ChartControl, TOL_RES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = common::resonant();
    let comp = resonant_component(&spec)?;
    for k in &comp.modes {
        println!("resonant mode {k}");
    }

    let alpha = spec.alpha();
    let (l, m) = PoincareExpansion::new(spec.clone(), 1e-3).leading_series(YDomain::new(1.5, 0.5)?, 8)?;
    let sp = resonant_split(&l, &m, alpha, TOL_RES)?;
    println!(
        "split: periodicity defect {:.1e}, parity defect {:.1e}",
        sp.periodicity_defect, sp.parity_defect
    );

    let ch = resonant_chart(&spec, (1.0, 2.0), (1.3, 1.6), 8, &ChartControl::default())?;
    let rep = ch.chart.verify(16, 5)?;
    println!("orientation {}, twist margin {:.4}", ch.orientation, ch.margin.margin);
    println!("chart identity residual {:.2e}, τ-shift defect {:.2e}", rep.identity, rep.tau_shift);
    Ok(())
}
