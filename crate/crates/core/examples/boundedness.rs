//! Long orbits from growing initial radii stay in bounded annuli without drift.

mod common;

use apkam::oscillator::{boundedness_experiment, radial_inits};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = common::nonresonant();
    let radii = [5.0, 10.0, 20.0, 40.0];
    let rep = boundedness_experiment(&spec, &radial_inits(&radii), 2e3, 1e-10)?;
    println!("{:>8} {:>10} {:>10} {:>8} {:>10}", "radius", "amp min", "amp max", "ratio", "slope");
    for s in &rep.orbits {
        println!(
            "{:>8.1} {:>10.4} {:>10.4} {:>8.4} {:>10.2e}",
            s.start[1], s.amp_min, s.amp_max, s.envelope_ratio, s.drift_slope
        );
    }
    println!("worst ratio {:.4}, worst |slope| {:.2e}", rep.max_ratio, rep.max_abs_slope);
    Ok(())
}
