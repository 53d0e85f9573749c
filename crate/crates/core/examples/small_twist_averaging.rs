//! Puts the first-order return map of a nonresonant oscillator into small-twist form and
//! averages away its oscillating part.

mod common;

use apkam::apseries::{StripParams, YDomain};
use apkam::oscillator::PoincareExpansion;
use apkam::smalltwist::{averaging_transform, twist_condition, AveragingControl};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = common::nonresonant();
    let pe = PoincareExpansion::new(spec, 1e-3);
    let map = pe.small_twist(YDomain::new(1.5, 0.5)?, 8, StripParams::new(0.1, 0.5, 0.1)?)?;
    println!("twist condition L₀' at ρ = 1.5: {:.6}", twist_condition(&map.l));
    let av = averaging_transform(&map, &AveragingControl::default())?;
    println!(
        "{} modes kept, smallest divisor {:.3e}, tail {:.2e} (bound {:.2e})",
        av.retained, av.divisor_floor, av.tail, av.tail_bound
    );
    println!("reversibility {:.2e} -> {:.2e}", av.reversibility_in, av.reversibility_out);
    for rho in [1.0, 1.5, 2.0] {
        println!("averaged twist at ρ = {rho}: {:+.6}", av.map.twist.mean_at(rho));
    }
    Ok(())
}
