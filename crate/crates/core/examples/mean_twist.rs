//! The twist coefficient of the first-order return map, averaged over the section time.

mod common;

use apkam::oscillator::{compute_j, expansion_coefficients, mean_twist};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = common::nonresonant();
    for rho in [1e2, 1e3, 1e4] {
        println!("ρ = {rho:.0e}: ρ·J(ρ) = {:.6}", rho * compute_j(&spec, rho)?);
    }
    for tau in [0.0, 1.0, 2.0, 3.0] {
        let c = expansion_coefficients(&spec, 1.0, tau)?;
        println!("τ₀ = {tau}: l = {:+.6}, m = {:+.6}", c.l, c.m);
    }
    let rep = mean_twist(&spec, 1.0, 1e4)?;
    println!(
        "mean of l: {:.6}, predicted magnitude {:.6}, relative error {:.1e}",
        rep.empirical, rep.target_magnitude, rep.relative_error
    );
    println!("brute-force finite difference of the return time: {:.4}", rep.brute_force);
    Ok(())
}
