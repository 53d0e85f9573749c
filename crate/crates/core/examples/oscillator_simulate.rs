//! Integrates one orbit, checks time-reversal symmetry, and compares one return of the
//! Poincaré map against its first-order expansion at a few epsilons.

mod common;

use apkam::oscillator::{expansion_order, integrate, reversibility_defect, MapGrid, PoincareExpansion};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = common::nonresonant();
    let tr = integrate(&spec, [0.0, 5.0], (0.0, 200.0), 1e-10)?;
    println!("{} steps, max radius {:.4}", tr.step_count(), tr.max_radius());
    for t in [0.0, 50.0, 100.0, 200.0] {
        let z = tr.at(t);
        println!("t = {t:>5}: x = {:+.6}, x' = {:+.6}", z[0], spec.velocity(&z));
    }
    println!("reversibility defect {:.2e}", reversibility_defect(&spec, [0.0, 5.0], 50.0, 1e-11, 100)?);

    let pe = PoincareExpansion::new(spec.clone(), 1e-3);
    let (r1, t1) = pe.numeric(1.0, 0.5)?;
    let (r2, t2) = pe.predict(1.0, 0.5)?;
    println!("ε = 1e-3 return of (1, 0.5): numeric ({r1:.9}, {t1:.9}), expansion ({r2:.9}, {t2:.9})");

    let fit = expansion_order(&spec, &[1e-2, 1e-3, 1e-4], &MapGrid::default())?;
    for (e, d) in fit.eps.iter().zip(&fit.deviation) {
        println!("ε = {e:.0e}: max deviation {d:.3e}");
    }
    println!("deviation ~ ε^{:.3}", fit.exponent);
    Ok(())
}
