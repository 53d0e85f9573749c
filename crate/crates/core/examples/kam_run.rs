//! Full iteration on the golden-mean instance: calibrate, iterate, then sample the invariant curve.

use apkam::kam::{kam_iterate, GoldenInstance, StepControl};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = GoldenInstance::default();
    let cal = inst.calibrate(&StepControl::default())?;
    println!("c6 = {:.3e}", cal.c6);
    let ctl = StepControl {
        c6: cal.c6,
        ..StepControl::default()
    };
    let map = inst.build()?;
    let run = kam_iterate(&map, &inst.schedule(), &ctl)?;
    for r in &run.trace {
        println!(
            "step {}: ε {:.3e} -> {:.3e}, schedule {:.3e}, accepted {}",
            r.step, r.eps_in, r.eps_out, r.eps_schedule, r.accepted
        );
    }
    let c = &run.curve;
    println!("status {:?}", run.status);
    println!("conjugacy defect {:.2e}, restriction {:.2e}", c.conjugacy_defect, c.restriction_defect);
    for x in [0.0, 1.0, 5.0, 50.0] {
        let y = c.phi_curve.eval(x);
        let (x1, y1) = map.apply(&[0.0, 0.0], x, y);
        println!("x = {x:>4}: y = {y:+.6e}, |φ(x₁) − y₁| = {:.1e}", (c.phi_curve.eval(x1) - y1).abs());
    }
    Ok(())
}
