use apkam::kam::{kam_step, verify_reversibility, GoldenInstance, ReversibilityGrid, StepControl};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for eps in [1e-4, 1e-5, 1e-6] {
        let inst = GoldenInstance::single_mode(eps);
        let map = inst.build()?;
        let out = kam_step(&map, &inst.schedule().strip(1), &StepControl::default())?;
        let rev = verify_reversibility(&out.new_map, &ReversibilityGrid::default());
        println!(
            "ε = {:.1e} -> {:.3e} (ratio {:.2e}), {} fixed-point iterations, reversibility {rev:.1e}",
            out.eps_in,
            out.eps_out,
            out.eps_out / out.eps_in,
            out.iterations
        );
    }
    Ok(())
}
