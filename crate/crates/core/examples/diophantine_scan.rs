use apkam::apseries::{FrequencyBasis, SpatialStructure};
use apkam::diophantine::{check_alpha, check_omega, ApproximationFunction, DiophantineError};

fn scan(omega: &[f64], alpha: f64) -> Result<(), Box<dyn std::error::Error>> {
    let basis = FrequencyBasis::from_frequencies(omega)?;
    let st = SpatialStructure::singletons_and_window(&basis, 3.0)?;
    let delta = ApproximationFunction::polynomial(3.0)?;
    print!("ω = {omega:?}, α = {alpha:.6}: ");
    match check_omega(&basis, &st, &delta, 0.0, 12) {
        Ok(r) => print!("γ(ω) ≈ {:.3e}; ", r.gamma_observed),
        Err(DiophantineError::ResonanceFound(r)) => {
            println!("resonant, witness {}", r.witness());
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    }
    match check_alpha(alpha, &basis, &st, &delta, 0.0, 12, None) {
        Ok(r) => println!("γ₀(α) ≈ {:.3e}", r.gamma_observed),
        Err(DiophantineError::ResonanceFound(r)) => println!("α resonant at k = {}, j = {}", r.argmin_k, r.argmin_j),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    scan(&[1.0, golden], 0.754_877_666_246_692_7)?;
    scan(&[1.0, 2f64.sqrt()], std::f64::consts::PI)?;
    scan(&[1.0, 0.5], 0.3)?;

    let delta = ApproximationFunction::polynomial(3.0)?;
    for rho in [0.25, 0.5, 1.0, 2.0] {
        println!("Λ({rho}) = {:.6e}", delta.lambda_envelope(rho));
    }
    Ok(())
}
