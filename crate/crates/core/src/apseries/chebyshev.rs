//! Chebyshev expansions on a symmetric interval `[c - s, c + s]`.

use std::f64::consts::PI;

use num_complex::Complex64;

/// `T_0(t) ..= T_n(t)`.
pub fn basis_values(t: f64, n: usize, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if n == 0 {
        return;
    }
    out.push(t);
    for j in 2..=n {
        let v = 2.0 * t * out[j - 1] - out[j - 2];
        out.push(v);
    }
}

/// First-kind Chebyshev nodes in `[-1, 1]`, `n + 1` of them.
pub fn nodes(n: usize) -> Vec<f64> {
    let m = n + 1;
    (0..m)
        .map(|i| (PI * (i as f64 + 0.5) / m as f64).cos())
        .collect()
}

/// Coefficients of the interpolant through values at [`nodes`].
pub fn interpolate(values: &[Complex64]) -> Vec<Complex64> {
    let m = values.len();
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for (j, c) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, v) in values.iter().enumerate() {
            acc += v * (PI * j as f64 * (i as f64 + 0.5) / m as f64).cos();
        }
        *c = acc * (2.0 / m as f64);
    }
    out[0] *= 0.5;
    out
}

/// Real-valued variant of [`interpolate`].
pub fn interpolate_real(values: &[f64]) -> Vec<f64> {
    let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    interpolate(&c).into_iter().map(|z| z.re).collect()
}

/// Clenshaw evaluation of `Σ c_j T_j(t)`.
pub fn clenshaw(coeffs: &[Complex64], t: f64) -> Complex64 {
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().skip(1).rev() {
        let b0 = c + b1 * (2.0 * t) - b2;
        b2 = b1;
        b1 = b0;
    }
    match coeffs.first() {
        Some(c0) => c0 + b1 * t - b2,
        None => Complex64::new(0.0, 0.0),
    }
}

/// Derivative in `t` of `Σ c_j T_j(t)`, same length, last entry zero.
pub fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    if n < 2 {
        return d;
    }
    for j in (1..n).rev() {
        let next = if j + 1 < n { d[j + 1] } else { Complex64::new(0.0, 0.0) };
        d[j - 1] = next + coeffs[j] * (2.0 * j as f64);
    }
    d[0] *= 0.5;
    d
}

/// Product of two expansions truncated to `degree`; returns the absolute mass dropped.
pub fn multiply_into(
    a: &[Complex64],
    b: &[Complex64],
    out: &mut [Complex64],
    scale: Complex64,
) -> f64 {
    let degree = out.len() - 1;
    let mut dropped = 0.0;
    for (i, ai) in a.iter().enumerate() {
        if *ai == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            let p = ai * bj * scale * 0.5;
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let hi = i + j;
            let lo = i.abs_diff(j);
            if hi <= degree {
                out[hi] += p;
            } else {
                dropped += p.norm();
            }
            out[lo] += p;
        }
    }
    dropped
}

/// Coefficients of the same function on the interval `[c' - s', c' + s']`,
/// given coefficients on `[c - s, c + s]`, by re-interpolation at `degree + 1` nodes.
pub fn reexpand(
    coeffs: &[Complex64],
    (center, half): (f64, f64),
    (new_center, new_half): (f64, f64),
    degree: usize,
) -> Vec<Complex64> {
    let vals: Vec<Complex64> = nodes(degree)
        .into_iter()
        .map(|u| {
            let y = new_center + new_half * u;
            clenshaw(coeffs, (y - center) / half)
        })
        .collect();
    interpolate(&vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn interpolation_reproduces_polynomial() {
        // 3t^3 - t = 0.75 T3 + 1.25 T1
        let vals: Vec<Complex64> = nodes(5).iter().map(|&t| c(3.0 * t * t * t - t)).collect();
        let co = interpolate(&vals);
        assert!((co[1] - c(1.25)).norm() < 1e-14);
        assert!((co[3] - c(0.75)).norm() < 1e-14);
        assert!(co[0].norm() < 1e-14 && co[2].norm() < 1e-14);
    }

    #[test]
    fn clenshaw_matches_direct_sum() {
        let co = [c(0.3), c(-1.1), c(0.25), c(2.0)];
        let t = 0.37;
        let mut tv = Vec::new();
        basis_values(t, 3, &mut tv);
        let direct: Complex64 = co.iter().zip(&tv).map(|(a, b)| a * b).sum();
        assert!((clenshaw(&co, t) - direct).norm() < 1e-15);
    }

    #[test]
    fn derivative_of_cubic() {
        // T3 = 4t^3 - 3t, T3' = 12t^2 - 3 = 6 T2 + 3 T0
        let d = derivative(&[c(0.0), c(0.0), c(0.0), c(1.0)]);
        assert!((d[0] - c(3.0)).norm() < 1e-15);
        assert!((d[2] - c(6.0)).norm() < 1e-15);
        assert!(d[1].norm() < 1e-15 && d[3].norm() < 1e-15);
    }

    #[test]
    fn product_identity() {
        let mut out = vec![c(0.0); 6];
        let dropped = multiply_into(&[c(0.0), c(1.0)], &[c(0.0), c(0.0), c(1.0)], &mut out, c(1.0));
        assert_eq!(dropped, 0.0);
        assert!((out[3] - c(0.5)).norm() < 1e-15);
        assert!((out[1] - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn reexpansion_to_subinterval() {
        // f(y) = y^2 on [-2, 2], re-expanded on [0.5 - 0.25, 0.5 + 0.25]
        let co = [c(2.0), c(0.0), c(2.0)];
        let new = reexpand(&co, (0.0, 2.0), (0.5, 0.25), 4);
        for &u in &[-1.0, -0.3, 0.4, 1.0] {
            let y: f64 = 0.5 + 0.25 * u;
            assert!((clenshaw(&new, u) - c(y * y)).norm() < 1e-14);
        }
    }
}
