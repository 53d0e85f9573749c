/// Least-squares slope of `y` against `x`.
pub fn linear_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    sxy / sxx
}

/// Fitted exponent `p` in `y ≈ C x^p`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    linear_slope(&logs)
}

/// Running least-squares line through samples `(t, a)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunningFit {
    n: f64,
    st: f64,
    sa: f64,
    stt: f64,
    sta: f64,
}

impl RunningFit {
    pub fn push(&mut self, t: f64, a: f64) {
        self.n += 1.0;
        self.st += t;
        self.sa += a;
        self.stt += t * t;
        self.sta += t * a;
    }

    pub fn count(&self) -> usize {
        self.n as usize
    }

    pub fn slope(&self) -> f64 {
        let den = self.n * self.stt - self.st * self.st;
        if den == 0.0 {
            0.0
        } else {
            (self.n * self.sta - self.st * self.sa) / den
        }
    }
}
