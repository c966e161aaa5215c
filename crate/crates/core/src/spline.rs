//! Natural cubic splines over arbitrary strictly increasing grids, real
//! and complex valued.

use num_complex::Complex64;

pub(crate) fn natural_cubic_second_derivs(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut y2 = vec![0.0; n];
    if n < 3 {
        return y2;
    }
    let mut u = vec![0.0; n];
    for i in 1..n - 1 {
        let sig = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
        let p = sig * y2[i - 1] + 2.0;
        y2[i] = (sig - 1.0) / p;
        u[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]) - (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        u[i] = (6.0 * u[i] / (x[i + 1] - x[i - 1]) - sig * u[i - 1]) / p;
    }
    for i in (0..n - 1).rev() {
        y2[i] = y2[i] * y2[i + 1] + u[i];
    }
    y2
}

pub(crate) fn cubic_eval(x: &[f64], y: &[f64], y2: &[f64], q: f64) -> f64 {
    let n = x.len();
    if n == 1 {
        return y[0];
    }
    let q = q.clamp(x[0], x[n - 1]);
    let mut lo = 0usize;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (hi + lo) / 2;
        if x[mid] > q {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let h = x[hi] - x[lo];
    let a = (x[hi] - q) / h;
    let b = (q - x[lo]) / h;
    a * y[lo] + b * y[hi] + ((a * a * a - a) * y2[lo] + (b * b * b - b) * y2[hi]) * h * h / 6.0
}

/// Real natural cubic spline.
#[derive(Debug, Clone)]
pub struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    y2: Vec<f64>,
}

impl Spline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.windows(2).all(|w| w[1] > w[0]), "grid must increase");
        let y2 = natural_cubic_second_derivs(&x, &y);
        Self { x, y, y2 }
    }

    pub fn eval(&self, q: f64) -> f64 {
        cubic_eval(&self.x, &self.y, &self.y2, q)
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }
}

/// Complex spline: two real splines sharing one grid.
#[derive(Debug, Clone)]
pub struct SplineC {
    re: Spline,
    im: Spline,
}

impl SplineC {
    pub fn new(x: Vec<f64>, y: &[Complex64]) -> Self {
        let re = Spline::new(x.clone(), y.iter().map(|v| v.re).collect());
        let im = Spline::new(x, y.iter().map(|v| v.im).collect());
        Self { re, im }
    }

    pub fn eval(&self, q: f64) -> Complex64 {
        Complex64::new(self.re.eval(q), self.im.eval(q))
    }

    pub fn knots(&self) -> &[f64] {
        self.re.knots()
    }

    /// Largest |value| over the knots; used as a relative-error scale.
    pub fn max_abs(&self) -> f64 {
        self.re
            .values()
            .iter()
            .zip(self.im.values())
            .map(|(a, b)| Complex64::new(*a, *b).norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_is_exact_at_knots_and_accurate_between() {
        let x: Vec<f64> = (0..60).map(|i| 1.0 + i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&t| (2.0 * t).sin() / t).collect();
        let s = Spline::new(x.clone(), y.clone());
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(s.eval(*xi), *yi);
        }
        for i in 0..59 {
            let q = 0.5 * (x[i] + x[i + 1]);
            let want = (2.0 * q).sin() / q;
            assert!((s.eval(q) - want).abs() < 2e-5);
        }
    }
}
