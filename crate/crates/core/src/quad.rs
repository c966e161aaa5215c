//! Quadrature machinery: Gauss-Legendre rules, adaptive Gauss-Kronrod,
//! Wynn epsilon acceleration, and the partitioned integrator for
//! semi-infinite oscillatory integrals.

use crate::error::{PbError, Result};
use crate::special::{bessel_j0, bessel_j1, bessel_j2, bessel_zero};
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

/// Gauss-Legendre nodes and weights on [-1, 1], cached per order.
pub fn gauss_legendre(n: usize) -> std::sync::Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, std::sync::Arc<(Vec<f64>, Vec<f64>)>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| std::sync::Arc::new(compute_gl(n)))
        .clone()
}

fn compute_gl(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Newton iteration from the Chebyshev estimate
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fixed-order Gauss-Legendre integral of `f` on [a, b].
pub fn integrate_gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..n {
        s += rule.1[i] * f(c + h * rule.0[i]);
    }
    s * h
}

/// Panelled Gauss-Legendre: `panels` equal panels of order `n` each.
pub fn integrate_gl_panels<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    n: usize,
    panels: usize,
) -> f64 {
    let mut s = 0.0;
    let w = (b - a) / panels as f64;
    for p in 0..panels {
        s += integrate_gl(&mut f, a + p as f64 * w, a + (p + 1) as f64 * w, n);
    }
    s
}

// Standard 15-point Kronrod rule with embedded 7-point Gauss.
const GK_X: [f64; 8] = [
    0.991455371120812639,
    0.949107912342758525,
    0.864864423359769073,
    0.741531185599394440,
    0.586087235467691130,
    0.405845151377397167,
    0.207784955007898468,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022935322010529225,
    0.063092092629978553,
    0.104790010322250184,
    0.140653259715525919,
    0.169004726639267903,
    0.190350578064785410,
    0.204432940075298892,
    0.209482141084727828,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693,
    0.279705391489276668,
    0.381830050505118945,
    0.417959183673469388,
];

/// One Gauss-Kronrod 15 application; returns (value, error estimate).
pub fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = GK_WK[7] * fc;
    let mut gauss = GK_WG[3] * fc;
    for i in 0..7 {
        let x = h * GK_X[i];
        let v = f(c - x) + f(c + x);
        kron += GK_WK[i] * v;
        if i % 2 == 1 {
            gauss += GK_WG[i / 2] * v;
        }
    }
    kron *= h;
    gauss *= h;
    let err = (kron - gauss).norm();
    (kron, err.powf(1.5).min(err).max(1e-300 * err.max(1.0)))
}

/// Adaptive Gauss-Kronrod on [a, b] to an absolute tolerance.
pub fn adaptive_gk<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_depth: usize,
) -> (Complex64, f64) {
    fn rec<F: FnMut(f64) -> Complex64>(
        f: &mut F,
        a: f64,
        b: f64,
        tol: f64,
        depth: usize,
    ) -> (Complex64, f64) {
        let (v, e) = gk15(f, a, b);
        if e <= tol || depth == 0 {
            return (v, e);
        }
        let m = 0.5 * (a + b);
        let (v1, e1) = rec(f, a, m, 0.5 * tol, depth - 1);
        let (v2, e2) = rec(f, m, b, 0.5 * tol, depth - 1);
        (v1 + v2, e1 + e2)
    }
    rec(f, a, b, abs_tol, max_depth)
}

/// Real-valued adaptive quadrature convenience wrapper.
pub fn adaptive_real<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_depth: usize,
) -> f64 {
    let mut g = |x: f64| Complex64::new(f(x), 0.0);
    adaptive_gk(&mut g, a, b, abs_tol, max_depth).0.re
}

/// Wynn epsilon estimate from a sequence of partial sums.
///
/// Returns the deepest stable even-column entry.
pub fn wynn_epsilon(sums: &[Complex64]) -> Complex64 {
    let n = sums.len();
    if n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    if n == 1 {
        return sums[0];
    }
    let mut prev: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n + 1]; // column -1
    let mut cur: Vec<Complex64> = sums.to_vec(); // column 0
    let mut best = *sums.last().unwrap();
    let mut col = 0usize;
    while cur.len() >= 2 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            if diff.norm() < 1e-300 {
                // sequence effectively converged
                return cur[i + 1];
            }
            next.push(prev[i + 1] + 1.0 / diff);
        }
        col += 1;
        if col % 2 == 0 {
            best = *next.last().unwrap();
        }
        prev = cur;
        cur = next;
    }
    best
}

/// Oscillator factors with known asymptotic zero spacing, used to
/// partition a semi-infinite integral into alternating cells.
#[derive(Clone, Copy, Debug)]
pub enum Oscillator {
    Cos,
    Sin,
    J0,
    J1,
    /// -J2(z); the angular factor of the 2D Green function uB part.
    NegJ2,
    /// Spherical j1(z)/z; the 3D deviatoric uA factor.
    SphJ1OverZ,
    /// -j2(z); the 3D uB factor.
    NegSphJ2,
}

impl Oscillator {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Oscillator::Cos => z.cos(),
            Oscillator::Sin => z.sin(),
            Oscillator::J0 => bessel_j0(z),
            Oscillator::J1 => bessel_j1(z),
            Oscillator::NegJ2 => -bessel_j2(z),
            Oscillator::SphJ1OverZ => {
                if z.abs() < 1e-4 {
                    1.0 / 3.0 - z * z / 30.0
                } else {
                    (z.sin() - z * z.cos()) / (z * z * z)
                }
            }
            Oscillator::NegSphJ2 => {
                if z.abs() < 1e-4 {
                    -z * z / 15.0
                } else {
                    -((3.0 / (z * z * z) - 1.0 / z) * z.sin() - 3.0 * z.cos() / (z * z))
                }
            }
        }
    }

    /// m-th positive zero (1-based). Approximate zeros are fine: cells
    /// only need to track the asymptotic sign alternation.
    pub fn zero(&self, m: usize) -> f64 {
        match self {
            Oscillator::Cos => (m as f64 - 0.5) * PI,
            Oscillator::Sin => m as f64 * PI,
            Oscillator::J0 => bessel_zero(0, m),
            Oscillator::J1 => bessel_zero(1, m),
            Oscillator::NegJ2 => bessel_zero(2, m),
            // zeros of tan z = z, shifted pi/2 grid asymptotically
            Oscillator::SphJ1OverZ => {
                let b = (m as f64 + 0.5) * PI;
                b - 1.0 / b
            }
            // zeros of j2: tan z = 3z/(3 - z^2)
            Oscillator::NegSphJ2 => {
                let b = (m as f64 + 1.0) * PI;
                b - 3.0 / b
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OscResult {
    pub value: Complex64,
    pub abs_error: f64,
    pub cells: usize,
}

/// Integrate `envelope(k) * osc(omega k)` for k in [lo, inf).
///
/// `env_freq` declares the envelope's own oscillation frequency in
/// radians per unit k (0 for smooth envelopes; the horizon frequency
/// `2 pi h_r` for sharp-cutoff kernels). Three regimes:
///
/// * smooth or well-separated frequencies: cells at the oscillator
///   zeros, adaptive Gauss-Kronrod inside, epsilon acceleration of the
///   partial sums;
/// * commensurate frequencies (envelope tone within ~8x of the
///   oscillator): a finite head is summed plainly over cells of the
///   combined frequency, after which the remaining tail is a pure
///   superposition of tones that the epsilon algorithm removes exactly.
pub fn integrate_oscillatory<F: FnMut(f64) -> Complex64>(
    mut envelope: F,
    osc: Oscillator,
    omega: f64,
    env_freq: f64,
    lo: f64,
    rel_tol: f64,
    max_cells: usize,
) -> Result<OscResult> {
    assert!(omega > 0.0 && lo >= 0.0 && env_freq >= 0.0);
    let mut f = |k: f64| envelope(k) * osc.eval(omega * k);

    let banded = env_freq > omega / 8.0 && env_freq < 8.0 * omega;

    // cell boundaries
    let mut bounds = Vec::new();
    bounds.push(lo);
    let mut head_cells = 0usize;
    if banded {
        let step = PI / (omega + env_freq);
        // plain-summation head out to Z = 2 pi k h ~ 300, where the
        // oscillator phase is fully developed
        let k1 = 300.0 / env_freq * (2.0 * PI) / (2.0 * PI); // 300 rad of envelope phase
        head_cells = ((k1 - lo) / step).ceil().max(4.0) as usize;
        let total = head_cells + max_cells;
        for j in 1..=total {
            bounds.push(lo + j as f64 * step);
        }
    } else {
        let mut m = 1;
        while bounds.len() <= max_cells {
            let z = osc.zero(m) / omega;
            m += 1;
            if z > lo * (1.0 + 1e-12) {
                bounds.push(z);
            }
            if m > 4 * max_cells {
                break;
            }
        }
    }

    let mut partial = Vec::new();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0f64;
    let mut est = Complex64::new(0.0, 0.0);
    let mut prev_est: Option<Complex64> = None;
    let mut small_deltas = 0usize;
    let mut plain_small = 0usize;
    let mut quad_err = 0.0f64;

    for c in 0..bounds.len() - 1 {
        let (a, b) = (bounds[c], bounds[c + 1]);
        // probe the cell once so the refinement tolerance is anchored to
        // a real magnitude even before any scale is known
        let (probe, probe_err) = gk15(&mut f, a, b);
        let cell_tol = (rel_tol * 0.02 * scale.max(probe.norm())).max(1e-300);
        let (v, e) = if probe_err <= cell_tol {
            (probe, probe_err)
        } else {
            adaptive_gk(&mut f, a, b, cell_tol, 24)
        };
        quad_err += e;
        sum += v;
        scale = scale.max(sum.norm()).max(v.norm());

        if c == 1 && scale == 0.0 {
            // identically zero envelope
            return Ok(OscResult {
                value: Complex64::new(0.0, 0.0),
                abs_error: 0.0,
                cells: c + 1,
            });
        }

        if c + 1 <= head_cells {
            continue; // head is summed without acceleration
        }
        partial.push(sum);

        // plain convergence: decaying envelopes need no acceleration
        if v.norm() <= rel_tol * scale.max(1e-300) {
            plain_small += 1;
            if plain_small >= 3 && partial.len() >= 3 {
                return Ok(OscResult {
                    value: sum,
                    abs_error: quad_err + v.norm(),
                    cells: c + 1,
                });
            }
        } else {
            plain_small = 0;
        }

        if partial.len() >= 5 {
            let window = &partial[partial.len().saturating_sub(48)..];
            est = wynn_epsilon(window);
            if let Some(p) = prev_est {
                let delta = (est - p).norm();
                // the 1e-4 scale floor keeps heavily cancelling integrals
                // (exponentially decayed Laplace tails) from spinning forever
                if delta <= rel_tol * est.norm().max(1e-4 * scale).max(1e-300) {
                    small_deltas += 1;
                    if small_deltas >= 3 {
                        return Ok(OscResult {
                            value: est,
                            abs_error: quad_err + delta,
                            cells: c + 1,
                        });
                    }
                } else {
                    small_deltas = 0;
                }
            }
            prev_est = Some(est);
        }
    }

    let best = if prev_est.is_some() { est } else { sum };
    let bound = prev_est
        .map(|p| (est - p).norm())
        .unwrap_or(scale)
        + quad_err;
    if bound <= 100.0 * rel_tol * best.norm().max(scale * 1e-3) {
        // acceptably close even though the strict stop never fired
        return Ok(OscResult {
            value: best,
            abs_error: bound,
            cells: bounds.len() - 1,
        });
    }
    Err(PbError::Accuracy {
        what: "oscillatory integral".into(),
        estimate: best.norm(),
        bound,
    })
}

/// Analytic `int_0^L (a + b t) ln t dt`; the log-singular element
/// integrals reduce to this for linear shape functions.
pub fn log_moment_linear(a: f64, b: f64, len: f64) -> f64 {
    let l = len;
    a * (l * l.ln() - l) + b * (0.5 * l * l * l.ln() - 0.25 * l * l)
}
