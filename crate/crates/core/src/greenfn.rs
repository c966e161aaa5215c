//! Infinite-domain peridynamic Green functions, static and Laplace
//! domain, split into a Dirac part (carried symbolically), a classically
//! singular log part (2D static), and smooth nonlocal remainders.
//!
//! All wavenumber integrals share the 2 pi Fourier convention of the
//! dispersion symbols: kernels oscillate as cos(2 pi k x), J0(2 pi k x),
//! and the plateau subtraction turns the divergent part into
//! `delta(x) / (rho s^2 + M(inf))` with no extra normalization factor.

use crate::error::{PbError, Result};
use crate::material::{DispersionCurve, ElasticConstants, MicromodulusKernel};
use crate::quad::{integrate_oscillatory, Oscillator};
use crate::spline::SplineC;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub use crate::quad::OscResult;

/// Laplace parameter marker: a static kernel or a complex s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SParam {
    Static,
    Laplace(Complex64),
}

impl SParam {
    pub fn is_static(&self) -> bool {
        matches!(self, SParam::Static)
    }
}

/// One Green-function evaluation, decomposed.
///
/// `u_ij(x) = uA delta_ij + (x_i x_j / x^2) uB` with
/// `uA = dirac_coeff * delta(x) + ua_classical + ua_smooth`.
#[derive(Clone, Copy, Debug)]
pub struct GreenValue {
    pub dirac_coeff: Complex64,
    /// `c_log ln r`; only nonzero for the 2D static split.
    pub ua_classical: f64,
    pub ua_smooth: Complex64,
    pub ub: Complex64,
}

impl GreenValue {
    /// uA without the Dirac part.
    pub fn ua_nondirac(&self) -> Complex64 {
        self.ua_smooth + Complex64::new(self.ua_classical, 0.0)
    }

    /// Full (non-Dirac) tensor component for a unit direction d_hat.
    pub fn u_ij(&self, d_hat: [f64; 2], i: usize, j: usize) -> Complex64 {
        let delta = if i == j { 1.0 } else { 0.0 };
        self.ua_nondirac() * delta + self.ub * (d_hat[i] * d_hat[j])
    }
}

/// Evaluator for the infinite-domain Green function of one (kernel,
/// constants, s) combination.
#[derive(Clone)]
pub struct GreenFn {
    pub dim: usize,
    pub s: SParam,
    rho_s2: Complex64,
    sm_inf: Complex64, // rho s^2 + M(inf)
    curve: DispersionCurve,
    m_inf: f64,
    lambda: f64,
    mu: f64,
    h: f64,
    /// envelope tone frequency hint (rad per k): sharp-cutoff kernels
    /// imprint a 2 pi h_r oscillation on the dispersion deviations
    env_freq: f64,
    pub rel_tol: f64,
    pub max_cells: usize,
}

impl GreenFn {
    pub fn new(
        kernel: &MicromodulusKernel,
        constants: &ElasticConstants,
        s: SParam,
    ) -> Result<Self> {
        if kernel.dim != constants.dim {
            return Err(PbError::Config(
                "kernel and constants disagree on dimension".into(),
            ));
        }
        let rho_s2 = match s {
            SParam::Static => Complex64::new(0.0, 0.0),
            SParam::Laplace(sv) => {
                let s2 = sv * sv;
                if s2.re < 0.0 && s2.im.abs() <= 1e-12 * s2.norm() {
                    return Err(PbError::Precondition(
                        "s^2 on the negative real axis is outside the inversion contour".into(),
                    ));
                }
                Complex64::new(constants.rho, 0.0) * s2
            }
        };
        let effective_s = if rho_s2.norm() == 0.0 {
            SParam::Static
        } else {
            s
        };
        if effective_s.is_static() && constants.dim == 1 {
            return Err(PbError::Precondition(
                "the 1D static Green function has no infrared regularization".into(),
            ));
        }
        let curve = DispersionCurve::new(kernel);
        let m_inf = kernel.dispersion_at_infinity();
        let (lambda, mu) = constants.lame();
        let env_freq = match kernel.family {
            crate::material::KernelFamily::Constant => 2.0 * PI * kernel.h_r,
            crate::material::KernelFamily::Gauss => 0.0,
        };
        Ok(Self {
            dim: constants.dim,
            s: effective_s,
            rho_s2: if effective_s.is_static() {
                Complex64::new(0.0, 0.0)
            } else {
                rho_s2
            },
            sm_inf: rho_s2 + m_inf,
            curve,
            m_inf,
            lambda,
            mu,
            h: kernel.h_r,
            env_freq,
            rel_tol: 1e-8,
            max_cells: 500,
        })
    }

    pub fn dirac_coeff(&self) -> Complex64 {
        1.0 / self.sm_inf
    }

    /// Coefficient of ln r in the short-range behavior of uA (2D). It is
    /// s-independent: the log arises at horizon scale where the inertia
    /// term is negligible against M(k).
    pub fn log_coefficient(&self) -> f64 {
        if self.dim == 2 {
            -(1.0 / (4.0 * PI)) * (1.0 / (self.lambda + 2.0 * self.mu) + 1.0 / self.mu)
        } else {
            0.0
        }
    }

    pub fn m_inf(&self) -> f64 {
        self.m_inf
    }

    pub fn horizon(&self) -> f64 {
        self.h
    }

    /// `M_perp(k) - M_par(k)`, stable at both ends.
    fn m_perp_minus_m_par(&self, k: f64) -> f64 {
        let z = 2.0 * PI * k * self.h;
        if z < 0.35 {
            let (lp, lq) = self.curve.lead_coeffs();
            let kk = (2.0 * PI * k) * (2.0 * PI * k);
            let (da, db) = self.curve.tail_beyond_leading(k);
            (lq - lp) * kk + (db - da)
        } else {
            let (dp, dq) = self.curve.plateau_deviation(k);
            dp - dq
        }
    }

    /// Evaluate at radius r > 0.
    pub fn eval(&self, r: f64) -> Result<GreenValue> {
        if !(r > 0.0) {
            return Err(PbError::Domain("Green function needs r > 0".into()));
        }
        match (self.dim, self.s.is_static()) {
            (2, true) => self.static_2d(r),
            (2, false) => self.laplace_2d(r),
            (1, false) => self.laplace_1d(r),
            (3, _) => self.laplace_3d(r),
            _ => Err(PbError::Precondition("unsupported dim/s combination".into())),
        }
    }

    fn osc(
        &self,
        env: impl FnMut(f64) -> Complex64,
        osc: Oscillator,
        omega: f64,
    ) -> Result<Complex64> {
        let r = integrate_oscillatory(
            env,
            osc,
            omega,
            self.env_freq,
            0.0,
            self.rel_tol,
            self.max_cells,
        )?;
        Ok(r.value)
    }

    fn static_2d(&self, r: f64) -> Result<GreenValue> {
        let (lp, lq) = self.curve.lead_coeffs();
        let m_inf = self.m_inf;
        let kf = 1e-9 / self.h; // floor avoids the 0/0 at exactly k = 0
        let curve = &self.curve;

        // bracket1 = 1/M_perp - 1/M_inf - 1/(L_perp K^2), by series tails
        let bracket1 = move |k: f64| {
            let k = k.max(kf);
            let kk = (2.0 * PI * k) * (2.0 * PI * k);
            let b0 = lq * kk;
            let (_, db) = curve.tail_beyond_leading(k);
            let b = b0 + db;
            -db / (b * b0) - 1.0 / m_inf
        };
        // bracket2 = 1/M_par - 1/M_perp + (1/L_perp - 1/L_par)/K^2
        let bracket2 = move |k: f64| {
            let k = k.max(kf);
            let kk = (2.0 * PI * k) * (2.0 * PI * k);
            let a0 = lp * kk;
            let b0 = lq * kk;
            let (da, db) = curve.tail_beyond_leading(k);
            let a = a0 + da;
            let b = b0 + db;
            let a0b0_minus_ab = -(a0 * db + b0 * da + da * db);
            (b0 - a0) * a0b0_minus_ab / (a * b * a0 * b0) + (db - da) / (a * b)
        };

        let omega = 2.0 * PI * r;
        let i_j0 = self.osc(
            |k| Complex64::new(2.0 * PI * k * bracket1(k), 0.0),
            Oscillator::J0,
            omega,
        )?;
        let i_j1 = self.osc(
            |k| Complex64::new(bracket2(k) / r, 0.0),
            Oscillator::J1,
            omega,
        )?;
        let ub = self.osc(
            |k| {
                let k = k.max(kf);
                let (mp, mq) = curve.eval(k);
                // f_par - f_perp = (M_perp - M_par)/(M_par M_perp)
                Complex64::new(2.0 * PI * k * self.m_perp_minus_m_par(k) / (mp * mq), 0.0)
            },
            Oscillator::NegJ2,
            omega,
        )?;
        Ok(GreenValue {
            dirac_coeff: self.dirac_coeff(),
            ua_classical: self.log_coefficient() * r.ln(),
            ua_smooth: i_j0 + i_j1,
            ub,
        })
    }

    fn laplace_2d(&self, r: f64) -> Result<GreenValue> {
        let sm = self.sm_inf;
        let rs2 = self.rho_s2;
        let curve = &self.curve;
        let omega = 2.0 * PI * r;

        let i_j0 = self.osc(
            |k| {
                let (mp, mq) = curve.eval(k);
                let (_, dq) = curve.plateau_deviation(k);
                let _ = mp;
                let b_s = rs2 + mq;
                // f_perp - f_inf = (M_inf - M_perp)/((rho s^2+M_perp)(rho s^2+M_inf))
                2.0 * PI * k * dq / (b_s * sm)
            },
            Oscillator::J0,
            omega,
        )?;
        let i_j1 = self.osc(
            |k| {
                let (mp, mq) = curve.eval(k);
                let d = self.m_perp_minus_m_par(k);
                d / ((rs2 + mp) * (rs2 + mq)) / r
            },
            Oscillator::J1,
            omega,
        )?;
        let ub = self.osc(
            |k| {
                let (mp, mq) = curve.eval(k);
                let d = self.m_perp_minus_m_par(k);
                2.0 * PI * k * d / ((rs2 + mp) * (rs2 + mq))
            },
            Oscillator::NegJ2,
            omega,
        )?;
        Ok(GreenValue {
            dirac_coeff: self.dirac_coeff(),
            ua_classical: 0.0,
            ua_smooth: i_j0 + i_j1,
            ub,
        })
    }

    fn laplace_1d(&self, r: f64) -> Result<GreenValue> {
        let sm = self.sm_inf;
        let rs2 = self.rho_s2;
        let curve = &self.curve;
        let ua = self.osc(
            |k| {
                let (m, _) = curve.eval(k);
                let (d, _) = curve.plateau_deviation(k);
                2.0 * d / ((rs2 + m) * sm)
            },
            Oscillator::Cos,
            2.0 * PI * r,
        )?;
        Ok(GreenValue {
            dirac_coeff: self.dirac_coeff(),
            ua_classical: 0.0,
            ua_smooth: ua,
            ub: Complex64::new(0.0, 0.0),
        })
    }

    /// 3D, Laplace or static: the classical part stays folded into the
    /// smooth integrals (they converge without a log subtraction).
    fn laplace_3d(&self, r: f64) -> Result<GreenValue> {
        let sm = self.sm_inf;
        let rs2 = self.rho_s2;
        let curve = &self.curve;
        let omega = 2.0 * PI * r;
        let i_sin = self.osc(
            |k| {
                let (_, mq) = curve.eval(k);
                let (_, dq) = curve.plateau_deviation(k);
                (2.0 / r) * k * dq / ((rs2 + mq) * sm)
            },
            Oscillator::Sin,
            omega,
        )?;
        let i_dev = self.osc(
            |k| {
                let (mp, mq) = curve.eval(k);
                let d = self.m_perp_minus_m_par(k);
                4.0 * PI * k * k * d / ((rs2 + mp) * (rs2 + mq))
            },
            Oscillator::SphJ1OverZ,
            omega,
        )?;
        let ub = self.osc(
            |k| {
                let (mp, mq) = curve.eval(k);
                let d = self.m_perp_minus_m_par(k);
                4.0 * PI * k * k * d / ((rs2 + mp) * (rs2 + mq))
            },
            Oscillator::NegSphJ2,
            omega,
        )?;
        Ok(GreenValue {
            dirac_coeff: self.dirac_coeff(),
            ua_classical: 0.0,
            ua_smooth: i_sin + i_dev,
            ub,
        })
    }
}

/// Convenience constructors mirroring the operation names.
pub fn green_static_2d(
    kernel: &MicromodulusKernel,
    constants: &ElasticConstants,
    r: f64,
) -> Result<GreenValue> {
    GreenFn::new(kernel, constants, SParam::Static)?.eval(r)
}

pub fn green_laplace(
    kernel: &MicromodulusKernel,
    constants: &ElasticConstants,
    r: f64,
    s: Complex64,
) -> Result<GreenValue> {
    GreenFn::new(kernel, constants, SParam::Laplace(s))?.eval(r)
}

/// Radial tabulation of the smooth Green parts over [r_min, r_max], with
/// cubic interpolation in ln r and midpoint-validated auto-refinement.
#[derive(Clone)]
pub struct RadialGreenTable {
    pub s: SParam,
    pub dim: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub dirac_coeff: Complex64,
    pub log_coefficient: f64,
    ua: SplineC,
    ub: SplineC,
}

impl RadialGreenTable {
    /// (ua_smooth, ub) at radius r; queries outside the grid clamp to
    /// the nearest endpoint (assembly only strays below r_min inside
    /// horizon quadratures whose contribution there is negligible).
    pub fn eval_smooth(&self, r: f64) -> (Complex64, Complex64) {
        let q = r.max(self.r_min).min(self.r_max).ln();
        (self.ua.eval(q), self.ub.eval(q))
    }

    /// uA without the Dirac part: classical log plus smooth.
    pub fn ua_nondirac(&self, r: f64) -> Complex64 {
        let (ua, _) = self.eval_smooth(r);
        if self.log_coefficient != 0.0 && self.s.is_static() {
            ua + self.log_coefficient * r.max(self.r_min).ln()
        } else {
            ua
        }
    }

    pub fn knot_radii(&self) -> Vec<f64> {
        self.ua.knots().iter().map(|l| l.exp()).collect()
    }

    pub fn max_abs(&self) -> (f64, f64) {
        (self.ua.max_abs(), self.ub.max_abs())
    }
}

/// Build a radial table for `gf`, refining until the interpolant agrees
/// with direct evaluation at cell midpoints to `rel_tol` (relative to the
/// per-component scale, with a small floor for zero crossings).
pub fn tabulate(gf: &GreenFn, r_min: f64, r_max: f64, rel_tol: f64) -> Result<RadialGreenTable> {
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(PbError::Precondition(
            "tabulate needs 0 < r_min < r_max strictly increasing".into(),
        ));
    }
    let decades = (r_max / r_min).log10();
    let n0 = ((decades * 32.0).ceil() as usize).clamp(48, 1200);
    let mut ln_r: Vec<f64> = (0..=n0)
        .map(|i| r_min.ln() + (r_max.ln() - r_min.ln()) * i as f64 / n0 as f64)
        .collect();

    let eval_direct = |lr: f64| -> Result<(Complex64, Complex64)> {
        let g = gf.eval(lr.exp())?;
        Ok((g.ua_smooth, g.ub))
    };

    let mut cache: BTreeMap<u64, (Complex64, Complex64)> = BTreeMap::new();
    let evals: Vec<(u64, Result<(Complex64, Complex64)>)> = ln_r
        .par_iter()
        .map(|&lr| (lr.to_bits(), eval_direct(lr)))
        .collect();
    for (bits, v) in evals {
        cache.insert(bits, v?);
    }

    const MAX_NODES: usize = 4000;
    for _round in 0..8 {
        ln_r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ln_r.dedup();
        let ua: Vec<Complex64> = ln_r.iter().map(|l| cache[&l.to_bits()].0).collect();
        let ub: Vec<Complex64> = ln_r.iter().map(|l| cache[&l.to_bits()].1).collect();
        let sua = SplineC::new(ln_r.clone(), &ua);
        let sub = SplineC::new(ln_r.clone(), &ub);
        let scale_a = sua.max_abs();
        let scale_b = sub.max_abs();

        let mids: Vec<f64> = ln_r.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let fresh: Vec<f64> = mids
            .iter()
            .copied()
            .filter(|m| !cache.contains_key(&m.to_bits()))
            .collect();
        let checks: Vec<(f64, Result<(Complex64, Complex64)>)> = fresh
            .par_iter()
            .map(|&m| (m, eval_direct(m)))
            .collect();
        for (m, res) in checks {
            cache.insert(m.to_bits(), res?);
        }
        let mut bad = Vec::new();
        for &m in &mids {
            let (da, db) = cache[&m.to_bits()];
            let ia = sua.eval(m);
            let ib = sub.eval(m);
            let ok_a = (ia - da).norm() <= rel_tol * da.norm().max(1e-3 * scale_a);
            let ok_b = (ib - db).norm() <= rel_tol * db.norm().max(1e-3 * scale_b);
            if !(ok_a && ok_b) {
                bad.push(m);
            }
        }
        if bad.is_empty() {
            return Ok(RadialGreenTable {
                s: gf.s,
                dim: gf.dim,
                r_min,
                r_max,
                dirac_coeff: gf.dirac_coeff(),
                log_coefficient: gf.log_coefficient(),
                ua: sua,
                ub: sub,
            });
        }
        // promote only the failing midpoints to knots
        for &m in &bad {
            ln_r.push(m);
        }
        if ln_r.len() > MAX_NODES {
            return Err(PbError::Accuracy {
                what: "green table refinement".into(),
                estimate: ln_r.len() as f64,
                bound: MAX_NODES as f64,
            });
        }
    }
    Err(PbError::Accuracy {
        what: "green table refinement rounds exhausted".into(),
        estimate: 0.0,
        bound: rel_tol,
    })
}
