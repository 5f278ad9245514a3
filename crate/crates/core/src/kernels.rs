//! Reproducing-kernel series `B`, the averaged kernel `K` and the derivative
//! kernel `G`, evaluated with certified truncation, plus the closed-form
//! comparison quantities for their growth.
//!
//! All three are power series in `w = t z` whose coefficients come from the
//! odd moments `omega_{2n+1}`. Moments of a positive measure are log-convex in
//! the order, so `c_{n+1} / c_n` is nonincreasing and the tail after `N` terms
//! is bounded by the geometric series with ratio `|w| c_{N+1} / c_N`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::TaylorCoeffs;
use crate::quad::{log_add, log_integrate, log_integrate_toward_zero_past, At, Chebyshev, QuadOptions};
use crate::weights::{ln_t, RadialWeight};

pub const DEFAULT_KERNEL_TOL: f64 = 1e-12;
/// Evaluation is refused beyond this `|t z|` unless configured otherwise.
pub const DEFAULT_MAX_MODULUS: f64 = 0.999;
pub const MAX_TERMS: usize = 1_000_000;
/// Safety factor on coefficient ratios, covering moment quadrature error.
const RATIO_SLACK: f64 = 1.0 + 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    /// `B^w_t(z) = sum (t z)^n / (2 w_{2n+1})`
    Bergman,
    /// `K^w_t(z) = sum (t z)^n / (2 (n+1) w_{2n+1})`
    Averaged,
    /// `G^w(z, t) = sum_{n>=1} t^n z^{n-1} n / ((n+1) 2 w_{2n+1})`
    Derivative,
}

impl KernelKind {
    fn tag(self) -> u32 {
        match self {
            KernelKind::Bergman => 1,
            KernelKind::Averaged => 2,
            KernelKind::Derivative => 3,
        }
    }

    /// `ln c_n` of the series in `w = t z` (for `Derivative`, the series
    /// without its leading factor `t`).
    fn ln_coeff(self, n: f64, ln_odd: impl Fn(f64) -> Result<f64>) -> Result<f64> {
        let ln2 = std::f64::consts::LN_2;
        Ok(match self {
            KernelKind::Bergman => -ln2 - ln_odd(n)?,
            KernelKind::Averaged => -ln2 - n.ln_1p() - ln_odd(n)?,
            KernelKind::Derivative => (n + 1.0).ln() - (n + 2.0).ln() - ln2 - ln_odd(n + 1.0)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Absolute bound on the neglected series tail.
    pub tol: f64,
    pub max_modulus: f64,
    pub max_terms: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            tol: DEFAULT_KERNEL_TOL,
            max_modulus: DEFAULT_MAX_MODULUS,
            max_terms: MAX_TERMS,
        }
    }
}

impl KernelOptions {
    pub fn with_tol(tol: f64) -> Self {
        KernelOptions { tol, ..Default::default() }
    }
}

/// A kernel value with its truncation certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: Complex64,
    pub terms: usize,
    pub tail_bound: f64,
}

/// One kernel of one weight.
#[derive(Debug, Clone)]
pub struct KernelSeries {
    pub weight: RadialWeight,
    pub kind: KernelKind,
    pub options: KernelOptions,
}

impl KernelSeries {
    pub fn new(weight: &RadialWeight, kind: KernelKind, options: KernelOptions) -> Self {
        KernelSeries {
            weight: weight.clone(),
            kind,
            options,
        }
    }

    /// `ln c_n` for `n = 0..count`.
    pub fn ln_coefficients(&self, count: usize) -> Result<Vec<f64>> {
        let need = match self.kind {
            KernelKind::Derivative => count + 1,
            _ => count,
        };
        let odd = self.weight.moment_table().odd_ln_moments(&self.weight, need)?;
        (0..count)
            .map(|n| self.kind.ln_coeff(n as f64, |m| Ok(odd[m as usize])))
            .collect()
    }

    /// Taylor coefficients in the variable `w = t z`.
    pub fn coefficients(&self, count: usize) -> Result<TaylorCoeffs> {
        let ln = self.ln_coefficients(count.max(1))?;
        TaylorCoeffs::new(ln.into_iter().map(|l| Complex64::new(l.exp(), 0.0)).collect())
    }

    /// Sum the series at `w` with certified truncation.
    pub fn sum(&self, w: Complex64) -> Result<KernelValue> {
        let modulus = w.norm();
        if !modulus.is_finite() {
            return Err(Error::domain("kernel argument is not finite"));
        }
        if modulus >= 1.0 {
            return Err(Error::domain(format!("series diverges at |t z| = {modulus}")));
        }
        if modulus > self.options.max_modulus {
            return Err(Error::Refused {
                modulus,
                limit: self.options.max_modulus,
            });
        }
        let tol = self.options.tol;
        let mut ln_c = self.ln_coefficients(64)?;
        if modulus == 0.0 {
            return Ok(KernelValue {
                value: Complex64::new(ln_c[0].exp(), 0.0),
                terms: 1,
                tail_bound: 0.0,
            });
        }
        let ln_mod = modulus.ln();
        let phasor = w / modulus;
        let mut phase = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut n = 0usize;
        let mut last_bound = f64::INFINITY;
        loop {
            if n + 1 >= ln_c.len() {
                if ln_c.len() > self.options.max_terms {
                    return Err(Error::TruncationBudget {
                        modulus,
                        terms: n,
                        achieved: last_bound,
                        requested: tol,
                    });
                }
                ln_c = self.ln_coefficients(2 * ln_c.len())?;
            }
            let ln_term = ln_c[n] + n as f64 * ln_mod;
            acc += phase * ln_term.exp();
            // tail after n: term * q / (1 - q), q = |w| c_{n+1} / c_n
            let q = (ln_c[n + 1] - ln_c[n] + ln_mod).exp() * RATIO_SLACK;
            if q < 1.0 {
                last_bound = (ln_term + q.ln() - (-q).ln_1p()).exp();
                if last_bound <= tol {
                    return Ok(KernelValue {
                        value: acc,
                        terms: n + 1,
                        tail_bound: last_bound,
                    });
                }
            }
            phase *= phasor;
            n += 1;
            if n.is_multiple_of(1024) {
                phase /= phase.norm();
            }
        }
    }

    /// Kernel value at `(t, z)`.
    pub fn eval(&self, t: f64, z: Complex64) -> Result<KernelValue> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::domain(format!("t must lie in [0, 1), got {t}")));
        }
        if !(z.norm() < 1.0) {
            return Err(Error::domain(format!("z must lie in the unit disc, got {z}")));
        }
        let v = self.sum(z * t)?;
        Ok(match self.kind {
            KernelKind::Derivative => KernelValue {
                value: v.value * t,
                terms: v.terms,
                tail_bound: v.tail_bound * t,
            },
            _ => v,
        })
    }
}

pub fn bergman_kernel(w: &RadialWeight, t: f64, z: Complex64, tol: f64) -> Result<Complex64> {
    Ok(KernelSeries::new(w, KernelKind::Bergman, KernelOptions::with_tol(tol)).eval(t, z)?.value)
}

pub fn k_kernel(w: &RadialWeight, t: f64, z: Complex64, tol: f64) -> Result<Complex64> {
    Ok(KernelSeries::new(w, KernelKind::Averaged, KernelOptions::with_tol(tol)).eval(t, z)?.value)
}

pub fn g_kernel(w: &RadialWeight, t: f64, z: Complex64, tol: f64) -> Result<Complex64> {
    Ok(KernelSeries::new(w, KernelKind::Derivative, KernelOptions::with_tol(tol)).eval(t, z)?.value)
}

/// Terms summed exactly before the Euler-Maclaurin tail takes over.
const REAL_AXIS_DIRECT_TERMS: usize = 2048;
/// Real arguments with `1 - y` at least this large use the certified series.
const REAL_AXIS_SERIES_LIMIT: f64 = 1.0 / 128.0;
const REAL_AXIS_CHEB_DEGREE: usize = 20;

/// `ln sum c_n y^n` for real `y` in `[0, 1)` given with its complement, valid
/// arbitrarily close to `y = 1`. For `Derivative` this is the series without
/// the leading factor `t`.
///
/// Far from 1 the certified series is summed. Close to 1 the first
/// `REAL_AXIS_DIRECT_TERMS` terms are summed and the rest is replaced by the
/// midpoint Euler-Maclaurin formula `int_{N-1/2}^inf g + g'(N-1/2)/24` for the
/// smooth interpolant `g(x) = c(x) y^x`.
pub fn ln_series_real_direct(w: &RadialWeight, kind: KernelKind, y: At) -> Result<f64> {
    if y.u >= REAL_AXIS_SERIES_LIMIT {
        let opts = KernelOptions {
            tol: 1e-15,
            max_modulus: 1.0,
            max_terms: MAX_TERMS,
        };
        let series = KernelSeries::new(w, kind, opts);
        // relative accuracy: the n = 0 term bounds the sum from below
        let c0 = series.ln_coefficients(1)?[0].exp();
        let s = KernelSeries::new(w, kind, KernelOptions { tol: 1e-15 * c0, ..opts });
        return Ok(s.sum(Complex64::new(y.t, 0.0))?.value.re.ln());
    }
    let ln_y = ln_t(y);
    let series = KernelSeries::new(w, kind, KernelOptions::default());
    let direct = series.ln_coefficients(REAL_AXIS_DIRECT_TERMS)?;
    let head = crate::quad::log_sum(direct.iter().enumerate().map(|(n, c)| c + n as f64 * ln_y));
    let table = w.moment_table();
    let lnc = |x: f64| kind.ln_coeff(x, |m| table.ln_moment_smooth(w, 2.0 * m + 1.0));
    let x0 = REAL_AXIS_DIRECT_TERMS as f64 - 0.5;
    let failure = std::cell::Cell::new(None);
    let integrand = |v: f64| {
        let x = 1.0 / v;
        match lnc(x) {
            Ok(c) => c + x * ln_y - 2.0 * v.ln(),
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        }
    };
    let opts = QuadOptions::with_rel_tol(1e-13);
    let integral = log_integrate_toward_zero_past(integrand, 1.0 / x0, y.u / 64.0, &opts);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let integral = integral?;
    let g0 = lnc(x0)? + x0 * ln_y;
    let slope = 0.5 * (lnc(x0 + 1.0)? - lnc(x0 - 1.0)?) + ln_y;
    // g'(x0)/24 is negative here: the tail decreases past x0
    let correction = (g0 - integral).exp() * slope / 24.0;
    Ok(log_add(head, integral + correction.ln_1p()))
}

/// Cached interpolant of `ln_series_real_direct` (Chebyshev in `ln(1 - y)`
/// on dyadic blocks of `1 - y`, in `y` below 1/2).
pub fn ln_series_real(w: &RadialWeight, kind: KernelKind, y: At) -> Result<f64> {
    if y.u <= 0.0 {
        return Err(Error::domain("real-axis kernel requires y < 1"));
    }
    let panel = if y.t < 0.5 { 0 } else { (-y.u.log2()).floor().max(1.0) as i32 };
    if panel > 900 {
        return ln_series_real_direct(w, kind, y);
    }
    let cheb = w.derived_panel(kind.tag(), panel, || {
        let (a, b) = if panel == 0 {
            (0.0, 0.5)
        } else {
            let hi = (-(panel as f64)).exp2();
            ((0.5 * hi).ln(), hi.ln())
        };
        let values = Chebyshev::nodes(a, b, REAL_AXIS_CHEB_DEGREE)
            .into_iter()
            .map(|x| {
                let at = if panel == 0 { At::t(x) } else { At::u(x.exp()) };
                ln_series_real_direct(w, kind, at)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Chebyshev::from_values(a, b, &values))
    })?;
    Ok(if panel == 0 { cheb.eval(y.t) } else { cheb.eval(y.u.ln()) })
}

/// `ln K^w_s(t)` for real `s, t`, usable up to `s t -> 1`.
pub fn ln_k_kernel_real(w: &RadialWeight, s: At, t: At) -> Result<f64> {
    ln_series_real(w, KernelKind::Averaged, s.product(t))
}

/// `ln(1 + int_0^y exp(lnf))`.
fn ln_one_plus_integral(lnf: impl Fn(At) -> f64, y: At, w: &RadialWeight) -> Result<f64> {
    let v = log_integrate(lnf, At::ZERO, y, &w.quad_opts())?;
    Ok(log_add(0.0, v))
}

/// `ln(1 + int_0^y dx / (omega_hat(x) (1 - x)))`.
pub fn ln_radial_k_estimate(w: &RadialWeight, y: At) -> Result<f64> {
    ln_one_plus_integral(|x| -w.ln_tail(x) - x.u.ln(), y, w)
}

/// `1 + int_0^{st} dx / (omega_hat(x) (1 - x))`.
pub fn radial_k_estimate(w: &RadialWeight, s: f64, t: f64) -> Result<f64> {
    let (s, t) = (unit(s)?, unit(t)?);
    Ok(ln_radial_k_estimate(w, s.product(t))?.exp())
}

/// `ln(1 + int_0^y ds / omega_hat(s))`.
pub fn ln_m1_k_estimate(w: &RadialWeight, y: At) -> Result<f64> {
    ln_one_plus_integral(|x| -w.ln_tail(x), y, w)
}

/// `1 + int_0^{rho t} ds / omega_hat(s)`.
pub fn m1_k_estimate(w: &RadialWeight, rho: f64, t: f64) -> Result<f64> {
    let (rho, t) = (unit(rho)?, unit(t)?);
    Ok(ln_m1_k_estimate(w, rho.product(t))?.exp())
}

/// `ln(t^q (1 + int_0^{r t} dx / (omega_hat(x)^q (1 - x)^q)))`.
pub fn ln_mq_g_estimate(w: &RadialWeight, q: f64, r: At, t: At) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::domain(format!("q must be positive, got {q}")));
    }
    let inner = ln_one_plus_integral(|x| -q * (w.ln_tail(x) + x.u.ln()), r.product(t), w)?;
    Ok(q * ln_t(t) + inner)
}

/// `t^q (1 + int_0^{r t} dx / (omega_hat(x)^q (1 - x)^q))`.
pub fn mq_g_estimate(w: &RadialWeight, q: f64, r: f64, t: f64) -> Result<f64> {
    let (r, t) = (unit(r)?, unit(t)?);
    Ok(ln_mq_g_estimate(w, q, r, t)?.exp())
}

fn unit(x: f64) -> Result<At> {
    if (0.0..1.0).contains(&x) {
        Ok(At::t(x))
    } else {
        Err(Error::domain(format!("argument must lie in [0, 1), got {x}")))
    }
}
