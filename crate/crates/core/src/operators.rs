//! The Hilbert-type operator `H_w f(z) = int_0^1 f(t) K^w_t(z) w(t) dt`, its
//! sublinear variant and the test functions used to probe it.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functions::{graded_grid, RadialFunction, RadialGridFunction, TaylorCoeffs};
use crate::kernels::{KernelKind, KernelOptions, KernelSeries, MAX_TERMS};
use crate::quad::{integrate_pieces, At, QuadOptions};
use crate::weights::RadialWeight;

/// Samples per dyadic band for the test functions.
pub const TEST_FUNCTION_PER_LEVEL: usize = 24;

fn quad_opts(tol: f64) -> QuadOptions {
    QuadOptions::with_rel_tol(tol.clamp(1e-14, 1e-2))
}

fn check_disc(z: Complex64) -> Result<()> {
    if z.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("z must lie in the unit disc, got {z}")))
    }
}

/// `int_0^1 g(t) dt` split at the breakpoints of `f`.
fn integrate_against<F: RadialFunction + ?Sized>(
    f: &F,
    g: impl Fn(At) -> Complex64,
    opts: &QuadOptions,
) -> Result<Complex64> {
    let mut breaks = f.breakpoints();
    breaks.retain(|b| b.t < 1.0 && b.u > 0.0);
    // grid functions vanish before their first node
    if breaks.is_empty() {
        breaks.push(At::ZERO);
    }
    integrate_pieces(g, &breaks, At::ONE, opts)
}

/// Kernel coefficients `c_n` of `K^w_t(z) = sum c_n (t z)^n`, enough of them
/// that the neglected tail is below `rel_tol * c_0` whenever `|t z| <= rho`.
pub fn averaged_kernel_coefficients(w: &RadialWeight, rho: f64, rel_tol: f64) -> Result<TaylorCoeffs> {
    kernel_coefficients(w, KernelKind::Averaged, rho, rel_tol)
}

/// Series coefficients of any kernel kind in the variable `t z`, truncated
/// as in [`averaged_kernel_coefficients`].
pub fn kernel_coefficients(w: &RadialWeight, kind: KernelKind, rho: f64, rel_tol: f64) -> Result<TaylorCoeffs> {
    let ln_c = kernel_ln_coefficients(w, kind, rho, rel_tol)?;
    TaylorCoeffs::new(ln_c.iter().map(|l| Complex64::new(l.exp(), 0.0)).collect())
}

/// Logarithms of the coefficients kept by [`kernel_coefficients`]; usable
/// where the coefficients themselves overflow.
pub fn kernel_ln_coefficients(w: &RadialWeight, kind: KernelKind, rho: f64, rel_tol: f64) -> Result<Vec<f64>> {
    let series = KernelSeries::new(w, kind, KernelOptions::default());
    let mut count = 64;
    loop {
        let mut ln_c = series.ln_coefficients(count)?;
        if rho == 0.0 {
            ln_c.truncate(1);
            return Ok(ln_c);
        }
        let ln_rho = rho.ln();
        let target = ln_c[0] + rel_tol.ln();
        for n in 0..count - 1 {
            let q = (ln_c[n + 1] - ln_c[n] + ln_rho).exp() * (1.0 + 1e-8);
            if q < 1.0 {
                let tail = ln_c[n] + n as f64 * ln_rho + q.ln() - (-q).ln_1p();
                if tail <= target {
                    ln_c.truncate(n + 1);
                    return Ok(ln_c);
                }
            }
        }
        if count > MAX_TERMS {
            return Err(Error::TruncationBudget {
                modulus: rho,
                terms: count,
                achieved: f64::NAN,
                requested: rel_tol,
            });
        }
        count *= 2;
    }
}

/// `H_w(f)(z)` by quadrature over `t` of `f(t) K^w_t(z) w(t)`.
pub fn apply_h<F: RadialFunction + ?Sized>(w: &RadialWeight, f: &F, z: Complex64, tol: f64) -> Result<Complex64> {
    check_disc(z)?;
    let kernel = averaged_kernel_coefficients(w, z.norm(), 1e-3 * tol.max(1e-15))?;
    let opts = quad_opts(tol);
    integrate_against(f, |at| f.value(at) * kernel.eval(z * at.t) * w.density(at), &opts)
}

pub fn apply_h_point(w: &RadialWeight, f: &RadialGridFunction, z: Complex64, tol: f64) -> Result<Complex64> {
    apply_h(w, f, z, tol)
}

/// `|f|` of any radial function.
struct Modulus<'a, F: ?Sized>(&'a F);

impl<F: RadialFunction + ?Sized> RadialFunction for Modulus<'_, F> {
    fn value(&self, at: At) -> Complex64 {
        Complex64::new(self.0.value(at).norm(), 0.0)
    }

    fn breakpoints(&self) -> Vec<At> {
        self.0.breakpoints()
    }
}

/// The sublinear operator: `H_w` applied to `|f|`.
pub fn apply_h_sublinear<F: RadialFunction + ?Sized>(
    w: &RadialWeight,
    f: &F,
    z: Complex64,
    tol: f64,
) -> Result<Complex64> {
    apply_h(w, &Modulus(f), z, tol)
}

/// Taylor coefficients `a_n = int f(t) t^n w(t) dt / (2 (n+1) w_{2n+1})`,
/// `n = 0..=degree`.
pub fn apply_h_coeffs<F: RadialFunction + ?Sized>(w: &RadialWeight, f: &F, degree: usize) -> Result<TaylorCoeffs> {
    let series = KernelSeries::new(w, KernelKind::Averaged, KernelOptions::default());
    let c = series.ln_coefficients(degree + 1)?;
    let opts = w.quad_opts();
    let coeffs = (0..=degree)
        .into_par_iter()
        .map(|n| {
            let m = integrate_against(f, |at| f.value(at) * at.t.powi(n as i32) * w.density(at), &opts)?;
            Ok(m * c[n].exp())
        })
        .collect::<Result<Vec<_>>>()?;
    TaylorCoeffs::new(coeffs)
}

/// The classical Hilbert operator `int_0^1 f(t) / (1 - t z) dt`.
pub fn hilbert_classical<F: RadialFunction + ?Sized>(f: &F, z: Complex64) -> Result<Complex64> {
    check_disc(z)?;
    let one = Complex64::new(1.0, 0.0);
    integrate_against(f, |at| f.value(at) / (one - z * at.t), &quad_opts(1e-13))
}

pub fn hilbert_classical_oracle(f: &RadialGridFunction, z: Complex64) -> Result<Complex64> {
    hilbert_classical(f, z)
}

/// `f_a(t) = (1 - a^2) / (1 - a t)^2`, unit norm in `H^1`.
pub fn fa_value(a: f64, at: At) -> f64 {
    // 1 - a t = (1 - a) + a u keeps full precision near t = 1
    let d = (1.0 - a) + a * at.u;
    (1.0 - a * a) / (d * d)
}

/// Dyadic bands needed to resolve features at distance `scale` from 1.
fn levels_for(scale: f64) -> usize {
    let depth = if scale > 0.0 { -scale.log2() } else { 60.0 };
    (depth.ceil() as usize + 12).clamp(16, 120)
}

pub fn test_function_fa(a: f64) -> Result<RadialGridFunction> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::domain(format!("a must lie in [0, 1), got {a}")));
    }
    Ok(RadialGridFunction::sample_real(levels_for(1.0 - a), TEST_FUNCTION_PER_LEVEL, |at| fa_value(a, at)))
}

/// `phi_r(t) = (w(t) / nu_hat(t))^{p'/p}` on `[r, 1)`, zero before `r`.
pub fn phir_value(w: &RadialWeight, nu: &RadialWeight, p: f64, r: f64, at: At) -> f64 {
    if at.t < r {
        return 0.0;
    }
    let exponent = 1.0 / (p - 1.0);
    ((w.ln_density(at) - nu.ln_tail(at)) * exponent).exp()
}

pub fn test_function_phir(w: &RadialWeight, nu: &RadialWeight, p: f64, r: f64) -> Result<RadialGridFunction> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::domain(format!("p must lie in (1, inf), got {p}")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::domain(format!("r must lie in [0, 1), got {r}")));
    }
    let mut nodes: Vec<f64> = graded_grid(levels_for(1.0 - r), TEST_FUNCTION_PER_LEVEL)
        .into_iter()
        .filter(|&t| t > r)
        .collect();
    nodes.insert(0, r);
    let values = nodes.iter().map(|&t| phir_value(w, nu, p, r, At::t(t))).collect();
    RadialGridFunction::from_real(nodes, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one() -> RadialGridFunction {
        RadialGridFunction::from_real(vec![0.0], vec![1.0]).unwrap()
    }

    fn power(k: i32) -> RadialGridFunction {
        RadialGridFunction::sample_real(30, 32, |at| at.t.powi(k))
    }

    #[test]
    fn classical_examples() {
        let w = RadialWeight::constant(1.0);
        let ln4 = 2.0 * 2f64.ln();
        assert_relative_eq!(apply_h_point(&w, &one(), c(0.5, 0.0), 1e-12).unwrap().re, ln4, max_relative = 1e-10);
        assert_relative_eq!(hilbert_classical_oracle(&one(), c(0.5, 0.0)).unwrap().re, ln4, max_relative = 1e-12);
        assert_relative_eq!(hilbert_classical_oracle(&one(), c(0.0, 0.0)).unwrap().re, 1.0, max_relative = 1e-13);
        let t = RadialGridFunction::from_real(vec![0.0, 0.999_999], vec![0.0, 0.999_999]).unwrap();
        assert_relative_eq!(apply_h_point(&w, &t, c(0.0, 0.0), 1e-12).unwrap().re, 0.5, max_relative = 1e-6);
        let minus = RadialGridFunction::from_real(vec![0.0], vec![-1.0]).unwrap();
        assert_relative_eq!(apply_h_sublinear(&w, &minus, c(0.5, 0.0), 1e-12).unwrap().re, ln4, max_relative = 1e-10);
        let zero = RadialGridFunction::from_real(vec![0.0], vec![0.0]).unwrap();
        assert_eq!(apply_h_sublinear(&w, &zero, c(0.5, 0.0), 1e-12).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn value_at_origin() {
        for w in [RadialWeight::standard(-0.5), RadialWeight::logarithmic(0.0, 1.0), RadialWeight::exponential(1.0, 1.0)] {
            let h = apply_h_point(&w, &one(), c(0.0, 0.0), 1e-12).unwrap().re;
            let expected = w.tail(0.0).unwrap() / (2.0 * w.moment(1.0).unwrap());
            assert_relative_eq!(h, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn agrees_with_classical_operator() {
        let w = RadialWeight::constant(1.0);
        let fs = [one(), power(1), power(2), test_function_fa(0.5).unwrap()];
        for f in &fs {
            for rho in [0.0, 0.3, 0.6, 0.9] {
                for theta in [0.0, 1.0, 2.5, -2.0] {
                    let z = Complex64::from_polar(rho, theta);
                    let a = apply_h_point(&w, f, z, 1e-12).unwrap();
                    let b = hilbert_classical_oracle(f, z).unwrap();
                    assert!((a - b).norm() <= 1e-8, "{a} vs {b} at {z}");
                }
            }
        }
    }

    #[test]
    fn coefficients_of_h_of_one() {
        let w = RadialWeight::constant(1.0);
        let a = apply_h_coeffs(&w, &one(), 20).unwrap();
        for (n, v) in a.coeffs.iter().enumerate() {
            assert_relative_eq!(v.re, 1.0 / (n as f64 + 1.0), max_relative = 1e-11);
        }
        for w in [RadialWeight::standard(1.0), RadialWeight::logarithmic(0.0, 1.0)] {
            let a = apply_h_coeffs(&w, &one(), 30).unwrap();
            for (n, v) in a.coeffs.iter().enumerate() {
                let m = n as f64;
                let expected = w.moment(m).unwrap() / (2.0 * (m + 1.0) * w.moment(2.0 * m + 1.0).unwrap());
                assert_relative_eq!(v.re, expected, max_relative = 1e-9);
            }
        }
        let zero = RadialGridFunction::from_real(vec![0.0], vec![0.0]).unwrap();
        assert!(apply_h_coeffs(&w, &zero, 5).unwrap().coeffs.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn coefficients_sum_to_point_values() {
        let w = RadialWeight::standard(1.0);
        let f = power(2);
        let a = apply_h_coeffs(&w, &f, 400).unwrap();
        for z in [c(0.2, 0.1), c(-0.5, 0.4), c(0.9, 0.0), c(0.0, -0.85)] {
            let p = apply_h_point(&w, &f, z, 1e-12).unwrap();
            assert!((a.eval(z) - p).norm() <= 1e-6 * p.norm().max(1.0));
        }
    }

    #[test]
    fn positivity() {
        let w = RadialWeight::logarithmic(0.0, 1.0);
        let f = test_function_fa(0.9).unwrap();
        for x in [0.0, 0.4, 0.95] {
            assert!(apply_h_point(&w, &f, c(x, 0.0), 1e-10).unwrap().re > 0.0);
        }
    }

    #[test]
    fn test_functions() {
        let f0 = test_function_fa(0.0).unwrap();
        assert!(f0.values().iter().all(|v| (v.re - 1.0).abs() < 1e-15));
        let f = test_function_fa(0.5).unwrap();
        assert_relative_eq!(f.eval(0.5).re, 4.0 / 3.0, max_relative = 1e-12);
        // int_0^1 (1 - a^2) / (1 - a t)^2 dt = 1 + a
        let total = hilbert_classical_oracle(&f, c(0.0, 0.0)).unwrap().re;
        assert_relative_eq!(total, 1.5, max_relative = 1e-4);
        assert!(test_function_fa(1.0).is_err());

        let w = RadialWeight::constant(1.0);
        let phi = test_function_phir(&w, &w, 2.0, 0.5).unwrap();
        assert_eq!(phi.eval(0.3).re, 0.0);
        assert_relative_eq!(phi.eval(0.5).re, 2.0, max_relative = 1e-12);
        assert_relative_eq!(phi.eval(0.75).re, 4.0, max_relative = 1e-12);
        let full = test_function_phir(&w, &w, 3.0, 0.0).unwrap();
        assert_relative_eq!(full.eval(0.0).re, 1.0, max_relative = 1e-12);
        assert_relative_eq!(full.eval(0.75).re, 2.0, max_relative = 1e-12);
        assert!(test_function_phir(&w, &w, 1.0, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn linearity(a in -2.0f64..2.0, b in -2.0f64..2.0, x in -0.8f64..0.8, y in -0.5f64..0.5) {
            let w = RadialWeight::standard(0.5);
            let (f, g) = (power(1), test_function_fa(0.7).unwrap());
            let z = c(x, y);
            let combo = f.combine(c(a, 0.0), &g, c(b, 0.0));
            let lhs = apply_h_point(&w, &combo, z, 1e-12).unwrap();
            let rhs = apply_h_point(&w, &f, z, 1e-12).unwrap() * a + apply_h_point(&w, &g, z, 1e-12).unwrap() * b;
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
        }
    }
}
