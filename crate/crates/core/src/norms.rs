//! Norm estimates for analytic functions on the disc: integral means, Hardy,
//! Bergman, Bloch, Dirichlet-type, Hardy-Littlewood and mixed norms.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::TaylorCoeffs;
use crate::protocol::{trend, Schedule, Trend};
use crate::quad::{integrate, At, QuadOptions};
use crate::weights::RadialWeight;

/// Smallest circle grid.
pub const MIN_CIRCLE_POINTS: usize = 64;
/// Largest circle grid before an integral mean is declared unresolved.
pub const MAX_CIRCLE_POINTS: usize = 1 << 22;
/// Relative change between circle grids accepted as converged.
pub const CIRCLE_REL_TOL: f64 = 1e-10;
/// Default number of geometric radii `1 - 2^-k` scanned for suprema.
pub const DEFAULT_NORM_DEPTH: usize = 24;

type Evaluator = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// An analytic function on the disc, known by its Taylor coefficients or by
/// an evaluator (optionally with its derivative).
#[derive(Clone)]
pub enum DiscFunction {
    Series(TaylorCoeffs),
    Closure { f: Evaluator, df: Option<Evaluator> },
}

impl std::fmt::Debug for DiscFunction {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DiscFunction::Series(c) => write!(fmt, "Series(degree {})", c.degree()),
            DiscFunction::Closure { df, .. } => write!(fmt, "Closure(derivative: {})", df.is_some()),
        }
    }
}

impl From<TaylorCoeffs> for DiscFunction {
    fn from(c: TaylorCoeffs) -> Self {
        DiscFunction::Series(c)
    }
}

impl DiscFunction {
    pub fn closure(f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        DiscFunction::Closure { f: Arc::new(f), df: None }
    }

    pub fn with_derivative(
        f: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        df: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        DiscFunction::Closure {
            f: Arc::new(f),
            df: Some(Arc::new(df)),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            DiscFunction::Series(c) => c.eval(z),
            DiscFunction::Closure { f, .. } => f(z),
        }
    }

    /// `f'`; for evaluators without a derivative, a Cauchy integral over a
    /// small circle inside the disc.
    pub fn derivative(&self) -> DiscFunction {
        match self {
            DiscFunction::Series(c) => DiscFunction::Series(c.derivative()),
            DiscFunction::Closure { df: Some(df), .. } => DiscFunction::Closure { f: df.clone(), df: None },
            DiscFunction::Closure { f, df: None } => {
                let f = f.clone();
                DiscFunction::closure(move |z| cauchy_derivative(&*f, z))
            }
        }
    }

    pub fn at_origin(&self) -> Complex64 {
        self.eval(Complex64::new(0.0, 0.0))
    }

    /// `f(r e^{2 pi i j / m})`, `j = 0..m`.
    pub fn circle_values(&self, r: At, m: usize) -> Vec<Complex64> {
        match self {
            DiscFunction::Series(c) => series_circle_values(c, r, m),
            DiscFunction::Closure { f, .. } => (0..m)
                .into_par_iter()
                .map(|j| f(Complex64::from_polar(r.t, 2.0 * PI * j as f64 / m as f64)))
                .collect(),
        }
    }
}

fn cauchy_derivative(f: &(dyn Fn(Complex64) -> Complex64 + Send + Sync), z: Complex64) -> Complex64 {
    let h = (0.25 * (1.0 - z.norm())).min(1e-2);
    let n = 32;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
        acc += f(z + e * h) / e;
    }
    acc / (n as f64 * h)
}

/// Values of a polynomial at `m` equally spaced points of the circle of
/// radius `r`, exact for any `m` by folding coefficients modulo `m`.
fn series_circle_values(c: &TaylorCoeffs, r: At, m: usize) -> Vec<Complex64> {
    let ln_r = (-r.u).ln_1p();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (n, a) in c.coeffs.iter().enumerate() {
        if *a != Complex64::new(0.0, 0.0) {
            buf[n % m] += a * (n as f64 * ln_r).exp();
        }
    }
    // f(r w^j) = sum_k b_k w^{jk}: an inverse DFT without normalization
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(m).process(&mut buf);
    buf
}

fn circle_mean_pow(values: &[Complex64], p: f64) -> f64 {
    values.iter().map(|v| v.norm().powf(p)).sum::<f64>() / values.len() as f64
}

/// `M_p(r, f)^p` by trapezoid sums on doubling circle grids.
pub fn integral_mean_pow(f: &DiscFunction, p: f64, r: At, m: usize) -> Result<f64> {
    integral_mean_pow_tol(f, p, r, m, CIRCLE_REL_TOL)
}

/// As [`integral_mean_pow`], stopping once two grids agree to `rel_tol`.
pub fn integral_mean_pow_tol(f: &DiscFunction, p: f64, r: At, m: usize, rel_tol: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::domain(format!("p must be positive, got {p}")));
    }
    let mut m = m.max(MIN_CIRCLE_POINTS).next_power_of_two();
    match f {
        // below this size the samples do not see every coefficient
        DiscFunction::Series(c) => m = m.max((2 * c.coeffs.len()).next_power_of_two()),
        // singularities on the unit circle are resolved on the scale 1 - r
        DiscFunction::Closure { .. } => m = m.max(((4.0 / r.u).min(MAX_CIRCLE_POINTS as f64 / 4.0) as usize).next_power_of_two()),
    }
    let mut prev = circle_mean_pow(&f.circle_values(r, m), p);
    while m < MAX_CIRCLE_POINTS {
        m *= 2;
        let next = circle_mean_pow(&f.circle_values(r, m), p);
        if (next - prev).abs() <= rel_tol * next.abs() || next == 0.0 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Resolution(r.t))
}

/// `M_p(r, f)`, the `L^p` mean of `f` over the circle of radius `r`.
pub fn integral_mean(f: &DiscFunction, p: f64, r: f64, m: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::domain(format!("r must lie in [0, 1), got {r}")));
    }
    Ok(integral_mean_pow(f, p, At::t(r), m)?.powf(1.0 / p))
}

/// `M_inf(r, f)`: grid maximum on the circle with one Richardson step.
pub fn max_modulus(f: &DiscFunction, r: At) -> f64 {
    let mut m = MIN_CIRCLE_POINTS;
    if let DiscFunction::Series(c) = f {
        m = m.max((4 * c.coeffs.len()).next_power_of_two());
    }
    let coarse = f.circle_values(r, m).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let fine = f.circle_values(r, 2 * m).iter().map(|v| v.norm()).fold(0.0, f64::max);
    // the grid maximum converges quadratically in the mesh width
    fine.max(fine + (fine - coarse) / 3.0)
}

/// A norm estimate: the value at the deepest resolved level, the trend of
/// the level statistics and the per-level trace `(k, value)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub trend: Trend,
    pub trace: Vec<(usize, f64)>,
}

impl NormEstimate {
    fn exact(value: f64) -> Self {
        NormEstimate {
            value,
            trend: Trend::Stable,
            trace: Vec::new(),
        }
    }

    pub fn diverging(&self) -> bool {
        self.trend == Trend::Growing || !self.value.is_finite()
    }
}

/// Judge a trace of nondecreasing level statistics `(k, value)`, `k = 1..`,
/// on the schedule shortened to the deepest level present.
fn judge(trace: Vec<(usize, f64)>, value: f64) -> Result<NormEstimate> {
    let depth = trace.last().map_or(0, |t| t.0);
    if depth < 8 {
        return Err(Error::Resolution(1.0 - (-(depth as f64)).exp2()));
    }
    let schedule = Schedule::new(depth);
    let stats: Vec<f64> = schedule
        .levels()
        .into_iter()
        .map(|l| trace.iter().filter(|t| t.0 <= l).map(|t| t.1).fold(0.0, f64::max))
        .collect();
    Ok(NormEstimate {
        value,
        trend: if stats.iter().all(|&s| s == 0.0) { Trend::Stable } else { trend(&stats) },
        trace,
    })
}

/// Evaluate `stat(k)` for `k = 1..=depth` in parallel, keeping the prefix
/// before the first level that cannot be resolved.
fn level_trace(depth: usize, stat: impl Fn(usize) -> Result<f64> + Sync) -> Result<Vec<(usize, f64)>> {
    let raw: Vec<Result<f64>> = (1..=depth).into_par_iter().map(&stat).collect();
    let mut trace = Vec::new();
    for (k, v) in (1..=depth).zip(raw) {
        match v {
            Ok(v) => trace.push((k, v)),
            Err(Error::Resolution(_)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(trace)
}

/// `||f||_{H^p} = sup_r M_p(r, f)` over `r_k = 1 - 2^-k`, `k <= depth`.
pub fn hardy_norm(f: &DiscFunction, p: f64, schedule: Schedule) -> Result<NormEstimate> {
    let trace = level_trace(schedule.depth, |k| Ok(integral_mean_pow(f, p, At::level(k as f64), 0)?.powf(1.0 / p)))?;
    let value = trace.iter().map(|t| t.1).fold(0.0, f64::max);
    judge(trace, value)
}

/// Grid maximum of `g(theta)` on `m` angles, polished by golden-section
/// search around the best grid point.
fn polished_max(g: impl Fn(f64) -> f64, m: usize) -> f64 {
    let h = 2.0 * PI / m as f64;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
    for j in 0..m {
        let v = g(j as f64 * h);
        if v > best {
            best = v;
            arg = j as f64 * h;
        }
    }
    let (mut a, mut b) = (arg - h, arg + h);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        if g(c) >= g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(g(0.5 * (a + b)))
}

/// `|f(0)| + sup (1 - |z|^2) |f'(z)|` over radii `1 - 2^-k/2` and uniform
/// angles.
pub fn bloch_norm(f: &DiscFunction, schedule: Schedule) -> Result<NormEstimate> {
    let df = f.derivative();
    let m = match f {
        DiscFunction::Series(c) => (8 * c.coeffs.len()).next_power_of_two().max(MIN_CIRCLE_POINTS),
        DiscFunction::Closure { .. } => 1 << 12,
    };
    let trace = level_trace(schedule.depth, |k| {
        let best = [k as f64 - 0.5, k as f64]
            .iter()
            .map(|&level| {
                let r = At::level(level);
                let weight = r.u * (1.0 + r.t);
                polished_max(|theta| weight * df.eval(Complex64::from_polar(r.t, theta)).norm(), m)
            })
            .fold(0.0, f64::max);
        Ok(best)
    })?;
    let mut trace = trace;
    // the innermost disc r <= 1/2 is covered by a coarse polar grid
    let inner = (0..=8)
        .map(|i| {
            let r = 0.5 * i as f64 / 8.0;
            polished_max(|theta| (1.0 - r * r) * df.eval(Complex64::from_polar(r, theta)).norm(), m)
        })
        .fold(0.0, f64::max);
    if let Some(first) = trace.first_mut() {
        first.1 = first.1.max(inner);
    }
    let sup = trace.iter().map(|t| t.1).fold(0.0, f64::max);
    judge(trace, f.at_origin().norm() + sup)
}

/// `int_a^b g(r) dr` where `g` may fail; the first failure is returned.
fn integrate_radial(g: &impl Fn(At) -> Result<f64>, a: At, b: At, opts: &QuadOptions) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let q = integrate(
        |at: At| match g(at) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        opts,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(q?.value)
}

/// Depth in `r_k = 1 - 2^-k` to which area integrals of evaluator-backed
/// functions are carried; deeper circles need more samples than is useful.
pub const CLOSURE_AREA_DEPTH: usize = 12;

/// `int_0^1 g(r) dr` for a radial integrand built from `f`.
///
/// Polynomials are integrated up to 1 and a divergent integral is flagged.
/// For evaluators the integral is accumulated over dyadic panels up to
/// `CLOSURE_AREA_DEPTH` and the running partial integrals are judged.
fn area_integral(f: &DiscFunction, g: impl Fn(At) -> Result<f64> + Sync) -> Result<NormEstimate> {
    let opts = QuadOptions::with_rel_tol(1e-10);
    if let DiscFunction::Series(_) = f {
        return match integrate_radial(&g, At::ZERO, At::ONE, &opts) {
            Ok(v) => Ok(NormEstimate::exact(v)),
            Err(Error::Divergent(_)) => Ok(NormEstimate {
                value: f64::INFINITY,
                trend: Trend::Growing,
                trace: Vec::new(),
            }),
            Err(e) => Err(e),
        };
    }
    let panels: Vec<f64> = (1..=CLOSURE_AREA_DEPTH)
        .into_par_iter()
        .map(|k| {
            let lo = if k == 1 { At::ZERO } else { At::level(k as f64 - 1.0) };
            integrate_radial(&g, lo, At::level(k as f64), &opts)
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let trace: Vec<(usize, f64)> = panels
        .iter()
        .enumerate()
        .map(|(i, v)| {
            total += v;
            (i + 1, total)
        })
        .collect();
    judge(trace, total)
}

/// `||f||_{A^p_nu} = (int_0^1 M_p^p(r, f) 2 r nu(r) dr)^{1/p}`.
pub fn bergman_norm(f: &DiscFunction, p: f64, nu: &RadialWeight) -> Result<NormEstimate> {
    let mut e = area_integral(f, |at| Ok(integral_mean_pow(f, p, at, 0)? * 2.0 * at.t * nu.density(at)))?;
    e.value = e.value.powf(1.0 / p);
    Ok(e)
}

/// `(|f(0)|^p + ||f'||^p_{A^p_{p-1}})^{1/p}` with the standard weight of
/// exponent `p - 1`.
pub fn dirichlet_norm(f: &DiscFunction, p: f64) -> Result<NormEstimate> {
    let nu = RadialWeight::standard(p - 1.0);
    let mut e = bergman_norm(&f.derivative(), p, &nu)?;
    e.value = (f.at_origin().norm().powf(p) + e.value.powf(p)).powf(1.0 / p);
    Ok(e)
}

/// `(|f(0)|^p + int_0^1 M_q^p(r, f') (1 - r)^alpha dr)^{1/p}`.
pub fn mixed_norm(f: &DiscFunction, p: f64, q: f64, alpha: f64) -> Result<NormEstimate> {
    if !(p > 0.0 && q > 0.0 && alpha > -1.0) {
        return Err(Error::domain("mixed norm needs p, q > 0 and alpha > -1"));
    }
    let df = f.derivative();
    let mut e = area_integral(&df, |at| Ok(integral_mean_pow(&df, q, at, 0)?.powf(p / q) * at.u.powf(alpha)))?;
    e.value = (f.at_origin().norm().powf(p) + e.value).powf(1.0 / p);
    Ok(e)
}

/// `(sum |a_n|^p (n+1)^{p-2})^{1/p}` over the available coefficients. The
/// trace holds the partial norms after each dyadic block `[2^k - 1, 2^{k+1} - 1)`,
/// so a still-growing trend flags a heavy tail.
pub fn hl_norm(f: &TaylorCoeffs, p: f64) -> Result<NormEstimate> {
    if !(p > 0.0) {
        return Err(Error::domain(format!("p must be positive, got {p}")));
    }
    let mut sum = 0.0;
    let mut trace = Vec::new();
    let mut next = 1;
    for (n, a) in f.coeffs.iter().enumerate() {
        sum += a.norm().powf(p) * (n as f64 + 1.0).powf(p - 2.0);
        if n + 2 == 2 * next || n + 1 == f.coeffs.len() {
            trace.push((trace.len() + 1, sum.powf(1.0 / p)));
            next *= 2;
        }
    }
    let value = sum.powf(1.0 / p);
    let stats: Vec<f64> = trace.iter().map(|t| t.1).collect();
    let trend = if stats.len() < 2 || value == 0.0 { Trend::Stable } else { trend(&stats[stats.len().saturating_sub(4)..]) };
    Ok(NormEstimate { value, trend, trace })
}

/// `H^p` norm of a polynomial: its integral mean on the unit circle.
pub fn polynomial_hardy_norm(f: &TaylorCoeffs, p: f64) -> Result<f64> {
    Ok(integral_mean_pow(&DiscFunction::Series(f.clone()), p, At::ONE, 0)?.powf(1.0 / p))
}

/// `(|f(0)|^p + sum_n 2^{-np} ||D^n f'||^p_{H^p})^{1/p}` where `D^n` keeps the
/// coefficients of `f'` with index in `[2^n, 2^{n+1})`; block 0 also keeps
/// index 0.
pub fn dyadic_dirichlet_norm(f: &TaylorCoeffs, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::domain(format!("p must be positive, got {p}")));
    }
    let df = f.derivative();
    let mut sum = f.coeffs[0].norm().powf(p);
    let mut n = 0;
    loop {
        let (lo, hi) = if n == 0 { (0, 2) } else { (1 << n, 1 << (n + 1)) };
        if lo >= df.coeffs.len() {
            break;
        }
        let block = df.block(lo, hi);
        if block.coeffs.iter().any(|c| c.norm() > 0.0) {
            sum += (-(n as f64) * p).exp2() * polynomial_hardy_norm(&block, p)?.powf(p);
        }
        n += 1;
    }
    Ok(sum.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn poly(coeffs: &[f64]) -> DiscFunction {
        DiscFunction::Series(TaylorCoeffs::from_real(coeffs).unwrap())
    }

    fn geometric() -> DiscFunction {
        DiscFunction::with_derivative(|z| 1.0 / (1.0 - z), |z| 1.0 / ((1.0 - z) * (1.0 - z)))
    }

    #[test]
    fn integral_mean_examples() {
        assert_relative_eq!(integral_mean(&poly(&[0.0, 1.0]), 2.0, 0.7, 0).unwrap(), 0.7, max_relative = 1e-14);
        assert_relative_eq!(integral_mean(&poly(&[-3.0]), 1.5, 0.4, 0).unwrap(), 3.0, max_relative = 1e-14);
        let g = integral_mean(&geometric(), 2.0, 0.5, 0).unwrap();
        assert_relative_eq!(g, 0.75f64.powf(-0.5), max_relative = 1e-10);
        let cst = DiscFunction::closure(|_| c(0.0, 2.0));
        assert_relative_eq!(integral_mean(&cst, 3.0, 0.9, 0).unwrap(), 2.0, max_relative = 1e-14);
        assert!(integral_mean(&cst, 2.0, 1.0, 0).is_err());
        assert_relative_eq!(max_modulus(&poly(&[1.0, 0.0, 1.0]), At::t(0.5)), 1.25, max_relative = 1e-12);
    }

    #[test]
    fn hardy_norm_examples() {
        let z = hardy_norm(&poly(&[0.0, 1.0]), 2.0, Schedule::new(DEFAULT_NORM_DEPTH)).unwrap();
        assert_relative_eq!(z.value, 1.0, max_relative = 1e-6);
        assert_eq!(z.trend, Trend::Stable);
        let log = DiscFunction::closure(|z: Complex64| if z.norm() < 1e-8 { 1.0 + z / 2.0 } else { -(1.0 - z).ln() / z });
        let h = hardy_norm(&log, 2.0, Schedule::new(DEFAULT_NORM_DEPTH)).unwrap();
        // sum 1/(n+1)^2 = pi^2/6
        assert_relative_eq!(h.value, (PI * PI / 6.0).sqrt(), max_relative = 1e-3);
        assert!(!h.diverging());
        let g = hardy_norm(&geometric(), 2.0, Schedule::new(16)).unwrap();
        assert!(g.diverging());
    }

    #[test]
    fn bloch_norm_examples() {
        let s = Schedule::new(DEFAULT_NORM_DEPTH);
        assert_relative_eq!(bloch_norm(&poly(&[0.0, 1.0]), s).unwrap().value, 1.0, max_relative = 1e-12);
        assert_relative_eq!(bloch_norm(&poly(&[-2.0]), s).unwrap().value, 2.0, max_relative = 1e-12);
        let log = DiscFunction::with_derivative(|z: Complex64| -(1.0 - z).ln(), |z| 1.0 / (1.0 - z));
        let b = bloch_norm(&log, s).unwrap();
        assert_relative_eq!(b.value, 2.0, max_relative = 1e-6);
        assert!(!b.diverging());
        assert!(bloch_norm(&geometric(), Schedule::new(16)).unwrap().diverging());
    }

    #[test]
    fn area_norm_examples() {
        let one = RadialWeight::constant(1.0);
        assert_relative_eq!(bergman_norm(&poly(&[1.0]), 1.5, &one).unwrap().value, 1.0, max_relative = 1e-10);
        assert_relative_eq!(bergman_norm(&poly(&[0.0, 1.0]), 2.0, &one).unwrap().value, 0.5f64.sqrt(), max_relative = 1e-10);
        assert_eq!(bergman_norm(&poly(&[0.0]), 2.0, &one).unwrap().value, 0.0);
        assert_relative_eq!(dirichlet_norm(&poly(&[3.0]), 2.0).unwrap().value, 3.0, max_relative = 1e-12);
        assert_relative_eq!(dirichlet_norm(&poly(&[0.0, 1.0]), 2.0).unwrap().value, 1.0, max_relative = 1e-10);
        // int_0^1 4 r^2 2(1 - r^2) 2r dr = 4/3
        assert_relative_eq!(dirichlet_norm(&poly(&[0.0, 0.0, 1.0]), 2.0).unwrap().value, (4.0f64 / 3.0).sqrt(), max_relative = 1e-10);
        assert_relative_eq!(mixed_norm(&poly(&[2.0]), 2.0, 2.0, 1.0).unwrap().value, 2.0, max_relative = 1e-12);
        assert_relative_eq!(mixed_norm(&poly(&[0.0, 1.0]), 2.0, 2.0, 1.0).unwrap().value, 0.5f64.sqrt(), max_relative = 1e-10);
        assert_relative_eq!(mixed_norm(&poly(&[0.0, 0.0, 1.0]), 2.0, 2.0, 1.0).unwrap().value, (1.0f64 / 3.0).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn divergent_area_integral_is_flagged() {
        let nu = RadialWeight::standard(-0.5);
        let e = bergman_norm(&geometric(), 2.0, &nu).unwrap();
        assert!(e.diverging());
    }

    #[test]
    fn coefficient_norms() {
        let z = TaylorCoeffs::from_real(&[0.0, 1.0]).unwrap();
        assert_relative_eq!(hl_norm(&z, 2.0).unwrap().value, 1.0);
        assert_relative_eq!(hl_norm(&TaylorCoeffs::from_real(&[1.0]).unwrap(), 3.0).unwrap().value, 1.0);
        let n = 100_000;
        let harmonic: Vec<f64> = (0..n).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        let oracle: f64 = (1..=n).rev().map(|k| 1.0 / (k as f64 * k as f64)).sum();
        let h = hl_norm(&TaylorCoeffs::from_real(&harmonic).unwrap(), 2.0).unwrap();
        assert_relative_eq!(h.value, oracle.sqrt(), max_relative = 1e-13);
        assert!(!h.diverging());
        assert_relative_eq!(dyadic_dirichlet_norm(&z, 2.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(dyadic_dirichlet_norm(&TaylorCoeffs::from_real(&[-4.0]).unwrap(), 1.5).unwrap(), 4.0, max_relative = 1e-14);
    }

    #[test]
    fn cauchy_derivative_matches_exact() {
        let f = DiscFunction::closure(|z: Complex64| (z * 3.0).exp());
        let df = f.derivative();
        for z in [c(0.1, 0.2), c(-0.9, 0.0), c(0.0, 0.99)] {
            assert!((df.eval(z) - (z * 3.0).exp() * 3.0).norm() < 1e-9 * (z * 3.0).exp().norm());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn parseval(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40), r in 0.0f64..0.999) {
            let coeffs: Vec<Complex64> = coeffs.into_iter().map(|(a, b)| c(a, b)).collect();
            let exact: f64 = coeffs.iter().enumerate().map(|(n, a)| a.norm_sqr() * r.powi(2 * n as i32)).sum();
            let f = DiscFunction::Series(TaylorCoeffs::new(coeffs).unwrap());
            let m = integral_mean(&f, 2.0, r, 0).unwrap();
            prop_assert!((m * m - exact).abs() <= 1e-10 * exact.max(1e-300));
        }
    }
}
