//! Radial weights on `[0, 1)`: densities, tails, moments and the doubling
//! classes they belong to.

mod classify;
mod family;
mod moments;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::quad::{log_integrate, log_integrate_to_one, log_integrate_toward_zero, At, Chebyshev, QuadOptions};

pub use classify::{
    check_moment_tail_equiv, classify_d, classify_dcheck, classify_dhat, classify_dhat_moments, classify_m,
    ClassKind, ClassReport, DEFAULT_K_CANDIDATES,
};
pub use family::WeightFamily;
pub use moments::MomentTable;

/// Default relative tolerance for tails and moments.
pub const DEFAULT_TOL: f64 = 1e-10;

const TAIL_CHEB_DEGREE: usize = 24;
/// Below `u = 2^-MAX_TAIL_PANEL` tails are computed directly.
const MAX_TAIL_PANEL: i32 = 1000;

/// `ln t` computed from whichever of `t`, `1 - t` is accurate.
#[inline]
pub fn ln_t(at: At) -> f64 {
    if at.t < 0.5 {
        at.t.ln()
    } else {
        (-at.u).ln_1p()
    }
}

#[derive(Default)]
struct Caches {
    tail_panels: RwLock<HashMap<i32, Arc<Chebyshev>>>,
    /// Interpolants of derived functions (kernels on the real axis), keyed by
    /// a caller-chosen tag and panel index.
    derived: RwLock<HashMap<(u32, i32), Arc<Chebyshev>>>,
}

/// A validated radial weight. Clones share their caches.
#[derive(Clone)]
pub struct RadialWeight {
    family: WeightFamily,
    tol: f64,
    caches: Arc<Caches>,
    moments: Arc<MomentTable>,
    /// Prefix tails `int_{node_i}^1` for tabulated weights.
    tab_tails: Arc<Vec<f64>>,
}

impl fmt::Debug for RadialWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadialWeight({})", self.family)
    }
}

impl fmt::Display for RadialWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.family.fmt(f)
    }
}

impl RadialWeight {
    pub fn new(family: WeightFamily) -> Result<Self> {
        Self::with_tol(family, DEFAULT_TOL)
    }

    pub fn with_tol(family: WeightFamily, tol: f64) -> Result<Self> {
        family.validate()?;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::domain(format!("tolerance must lie in (0, 1), got {tol}")));
        }
        let tab_tails = match &family {
            WeightFamily::Tabulated(g) => tabulated_tails(g.nodes(), &g.values().iter().map(|v| v.re).collect::<Vec<_>>()),
            _ => Vec::new(),
        };
        Ok(RadialWeight {
            family,
            tol,
            caches: Arc::new(Caches::default()),
            moments: Arc::new(MomentTable::new(tol)),
            tab_tails: Arc::new(tab_tails),
        })
    }

    pub fn parse(spec: &str) -> Result<Self> {
        Self::new(WeightFamily::parse(spec)?)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(WeightFamily::Constant(c)).expect("valid constant weight")
    }

    pub fn standard(alpha: f64) -> Self {
        Self::new(WeightFamily::Standard(alpha)).expect("valid standard weight")
    }

    pub fn power(gamma: f64) -> Self {
        Self::new(WeightFamily::PowerOneMinus(gamma)).expect("valid power weight")
    }

    pub fn logarithmic(alpha: f64, beta: f64) -> Self {
        Self::new(WeightFamily::Logarithmic(alpha, beta)).expect("valid logarithmic weight")
    }

    pub fn exponential(c: f64, k: f64) -> Self {
        Self::new(WeightFamily::ExponentialDecay(c, k)).expect("valid exponential weight")
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn id(&self) -> String {
        self.family.to_string()
    }

    pub(crate) fn quad_opts(&self) -> QuadOptions {
        QuadOptions::with_rel_tol((self.tol * 1e-2).max(1e-14))
    }

    pub fn moment_table(&self) -> &MomentTable {
        &self.moments
    }

    /// `omega(r)`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        check_unit(r)?;
        Ok(self.density(At::t(r)))
    }

    pub fn density(&self, at: At) -> f64 {
        match &self.family {
            WeightFamily::Tabulated(g) => g.eval(at.t).re,
            _ => self.ln_density(at).exp(),
        }
    }

    /// `ln omega` (minus infinity where the weight vanishes).
    pub fn ln_density(&self, at: At) -> f64 {
        let u = at.u;
        let pow_ln = |e: f64, x: f64| if e == 0.0 { 0.0 } else { e * x.ln() };
        match self.family {
            WeightFamily::Constant(c) => c.ln(),
            WeightFamily::Standard(a) => (a + 1.0).ln() + pow_ln(a, u) + pow_ln(a, 2.0 - u),
            WeightFamily::PowerOneMinus(g) => pow_ln(g, u),
            WeightFamily::Logarithmic(a, b) => pow_ln(a, u) + pow_ln(b, 1.0 - u.ln()),
            WeightFamily::ExponentialDecay(c, k) => -c * u.powf(-k),
            WeightFamily::Tabulated(ref g) => g.eval(at.t).re.ln(),
        }
    }

    /// `omega_hat(r) = int_r^1 omega`.
    pub fn tail(&self, r: f64) -> Result<f64> {
        check_unit(r)?;
        Ok(self.ln_tail_checked(At::t(r))?.exp())
    }

    pub fn ln_tail_checked(&self, at: At) -> Result<f64> {
        let v = self.ln_tail(at);
        if v.is_nan() {
            return Err(Error::Quadrature {
                lo: at.t,
                hi: 1.0,
                reason: "tail integral failed".into(),
                estimate: f64::NAN,
                error: f64::NAN,
            });
        }
        Ok(v)
    }

    /// Deepest level `k` (point `1 - 2^-k`) at which differences of `ln`
    /// tails and densities keep absolute accuracy near `1e-10`. Only
    /// `ExponentialDecay` limits it: there `ln omega ~ -c u^-k` and its
    /// rounding error grows with the magnitude.
    pub fn resolvable_depth(&self) -> usize {
        match self.family {
            WeightFamily::ExponentialDecay(c, k) => ((1e6 / c).log2() / k).floor().max(8.0) as usize,
            _ => usize::MAX,
        }
    }

    /// `ln omega_hat` at a point, using closed forms or a cached interpolant.
    /// NaN signals a failed quadrature.
    pub fn ln_tail(&self, at: At) -> f64 {
        if let Some(v) = self.ln_tail_closed(at) {
            return v;
        }
        if at.u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let panel = if at.t < 0.5 { 0 } else { (-at.u.log2()).floor().max(1.0) as i32 };
        if panel >= MAX_TAIL_PANEL {
            return self.ln_tail_direct(at).unwrap_or(f64::NAN);
        }
        let cheb = self.tail_panel(panel);
        if panel == 0 {
            cheb.eval(at.t)
        } else {
            cheb.eval(at.u.ln())
        }
    }

    fn tail_panel(&self, panel: i32) -> Arc<Chebyshev> {
        if let Some(c) = self.caches.tail_panels.read().get(&panel) {
            return c.clone();
        }
        let cheb = if panel == 0 {
            Chebyshev::build(0.0, 0.5, TAIL_CHEB_DEGREE, |t| self.ln_tail_direct(At::t(t)).unwrap_or(f64::NAN))
        } else {
            let hi = (-(panel as f64)).exp2();
            Chebyshev::build((0.5 * hi).ln(), hi.ln(), TAIL_CHEB_DEGREE, |y| {
                self.ln_tail_direct(At::u(y.exp())).unwrap_or(f64::NAN)
            })
        };
        let cheb = Arc::new(cheb);
        self.caches.tail_panels.write().insert(panel, cheb.clone());
        cheb
    }

    fn ln_tail_closed(&self, at: At) -> Option<f64> {
        let u = at.u;
        match self.family {
            WeightFamily::Constant(c) => Some(c.ln() + u.ln()),
            WeightFamily::PowerOneMinus(g) => Some((g + 1.0) * u.ln() - (g + 1.0).ln()),
            WeightFamily::Standard(a) => Some((a + 1.0) * u.ln() + a * std::f64::consts::LN_2 + hyp2f1(-a, a + 1.0, a + 2.0, 0.5 * u).ln()),
            WeightFamily::Logarithmic(-1.0, b) => Some((b + 1.0) * (1.0 - u.ln()).ln() - (-(b + 1.0)).ln()),
            WeightFamily::Logarithmic(a, 0.0) => Some((a + 1.0) * u.ln() - (a + 1.0).ln()),
            WeightFamily::Tabulated(ref g) => Some(self.tabulated_tail(g.nodes(), at).ln()),
            _ => None,
        }
    }

    /// `ln omega_hat` by adaptive quadrature, bypassing closed forms and caches.
    pub fn ln_tail_direct(&self, at: At) -> Result<f64> {
        match &self.family {
            WeightFamily::Tabulated(g) => {
                let mut breaks: Vec<At> = g.nodes().iter().filter(|&&n| n > at.t).map(|&n| At::t(n)).collect();
                breaks.insert(0, at);
                let mut total = f64::NEG_INFINITY;
                for w in breaks.windows(2) {
                    total = crate::quad::log_add(total, log_integrate(|p| self.ln_density(p), w[0], w[1], &self.quad_opts())?);
                }
                let last = *breaks.last().unwrap();
                Ok(crate::quad::log_add(total, log_integrate_to_one(|p| self.ln_density(p), last, &self.quad_opts())?))
            }
            WeightFamily::ExponentialDecay(c, k) => {
                // y = c v^-k - c u^-k turns the tail into
                // e^{-Y} c^{1/k} / k * int_0^1 (Y - ln s)^{-1/k-1} ds with Y = c u^-k
                let y0 = c * at.u.powf(-k);
                let e = -(1.0 / k + 1.0);
                let ln_i = log_integrate_toward_zero(|s| e * (y0 - s.ln()).ln(), 1.0, &self.quad_opts())?;
                Ok(-y0 + c.ln() / k - k.ln() + ln_i)
            }
            _ => log_integrate_to_one(|p| self.ln_density(p), at, &self.quad_opts()),
        }
    }

    fn tabulated_tail(&self, nodes: &[f64], at: At) -> f64 {
        let WeightFamily::Tabulated(g) = &self.family else { unreachable!() };
        let last = nodes.len() - 1;
        let vlast = g.values()[last].re;
        let t = at.t;
        if t >= nodes[last] {
            return vlast * at.u;
        }
        if t < nodes[0] {
            return self.tab_tails[0];
        }
        let i = nodes.partition_point(|&x| x <= t) - 1;
        let vt = g.eval(t).re;
        0.5 * (vt + g.values()[i + 1].re) * (nodes[i + 1] - t) + self.tab_tails[i + 1]
    }

    /// `ln omega_x`.
    pub fn ln_moment(&self, x: f64) -> Result<f64> {
        self.moments.ln_moment(self, x)
    }

    /// `omega_x = int_0^1 r^x omega(r) dr`.
    pub fn moment(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::domain(format!("moment order must be >= 0, got {x}")));
        }
        Ok(self.ln_moment(x)?.exp())
    }

    /// Cached interpolant for `(tag, panel)`, built by `build` on first use.
    pub(crate) fn derived_panel(&self, tag: u32, panel: i32, build: impl FnOnce() -> Result<Chebyshev>) -> Result<Arc<Chebyshev>> {
        if let Some(c) = self.caches.derived.read().get(&(tag, panel)) {
            return Ok(c.clone());
        }
        let c = Arc::new(build()?);
        self.caches.derived.write().insert((tag, panel), c.clone());
        Ok(c)
    }

    /// True when `tail` is an exact formula rather than a quadrature.
    pub fn has_exact_tail(&self) -> bool {
        self.ln_tail_closed(At::t(0.5)).is_some()
    }
}

fn check_unit(r: f64) -> Result<()> {
    if (0.0..1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::domain(format!("r must lie in [0, 1), got {r}")))
    }
}

/// `int_{node_i}^1 omega` for the piecewise-linear interpolant.
fn tabulated_tails(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut tails = vec![0.0; n];
    tails[n - 1] = values[n - 1] * (1.0 - nodes[n - 1]);
    for i in (0..n - 1).rev() {
        tails[i] = tails[i + 1] + 0.5 * (values[i] + values[i + 1]) * (nodes[i + 1] - nodes[i]);
    }
    tails
}

/// Gauss hypergeometric series for `|x| <= 1/2`.
pub(crate) fn hyp2f1(a: f64, b: f64, c: f64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..400 {
        let n = n as f64;
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * x;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// The six weights used throughout the verification matrices.
pub fn builtin_family() -> Vec<RadialWeight> {
    vec![
        RadialWeight::constant(1.0),
        RadialWeight::standard(-0.5),
        RadialWeight::standard(0.0),
        RadialWeight::standard(1.0),
        RadialWeight::logarithmic(0.0, 1.0),
        RadialWeight::exponential(1.0, 1.0),
    ]
}

#[cfg(test)]
mod tests;
