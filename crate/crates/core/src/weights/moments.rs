//! Cached moments `omega_x` in logarithmic form.

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::RwLock;
use rayon::prelude::*;

use super::{ln_t, RadialWeight, WeightFamily};
use crate::error::{Error, Result};
use crate::quad::{log_add, log_integrate, log_integrate_to_one, At, Chebyshev};

/// Orders at or above this use a per-octave interpolant when bulk values are needed.
pub const INTERPOLATION_START: f64 = 2048.0;
const BLOCK_DEGREE: usize = 16;
const MAX_ORDER: f64 = 1e300;

/// `ln omega_x` for one weight, filled lazily and shared between threads.
pub struct MomentTable {
    tol: f64,
    direct: RwLock<HashMap<u64, f64>>,
    blocks: RwLock<HashMap<i32, Arc<Chebyshev>>>,
    odd: RwLock<Arc<Vec<f64>>>,
}

impl MomentTable {
    pub fn new(tol: f64) -> Self {
        MomentTable {
            tol,
            direct: RwLock::new(HashMap::new()),
            blocks: RwLock::new(HashMap::new()),
            odd: RwLock::new(Arc::new(Vec::new())),
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Number of orders computed by direct quadrature so far.
    pub fn len(&self) -> usize {
        self.direct.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ln_moment(&self, w: &RadialWeight, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::domain(format!("moment order must be >= 0, got {x}")));
        }
        if !(x <= MAX_ORDER) {
            return Err(Error::Resolution(x));
        }
        if let WeightFamily::Constant(c) = w.family() {
            return Ok(c.ln() - x.ln_1p());
        }
        if let Some(v) = self.direct.read().get(&x.to_bits()) {
            return Ok(*v);
        }
        let v = ln_moment_direct(w, x)?;
        self.direct.write().insert(x.to_bits(), v);
        Ok(v)
    }

    /// `ln omega_x`, interpolated in `ln x` within each octave for large orders.
    pub fn ln_moment_smooth(&self, w: &RadialWeight, x: f64) -> Result<f64> {
        if x < INTERPOLATION_START || matches!(w.family(), WeightFamily::Constant(_)) {
            return self.ln_moment(w, x);
        }
        if !(x <= MAX_ORDER) {
            return Err(Error::Resolution(x));
        }
        let m = x.log2().floor() as i32;
        let cheb = self.block(w, m)?;
        Ok(cheb.eval(x.ln()))
    }

    fn block(&self, w: &RadialWeight, m: i32) -> Result<Arc<Chebyshev>> {
        if let Some(c) = self.blocks.read().get(&m) {
            return Ok(c.clone());
        }
        let (a, b) = (m as f64 * std::f64::consts::LN_2, (m + 1) as f64 * std::f64::consts::LN_2);
        let values = Chebyshev::nodes(a, b, BLOCK_DEGREE)
            .into_iter()
            .map(|y| ln_moment_direct(w, y.exp()))
            .collect::<Result<Vec<f64>>>()?;
        let c = Arc::new(Chebyshev::from_values(a, b, &values));
        self.blocks.write().insert(m, c.clone());
        Ok(c)
    }

    /// `ln omega_{2n+1}` for `n = 0..count`.
    pub fn odd_ln_moments(&self, w: &RadialWeight, count: usize) -> Result<Arc<Vec<f64>>> {
        {
            let cur = self.odd.read();
            if cur.len() >= count {
                return Ok(cur.clone());
            }
        }
        let have = self.odd.read().len();
        let target = count.max(2 * have);
        let fresh = (have..target)
            .into_par_iter()
            .map(|n| self.ln_moment_smooth(w, (2 * n + 1) as f64))
            .collect::<Result<Vec<f64>>>()?;
        let mut guard = self.odd.write();
        if guard.len() == have {
            let mut v = (**guard).clone();
            v.extend(fresh);
            *guard = Arc::new(v);
        }
        Ok(guard.clone())
    }
}

/// `ln int_0^1 t^x omega(t) dt` by graded quadrature.
pub fn ln_moment_direct(w: &RadialWeight, x: f64) -> Result<f64> {
    let opts = w.quad_opts();
    let lnf = |at: At| {
        let d = w.ln_density(at);
        if x == 0.0 {
            d
        } else {
            d + x * ln_t(at)
        }
    };
    match w.family() {
        WeightFamily::Tabulated(g) => {
            let mut pts: Vec<At> = g.nodes().iter().map(|&n| At::t(n)).collect();
            if pts[0].t > 0.0 {
                pts.insert(0, At::ZERO);
            }
            let mut total = f64::NEG_INFINITY;
            for p in pts.windows(2) {
                total = log_add(total, log_integrate(lnf, p[0], p[1], &opts)?);
            }
            Ok(log_add(total, log_integrate_to_one(lnf, *pts.last().unwrap(), &opts)?))
        }
        _ => log_integrate_to_one(lnf, At::ZERO, &opts),
    }
}
