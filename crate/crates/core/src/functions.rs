//! Functions on `[0, 1)` and truncated power series on the disc.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::At;

/// A function on `[0, 1)` that operators can integrate against.
pub trait RadialFunction: Sync {
    fn value(&self, at: At) -> Complex64;

    /// Points where the function may fail to be smooth; quadrature splits there.
    fn breakpoints(&self) -> Vec<At> {
        Vec::new()
    }
}

/// Piecewise-linear interpolant of samples on an increasing grid in `[0, 1)`.
///
/// Zero before the first node, linear between nodes, constant after the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGridFunction {
    nodes: Vec<f64>,
    values: Vec<Complex64>,
}

impl RadialGridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != values.len() {
            return Err(Error::domain("grid function needs equally many nodes and values, at least one"));
        }
        if nodes[0] < 0.0 || *nodes.last().unwrap() >= 1.0 {
            return Err(Error::domain("grid nodes must lie in [0, 1)"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("grid nodes must be strictly increasing"));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::domain("grid values must be finite"));
        }
        Ok(RadialGridFunction { nodes, values })
    }

    pub fn from_real(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(nodes, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    /// Sample `f` on `graded_grid(levels, per_level)`.
    pub fn sample(levels: usize, per_level: usize, f: impl Fn(At) -> Complex64) -> Self {
        let nodes = graded_grid(levels, per_level);
        let values = nodes.iter().map(|&t| f(At::t(t))).collect();
        RadialGridFunction { nodes, values }
    }

    pub fn sample_real(levels: usize, per_level: usize, f: impl Fn(At) -> f64) -> Self {
        Self::sample(levels, per_level, |at| Complex64::new(f(at), 0.0))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let n = &self.nodes;
        if t < n[0] {
            return Complex64::new(0.0, 0.0);
        }
        let i = n.partition_point(|&x| x <= t);
        if i >= n.len() {
            return self.values[n.len() - 1];
        }
        let (a, b) = (n[i - 1], n[i]);
        let s = (t - a) / (b - a);
        self.values[i - 1] * (1.0 - s) + self.values[i] * s
    }

    pub fn abs(&self) -> Self {
        RadialGridFunction {
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect(),
        }
    }

    /// `alpha * self + beta * other`, sampled on the union of both grids.
    pub fn combine(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Self {
        let mut nodes: Vec<f64> = self.nodes.iter().chain(&other.nodes).cloned().collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nodes.dedup();
        let values = nodes.iter().map(|&t| alpha * self.eval(t) + beta * other.eval(t)).collect();
        RadialGridFunction { nodes, values }
    }

    pub fn is_nonnegative_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0 && v.re >= 0.0)
    }
}

impl RadialFunction for RadialGridFunction {
    fn value(&self, at: At) -> Complex64 {
        self.eval(at.t)
    }

    fn breakpoints(&self) -> Vec<At> {
        self.nodes.iter().map(|&t| At::t(t)).collect()
    }
}

/// A closed-form function, evaluated exactly at every quadrature node.
pub struct ClosedForm<F> {
    f: F,
    breaks: Vec<At>,
}

impl<F: Fn(At) -> Complex64 + Sync> ClosedForm<F> {
    pub fn new(f: F) -> Self {
        ClosedForm { f, breaks: Vec::new() }
    }

    pub fn with_breaks(f: F, breaks: Vec<At>) -> Self {
        ClosedForm { f, breaks }
    }
}

impl<F: Fn(At) -> Complex64 + Sync> RadialFunction for ClosedForm<F> {
    fn value(&self, at: At) -> Complex64 {
        (self.f)(at)
    }

    fn breakpoints(&self) -> Vec<At> {
        self.breaks.clone()
    }
}

/// Nodes `0, 1/(2m), ..., 1/2` followed by `per_level` uniform nodes in each
/// dyadic band `[1 - 2^-j, 1 - 2^-j-1]`, `j = 1..levels`.
pub fn graded_grid(levels: usize, per_level: usize) -> Vec<f64> {
    let m = per_level.max(1);
    let mut nodes: Vec<f64> = (0..m).map(|i| 0.5 * i as f64 / m as f64).collect();
    for j in 1..=levels {
        let lo = (-(j as f64)).exp2();
        for i in 0..m {
            nodes.push(1.0 - lo * (1.0 - 0.5 * i as f64 / m as f64));
        }
    }
    nodes.push(1.0 - (-(levels as f64 + 1.0)).exp2());
    nodes.dedup();
    nodes.retain(|&t| t < 1.0);
    nodes
}

/// Taylor coefficients `a_0, ..., a_N` of a function analytic in the disc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorCoeffs {
    pub coeffs: Vec<Complex64>,
}

impl TaylorCoeffs {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::domain("a power series needs at least one coefficient"));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::domain("coefficients must be finite"));
        }
        Ok(TaylorCoeffs { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn derivative(&self) -> TaylorCoeffs {
        if self.coeffs.len() == 1 {
            return TaylorCoeffs { coeffs: vec![Complex64::new(0.0, 0.0)] };
        }
        TaylorCoeffs {
            coeffs: self.coeffs.iter().enumerate().skip(1).map(|(n, c)| c * n as f64).collect(),
        }
    }

    pub fn eval_derivative(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (n, c)| acc * z + c * n as f64)
    }

    /// Coefficients with indices in `[lo, hi)`, others zeroed.
    pub fn block(&self, lo: usize, hi: usize) -> TaylorCoeffs {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| if n >= lo && n < hi { *c } else { Complex64::new(0.0, 0.0) })
            .collect();
        TaylorCoeffs { coeffs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_interpolation_semantics() {
        let f = RadialGridFunction::from_real(vec![0.2, 0.4, 0.8], vec![1.0, 3.0, 5.0]).unwrap();
        assert_eq!(f.eval(0.1).re, 0.0);
        assert!((f.eval(0.3).re - 2.0).abs() < 1e-15);
        assert!((f.eval(0.6).re - 4.0).abs() < 1e-15);
        assert_eq!(f.eval(0.95).re, 5.0);
    }

    #[test]
    fn rejects_unsorted_nodes() {
        assert!(RadialGridFunction::from_real(vec![0.3, 0.2], vec![1.0, 1.0]).is_err());
        assert!(RadialGridFunction::from_real(vec![0.3, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn graded_grid_is_increasing_and_reaches_deep() {
        let g = graded_grid(30, 4);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(1.0 - g.last().unwrap() < 1e-9);
    }

    #[test]
    fn horner_and_derivative() {
        let p = TaylorCoeffs::from_real(&[1.0, 2.0, 3.0]).unwrap();
        let z = Complex64::new(0.5, 0.0);
        assert!((p.eval(z).re - 2.75).abs() < 1e-15);
        assert!((p.eval_derivative(z).re - 5.0).abs() < 1e-15);
        assert_eq!(p.derivative().coeffs, vec![Complex64::new(2.0, 0.0), Complex64::new(6.0, 0.0)]);
    }

    proptest! {
        #[test]
        fn interpolant_stays_within_sample_range(vals in proptest::collection::vec(-5.0f64..5.0, 8), t in 0.0f64..0.999) {
            let nodes: Vec<f64> = (0..8).map(|i| i as f64 / 8.0).collect();
            let f = RadialGridFunction::from_real(nodes, vals.clone()).unwrap();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let v = f.eval(t).re;
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }
}
