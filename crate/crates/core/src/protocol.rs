//! Stabilization protocol shared by every supremum scan.
//!
//! A scan produces one statistic per refinement level (the running supremum,
//! or infimum, of a ratio over a geometric grid `r_k = 1 - 2^-k` truncated at
//! that level). The statistic is *stable* when it moves by less than 1%
//! between the last two levels, and *growing* when each of the last three
//! level transitions increased it by more than 25%.

use serde::{Deserialize, Serialize};

pub const STABLE_REL_CHANGE: f64 = 0.01;
pub const GROWTH_FACTOR: f64 = 1.25;
pub const GROWTH_STEPS: usize = 3;
/// Default depth `K` of geometric grids for tail-based scans.
pub const DEFAULT_DEPTH: usize = 160;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trend {
    Stable,
    Growing,
    Undecided,
}

/// Trend of positive statistics given by their natural logarithms.
pub fn trend_ln(levels: &[f64]) -> Trend {
    let n = levels.len();
    if n > GROWTH_STEPS {
        let lg = GROWTH_FACTOR.ln();
        let growing = levels[n - GROWTH_STEPS - 1..]
            .windows(2)
            .all(|w| w[1] - w[0] > lg || (w[1] == f64::INFINITY && w[0] < f64::INFINITY));
        if growing {
            return Trend::Growing;
        }
    }
    if n >= 2 {
        let (a, b) = (levels[n - 2], levels[n - 1]);
        if a.is_finite() && b.is_finite() && (b - a).exp_m1().abs() < STABLE_REL_CHANGE {
            return Trend::Stable;
        }
    }
    Trend::Undecided
}

pub fn trend(levels: &[f64]) -> Trend {
    let lns: Vec<f64> = levels.iter().map(|v| v.ln()).collect();
    trend_ln(&lns)
}

/// Refinement levels used to judge a scan of depth `depth`: `K/8, K/4, K/2, K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub depth: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { depth: DEFAULT_DEPTH }
    }
}

impl Schedule {
    /// Smallest depth with four distinct levels.
    pub const MIN_DEPTH: usize = 8;

    pub fn new(depth: usize) -> Self {
        Schedule { depth: depth.max(Self::MIN_DEPTH) }
    }

    pub fn levels(&self) -> Vec<usize> {
        let d = self.depth;
        vec![d / 8, d / 4, d / 2, d]
    }

    /// Level statistics of a trace indexed by grid level `k = 0..=depth`,
    /// taking the running maximum of `ln` values.
    pub fn running_max_ln(&self, trace_ln: &[f64]) -> Vec<f64> {
        self.levels()
            .into_iter()
            .map(|l| {
                trace_ln[..=l.min(trace_ln.len() - 1)]
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    pub fn running_min_ln(&self, trace_ln: &[f64]) -> Vec<f64> {
        self.levels()
            .into_iter()
            .map(|l| {
                trace_ln[..=l.min(trace_ln.len() - 1)]
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}

/// Least-squares slope of `ln value` against `ln(1/(1-r))` over the second
/// half of a trace, i.e. the power-law exponent of growth toward `r = 1`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(u, v)| *u > 0.0 && v.is_finite())
        .map(|(u, v)| (-u.ln(), *v))
        .collect();
    let tail = &pts[pts.len() / 2..];
    if tail.len() < 2 {
        return 0.0;
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_needs_sub_percent_change() {
        assert_eq!(trend(&[1.0, 1.5, 2.0, 2.01]), Trend::Stable);
        assert_eq!(trend(&[1.0, 1.5, 2.0, 2.05]), Trend::Undecided);
    }

    #[test]
    fn growing_needs_three_large_steps() {
        assert_eq!(trend(&[1.0, 2.0, 4.0, 8.0]), Trend::Growing);
        assert_eq!(trend(&[1.0, 1.1, 4.0, 8.0]), Trend::Undecided);
        assert_eq!(trend_ln(&[1.0, 10.0, 100.0, f64::INFINITY]), Trend::Growing);
    }

    #[test]
    fn schedule_levels_double() {
        assert_eq!(Schedule::new(160).levels(), vec![20, 40, 80, 160]);
        let s = Schedule::new(8);
        assert_eq!(s.running_max_ln(&[0.0, 3.0, 1.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0]), vec![3.0, 3.0, 3.0, 5.0]);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..30).map(|k| (0.5f64.powi(k), 0.5 * k as f64 * 2f64.ln())).collect();
        assert!((log_log_slope(&pts) - 0.5).abs() < 1e-12);
    }
}
