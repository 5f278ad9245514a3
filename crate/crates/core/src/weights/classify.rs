//! Membership scans for the doubling classes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RadialWeight;
use crate::error::{Error, Result};
use crate::protocol::{trend_ln, Schedule, Trend};
use crate::quad::At;
use crate::report::{ClassVerdict, RatioReport, RatioSample};

pub const DEFAULT_K_CANDIDATES: [f64; 3] = [2.0, 4.0, 8.0];
/// A lower-doubling infimum must exceed this to count as bounded away from 1.
const LOWER_MARGIN: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassKind {
    Dhat,
    Dcheck,
    M,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class_tested: ClassKind,
    /// Which characterization was scanned.
    pub method: String,
    pub weight: String,
    pub verdict: ClassVerdict,
    /// Grid point (`r` or `x`) where the extreme ratio occurred.
    pub witness_point: f64,
    pub witness_ratio: f64,
    /// `(grid level, running extreme)` per refinement level.
    pub refinement_trace: Vec<(usize, f64)>,
    /// `(grid point, ratio)` for every scanned point.
    pub samples: Vec<(f64, f64)>,
    /// The `K` achieving a lower-doubling verdict.
    pub constant_k: Option<f64>,
    /// Estimated smallest exponent in `omega_hat(r) <= C ((1-r)/(1-s))^beta omega_hat(s)`.
    pub beta0_estimate: Option<f64>,
}

fn finite_or_err(v: f64, what: &str) -> Result<f64> {
    if v.is_nan() {
        Err(Error::Quadrature {
            lo: 0.0,
            hi: 1.0,
            reason: format!("{what} could not be evaluated"),
            estimate: f64::NAN,
            error: f64::NAN,
        })
    } else {
        Ok(v)
    }
}

struct Scan {
    points: Vec<f64>,
    ln_ratios: Vec<f64>,
}

impl Scan {
    fn extreme(&self, schedule: &Schedule, upper: bool) -> (Vec<f64>, usize) {
        let stats = if upper {
            schedule.running_max_ln(&self.ln_ratios)
        } else {
            schedule.running_min_ln(&self.ln_ratios)
        };
        let idx = (0..self.ln_ratios.len())
            .max_by(|&a, &b| {
                let (x, y) = (self.ln_ratios[a], self.ln_ratios[b]);
                if upper { x.total_cmp(&y) } else { y.total_cmp(&x) }
            })
            .unwrap_or(0);
        (stats, idx)
    }

    fn samples(&self) -> Vec<(f64, f64)> {
        self.points.iter().zip(&self.ln_ratios).map(|(&p, &l)| (p, l.exp())).collect()
    }
}

fn trace(schedule: &Schedule, stats: &[f64]) -> Vec<(usize, f64)> {
    schedule.levels().into_iter().zip(stats).map(|(l, s)| (l, s.exp())).collect()
}

/// Scan `omega_hat(r) / omega_hat((1+r)/2)` on `r_k = 1 - 2^-k`.
pub fn classify_dhat(w: &RadialWeight, schedule: Schedule) -> Result<ClassReport> {
    let ln_ratios = (0..=schedule.depth)
        .into_par_iter()
        .map(|k| {
            let at = At::level(k as f64);
            finite_or_err(w.ln_tail(at) - w.ln_tail(at.midpoint_to_one()), "tail ratio")
        })
        .collect::<Result<Vec<f64>>>()?;
    let scan = Scan {
        points: (0..=schedule.depth).map(|k| 1.0 - (-(k as f64)).exp2()).collect(),
        ln_ratios,
    };
    let (stats, idx) = scan.extreme(&schedule, true);
    let verdict = ClassVerdict::from(trend_ln(&stats));
    let sup = scan.ln_ratios[idx].exp();
    Ok(ClassReport {
        class_tested: ClassKind::Dhat,
        method: "tail doubling ratio".into(),
        weight: w.id(),
        verdict,
        witness_point: scan.points[idx],
        witness_ratio: sup,
        refinement_trace: trace(&schedule, &stats),
        samples: scan.samples(),
        constant_k: None,
        beta0_estimate: (verdict == ClassVerdict::Member).then(|| sup.log2()),
    })
}

/// Scan `omega_n / omega_2n` for `n = 1, 2, 4, ..., 2^log2_n_max`.
pub fn classify_dhat_moments(w: &RadialWeight, log2_n_max: usize) -> Result<ClassReport> {
    if log2_n_max < 4 {
        return Err(Error::domain("the moment scan needs n_max >= 16"));
    }
    let schedule = Schedule::new(log2_n_max);
    let points: Vec<f64> = (0..=schedule.depth).map(|j| (j as f64).exp2()).collect();
    let ln_ratios = points
        .par_iter()
        .map(|&n| Ok(w.ln_moment(n)? - w.ln_moment(2.0 * n)?))
        .collect::<Result<Vec<f64>>>()?;
    let scan = Scan { points, ln_ratios };
    let (stats, idx) = scan.extreme(&schedule, true);
    Ok(ClassReport {
        class_tested: ClassKind::Dhat,
        method: "moment doubling ratio".into(),
        weight: w.id(),
        verdict: ClassVerdict::from(trend_ln(&stats)),
        witness_point: scan.points[idx],
        witness_ratio: scan.ln_ratios[idx].exp(),
        refinement_trace: trace(&schedule, &stats),
        samples: scan.samples(),
        constant_k: None,
        beta0_estimate: None,
    })
}

/// Band of `omega_x / omega_hat(1 - 1/x)` over `x = 2^(i/4)`, `0 <= i <= 4 * depth`.
pub fn check_moment_tail_equiv(w: &RadialWeight, schedule: Schedule) -> Result<RatioReport> {
    let n = 4 * schedule.depth;
    let samples = (0..=n)
        .into_par_iter()
        .map(|i| {
            let x = (i as f64 / 4.0).exp2();
            let lhs = w.ln_moment(x)?;
            let rhs = finite_or_err(w.ln_tail(At::u(1.0 / x)), "tail")?;
            Ok(RatioSample::from_ln(vec![x], lhs, rhs, i.div_ceil(4)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioReport::from_samples(
        "moment",
        "tail(1-1/x)",
        format!("x = 2^(i/4), i = 0..={n}"),
        samples,
        &schedule.levels(),
        Vec::new(),
    ))
}

fn lower_doubling(
    w: &RadialWeight,
    schedule: Schedule,
    ks: &[f64],
    kind: ClassKind,
    ratio: impl Fn(usize, f64) -> Result<(f64, f64)> + Sync,
) -> Result<ClassReport> {
    if ks.is_empty() || ks.iter().any(|&k| !(k > 1.0)) {
        return Err(Error::domain("candidate constants K must all exceed 1"));
    }
    let mut best: Option<(f64, Scan, Vec<f64>, usize, Trend)> = None;
    let mut fallback: Option<(f64, Scan, Vec<f64>, usize, Trend)> = None;
    for &k in ks {
        let pairs = (0..=schedule.depth)
            .into_par_iter()
            .map(|j| ratio(j, k))
            .collect::<Result<Vec<_>>>()?;
        let scan = Scan {
            points: pairs.iter().map(|p| p.0).collect(),
            ln_ratios: pairs.iter().map(|p| p.1).collect(),
        };
        let (stats, idx) = scan.extreme(&schedule, false);
        let tr = trend_ln(&stats.iter().map(|s| -s).collect::<Vec<_>>());
        let inf = *stats.last().unwrap();
        let qualifies = tr == Trend::Stable && inf > LOWER_MARGIN.ln();
        let slot = if qualifies { &mut best } else { &mut fallback };
        if slot.as_ref().is_none_or(|b| inf > *b.2.last().unwrap()) {
            *slot = Some((k, scan, stats, idx, tr));
        }
    }
    let (verdict, chosen) = match (best, fallback) {
        (Some(b), _) => (ClassVerdict::Member, b),
        (None, Some(f)) => (ClassVerdict::Inconclusive, f),
        (None, None) => unreachable!(),
    };
    let (k, scan, stats, idx, _) = chosen;
    Ok(ClassReport {
        class_tested: kind,
        method: match kind {
            ClassKind::Dcheck => "tail lower doubling ratio".into(),
            _ => "moment lower doubling ratio".into(),
        },
        weight: w.id(),
        verdict,
        witness_point: scan.points[idx],
        witness_ratio: scan.ln_ratios[idx].exp(),
        refinement_trace: trace(&schedule, &stats),
        samples: scan.samples(),
        constant_k: Some(k),
        beta0_estimate: None,
    })
}

/// Scan `omega_hat(r) / omega_hat(1 - (1-r)/K)` for each candidate `K`.
pub fn classify_dcheck(w: &RadialWeight, schedule: Schedule, ks: &[f64]) -> Result<ClassReport> {
    lower_doubling(w, schedule, ks, ClassKind::Dcheck, |j, k| {
        let at = At::level(j as f64);
        let v = finite_or_err(w.ln_tail(at) - w.ln_tail(at.shrink_toward_one(k)), "tail ratio")?;
        Ok((at.t, v))
    })
}

/// Scan `omega_x / omega_Kx` on `x = 2^j` for each candidate `K`.
pub fn classify_m(w: &RadialWeight, schedule: Schedule, ks: &[f64]) -> Result<ClassReport> {
    lower_doubling(w, schedule, ks, ClassKind::M, |j, k| {
        let x = (j as f64).exp2();
        Ok((x, w.ln_moment(x)? - w.ln_moment(k * x)?))
    })
}

/// Membership in `D = D^ ∩ D-check`.
pub fn classify_d(w: &RadialWeight, schedule: Schedule) -> Result<ClassVerdict> {
    let upper = classify_dhat(w, schedule)?.verdict;
    let lower = classify_dcheck(w, schedule, &DEFAULT_K_CANDIDATES)?.verdict;
    Ok(match (upper, lower) {
        (ClassVerdict::Member, ClassVerdict::Member) => ClassVerdict::Member,
        (ClassVerdict::NonMember, _) | (_, ClassVerdict::NonMember) => ClassVerdict::NonMember,
        _ => ClassVerdict::Inconclusive,
    })
}
