//! Boundedness criteria for `H_w` as supremum scans over `r_k = 1 - 2^-k`.
//!
//! Every scan splits `[0, 1)` into the dyadic panels `[r_k, r_{k+1})` once,
//! integrates each panel in log space, and forms the inner integrals
//! `int_0^{r_k}` and `int_{r_k}^1` as prefix and suffix sums.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{log_log_slope, trend_ln, Schedule};
use crate::quad::{log_add, log_integrate, log_integrate_to_one, log_sum, At, QuadOptions};
use crate::report::{ClassVerdict, ConditionVerdict};
use crate::weights::{classify_d, classify_dhat, RadialWeight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionId {
    LpHp,
    BergmanPrimary,
    BergmanSecondary,
    H1Average,
    CarlesonBox,
    Ap,
}

impl std::fmt::Display for ConditionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ConditionId::LpHp => "lp_hp",
            ConditionId::BergmanPrimary => "bergman_primary",
            ConditionId::BergmanSecondary => "bergman_secondary",
            ConditionId::H1Average => "h1_average",
            ConditionId::CarlesonBox => "carleson_box",
            ConditionId::Ap => "ap",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionParams {
    pub weight: String,
    pub nu: Option<String>,
    pub p: Option<f64>,
    /// Deepest level scanned.
    pub depth: usize,
}

/// One grid point of a scan: `r = 1 - 2^-level` and the scanned quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub level: usize,
    pub r: f64,
    pub one_minus_r: f64,
    pub value: f64,
    pub ln_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition_id: ConditionId,
    pub params: ConditionParams,
    pub verdict: ConditionVerdict,
    pub sup_trace: Vec<TracePoint>,
    /// Power-law exponent of the trace growth in `1/(1-r)`.
    pub slope_estimate: f64,
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn sup(&self) -> f64 {
        self.sup_trace.iter().map(|t| t.value).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

fn check_p(p: f64) -> Result<f64> {
    if p > 1.0 && p.is_finite() {
        Ok(p / (p - 1.0))
    } else {
        Err(Error::domain(format!("p must lie in (1, inf), got {p}")))
    }
}

/// The scan depth: the requested one, limited where a weight's logarithms
/// lose absolute accuracy.
fn scan_depth(schedule: Schedule, weights: &[&RadialWeight]) -> usize {
    weights
        .iter()
        .map(|w| w.resolvable_depth())
        .fold(schedule.depth, usize::min)
        .max(8)
}

fn level_point(k: usize) -> At {
    At::level(k as f64)
}

/// `ln int` over each panel `[r_k, r_{k+1})`, `k = 0..depth`.
fn panel_logs(lnf: &(impl Fn(At) -> f64 + Sync), depth: usize, opts: &QuadOptions) -> Result<Vec<f64>> {
    (0..depth)
        .into_par_iter()
        .map(|k| log_integrate(lnf, level_point(k), level_point(k + 1), opts))
        .collect()
}

/// `ln int_0^{r_k}` for `k = 0..=depth`.
fn prefix_logs(panels: &[f64]) -> Vec<f64> {
    let mut acc = f64::NEG_INFINITY;
    let mut out = vec![acc];
    for &p in panels {
        acc = log_add(acc, p);
        out.push(acc);
    }
    out
}

/// `ln int_{r_k}^1` for `k = 0..=depth`, or `None` when the integral up to 1
/// diverges.
fn suffix_logs(lnf: &(impl Fn(At) -> f64 + Sync), depth: usize, opts: &QuadOptions) -> Result<Option<Vec<f64>>> {
    let panels = panel_logs(lnf, depth, opts)?;
    let rest = match log_integrate_to_one(lnf, level_point(depth), opts) {
        Ok(v) => v,
        Err(Error::Divergent(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if rest == f64::INFINITY {
        return Ok(None);
    }
    let mut out = vec![rest; depth + 1];
    for k in (0..depth).rev() {
        out[k] = log_add(out[k + 1], panels[k]);
    }
    Ok(Some(out))
}

/// Build a report from `ln` values at levels `0..=depth` (entries may be
/// `-inf` where the quantity vanishes).
fn report_from_trace(id: ConditionId, params: ConditionParams, ln_values: Vec<f64>, notes: Vec<String>) -> ConditionReport {
    let depth = ln_values.len() - 1;
    let sup_trace: Vec<TracePoint> = ln_values
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let at = level_point(k);
            TracePoint {
                level: k,
                r: at.t,
                one_minus_r: at.u,
                value: l.exp(),
                ln_value: l,
            }
        })
        .collect();
    let verdict = if ln_values.iter().any(|v| v.is_nan()) {
        ConditionVerdict::Inconclusive
    } else if ln_values.contains(&f64::INFINITY) {
        ConditionVerdict::Diverging
    } else {
        let schedule = Schedule::new(depth);
        ConditionVerdict::from(trend_ln(&schedule.running_max_ln(&ln_values)))
    };
    let slope_points: Vec<(f64, f64)> = sup_trace
        .iter()
        .filter(|t| t.ln_value.is_finite())
        .map(|t| (t.one_minus_r, t.ln_value))
        .collect();
    ConditionReport {
        condition_id: id,
        params,
        verdict,
        slope_estimate: log_log_slope(&slope_points),
        sup_trace,
        notes,
    }
}

/// Report for a scan whose outer integral to 1 diverges outright.
fn divergent_report(id: ConditionId, params: ConditionParams, what: &str) -> ConditionReport {
    ConditionReport {
        condition_id: id,
        params,
        verdict: ConditionVerdict::Diverging,
        sup_trace: Vec::new(),
        slope_estimate: f64::INFINITY,
        notes: vec![format!("{what} diverges")],
    }
}

fn params(w: &RadialWeight, nu: Option<&RadialWeight>, p: Option<f64>, depth: usize) -> ConditionParams {
    ConditionParams {
        weight: w.id(),
        nu: nu.map(|n| n.id()),
        p,
        depth,
    }
}

/// `sup_r (1 + int_0^r dt / w_hat(t)^p)^{1/p} (int_r^1 w^{p'})^{1/p'}`.
pub fn check_lp_hp(w: &RadialWeight, p: f64, schedule: Schedule) -> Result<ConditionReport> {
    let pp = check_p(p)?;
    let depth = scan_depth(schedule, &[w]);
    let params = params(w, None, Some(p), depth);
    let opts = w.quad_opts();
    let Some(tail) = suffix_logs(&|at: At| pp * w.ln_density(at), depth, &opts)? else {
        return Ok(divergent_report(ConditionId::LpHp, params, "int_0^1 w^{p'}"));
    };
    let head = prefix_logs(&panel_logs(&|at: At| -p * w.ln_tail(at), depth, &opts)?);
    let ln_values = (0..=depth).map(|k| log_add(0.0, head[k]) / p + tail[k] / pp).collect();
    Ok(report_from_trace(ConditionId::LpHp, params, ln_values, Vec::new()))
}

/// `ln (w(t) / nu_hat(t)^{1/p})^{p'}`.
fn ln_ratio_power(w: &RadialWeight, nu: &RadialWeight, p: f64, pp: f64, at: At) -> f64 {
    pp * (w.ln_density(at) - nu.ln_tail(at) / p)
}

/// `sup_r (1 + int_0^r nu_hat / w_hat^p)^{1/p} (int_r^1 (w / nu_hat^{1/p})^{p'})^{1/p'}`.
pub fn check_bergman_primary(w: &RadialWeight, nu: &RadialWeight, p: f64, schedule: Schedule) -> Result<ConditionReport> {
    let pp = check_p(p)?;
    let depth = scan_depth(schedule, &[w, nu]);
    let params = params(w, Some(nu), Some(p), depth);
    let opts = w.quad_opts();
    let Some(tail) = suffix_logs(&|at: At| ln_ratio_power(w, nu, p, pp, at), depth, &opts)? else {
        return Ok(divergent_report(ConditionId::BergmanPrimary, params, "int_0^1 (w / nu_hat^{1/p})^{p'}"));
    };
    let head = prefix_logs(&panel_logs(&|at: At| nu.ln_tail(at) - p * w.ln_tail(at), depth, &opts)?);
    let ln_values = (0..=depth).map(|k| log_add(0.0, head[k]) / p + tail[k] / pp).collect();
    Ok(report_from_trace(ConditionId::BergmanPrimary, params, ln_values, Vec::new()))
}

/// `sup_r ((1-r) nu_hat(r))^{1/p} (int_0^r (w / nu_hat^{1/p})^{p'} w_hat^{-p'})^{1/p'}`.
pub fn check_bergman_secondary(w: &RadialWeight, nu: &RadialWeight, p: f64, schedule: Schedule) -> Result<ConditionReport> {
    let pp = check_p(p)?;
    let depth = scan_depth(schedule, &[w, nu]);
    let params = params(w, Some(nu), Some(p), depth);
    let opts = w.quad_opts();
    let lnf = |at: At| ln_ratio_power(w, nu, p, pp, at) - pp * w.ln_tail(at);
    let head = prefix_logs(&panel_logs(&lnf, depth, &opts)?);
    let ln_values = (0..=depth)
        .map(|k| {
            let at = level_point(k);
            (at.u.ln() + nu.ln_tail(at)) / p + head[k] / pp
        })
        .collect();
    Ok(report_from_trace(ConditionId::BergmanSecondary, params, ln_values, Vec::new()))
}

/// `sup_r nu_hat_hat(r)^{1/p} (int_r^1 (w / nu_hat^{1/p})^{p'})^{1/p'} / w_hat(r)`
/// where `nu_hat_hat(r) = int_r^1 nu_hat` is the tail of the weight `nu_hat`.
pub fn check_ap(w: &RadialWeight, nu: &RadialWeight, p: f64, schedule: Schedule) -> Result<ConditionReport> {
    let pp = check_p(p)?;
    let depth = scan_depth(schedule, &[w, nu]);
    let params = params(w, Some(nu), Some(p), depth);
    let opts = w.quad_opts();
    let mut notes = Vec::new();
    if classify_d(w, Schedule::new(depth))? != ClassVerdict::Member {
        notes.push(format!("{} is not classified in D", w.id()));
    }
    if classify_dhat(nu, Schedule::new(depth))?.verdict != ClassVerdict::Member {
        notes.push(format!("{} is not classified in D-hat", nu.id()));
    }
    let Some(tail) = suffix_logs(&|at: At| ln_ratio_power(w, nu, p, pp, at), depth, &opts)? else {
        let mut r = divergent_report(ConditionId::Ap, params, "int_0^1 (w / nu_hat^{1/p})^{p'}");
        r.notes.extend(notes);
        return Ok(r);
    };
    let double_tail = suffix_logs(&|at: At| nu.ln_tail(at), depth, &opts)?
        .ok_or_else(|| Error::Divergent("tail of nu_hat".into()))?;
    let ln_values = (0..=depth)
        .map(|k| double_tail[k] / p + tail[k] / pp - w.ln_tail(level_point(k)))
        .collect();
    Ok(report_from_trace(ConditionId::Ap, params, ln_values, notes))
}

/// Panels past the scan depth used to finish integrals up to 1.
const EXTRA_PANELS: usize = 200;
const MAX_PANEL: usize = 1000;

/// `ln(1 + int_0^{r_j} ds / w_hat(s))` for `j = 0..=last`.
fn ln_tail_reciprocal_table(w: &RadialWeight, last: usize, opts: &QuadOptions) -> Result<Vec<f64>> {
    let panels = panel_logs(&|at: At| -w.ln_tail(at), last, opts)?;
    Ok(prefix_logs(&panels).into_iter().map(|v| log_add(0.0, v)).collect())
}

fn hypothesis_notes(w: &RadialWeight, depth: usize) -> Result<Vec<String>> {
    Ok(if classify_dhat(w, Schedule::new(depth))?.verdict == ClassVerdict::Member {
        Vec::new()
    } else {
        vec![format!("{} is not classified in D-hat; the criterion is only known to apply there", w.id())]
    })
}

/// `sup_a (1/(1-a)) int_a^1 w(t) (1 + int_0^t ds / w_hat(s)) dt`, with the
/// outer integral taken by nested quadrature.
pub fn check_h1_average(w: &RadialWeight, schedule: Schedule) -> Result<ConditionReport> {
    let depth = scan_depth(schedule, &[w]);
    let params = params(w, None, None, depth);
    let opts = w.quad_opts();
    // past the resolvable depth the nested quadrature is all noise
    let resolvable = w.resolvable_depth().max(depth);
    let last = (depth + EXTRA_PANELS).min(MAX_PANEL).min(resolvable);
    let reciprocal = |j: usize| log_integrate(|s: At| -w.ln_tail(s), level_point(j), level_point(j + 1), &opts);
    // ln L at r_j, extended together with the outer panels
    let mut ln_l = prefix_logs(&(0..depth).into_par_iter().map(reciprocal).collect::<Result<Vec<f64>>>()?)
        .into_iter()
        .map(|v| log_add(0.0, v))
        .collect::<Vec<f64>>();
    // the nested integrand carries the interpolation noise of ln w_hat, which
    // is large in absolute terms for fast-decaying weights; a verdict does not
    // need more than ten digits
    let nested = QuadOptions::with_rel_tol(1e-10);
    let outer = |j: usize, ln_lj: f64| {
        let lnf = |at: At| {
            let inner = log_integrate(|s: At| -w.ln_tail(s), level_point(j), at, &nested).unwrap_or(f64::NAN);
            w.ln_density(at) + log_add(ln_lj, inner)
        };
        log_integrate(lnf, level_point(j), level_point(j + 1), &nested)
    };
    let mut panels: Vec<f64> = (0..depth).into_par_iter().map(|j| outer(j, ln_l[j])).collect::<Result<_>>()?;
    // finish int_{r_depth}^1 panel by panel until the contributions die out
    let tol = (1e-14f64).ln();
    let mut converged = false;
    while panels.len() < last && !converged {
        let start = panels.len();
        let end = (start + 8).min(last);
        let q: Vec<f64> = (start..end).into_par_iter().map(reciprocal).collect::<Result<_>>()?;
        for v in q {
            // L(r_{j+1}) = L(r_j) + int over panel j
            ln_l.push(log_add(*ln_l.last().unwrap(), v));
        }
        let chunk: Vec<f64> = (start..end).into_par_iter().map(|j| outer(j, ln_l[j])).collect::<Result<_>>()?;
        panels.extend(chunk);
        // relative to the deepest average reported, not to the whole integral
        let total = log_sum(panels[depth.saturating_sub(1)..].iter().cloned());
        let n = panels.len();
        converged = n >= depth + 3
            && panels[n - 3..].windows(2).all(|p| p[1] < p[0])
            && panels[n - 1] < total + tol;
    }
    let mut notes = hypothesis_notes(w, depth)?;
    if !converged {
        if last < resolvable {
            return Ok(divergent_report(ConditionId::H1Average, params, "int_0^1 w(t) (1 + int_0^t 1/w_hat)"));
        }
        // integrating by parts, int_r^1 w L = w_hat(r) L(r) + (1 - r)
        let n = panels.len();
        let at = level_point(n);
        panels.push(log_add(w.ln_tail(at) + ln_l[n], at.u.ln()));
        notes.push(format!("remainder past level {n} closed by parts"));
    }
    let mut suffix = vec![f64::NEG_INFINITY; panels.len() + 1];
    for j in (0..panels.len()).rev() {
        suffix[j] = log_add(suffix[j + 1], panels[j]);
    }
    let ln_values = (0..=depth).map(|k| suffix[k] - level_point(k).u.ln()).collect();
    Ok(report_from_trace(ConditionId::H1Average, params, ln_values, notes))
}

/// `sup_a mu(S_a) / (1 - a)` for `d mu = w(t) (1 + int_0^t 1/w_hat) dt` on
/// `[0, 1)`, where `S_a` ranges over Carleson boxes of side `1 - a`.
///
/// Only boxes whose base arc contains 1 meet the segment, and then in
/// `[a, 1)`; by Fubini `mu([a, 1)) = w_hat(a) L(a) + (1 - a)` with
/// `L(a) = 1 + int_0^a 1/w_hat`.
pub fn check_carleson_box(w: &RadialWeight, schedule: Schedule) -> Result<ConditionReport> {
    let depth = scan_depth(schedule, &[w]);
    let params = params(w, None, None, depth);
    let opts = w.quad_opts();
    let ln_l = ln_tail_reciprocal_table(w, depth, &opts)?;
    let ln_values = (0..=depth)
        .map(|k| {
            let at = level_point(k);
            log_add(0.0, w.ln_tail(at) + ln_l[k] - at.u.ln())
        })
        .collect();
    let notes = hypothesis_notes(w, depth)?;
    Ok(report_from_trace(ConditionId::CarlesonBox, params, ln_values, notes))
}
