//! Numerical corroboration of the two-sided kernel estimates (ratio scans)
//! and of the boundedness criteria (growth probes of `H_w` on test families).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::TaylorCoeffs;
use crate::kernels::{ln_k_kernel_real, ln_m1_k_estimate, ln_mq_g_estimate, ln_radial_k_estimate, ln_series_real, KernelKind};
use crate::norms::{hl_norm, integral_mean_pow, integral_mean_pow_tol, max_modulus, DiscFunction};
use crate::operators::kernel_ln_coefficients;
use crate::protocol::{log_log_slope, trend_ln, Schedule};
use crate::quad::{gauss, integrate, integrate_to_one, log_add, log_integrate, log_integrate_to_one, log_sum, At, Chebyshev, QuadOptions};
use crate::report::{ClassVerdict, ProbeVerdict, RatioReport, RatioSample};
use crate::weights::{classify_dhat, RadialWeight};

/// Default depth of the radial kernel grid, evaluated on the real axis.
pub const RATIO_DEPTH: usize = 32;
/// Default depth of the grids that need integral means on circles; points
/// with `1 - r t` below about `2^-15` exceed the series budget.
pub const CIRCLE_RATIO_DEPTH: usize = 18;
/// Default depth of the Bloch probe along the real axis.
pub const BLOCH_PROBE_DEPTH: usize = 128;
/// Default depth of the `H^1` probe.
pub const H1_PROBE_DEPTH: usize = 80;
/// Default depth of the `L^p` probe; the test functions are cut off at
/// level `2k + 1`.
pub const LP_PROBE_DEPTH: usize = 24;
/// Relative truncation of the kernel series used on circles.
const SERIES_REL_TOL: f64 = 1e-11;

/// Growth of `||H_w f|| / ||f||` over a one-parameter test family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub operator: String,
    pub source_norm: String,
    pub target_norm: String,
    pub test_family: String,
    pub weight: String,
    /// `(parameter, norm ratio)`, parameters increasing toward 1.
    pub trace: Vec<(f64, f64)>,
    /// Running supremum at each refinement level.
    pub level_stats: Vec<(usize, f64)>,
    pub verdict: ProbeVerdict,
    pub slope_estimate: f64,
    pub notes: Vec<String>,
}

impl ProbeReport {
    pub fn sup(&self) -> f64 {
        self.trace.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

struct ProbeSpec<'a> {
    operator: &'a str,
    source_norm: &'a str,
    target_norm: &'a str,
    test_family: &'a str,
}

/// Judge `ln ratio` at levels `k = 0..`; the trace is cut at the first level
/// that failed, and the failure is noted.
fn probe_from_levels(spec: ProbeSpec, w: &RadialWeight, levels: Vec<Result<(f64, f64, f64)>>, mut notes: Vec<String>) -> Result<ProbeReport> {
    let mut points = Vec::new();
    for (k, item) in levels.into_iter().enumerate() {
        match item {
            Ok(p) => points.push(p),
            Err(e @ (Error::TruncationBudget { .. } | Error::Quadrature { .. } | Error::Resolution(_))) => {
                notes.push(format!("trace stops before level {k}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    // (parameter, 1 - parameter, ln ratio)
    let ln_values: Vec<f64> = points.iter().map(|p| p.2).collect();
    let (verdict, level_stats) = if points.len() < 9 || ln_values.iter().any(|v| v.is_nan()) {
        (ProbeVerdict::Inconclusive, Vec::new())
    } else {
        let schedule = Schedule::new(points.len() - 1);
        let stats = schedule.running_max_ln(&ln_values);
        let level_stats = schedule.levels().into_iter().zip(&stats).map(|(l, s)| (l, s.exp())).collect();
        (ProbeVerdict::from(trend_ln(&stats)), level_stats)
    };
    let slope_points: Vec<(f64, f64)> = points.iter().filter(|p| p.2.is_finite()).map(|p| (p.1, p.2)).collect();
    Ok(ProbeReport {
        operator: spec.operator.into(),
        source_norm: spec.source_norm.into(),
        target_norm: spec.target_norm.into(),
        test_family: spec.test_family.into(),
        weight: w.id(),
        trace: points.iter().map(|p| (p.0, p.2.exp())).collect(),
        level_stats,
        verdict,
        slope_estimate: log_log_slope(&slope_points),
        notes,
    })
}

fn dhat_warning(w: &RadialWeight, notes: &mut Vec<String>) -> Result<()> {
    let class = classify_dhat(w, Schedule::default())?;
    if class.verdict != ClassVerdict::Member {
        notes.push(format!("weight not classified in D-hat ({:?}); the estimate need not hold", class.verdict));
    }
    Ok(())
}

fn level_point(k: usize) -> At {
    At::level(k as f64)
}

/// Gauss-Legendre nodes and weights on `[lo, hi]`, laid out in `1 - t`.
fn panel_rule(lo: At, hi: At) -> impl Iterator<Item = (At, f64)> {
    let rule = gauss();
    let (mid, half) = (0.5 * (lo.u + hi.u), 0.5 * (lo.u - hi.u));
    rule.nodes.iter().zip(&rule.weights).map(move |(x, wt)| (At::u(mid - half * x), half * wt))
}

/// The grid `t_j = 1 - 2^-j`, `j = 0..=depth`, paired with itself.
fn square_grid(depth: usize) -> Vec<(usize, usize)> {
    (0..=depth).flat_map(|i| (0..=depth).map(move |j| (i, j))).collect()
}

/// Fill a ratio report from per-point results, moving failures into the
/// excluded list.
fn ratio_report(
    lhs_id: &str,
    rhs_id: &str,
    grid: String,
    results: Vec<(Vec<f64>, usize, Result<(f64, f64)>)>,
    schedule: Schedule,
    mut excluded: Vec<String>,
) -> Result<RatioReport> {
    let mut samples = Vec::new();
    for (point, level, r) in results {
        match r {
            Ok((lhs, rhs)) => samples.push(RatioSample::from_ln(point, lhs, rhs, level)),
            Err(e @ (Error::TruncationBudget { .. } | Error::Quadrature { .. } | Error::Resolution(_))) => {
                excluded.push(format!("{point:?}: {e}"))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(RatioReport::from_samples(lhs_id, rhs_id, grid, samples, &schedule.levels(), excluded))
}

/// `K^w_s(t)` against `1 + int_0^{st} dx / (omega_hat(x) (1 - x))` over
/// `s, t` in `1 - 2^-j`, `j <= depth`.
pub fn ratio_scan_radial_kernel(w: &RadialWeight, schedule: Schedule) -> Result<RatioReport> {
    let mut notes = Vec::new();
    dhat_warning(w, &mut notes)?;
    let resolvable = w.resolvable_depth().max(Schedule::MIN_DEPTH);
    let schedule = if schedule.depth > resolvable {
        notes.push(format!("grid cut to depth {resolvable}: deeper levels are beyond the resolution of the weight's moments"));
        Schedule::new(resolvable)
    } else {
        schedule
    };
    let results = square_grid(schedule.depth)
        .into_par_iter()
        .map(|(i, j)| {
            let (s, t) = (level_point(i), level_point(j));
            let r = ln_k_kernel_real(w, s, t).and_then(|l| Ok((l, ln_radial_k_estimate(w, s.product(t))?)));
            (vec![s.t, t.t], i.max(j), r)
        })
        .collect();
    ratio_report("k_kernel", "radial_k_estimate", grid_label(schedule.depth), results, schedule, notes)
}

fn grid_label(depth: usize) -> String {
    format!("s, t in 1 - 2^-j, j = 0..={depth}")
}

/// Series of a kernel kind in `t z` evaluated on circles: `M_q^q(y, S)` for
/// the series `S` with `y = r t`.
fn ln_circle_mean(w: &RadialWeight, kind: KernelKind, q: f64, y: At) -> Result<f64> {
    let ln_c = kernel_ln_coefficients(w, kind, y.t, SERIES_REL_TOL)?;
    if y.t == 0.0 {
        return Ok(q * ln_c[0]);
    }
    // c_n y^n scaled by its largest term, then averaged on the unit circle;
    // the coefficients alone may overflow.
    let ln_y = y.t.ln();
    let scaled: Vec<f64> = ln_c.iter().enumerate().map(|(n, l)| l + n as f64 * ln_y).collect();
    let shift = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let coeffs = TaylorCoeffs::new(scaled.iter().map(|l| Complex64::new((l - shift).exp(), 0.0)).collect())?;
    Ok(integral_mean_pow(&DiscFunction::Series(coeffs), q, At::ONE, 0)?.ln() + q * shift)
}

/// `M_1(rho, K^w_t)` against `1 + int_0^{rho t} ds / omega_hat(s)`, with
/// `rho = 0` included.
pub fn ratio_scan_m1(w: &RadialWeight, schedule: Schedule) -> Result<RatioReport> {
    let mut notes = Vec::new();
    dhat_warning(w, &mut notes)?;
    // level 0 is the point 0
    let means = circle_means_by_pair(schedule.depth, |y| {
        ln_circle_mean(w, KernelKind::Averaged, 1.0, y).and_then(|l| Ok((l, ln_m1_k_estimate(w, y)?)))
    });
    let results = square_grid(schedule.depth)
        .into_iter()
        .map(|(i, j)| (vec![level_point(i).t, level_point(j).t], i.max(j), means[&(i.min(j), i.max(j))].clone()))
        .collect();
    ratio_report("integral_mean(K_t, 1, rho)", "m1_k_estimate", grid_label(schedule.depth), results, schedule, notes)
}

/// Evaluate `f(r t)` once per unordered pair of grid levels; the circle
/// scans depend on `r` and `t` only through their product.
fn circle_means_by_pair<T: Send>(
    depth: usize,
    f: impl Fn(At) -> Result<T> + Sync,
) -> std::collections::HashMap<(usize, usize), Result<T>> {
    let pairs: Vec<(usize, usize)> = square_grid(depth).into_iter().filter(|(i, j)| i <= j).collect();
    pairs
        .into_par_iter()
        .map(|(i, j)| ((i, j), f(level_point(i).product(level_point(j)))))
        .collect()
}

/// The two `M_q^q` bands for the derivative kernel: `G_t` against `t^q B_t`,
/// and `G_t` against the closed estimate, over `r, t` in `1 - 2^-j` with
/// `t = 0` excluded (`G` vanishes there).
pub fn ratio_scan_mq_g(w: &RadialWeight, q: f64, schedule: Schedule) -> Result<(RatioReport, RatioReport)> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::domain(format!("q must be positive, got {q}")));
    }
    let mut notes = Vec::new();
    dhat_warning(w, &mut notes)?;
    notes.push("t = 0 excluded: G vanishes identically".into());
    let means = circle_means_by_pair(schedule.depth, |y| {
        Ok((ln_circle_mean(w, KernelKind::Derivative, q, y)?, ln_circle_mean(w, KernelKind::Bergman, q, y)?))
    });
    let values: Vec<(Vec<f64>, usize, Result<(f64, f64, f64)>)> = square_grid(schedule.depth)
        .into_iter()
        .filter(|&(_, j)| j > 0)
        .map(|(i, j)| {
            let (r, t) = (level_point(i), level_point(j));
            let ln_tq = q * t.t.ln();
            // M_q^q(r, G_t) = t^q M_q^q(r t, S_G) and likewise for B
            let v = means[&(i.min(j), i.max(j))]
                .clone()
                .and_then(|(g, b)| Ok((ln_tq + g, ln_tq + b, ln_mq_g_estimate(w, q, r, t)?)));
            (vec![r.t, t.t], i.max(j), v)
        })
        .collect();
    let split = |pick: fn(&(f64, f64, f64)) -> (f64, f64)| {
        values
            .iter()
            .map(|(p, l, v)| (p.clone(), *l, v.as_ref().map(pick).map_err(Clone::clone)))
            .collect::<Vec<_>>()
    };
    let label = format!("r, t in 1 - 2^-j, j = 0..={}, t > 0", schedule.depth);
    let vs_bergman = ratio_report(
        &format!("M_{q}^{q}(r, G_t)"),
        &format!("t^{q} M_{q}^{q}(r, B_t)"),
        label.clone(),
        split(|v| (v.0, v.1)),
        schedule,
        notes.clone(),
    )?;
    let vs_estimate = ratio_report(
        &format!("M_{q}^{q}(r, G_t)"),
        "mq_g_estimate",
        label,
        split(|v| (v.0, v.2)),
        schedule,
        notes,
    )?;
    Ok((vs_bergman, vs_estimate))
}

fn nan_to_err(v: f64, lo: At, hi: At, what: &str) -> Result<f64> {
    if v.is_nan() {
        Err(Error::Quadrature {
            lo: lo.t,
            hi: hi.t,
            reason: format!("{what} could not be evaluated"),
            estimate: f64::NAN,
            error: f64::NAN,
        })
    } else {
        Ok(v)
    }
}

/// Panels past the probe point over which integrals in `t` are resolved.
const EXTRA_PANELS: usize = 30;

/// `ln((B^w_1 - K^w_1)(y))`, the real-axis series `sum n/(n+1) c^B_n y^n`.
fn ln_bergman_minus_averaged(w: &RadialWeight, y: At) -> f64 {
    let b = ln_series_real(w, KernelKind::Bergman, y);
    let k = ln_series_real(w, KernelKind::Averaged, y);
    match (b, k) {
        (Ok(b), Ok(k)) => b + (-(k - b).exp_m1()).ln(),
        _ => f64::NAN,
    }
}

/// `(1 - x^2) H_w(f)'(x)` at `x = 1 - 2^-k` for `f = 1` and for the sign
/// pattern `(-1)^j` on `[r_j, r_{j+1})`, both in log form (the second as
/// `ln |.|`).
fn bloch_level(w: &RadialWeight, k: usize) -> Result<(f64, f64)> {
    let ln_w3 = w.ln_moment(3.0)?;
    if k == 0 {
        // H_w(f)'(0) = (int f t w) / (4 w_3)
        let a1 = w.ln_moment(1.0)? - 4f64.ln() - ln_w3;
        return Ok((a1, f64::NAN));
    }
    let x = level_point(k);
    let opts = QuadOptions::with_rel_tol(1e-9);
    // H_w(f)'(x) = int f(t) w(t) (B_t(x) - K_t(x)) / x dt
    let lnf = |t: At| w.ln_density(t) + ln_bergman_minus_averaged(w, t.product(x)) - x.t.ln();
    let last = k + EXTRA_PANELS;
    let panels = (0..last)
        .map(|j| {
            let (lo, hi) = (level_point(j), level_point(j + 1));
            nan_to_err(log_integrate(lnf, lo, hi, &opts)?, lo, hi, "Bloch probe panel")
        })
        .collect::<Result<Vec<f64>>>()?;
    let rest = nan_to_err(log_integrate_to_one(lnf, level_point(last), &opts)?, level_point(last), At::ONE, "Bloch probe tail")?;
    let ln_bloch = x.u.ln() + (2.0 - x.u).ln();
    let one = log_sum(panels.iter().cloned().chain([rest]));
    let peak = panels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let signed: f64 = panels.iter().enumerate().map(|(j, l)| if j % 2 == 0 { 1.0 } else { -1.0 } * (l - peak).exp()).sum();
    Ok((ln_bloch + one, ln_bloch + peak + signed.abs().ln()))
}

/// Growth of `(1 - x^2) |H_w(f)'(x)|` along `x_k = 1 - 2^-k`, a lower bound
/// for `||H_w f||_Bloch / ||f||_inf`, with `f = 1` (the extremal datum on the
/// positive axis, where every kernel is positive) and an alternating sign
/// pattern on dyadic bands reported alongside.
pub fn probe_hinfty_bloch(w: &RadialWeight, schedule: Schedule) -> Result<ProbeReport> {
    let depth = schedule.depth.min(w.resolvable_depth()).max(8);
    let raw: Vec<Result<(f64, f64)>> = (0..=depth).into_par_iter().map(|k| bloch_level(w, k)).collect();
    let mut notes = Vec::new();
    let sign_sup = raw.iter().filter_map(|r| r.as_ref().ok()).map(|r| r.1).filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if sign_sup.is_finite() {
        notes.push(format!("sign-pattern datum: sup ratio {:.6e}", sign_sup.exp()));
    }
    let levels = raw
        .into_iter()
        .enumerate()
        .map(|(k, r)| r.map(|(one, _)| (level_point(k).t, level_point(k).u, one)))
        .collect();
    let spec = ProbeSpec {
        operator: "H_w",
        source_norm: "H_inf",
        target_norm: "bloch (real axis)",
        test_family: "f = 1; dyadic sign pattern",
    };
    probe_from_levels(spec, w, levels, notes)
}

/// `ln int_0^t exp(lnf)` on `[0, r_panels)`, tabulated per dyadic panel.
struct CumulativeLog {
    /// Panel 0 holds `ln(int_0^t / t)` in `t`; later panels hold the
    /// logarithm of the integral itself in `ln(1 - t)`.
    panels: Vec<Chebyshev>,
}

const CUMULATIVE_DEGREE: usize = 16;

impl CumulativeLog {
    fn build(lnf: impl Fn(At) -> f64 + Sync, panels: usize, opts: &QuadOptions) -> Result<Self> {
        let pieces = (0..panels)
            .into_par_iter()
            .map(|j| nan_to_err(log_integrate(&lnf, level_point(j), level_point(j + 1), opts)?, level_point(j), level_point(j + 1), "panel"))
            .collect::<Result<Vec<f64>>>()?;
        let mut prefix = vec![f64::NEG_INFINITY];
        for p in &pieces {
            prefix.push(log_add(*prefix.last().unwrap(), *p));
        }
        let tables = (0..panels)
            .into_par_iter()
            .map(|j| {
                let lo = level_point(j);
                let inner = |at: At| log_integrate(&lnf, lo, at, opts).unwrap_or(f64::NAN);
                let cheb = if j == 0 {
                    Chebyshev::build(0.0, 0.5, CUMULATIVE_DEGREE, |t| {
                        if t == 0.0 { lnf(At::ZERO) } else { inner(At::t(t)) - t.ln() }
                    })
                } else {
                    let (a, b) = ((-(j as f64 + 1.0) * std::f64::consts::LN_2), -(j as f64) * std::f64::consts::LN_2);
                    Chebyshev::build(a, b, CUMULATIVE_DEGREE, |s| log_add(prefix[j], inner(At::u(s.exp()))))
                };
                nan_to_err(cheb.eval(if j == 0 { 0.25 } else { -(j as f64 + 0.5) * std::f64::consts::LN_2 }), lo, level_point(j + 1), "cumulative table")?;
                Ok(cheb)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CumulativeLog { panels: tables })
    }

    fn len(&self) -> usize {
        self.panels.len()
    }

    /// Valid for `t` below `r_len`.
    fn eval(&self, at: At) -> f64 {
        if at.t <= 0.5 {
            return self.panels[0].eval(at.t) + at.t.ln();
        }
        let j = ((-at.u.log2()).floor() as usize).clamp(1, self.len() - 1);
        self.panels[j].eval(at.u.ln())
    }
}

/// `ln f_a(t)` with `1 - a` kept exact, for `a` arbitrarily close to 1.
fn ln_fa(a: At, t: At) -> f64 {
    (a.u * (2.0 - a.u)).ln() - 2.0 * (a.u + a.t * t.u).ln()
}

/// `1/pi int_0^1 |H_w(f_a)(x)| dx`, a lower bound for `||H_w f_a||_{H^1}` by
/// the Fejer-Riesz inequality, along `a_k = 1 - 2^-k`; `||f_a||_{H^1} = 1` and
/// `a = 0` is the datum `f = 1`.
///
/// With positive kernels the bound is `1/pi int_0^1 f_a(t) w(t) J(t) dt` where
/// `J(t) = int_0^1 K_t(x) dx = (1/t) int_0^t K_1(y) dy`. Panels past the
/// table are dropped, which keeps the value a lower bound.
pub fn probe_h1(w: &RadialWeight, schedule: Schedule) -> Result<ProbeReport> {
    let mut notes = Vec::new();
    dhat_warning(w, &mut notes)?;
    let depth = schedule.depth.min(w.resolvable_depth()).max(8);
    let opts = QuadOptions::with_rel_tol(1e-10);
    // past the resolvable depth the weight contributes nothing representable
    let table_panels = (depth + 2 * EXTRA_PANELS).min(w.resolvable_depth().saturating_add(1));
    let cumulative = CumulativeLog::build(|y| ln_series_real(w, KernelKind::Averaged, y).unwrap_or(f64::NAN), table_panels, &opts)?;
    let ln_j = |t: At| if t.t == 0.0 { cumulative.panels[0].eval(0.0) } else { cumulative.eval(t) - t.t.ln() };
    let levels = (0..=depth)
        .into_par_iter()
        .map(|k| {
            let a = level_point(k);
            let lnf = |t: At| ln_fa(a, t) + w.ln_density(t) + ln_j(t);
            let panels = (0..(k + 2 * EXTRA_PANELS).min(table_panels))
                .map(|j| nan_to_err(log_integrate(lnf, level_point(j), level_point(j + 1), &opts)?, level_point(j), level_point(j + 1), "H1 probe"))
                .collect::<Result<Vec<f64>>>()?;
            Ok((a.t, a.u, log_sum(panels) - std::f64::consts::PI.ln()))
        })
        .collect();
    let spec = ProbeSpec {
        operator: "H_w",
        source_norm: "H1",
        target_norm: "H1 (Fejer-Riesz lower bound)",
        test_family: "f_a(z) = (1 - a^2) / (1 - a z)^2",
    };
    probe_from_levels(spec, w, levels, notes)
}

/// Past the cutoff of the test function, `H_w(phi)` is flat on this many more
/// panels before the remaining sliver of `[0, 1)` is dropped.
const LP_TAIL_PANELS: usize = 12;

/// `ln ||H_w(phi)||_{L^p[0,1)}^p - ln ||phi||_{L^p[0,1)}^p` for the test
/// function `phi = w^{p'/p}` on `[r_k, r_c)`, `c = 2k + 1`.
fn lp_level(w: &RadialWeight, p: f64, k: usize) -> Result<f64> {
    let conj = p / (p - 1.0);
    let cut = (2 * k + 1).min(w.resolvable_depth().saturating_add(1)).max(k + 1);
    let opts = QuadOptions::with_rel_tol(1e-8);
    let support = |lnf: &(dyn Fn(At) -> f64 + Sync)| -> Result<f64> {
        let panels = (k..cut)
            .map(|j| nan_to_err(log_integrate(lnf, level_point(j), level_point(j + 1), &opts)?, level_point(j), level_point(j + 1), "L^p probe"))
            .collect::<Result<Vec<f64>>>()?;
        Ok(log_sum(panels))
    };
    let ln_phi = support(&|t: At| conj * w.ln_density(t))?;
    // phi w = w^{p'}
    let ln_h = |x: At| support(&|t: At| conj * w.ln_density(t) + ln_k_kernel_real(w, t, x).unwrap_or(f64::NAN));
    let mut terms = Vec::new();
    for i in 0..cut + LP_TAIL_PANELS {
        for (x, wt) in panel_rule(level_point(i), level_point(i + 1)) {
            terms.push(wt.ln() + p * ln_h(x)?);
        }
    }
    Ok(log_sum(terms) - ln_phi)
}

/// Growth of `||H_w(phi_r)||_{L^p[0,1)} / ||phi_r||_{L^p[0,1)}` along
/// `r_k = 1 - 2^-k` for the test functions `phi_r = w^{p'/p}` on `[r, 1)`.
/// To keep every norm finite the support is cut at `1 - 2^-(2k+1)`, which
/// still exhausts `[r, 1)` on the logarithmic scale.
pub fn probe_lp(w: &RadialWeight, p: f64, schedule: Schedule) -> Result<ProbeReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::domain(format!("p must lie in (1, inf), got {p}")));
    }
    let depth = schedule.depth.min(w.resolvable_depth()).max(8);
    let levels = (0..=depth)
        .into_par_iter()
        .map(|k| Ok((level_point(k).t, level_point(k).u, lp_level(w, p, k)? / p)))
        .collect();
    let spec = ProbeSpec {
        operator: "H_w",
        source_norm: "L^p[0,1)",
        target_norm: "L^p[0,1)",
        test_family: "phi_r = w^{p'/p} on [r, 1 - (1 - r)^2 / 2)",
    };
    probe_from_levels(spec, w, levels, Vec::new())
}

/// Polynomials in the default test corpus.
pub const CORPUS_SIZE: usize = 30;
/// Coefficients per corpus polynomial.
pub const CORPUS_COEFFS: usize = 20;
pub const CORPUS_SEED: u64 = 20_240_917;

/// Polynomials with independent standard complex Gaussian coefficients,
/// reproducible from `seed`.
pub fn polynomial_corpus(size: usize, coeffs: usize, seed: u64) -> Result<Vec<TaylorCoeffs>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| {
            let c = (0..coeffs.max(1))
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                })
                .collect();
            TaylorCoeffs::new(c)
        })
        .collect()
}

/// An inequality `lhs <= bound * rhs` checked over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub property: String,
    pub p: f64,
    pub bound: f64,
    /// `lhs / rhs` for every corpus member (and radius, where one applies).
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(property: String, p: f64, bound: f64, ratios: Vec<f64>) -> Self {
        let max_ratio = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // quadrature and grid maxima carry relative errors near 1e-8
        let holds = ratios.iter().all(|r| r.is_finite()) && max_ratio <= bound * (1.0 + 1e-7);
        BoundCheck { property, p, bound, ratios, max_ratio, holds }
    }
}

fn series(f: &TaylorCoeffs) -> DiscFunction {
    DiscFunction::Series(f.clone())
}

/// Accuracy of the corpus checks; the inequalities have ample slack, and
/// `|f|^p` is not smooth on circles through zeros of `f`.
const CORPUS_REL_TOL: f64 = 1e-7;

fn corpus_opts() -> QuadOptions {
    QuadOptions::with_rel_tol(CORPUS_REL_TOL)
}

/// `int_0^1 g(t) M_p^p(t, f) dt`.
fn weighted_mean_integral(f: &DiscFunction, p: f64, g: impl Fn(At) -> f64) -> Result<f64> {
    let failure = std::cell::Cell::new(None);
    let v = integrate_to_one(
        |t: At| match integral_mean_pow_tol(f, p, t, 0, CORPUS_REL_TOL) {
            Ok(m) => m * g(t),
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        },
        At::ZERO,
        &corpus_opts(),
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(v.value),
    }
}

/// `||f||^p_{A^p_nu}` for the normalized area measure.
fn bergman_pow(f: &DiscFunction, p: f64, nu: &RadialWeight) -> Result<f64> {
    weighted_mean_integral(f, p, |t| 2.0 * t.t * nu.density(t))
}

/// Band endpoints, rather than the band width, must settle: a random corpus
/// widens its band with every member, while the implied constants do not
/// move once enough members are in.
fn endpoints_stable(report: &RatioReport, half: usize) -> bool {
    let (lo, hi) = report
        .samples
        .iter()
        .filter(|s| s.level <= half)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.ln_ratio), hi.max(s.ln_ratio)));
    let limit = (1.0 + CORPUS_BAND_CHANGE).ln();
    report.ratio_min.is_finite()
        && report.ratio_max.is_finite()
        && (lo - report.ratio_min.ln()).abs() < limit
        && (hi - report.ratio_max.ln()).abs() < limit
}

/// Relative movement allowed in a band endpoint between half and all of the
/// corpus.
pub const CORPUS_BAND_CHANGE: f64 = 0.10;

/// Radii at which the restriction inequality is tested.
pub const RESTRICTION_RADII: [f64; 5] = [0.25, 0.5, 0.75, 0.9, 0.99];

/// `int_0^s M_inf^p(t, f) dt <= pi M_p^p(s, f)` over the corpus and
/// `RESTRICTION_RADII`.
pub fn restriction_check(corpus: &[TaylorCoeffs], p: f64) -> Result<BoundCheck> {
    let opts = corpus_opts();
    let ratios = corpus
        .par_iter()
        .map(|f| {
            let g = series(f);
            RESTRICTION_RADII
                .iter()
                .map(|&s| {
                    let lhs = integrate(|t: At| max_modulus(&g, t).powf(p), At::ZERO, At::t(s), &opts)?.value;
                    Ok(lhs / integral_mean_pow_tol(&g, p, At::t(s), 0, CORPUS_REL_TOL)?)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    Ok(BoundCheck::new("int_0^s M_inf^p(t,f) dt / M_p^p(s,f)".into(), p, std::f64::consts::PI, ratios))
}

/// Both halves of `int |f|^p nu_hat <= pi int M_inf^p nu_hat <= (pi/2) ||f||^p_{A^p_nu}`
/// on `[0, 1)`, as `(first, second)` with bounds `pi` and `pi / 2`.
pub fn weighted_restriction_check(corpus: &[TaylorCoeffs], p: f64, nu: &RadialWeight) -> Result<(BoundCheck, BoundCheck)> {
    let opts = corpus_opts();
    let triples = corpus
        .par_iter()
        .map(|f| {
            let g = series(f);
            let tail = |t: At| nu.ln_tail(t).exp();
            let on_segment = integrate_to_one(|t: At| g.eval(Complex64::new(t.t, 0.0)).norm().powf(p) * tail(t), At::ZERO, &opts)?.value;
            let maxima = integrate_to_one(|t: At| max_modulus(&g, t).powf(p) * tail(t), At::ZERO, &opts)?.value;
            let area = bergman_pow(&g, p, nu)?;
            Ok((on_segment, maxima, area))
        })
        .collect::<Result<Vec<_>>>()?;
    let first = triples.iter().map(|t| t.0 / t.1).collect();
    let second = triples.iter().map(|t| std::f64::consts::PI * t.1 / t.2).collect();
    Ok((
        BoundCheck::new(format!("int |f|^p nu_hat / int M_inf^p nu_hat, nu = {}", nu.id()), p, std::f64::consts::PI, first),
        BoundCheck::new(format!("pi int M_inf^p nu_hat / ||f||^p_(A^p_nu), nu = {}", nu.id()), p, std::f64::consts::FRAC_PI_2, second),
    ))
}

/// Ratio bands for the inclusion chains between `HL(p)`, `H^p` and
/// `D^p_{p-1}` over the corpus. For `p <= 2` the bands are `HL / H^p` and
/// `H^p / D`; for `p >= 2` they are `D / H^p` and `H^p / HL`. Stability
/// asks that both band endpoints move by less than `CORPUS_BAND_CHANGE`
/// between the first half of the corpus and all of it.
pub fn inclusion_chain(corpus: &[TaylorCoeffs], p: f64) -> Result<(RatioReport, RatioReport)> {
    let norms = corpus
        .par_iter()
        .map(|f| {
            let g = series(f);
            let hardy = integral_mean_pow_tol(&g, p, At::ONE, 0, CORPUS_REL_TOL)?.ln() / p;
            let dirichlet_weight = RadialWeight::standard(p - 1.0);
            let derivative_area = bergman_pow(&g.derivative(), p, &dirichlet_weight)?;
            let dirichlet = (g.at_origin().norm().powf(p) + derivative_area).ln() / p;
            Ok((hl_norm(f, p)?.value.ln(), hardy, dirichlet))
        })
        .collect::<Result<Vec<(f64, f64, f64)>>>()?;
    let levels = [corpus.len().div_ceil(2), corpus.len()];
    let band = |lhs: &str, rhs: &str, pick: &dyn Fn(&(f64, f64, f64)) -> (f64, f64)| {
        let samples = norms
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let (a, b) = pick(n);
                RatioSample::from_ln(vec![i as f64], a, b, i + 1)
            })
            .collect();
        let mut r = RatioReport::from_samples(lhs, rhs, format!("corpus of {} polynomials", corpus.len()), samples, &levels, Vec::new());
        r.stable = endpoints_stable(&r, levels[0]);
        r
    };
    Ok(if p <= 2.0 {
        (band("hl_norm", "hardy_norm", &|n| (n.0, n.1)), band("hardy_norm", "dirichlet_norm", &|n| (n.1, n.2)))
    } else {
        (band("dirichlet_norm", "hardy_norm", &|n| (n.2, n.1)), band("hardy_norm", "hl_norm", &|n| (n.1, n.0)))
    })
}

/// Band of `||f||^p_{A^p_nu}` against
/// `|f(0)|^p nu_hat(0) + int_0^1 M_q^p(t, f') (1 - t)^{p (1 - 1/q)} nu_hat(t) dt`
/// over the corpus, for `1 < q < p`.
pub fn derivative_bound_band(corpus: &[TaylorCoeffs], p: f64, q: f64, nu: &RadialWeight) -> Result<RatioReport> {
    if !(1.0 < q && q < p) {
        return Err(Error::domain(format!("need 1 < q < p, got q = {q}, p = {p}")));
    }
    let exponent = p * (1.0 - 1.0 / q);
    let samples = corpus
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let g = series(f);
            let df = series(&f.derivative());
            let lhs = bergman_pow(&g, p, nu)?;
            // M_q^p = (M_q^q)^{p/q}
            let integral = integrate_to_one(
                |t: At| -> f64 {
                    let m = integral_mean_pow_tol(&df, q, t, 0, CORPUS_REL_TOL).map_or(f64::NAN, |v| v.powf(p / q));
                    m * t.u.powf(exponent) * nu.ln_tail(t).exp()
                },
                At::ZERO,
                &corpus_opts(),
            )?
            .value;
            let rhs = f.coeffs[0].norm().powf(p) * nu.ln_tail(At::ZERO).exp() + integral;
            Ok(RatioSample::from_ln(vec![i as f64], lhs.ln(), rhs.ln(), i + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let half = corpus.len().div_ceil(2);
    let mut r = RatioReport::from_samples(
        "bergman_norm^p",
        "derivative integral",
        format!("corpus of {} polynomials, q = {q}", corpus.len()),
        samples,
        &[half, corpus.len()],
        Vec::new(),
    );
    r.stable = endpoints_stable(&r, half);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn poly(c: &[f64]) -> TaylorCoeffs {
        TaylorCoeffs::new(c.iter().map(|&x| Complex64::new(x, 0.0)).collect()).unwrap()
    }

    #[test]
    fn self_ratio_is_one_everywhere() {
        let w = RadialWeight::standard(1.0);
        let samples = square_grid(8)
            .into_iter()
            .map(|(i, j)| {
                let y = level_point(i).product(level_point(j));
                let l = ln_radial_k_estimate(&w, y).unwrap();
                RatioSample::from_ln(vec![y.t], l, l, i.max(j))
            })
            .collect();
        let r = RatioReport::from_samples("est", "est", grid_label(8), samples, &Schedule::new(8).levels(), Vec::new());
        assert_eq!((r.ratio_min, r.ratio_max), (1.0, 1.0));
        assert!(r.stable);
    }

    #[test]
    fn constant_weight_radial_band_is_exactly_one() {
        // K = 1/(1 - st) and 1 + int_0^{st} dx/(1-x)^2 = 1/(1 - st)
        let r = ratio_scan_radial_kernel(&RadialWeight::constant(1.0), Schedule::new(16)).unwrap();
        assert!((r.ratio_min - 1.0).abs() <= 1e-8 && (r.ratio_max - 1.0).abs() <= 1e-8);
        assert!(r.stable);
        assert!(r.excluded.is_empty());
    }

    #[test]
    fn m1_scan_includes_the_origin() {
        // K_t(0) = 1/(2 w_1) with w_1 = int_0^1 2 r dr = 1
        let r = ratio_scan_m1(&RadialWeight::constant(2.0), Schedule::new(8)).unwrap();
        let origin = r.samples.iter().find(|s| s.point == vec![0.0, 0.0]).unwrap();
        assert_relative_eq!(origin.lhs, 0.5, max_relative = 1e-10);
        assert_relative_eq!(origin.rhs, 1.0, max_relative = 1e-12);
        assert!(r.ratio_max.is_finite());
    }

    #[test]
    fn m1_scan_matches_circle_quadrature_for_constant_weight() {
        // M_1(1, 1/(1 - y z)) by a plain trapezoid sum
        let r = ratio_scan_m1(&RadialWeight::constant(1.0), Schedule::new(8)).unwrap();
        for s in r.samples.iter().filter(|s| s.point[0] * s.point[1] < 0.99) {
            let y = s.point[0] * s.point[1];
            let n = 20_000;
            let oracle = (0..n)
                .map(|j| 1.0 / (Complex64::new(1.0, 0.0) - Complex64::from_polar(y, 2.0 * PI * j as f64 / n as f64)).norm())
                .sum::<f64>()
                / n as f64;
            assert_relative_eq!(s.lhs, oracle, max_relative = 1e-8);
        }
    }

    #[test]
    fn mq_scan_drops_t_zero_and_matches_constant_weight_identity() {
        // for w = 1, G_t(z) = t / (1 - t z)^2 = t B_t(z)
        let (vs_bergman, vs_estimate) = ratio_scan_mq_g(&RadialWeight::constant(1.0), 2.0, Schedule::new(8)).unwrap();
        assert!(vs_bergman.samples.iter().all(|s| s.point[1] > 0.0));
        assert!(vs_bergman.excluded.iter().any(|e| e.contains("t = 0")));
        assert!((vs_bergman.ratio_min - 1.0).abs() < 1e-9 && (vs_bergman.ratio_max - 1.0).abs() < 1e-9);
        assert!(vs_estimate.ratio_min > 0.0 && vs_estimate.ratio_max.is_finite());
    }

    #[test]
    fn mq_scan_rejects_bad_exponent() {
        assert!(ratio_scan_mq_g(&RadialWeight::constant(1.0), 0.0, Schedule::new(8)).is_err());
    }

    #[test]
    fn bloch_trace_matches_closed_form_for_constant_weight() {
        // H(1)(x) = -log(1 - x)/x, so (1 - x^2) H(1)'(x) = (1 + x)/x + (1 - x^2) log(1 - x)/x^2
        let r = probe_hinfty_bloch(&RadialWeight::constant(1.0), Schedule::new(24)).unwrap();
        for &(x, v) in r.trace.iter().skip(1).take(20) {
            let oracle = (1.0 + x) / x + (1.0 - x * x) * (-x).ln_1p() / (x * x);
            assert_relative_eq!(v, oracle, max_relative = 1e-7);
        }
        assert_eq!(r.verdict, ProbeVerdict::Bounded);
        assert!(r.sup() < 2.0 + 1e-9);
    }

    #[test]
    fn lp_probe_for_constant_weight_stays_below_hilbert_norm() {
        // the classical Hilbert operator has norm pi on L^2
        let r = probe_lp(&RadialWeight::constant(1.0), 2.0, Schedule::new(LP_PROBE_DEPTH)).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::Bounded, "{:?} {:?}", r.trace, r.notes);
        assert!(r.sup() > 1.0 && r.sup() < PI);
    }

    #[test]
    fn h1_probe_grows_for_lebesgue_weight() {
        let r = probe_h1(&RadialWeight::standard(0.0), Schedule::new(16)).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::Growing);
        // growth is linear in k = log2(1/(1 - a))
        let steps: Vec<f64> = r.trace.windows(2).skip(8).map(|p| p[1].1 - p[0].1).collect();
        assert!(steps.iter().all(|d| *d > 0.1), "{steps:?}");
    }

    #[test]
    fn corpus_is_deterministic_in_the_seed() {
        let a = polynomial_corpus(5, 8, 7).unwrap();
        let b = polynomial_corpus(5, 8, 7).unwrap();
        let c = polynomial_corpus(5, 8, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|f| f.coeffs.len() == 8));
    }

    #[test]
    fn restriction_ratio_for_one_plus_z() {
        // int_0^s (1 + t)^2 dt / (1 + s^2)
        let r = restriction_check(&[poly(&[1.0, 1.0])], 2.0).unwrap();
        let oracle = RESTRICTION_RADII
            .iter()
            .map(|&s| (s + s * s + s * s * s / 3.0) / (1.0 + s * s))
            .fold(0.0, f64::max);
        assert_relative_eq!(r.max_ratio, oracle, max_relative = 1e-6);
        assert!(r.holds);
    }

    #[test]
    fn weighted_restriction_second_constant_fails_for_one_plus_z() {
        // pi int_0^1 (1 + t)^2 (1 - t) dt = 11 pi / 12 against ||1 + z||^2 = 3/2
        let (first, second) = weighted_restriction_check(&[poly(&[1.0, 1.0])], 2.0, &RadialWeight::constant(1.0)).unwrap();
        assert!(first.holds);
        assert_relative_eq!(second.max_ratio, 11.0 * PI / 18.0, max_relative = 1e-6);
        assert!(!second.holds);
    }

    #[test]
    fn hardy_littlewood_equals_hardy_at_two() {
        let corpus = polynomial_corpus(6, 10, 3).unwrap();
        let (hl_vs_hardy, _) = inclusion_chain(&corpus, 2.0).unwrap();
        assert!((hl_vs_hardy.ratio_min - 1.0).abs() < 1e-7 && (hl_vs_hardy.ratio_max - 1.0).abs() < 1e-7);
    }

    #[test]
    fn derivative_band_rejects_bad_exponents() {
        let corpus = polynomial_corpus(2, 4, 1).unwrap();
        assert!(derivative_bound_band(&corpus, 2.0, 3.0, &RadialWeight::constant(1.0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn restriction_holds_on_random_polynomials(seed in 0u64..10_000, p in 1.0f64..4.0) {
            let corpus = polynomial_corpus(1, 6, seed).unwrap();
            let r = restriction_check(&corpus, p).unwrap();
            prop_assert!(r.holds, "{:?}", r.ratios);
        }
    }
}
