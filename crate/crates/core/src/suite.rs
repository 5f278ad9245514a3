//! The acceptance matrix. Every criterion is a list of named checks so a
//! failure points at the weight, exponent or pair responsible.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::conditions::{
    check_ap, check_bergman_primary, check_bergman_secondary, check_carleson_box, check_h1_average, check_lp_hp,
};
use crate::error::Result;
use crate::functions::RadialGridFunction;
use crate::kernels::{bergman_kernel, k_kernel};
use crate::operators::{apply_h_point, hilbert_classical_oracle, test_function_fa};
use crate::protocol::Schedule;
use crate::report::{ClassVerdict, ConditionVerdict, ProbeVerdict, RatioReport};
use crate::verify::{
    inclusion_chain, polynomial_corpus, probe_h1, probe_hinfty_bloch, probe_lp, ratio_scan_m1, ratio_scan_mq_g,
    ratio_scan_radial_kernel, restriction_check, weighted_restriction_check, BLOCH_PROBE_DEPTH, CIRCLE_RATIO_DEPTH,
    CORPUS_COEFFS, CORPUS_SEED, CORPUS_SIZE, H1_PROBE_DEPTH, LP_PROBE_DEPTH, RATIO_DEPTH,
};
use crate::weights::{builtin_family, classify_d, classify_dhat, RadialWeight};

pub const CRITERIA: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub title: String,
    pub checks: Vec<Check>,
    pub elapsed_s: f64,
    pub budget_s: f64,
}

impl CriterionOutcome {
    pub fn within_budget(&self) -> bool {
        self.elapsed_s <= self.budget_s
    }

    pub fn passed(&self) -> bool {
        self.within_budget() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// One line: `PASS`/`FAIL`, id, title, elapsed time and failed checks.
    pub fn summary_line(&self) -> String {
        let failed: Vec<&str> = self.failures().map(|c| c.label.as_str()).collect();
        let mut line = format!(
            "{} [{}] {} ({:.1} s of {:.0} s, {}/{} checks)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed_s,
            self.budget_s,
            self.checks.len() - failed.len(),
            self.checks.len()
        );
        if !self.within_budget() {
            line.push_str("; over time budget");
        }
        if !failed.is_empty() {
            line.push_str(&format!("; failed: {}", failed.join(", ")));
        }
        line
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Seed of the random polynomial corpus.
    pub seed: u64,
    /// Criteria to run, all when empty.
    pub only: Vec<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: CORPUS_SEED, only: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub criteria: Vec<CriterionOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(CriterionOutcome::passed)
    }
}

pub fn run_suite(config: &SuiteConfig) -> SuiteReport {
    let ids: Vec<usize> = if config.only.is_empty() { (1..=CRITERIA).collect() } else { config.only.clone() };
    SuiteReport {
        seed: config.seed,
        criteria: ids.into_iter().map(|id| run_criterion(id, config)).collect(),
    }
}

/// Run criterion `id` (1-based). Numeric errors become failed checks.
pub fn run_criterion(id: usize, config: &SuiteConfig) -> CriterionOutcome {
    let (title, budget_s, body): (&str, f64, fn(&SuiteConfig, &mut Checks)) = match id {
        1 => ("kernel oracle, constant weight", 5.0, kernel_constant),
        2 => ("kernel oracle, standard weights", 30.0, kernel_standard),
        3 => ("operator oracle, constant weight", 10.0, operator_constant),
        4 => ("H^inf to Bloch probe vs D-hat classification", 120.0, bloch_matrix),
        5 => ("H^1 law for standard weights", 180.0, h1_law),
        6 => ("L^2 to H^2 condition vs probe", 180.0, lp_matrix),
        7 => ("Bergman condition implications", 300.0, bergman_implications),
        8 => ("two-sided estimate scans", 300.0, estimate_scans),
        9 => ("norm inclusion properties", 120.0, norm_inclusions),
        _ => ("unknown criterion", 0.0, |_, checks| checks.push("criterion exists", false, "no such criterion".into())),
    };
    let start = Instant::now();
    let mut checks = Checks::default();
    body(config, &mut checks);
    CriterionOutcome {
        id,
        title: title.into(),
        checks: checks.0,
        elapsed_s: start.elapsed().as_secs_f64(),
        budget_s,
    }
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, label: impl Into<String>, passed: bool, detail: String) {
        self.0.push(Check { label: label.into(), passed, detail });
    }

    fn record(&mut self, label: impl Into<String>, outcome: Result<(bool, String)>) {
        match outcome {
            Ok((passed, detail)) => self.push(label, passed, detail),
            Err(e) => self.push(label, false, format!("error: {e}")),
        }
    }
}

fn grid_points() -> impl Iterator<Item = (f64, Complex64)> {
    let tenths = (1..=9).map(|k| k as f64 / 10.0);
    tenths.clone().flat_map(move |t| {
        tenths.clone().flat_map(move |rho| [0.0, 1.0, 2.5, PI, -2.0].map(move |theta| (t, Complex64::from_polar(rho, theta))))
    })
}

fn kernel_constant(_: &SuiteConfig, checks: &mut Checks) {
    let w = RadialWeight::constant(1.0);
    let one = Complex64::new(1.0, 0.0);
    let worst = |f: &dyn Fn(f64, Complex64) -> Result<Complex64>, oracle: &dyn Fn(f64, Complex64) -> Complex64| {
        grid_points().try_fold(0.0f64, |acc, (t, z)| Ok(acc.max((f(t, z)? - oracle(t, z)).norm())))
    };
    checks.record(
        "k_kernel vs 1/(1-tz)",
        worst(&|t, z| k_kernel(&w, t, z, 1e-14), &|t, z| one / (one - t * z)).map(|e| (e <= 1e-10, format!("max abs error {e:e}"))),
    );
    checks.record(
        "bergman_kernel vs 1/(1-tz)^2",
        worst(&|t, z| bergman_kernel(&w, t, z, 1e-14), &|t, z| (one - t * z).powi(-2))
            .map(|e| (e <= 1e-10, format!("max abs error {e:e}"))),
    );
}

fn kernel_standard(_: &SuiteConfig, checks: &mut Checks) {
    let one = Complex64::new(1.0, 0.0);
    for alpha in [0.0, 1.0, 2.5] {
        let w = RadialWeight::standard(alpha);
        let kernel = grid_points().try_fold(0.0f64, |acc, (t, z)| {
            let oracle = (one - t * z).powf(-(2.0 + alpha));
            Ok(acc.max((bergman_kernel(&w, t, z, 1e-14)? - oracle).norm() / oracle.norm()))
        });
        checks.record(
            format!("bergman_kernel standard:{alpha}"),
            kernel.map(|e| (e <= 1e-8, format!("max relative error {e:e}"))),
        );
        // (alpha + 1) int_0^1 r^x (1 - r^2)^alpha dr = (alpha + 1)/2 B((x + 1)/2, alpha + 1)
        let moments = (0..=200).step_by(5).try_fold(0.0f64, |acc, n| {
            let x = 2.0 * n as f64 + 1.0;
            let oracle = ((alpha + 1.0) / 2.0).ln() + ln_beta((x + 1.0) / 2.0, alpha + 1.0);
            Ok(acc.max((w.moment(x)?.ln() - oracle).abs()))
        });
        checks.record(
            format!("odd moments standard:{alpha} vs Beta"),
            moments.map(|e| (e <= 1e-9, format!("max relative error {e:e}"))),
        );
    }
}

fn operator_constant(_: &SuiteConfig, checks: &mut Checks) {
    let w = RadialWeight::constant(1.0);
    let functions = [
        ("1", RadialGridFunction::from_real(vec![0.0], vec![1.0])),
        ("t", Ok(RadialGridFunction::sample_real(30, 32, |at| at.t))),
        ("t^2", Ok(RadialGridFunction::sample_real(30, 32, |at| at.t * at.t))),
        ("f_0.5", test_function_fa(0.5)),
    ];
    for (name, f) in functions {
        let worst = f.and_then(|f| {
            // the operator does not depend on t, so one pass over the z grid
            grid_points()
                .filter(|&(t, _)| t == 0.1)
                .map(|(_, z)| z)
                .chain([Complex64::new(0.0, 0.0)])
                .try_fold(0.0f64, |acc, z| Ok(acc.max((apply_h_point(&w, &f, z, 1e-12)? - hilbert_classical_oracle(&f, z)?).norm())))
        });
        checks.record(format!("apply_H vs classical, f = {name}"), worst.map(|e| (e <= 1e-8, format!("max abs error {e:e}"))));
    }
    let one = RadialGridFunction::from_real(vec![0.0], vec![1.0]);
    let value = one.and_then(|f| apply_h_point(&w, &f, Complex64::new(0.5, 0.0), 1e-12));
    checks.record(
        "H(1)(0.5) = 2 log 2",
        value.map(|v| {
            let e = (v - 2.0 * 2f64.ln()).norm();
            (e <= 1e-8, format!("abs error {e:e}"))
        }),
    );
}

fn class_matches_probe(class: ClassVerdict, probe: ProbeVerdict) -> bool {
    matches!(
        (class, probe),
        (ClassVerdict::Member, ProbeVerdict::Bounded)
            | (ClassVerdict::NonMember, ProbeVerdict::Growing)
            | (ClassVerdict::Inconclusive, ProbeVerdict::Inconclusive)
    )
}

fn bloch_matrix(_: &SuiteConfig, checks: &mut Checks) {
    for w in builtin_family() {
        let outcome = (|| {
            let class = classify_dhat(&w, Schedule::default())?.verdict;
            let probe = probe_hinfty_bloch(&w, Schedule::new(BLOCH_PROBE_DEPTH))?;
            Ok((class_matches_probe(class, probe.verdict), format!("class {class:?}, probe {:?} (sup {:.4})", probe.verdict, probe.sup())))
        })();
        checks.record(format!("bloch {}", w.id()), outcome);
    }
}

fn h1_law(_: &SuiteConfig, checks: &mut Checks) {
    for alpha in [0.25, 0.5, 1.0, 2.0, -0.5, -0.25, 0.0] {
        let w = RadialWeight::standard(alpha);
        let expected = if alpha > 0.0 { ConditionVerdict::Bounded } else { ConditionVerdict::Diverging };
        let average = check_h1_average(&w, Schedule::default()).map(|r| r.verdict);
        checks.record(
            format!("h1_average standard:{alpha}"),
            average.clone().map(|v| (v == expected, format!("{v:?}, expected {expected:?}"))),
        );
        let boxed = check_carleson_box(&w, Schedule::default()).map(|r| r.verdict);
        checks.record(
            format!("carleson_box standard:{alpha}"),
            boxed.map(|v| (v == expected, format!("{v:?}, expected {expected:?}"))),
        );
        let probe = probe_h1(&w, Schedule::new(H1_PROBE_DEPTH)).map(|r| r.verdict);
        checks.record(
            format!("probe_h1 standard:{alpha}"),
            probe.map(|v| (expected.agrees_with(v), format!("{v:?}, condition {expected:?}"))),
        );
    }
}

fn lp_matrix(_: &SuiteConfig, checks: &mut Checks) {
    for w in builtin_family() {
        let outcome = (|| {
            let condition = check_lp_hp(&w, 2.0, Schedule::default())?.verdict;
            let probe = probe_lp(&w, 2.0, Schedule::new(LP_PROBE_DEPTH))?;
            if w.id() == "constant:1" {
                let stats = &probe.level_stats;
                let settled = stats.len() >= 2 && {
                    let (a, b) = (stats[stats.len() - 2].1, stats[stats.len() - 1].1);
                    (b - a).abs() <= 0.01 * a
                };
                checks.push(
                    "lp probe constant:1 supremum settles within 1%",
                    settled,
                    format!("level statistics {stats:?}"),
                );
            }
            Ok((condition.agrees_with(probe.verdict), format!("condition {condition:?}, probe {:?} (sup {:.4})", probe.verdict, probe.sup())))
        })();
        checks.record(format!("lp agreement {}", w.id()), outcome);
    }
}

/// Pairs with `w` in D-hat; `w = ExpDecay` lies outside the hypothesis.
pub fn implication_pairs() -> Vec<(RadialWeight, RadialWeight)> {
    let omegas = [RadialWeight::constant(1.0), RadialWeight::standard(0.0), RadialWeight::standard(1.0), RadialWeight::logarithmic(0.0, 1.0)];
    let nus = [RadialWeight::constant(1.0), RadialWeight::standard(1.0), RadialWeight::exponential(1.0, 1.0)];
    omegas.iter().flat_map(|w| nus.iter().map(move |nu| (w.clone(), nu.clone()))).collect()
}

fn bergman_implications(_: &SuiteConfig, checks: &mut Checks) {
    for (w, nu) in implication_pairs() {
        let in_d = classify_d(&w, Schedule::default());
        for p in [1.5, 2.0, 3.0] {
            let label = format!("({}, {}) p = {p}", w.id(), nu.id());
            let outcome = (|| {
                let primary = check_bergman_primary(&w, &nu, p, Schedule::default())?.verdict;
                let secondary = check_bergman_secondary(&w, &nu, p, Schedule::default())?.verdict;
                let mut ok = !(primary == ConditionVerdict::Bounded && secondary == ConditionVerdict::Diverging);
                let mut detail = format!("primary {primary:?}, secondary {secondary:?}");
                if in_d.clone()? == ClassVerdict::Member {
                    let ap = check_ap(&w, &nu, p, Schedule::default())?.verdict;
                    ok &= ap == primary;
                    detail.push_str(&format!(", ap {ap:?}"));
                }
                Ok((ok, detail))
            })();
            checks.record(label, outcome);
        }
    }
}

fn band_ok(r: &RatioReport) -> bool {
    r.stable && r.ratio_min > 0.0 && r.ratio_max.is_finite()
}

fn band_detail(r: &RatioReport) -> String {
    format!("band [{:.6}, {:.6}], widths {:?}, stable {}", r.ratio_min, r.ratio_max, r.level_widths, r.stable)
}

fn estimate_scans(_: &SuiteConfig, checks: &mut Checks) {
    let radial_schedule = Schedule::new(RATIO_DEPTH);
    let circle_schedule = Schedule::new(CIRCLE_RATIO_DEPTH);
    for w in builtin_family() {
        match classify_dhat(&w, Schedule::default()) {
            Ok(c) if c.verdict == ClassVerdict::Member => {}
            Ok(_) => continue,
            Err(e) => {
                checks.push(format!("classify {}", w.id()), false, format!("error: {e}"));
                continue;
            }
        }
        let id = w.id();
        let radial = ratio_scan_radial_kernel(&w, radial_schedule);
        if id == "constant:1" {
            checks.record(
                "radial band constant:1 within 1e-8 of 1",
                radial.as_ref().map_err(Clone::clone).map(|r| {
                    ((r.ratio_min - 1.0).abs() <= 1e-8 && (r.ratio_max - 1.0).abs() <= 1e-8, band_detail(r))
                }),
            );
        }
        checks.record(format!("radial {id}"), radial.map(|r| (band_ok(&r), band_detail(&r))));
        checks.record(format!("m1 {id}"), ratio_scan_m1(&w, circle_schedule).map(|r| (band_ok(&r), band_detail(&r))));
        for q in [1.0, 2.0] {
            match ratio_scan_mq_g(&w, q, circle_schedule) {
                Ok((vs_bergman, vs_estimate)) => {
                    checks.push(format!("mq_g q={q} vs t^q B {id}"), band_ok(&vs_bergman), band_detail(&vs_bergman));
                    checks.push(format!("mq_g q={q} vs estimate {id}"), band_ok(&vs_estimate), band_detail(&vs_estimate));
                }
                Err(e) => checks.push(format!("mq_g q={q} {id}"), false, format!("error: {e}")),
            }
        }
    }
}

fn norm_inclusions(config: &SuiteConfig, checks: &mut Checks) {
    let corpus = match polynomial_corpus(CORPUS_SIZE, CORPUS_COEFFS, config.seed) {
        Ok(c) => c,
        Err(e) => return checks.push("corpus", false, format!("error: {e}")),
    };
    let nus = [RadialWeight::constant(1.0), RadialWeight::standard(1.0)];
    for p in [1.5, 2.0, 3.0] {
        checks.record(
            format!("restriction (pi) p = {p}"),
            restriction_check(&corpus, p).map(|r| (r.holds, format!("max ratio {:.6} vs {:.6}", r.max_ratio, r.bound))),
        );
        for nu in &nus {
            match weighted_restriction_check(&corpus, p, nu) {
                Ok((first, second)) => {
                    checks.push(
                        format!("weighted restriction (pi) p = {p} nu = {}", nu.id()),
                        first.holds,
                        format!("max ratio {:.6} vs {:.6}", first.max_ratio, first.bound),
                    );
                    checks.push(
                        format!("weighted restriction (pi/2) p = {p} nu = {}", nu.id()),
                        second.holds,
                        format!("max ratio {:.6} vs {:.6}", second.max_ratio, second.bound),
                    );
                }
                Err(e) => checks.push(format!("weighted restriction p = {p} nu = {}", nu.id()), false, format!("error: {e}")),
            }
        }
        match inclusion_chain(&corpus, p) {
            Ok((a, b)) => {
                for r in [a, b] {
                    checks.push(format!("inclusion {} / {} p = {p}", r.lhs_id, r.rhs_id), band_ok(&r), band_detail(&r));
                }
            }
            Err(e) => checks.push(format!("inclusion p = {p}"), false, format!("error: {e}")),
        }
    }
}
