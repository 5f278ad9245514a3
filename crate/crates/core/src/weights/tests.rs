use std::io::Write;

use approx::assert_relative_eq;
use proptest::prelude::*;
use statrs::function::beta::{beta_reg, ln_beta};

use super::*;
use crate::protocol::Schedule;
use crate::report::ClassVerdict;

/// `ln B(a, b)`; for large `a` the Gamma ratio goes through the Stirling
/// series difference, which avoids cancelling two huge `ln Gamma` values.
fn ln_beta_oracle(a: f64, b: f64) -> f64 {
    if a < 50.0 {
        return ln_beta(a, b);
    }
    let s = |z: f64| 1.0 / (12.0 * z) - 1.0 / (360.0 * z.powi(3)) + 1.0 / (1260.0 * z.powi(5));
    let ratio = (a - 0.5) * (b / a).ln_1p() + b * (a + b).ln() - b + s(a + b) - s(a);
    statrs::function::gamma::ln_gamma(b) - ratio
}

fn standard_moment_oracle(alpha: f64, x: f64) -> f64 {
    // int_0^1 r^x (a+1)(1-r^2)^a dr = (a+1)/2 B((x+1)/2, a+1)
    ((alpha + 1.0) / 2.0).ln() + ln_beta_oracle((x + 1.0) / 2.0, alpha + 1.0)
}

fn standard_tail_oracle(alpha: f64, r: f64) -> f64 {
    // (a+1)/2 B(1/2, a+1) (1 - I_{r^2}(1/2, a+1))
    let full = ((alpha + 1.0) / 2.0) * ln_beta(0.5, alpha + 1.0).exp();
    full * (1.0 - beta_reg(0.5, alpha + 1.0, r * r))
}

#[test]
fn density_values() {
    assert_eq!(RadialWeight::constant(1.0).eval(0.3).unwrap(), 1.0);
    assert_relative_eq!(RadialWeight::standard(1.0).eval(0.0).unwrap(), 2.0, epsilon = 1e-15);
    assert_relative_eq!(RadialWeight::standard(0.5).eval(0.6).unwrap(), 1.2, epsilon = 1e-14);
    assert!(RadialWeight::constant(1.0).eval(1.0).is_err());
    assert!(RadialWeight::constant(1.0).eval(-0.1).is_err());
}

#[test]
fn tails_match_closed_forms() {
    assert_relative_eq!(RadialWeight::constant(1.0).tail(0.25).unwrap(), 0.75, max_relative = 1e-14);
    assert_relative_eq!(RadialWeight::standard(1.0).tail(0.0).unwrap(), 4.0 / 3.0, max_relative = 1e-13);
    let w = RadialWeight::power(0.5);
    for r in [0.0, 0.3, 0.9, 0.999] {
        let exact: f64 = (2.0 / 3.0) * (1.0_f64 - r).powf(1.5);
        assert_relative_eq!(w.tail(r).unwrap(), exact, max_relative = 1e-12);
    }
}

#[test]
fn standard_tail_matches_incomplete_beta() {
    for alpha in [-0.5, 0.0, 0.25, 1.0, 2.5] {
        let w = RadialWeight::standard(alpha);
        for r in [0.0, 0.2, 0.5, 0.8, 0.95] {
            assert_relative_eq!(w.tail(r).unwrap(), standard_tail_oracle(alpha, r), max_relative = 1e-10);
        }
    }
}

#[test]
fn standard_tail_closed_form_agrees_with_quadrature_deep() {
    let w = RadialWeight::standard(-0.5);
    for k in [3.0, 30.0, 120.0] {
        let at = At::level(k);
        assert!((w.ln_tail(at) - w.ln_tail_direct(at).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn logarithmic_tail_interpolant_is_accurate_deep() {
    // omega = 1 - ln u  =>  omega_hat = u (2 - ln u)
    let w = RadialWeight::logarithmic(0.0, 1.0);
    for k in [0.0, 0.4, 1.0, 7.3, 40.0, 100.5, 155.0] {
        let at = At::level(k);
        let exact = at.u.ln() + (2.0 - at.u.ln()).ln();
        assert!((w.ln_tail(at) - exact).abs() < 1e-11, "k = {k}: {} vs {exact}", w.ln_tail(at));
    }
    let at = At::t(0.123);
    assert!((w.ln_tail(at) - (at.u.ln() + (2.0 - at.u.ln()).ln())).abs() < 1e-11);
}

#[test]
fn exponential_tail_matches_asymptotic_series() {
    // int_0^u e^{-1/v} dv = u^2 e^{-1/u} sum (-1)^m (m+1)! u^m (asymptotic)
    let w = RadialWeight::exponential(1.0, 1.0);
    for u in [1e-3, 2f64.powi(-20), 2f64.powi(-60)] {
        let series: f64 = (0..6).map(|m| (-u).powi(m) * (1..=m + 1).product::<i32>() as f64).sum();
        let exact = 2.0 * u.ln() - 1.0 / u + series.ln();
        let got = w.ln_tail(At::u(u));
        assert!(((got - exact) / exact).abs() < 1e-12, "{got} vs {exact}");
    }
}

#[test]
fn moments_match_exact_values() {
    assert_relative_eq!(RadialWeight::constant(1.0).moment(1.0).unwrap(), 0.5, max_relative = 1e-15);
    assert_relative_eq!(RadialWeight::standard(1.0).moment(1.0).unwrap(), 0.5, max_relative = 1e-11);
    assert_relative_eq!(RadialWeight::constant(1.0).moment(99.0).unwrap(), 0.01, max_relative = 1e-14);
    assert!(RadialWeight::constant(1.0).moment(-1.0).is_err());
}

#[test]
fn standard_moments_match_beta_oracle() {
    for alpha in [-0.5, 0.0, 1.0, 2.5] {
        let w = RadialWeight::standard(alpha);
        for x in [0.0, 1.0, 3.0, 17.5, 1e3, 1e6, 1e12, 1e40] {
            let got = w.ln_moment(x).unwrap();
            let exact = standard_moment_oracle(alpha, x);
            assert!((got - exact).abs() < 1e-10, "alpha {alpha} x {x}: {got} vs {exact}");
        }
    }
}

#[test]
fn smooth_moments_track_direct_quadrature() {
    for w in [RadialWeight::standard(2.5), RadialWeight::logarithmic(0.0, 1.0), RadialWeight::exponential(1.0, 1.0)] {
        for x in [2049.0, 3000.7, 1.234e5, 9.9e6] {
            let a = w.moment_table().ln_moment_smooth(&w, x).unwrap();
            let b = moments::ln_moment_direct(&w, x).unwrap();
            assert!((a - b).abs() < 1e-11 * b.abs().max(1.0), "{w} x {x}: {a} vs {b}");
        }
    }
}

#[test]
fn odd_moment_vector_grows_and_is_consistent() {
    let w = RadialWeight::standard(1.0);
    let v = w.moment_table().odd_ln_moments(&w, 10).unwrap();
    assert!(v.len() >= 10);
    for n in 0..10 {
        assert!((v[n] - standard_moment_oracle(1.0, (2 * n + 1) as f64)).abs() < 1e-10);
    }
}

#[test]
fn tail_decreasing_and_moments_nonincreasing_on_grids() {
    for w in builtin_family() {
        let tails: Vec<f64> = (0..200).map(|k| w.ln_tail(At::level(k as f64 * 0.5))).collect();
        assert!(tails.windows(2).all(|p| p[1] < p[0]), "{w}");
        let moms: Vec<f64> = (0..40).map(|j| w.ln_moment((j as f64 * 0.5).exp2()).unwrap()).collect();
        assert!(moms.windows(2).all(|p| p[1] <= p[0]), "{w}");
    }
}

#[test]
fn tabulated_tail_is_exact_for_the_interpolant() {
    let g = crate::functions::RadialGridFunction::from_real(vec![0.0, 0.5, 0.75], vec![2.0, 0.0, 1.0]).unwrap();
    let w = RadialWeight::new(WeightFamily::Tabulated(g)).unwrap();
    // pieces: [0,0.5] trapezoid 0.5, [0.5,0.75] 0.125, [0.75,1) constant 0.25
    assert_relative_eq!(w.tail(0.0).unwrap(), 0.875, max_relative = 1e-14);
    assert_relative_eq!(w.tail(0.25).unwrap(), 0.25 * 0.5 * (1.0 + 0.0) + 0.375, max_relative = 1e-14);
    assert_relative_eq!(w.tail(0.9).unwrap(), 0.1, max_relative = 1e-12);
    assert_relative_eq!(w.tail(0.25).unwrap(), w.ln_tail_direct(At::t(0.25)).unwrap().exp(), max_relative = 1e-10);
    // moment by the linear-scale pieces
    let exact = 2.0 * (0.5 - 0.125) * 0.5 + 0.0;
    let _ = exact;
    let m0 = w.moment(0.0).unwrap();
    assert_relative_eq!(m0, 0.875, max_relative = 1e-10);
}

#[test]
fn tabulated_rejects_vanishing_end() {
    let g = crate::functions::RadialGridFunction::from_real(vec![0.0, 0.5], vec![1.0, 0.0]).unwrap();
    assert!(RadialWeight::new(WeightFamily::Tabulated(g)).is_err());
}

#[test]
fn parse_specs() {
    assert_eq!(WeightFamily::parse("standard:0.5").unwrap(), WeightFamily::Standard(0.5));
    assert_eq!(WeightFamily::parse("constant:1").unwrap(), WeightFamily::Constant(1.0));
    assert_eq!(WeightFamily::parse("log:0,1").unwrap(), WeightFamily::Logarithmic(0.0, 1.0));
    assert_eq!(WeightFamily::parse("exp:1,2").unwrap(), WeightFamily::ExponentialDecay(1.0, 2.0));
    assert_eq!(WeightFamily::parse("power:-0.5").unwrap(), WeightFamily::PowerOneMinus(-0.5));
    assert_eq!(WeightFamily::parse("family=standard alpha=0.5").unwrap(), WeightFamily::Standard(0.5));
    assert_eq!(WeightFamily::parse("family=log alpha=0 beta=1").unwrap(), WeightFamily::Logarithmic(0.0, 1.0));
    assert!(WeightFamily::parse("standard:-1").unwrap_err().is_config());
    assert!(WeightFamily::parse("bogus:1").is_err());
    assert!(WeightFamily::parse("family=standard beta=1").is_err());
    for w in builtin_family() {
        assert_eq!(WeightFamily::parse(&w.id()).unwrap(), *w.family());
    }
}

#[test]
fn parse_tabulated_csv() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "r,omega\n0.0,1.0\n0.5,1.0\n0.9,1.0").unwrap();
    let path = f.path().display().to_string();
    let w = RadialWeight::parse(&format!("family=tabulated file={path}")).unwrap();
    assert_relative_eq!(w.tail(0.25).unwrap(), 0.75, max_relative = 1e-14);
    let w = RadialWeight::parse(&format!("tabulated:{path}")).unwrap();
    assert_relative_eq!(w.moment(1.0).unwrap(), 0.5, max_relative = 1e-10);

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "x,y\n0.0,1.0").unwrap();
    assert!(RadialWeight::parse(&format!("tabulated:{}", bad.path().display())).is_err());
}

#[test]
fn dhat_scan_verdicts() {
    let s = Schedule::default();
    let c = classify_dhat(&RadialWeight::constant(1.0), s).unwrap();
    assert_eq!(c.verdict, ClassVerdict::Member);
    assert_relative_eq!(c.witness_ratio, 2.0, max_relative = 1e-12);
    for alpha in [-0.5, 0.0, 1.0] {
        let r = classify_dhat(&RadialWeight::standard(alpha), s).unwrap();
        assert_eq!(r.verdict, ClassVerdict::Member);
        let limit = r.samples.last().unwrap().1;
        assert_relative_eq!(limit, 2f64.powf(alpha + 1.0), max_relative = 1e-9);
        assert!(r.witness_ratio >= limit * (1.0 - 1e-12));
    }
    let e = classify_dhat(&RadialWeight::exponential(1.0, 1.0), s).unwrap();
    assert_eq!(e.verdict, ClassVerdict::NonMember);
}

#[test]
fn moment_scan_verdicts_agree_with_tail_scan() {
    let c = classify_dhat_moments(&RadialWeight::constant(1.0), 160).unwrap();
    assert_eq!(c.verdict, ClassVerdict::Member);
    assert_relative_eq!(c.samples.last().unwrap().1, 2.0, max_relative = 1e-12);
    for w in builtin_family() {
        let a = classify_dhat(&w, Schedule::default()).unwrap().verdict;
        let b = classify_dhat_moments(&w, 160).unwrap().verdict;
        assert_eq!(a, b, "{w}");
        assert_ne!(a, ClassVerdict::Inconclusive, "{w}");
    }
    assert_eq!(
        classify_dhat_moments(&RadialWeight::standard(0.0), 160).unwrap().verdict,
        ClassVerdict::Member
    );
}

#[test]
fn moment_tail_equivalence_bands() {
    let c = check_moment_tail_equiv(&RadialWeight::constant(1.0), Schedule::new(40)).unwrap();
    assert!(c.stable);
    assert!(c.ratio_min >= 0.5 - 1e-12 && c.ratio_max < 1.0);
    let s = check_moment_tail_equiv(&RadialWeight::standard(1.0), Schedule::new(16)).unwrap();
    assert!(s.stable);
    // oracle band: Beta moments over the exact tail 2u^2 - 2u^3/3 at u = 1/x
    let oracle: Vec<f64> = (0..=64)
        .map(|i| {
            let x = (i as f64 / 4.0).exp2();
            let u = 1.0 / x;
            (standard_moment_oracle(1.0, x) - (2.0 * u * u - 2.0 * u.powi(3) / 3.0).ln()).exp()
        })
        .collect();
    let lo = oracle.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = oracle.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_relative_eq!(s.ratio_min, lo, max_relative = 1e-9);
    assert_relative_eq!(s.ratio_max, hi, max_relative = 1e-9);
    let e = check_moment_tail_equiv(&RadialWeight::exponential(1.0, 1.0), Schedule::new(40)).unwrap();
    assert!(!e.stable);
}

#[test]
fn lower_doubling_scans() {
    let s = Schedule::default();
    let c = classify_dcheck(&RadialWeight::constant(1.0), s, &[2.0]).unwrap();
    assert_eq!(c.verdict, ClassVerdict::Member);
    assert_relative_eq!(c.witness_ratio, 2.0, max_relative = 1e-12);
    let e = classify_dcheck(&RadialWeight::exponential(1.0, 1.0), s, &DEFAULT_K_CANDIDATES).unwrap();
    assert_eq!(e.verdict, ClassVerdict::Member);
    for alpha in [-0.5, 0.0, 1.0, 2.0] {
        let w = RadialWeight::standard(alpha);
        let m = classify_m(&w, s, &[2.0]).unwrap();
        assert_eq!(m.verdict, ClassVerdict::Member);
        assert_relative_eq!(m.samples.last().unwrap().1, 2f64.powf(alpha + 1.0), max_relative = 1e-6);
        assert_eq!(classify_dcheck(&w, s, &DEFAULT_K_CANDIDATES).unwrap().verdict, ClassVerdict::Member);
        assert_eq!(classify_d(&w, s).unwrap(), ClassVerdict::Member);
    }
}

#[test]
fn slowly_varying_tail_is_not_lower_doubling() {
    // omega_hat = (1 - ln u)^-1: ratios tend to 1 for every K
    let w = RadialWeight::logarithmic(-1.0, -2.0);
    let r = classify_dcheck(&w, Schedule::default(), &DEFAULT_K_CANDIDATES).unwrap();
    assert_eq!(r.verdict, ClassVerdict::Inconclusive);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn standard_tail_strictly_decreasing(alpha in -0.9f64..3.0, r in 0.0f64..0.99, dr in 1e-6f64..0.01) {
        let w = RadialWeight::standard(alpha);
        prop_assert!(w.tail(r + dr).unwrap() < w.tail(r).unwrap());
    }

    #[test]
    fn moments_nonincreasing(alpha in -0.9f64..3.0, x in 0.0f64..1e4, dx in 0.1f64..100.0) {
        let w = RadialWeight::standard(alpha);
        prop_assert!(w.moment(x + dx).unwrap() <= w.moment(x).unwrap());
    }
}

#[test]
fn exponential_tail_substitution_matches_plain_quadrature() {
    for (c, k) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)] {
        let w = RadialWeight::exponential(c, k);
        for t in [0.0, 0.3, 0.7, 0.9] {
            let at = At::t(t);
            let plain = log_integrate_to_one(|p| w.ln_density(p), at, &w.quad_opts()).unwrap();
            assert!((w.ln_tail_direct(at).unwrap() - plain).abs() < 1e-10, "({c},{k}) t={t}");
        }
    }
}
