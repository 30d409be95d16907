use proptest::prelude::*;

use robust_dividend::closed_form::{solve, RegimeTag};
use robust_dividend::model::{canonicalize, existence_condition, ModelParams, RawParams};
use robust_dividend::psi::{build_psi, find_gamma1, PsiVariant};

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

prop_compose! {
    fn raw_params()(
        mu1 in log_uniform(0.1, 10.0),
        mu2 in log_uniform(0.1, 10.0),
        sigma1 in log_uniform(0.1, 5.0),
        sigma2 in log_uniform(0.1, 5.0),
        rho in -0.95..0.95f64,
        delta in log_uniform(0.05, 5.0),
        a1 in 0.05..0.95f64,
        beta1 in log_uniform(0.01, 20.0),
        beta2 in log_uniform(0.01, 20.0),
    ) -> RawParams {
        RawParams { mu1, mu2, sigma1, sigma2, rho, delta, a1, a2: None, beta1, beta2 }
    }
}

fn params() -> impl Strategy<Value = ModelParams> {
    raw_params().prop_map(|r| r.validate().unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn relabeling_is_an_involution(p in params()) {
        prop_assert_eq!(p.swap_lines().swap_lines(), p);
        let (c, _) = canonicalize(&p);
        prop_assert!(c.a1 <= c.a2);
        prop_assert_eq!(canonicalize(&c), (c, false));
        prop_assert_eq!(canonicalize(&p.swap_lines()).0, if p.a1 == p.a2 { p.swap_lines() } else { c });
    }

    #[test]
    fn existence_matches_general_roots(p in params()) {
        let (c, _) = canonicalize(&p);
        let roots = find_gamma1(&c, PsiVariant::General).unwrap();
        prop_assert_eq!(!roots.is_empty(), existence_condition(&c), "roots {:?}", roots);
        prop_assert!(roots.iter().all(|g| *g > 0.0 && *g < 1.0));
    }

    #[test]
    fn psi_end_values(p in params()) {
        let psi = build_psi(&p, PsiVariant::General);
        let q = 1.0 - p.rho * p.rho;
        let ss = p.sigma1 * p.sigma2;
        let at0 = -2.0 * p.delta * ss * ss * q * q;
        prop_assert!(rel(psi.eval(0.0), at0) < 1e-12);
        let bp = p.beta1 * p.beta2;
        let at1 = bp * (p.beta2 * (p.mu1 * p.sigma2).powi(2) + p.beta1 * (p.mu2 * p.sigma1).powi(2))
            - 2.0 * p.delta * ss * ss * bp * bp;
        prop_assert!(rel(psi.eval(1.0), at1) < 1e-9 || (psi.eval(1.0) - at1).abs() < 1e-9 * psi.scale());
        if at1.abs() > 1e-9 * psi.scale() {
            prop_assert_eq!(at1 > 0.0, existence_condition(&p));
        }
    }

    #[test]
    fn psi_is_label_symmetric(p in params()) {
        let s = p.swap_lines();
        prop_assert_eq!(build_psi(&p, PsiVariant::General).coeffs, build_psi(&s, PsiVariant::General).coeffs);
        prop_assert_eq!(build_psi(&p, PsiVariant::Line1Ceded).coeffs, build_psi(&s, PsiVariant::Line2Ceded).coeffs);
    }

    #[test]
    fn basis_and_monomial_forms_agree(p in params(), z in 0.0..1.0f64) {
        let psi = build_psi(&p, PsiVariant::General);
        prop_assert!((psi.eval(z) - psi.eval_monomial(z)).abs() <= 1e-11 * psi.scale());
    }

    #[test]
    fn time_rescaling_leaves_the_solution_unchanged(raw in raw_params(), c in log_uniform(0.1, 10.0)) {
        let scaled = RawParams {
            mu1: raw.mu1 * c,
            mu2: raw.mu2 * c,
            sigma1: raw.sigma1 * c.sqrt(),
            sigma2: raw.sigma2 * c.sqrt(),
            delta: raw.delta * c,
            ..raw
        };
        let (a, b) = (solve(&raw.validate().unwrap()), solve(&scaled.validate().unwrap()));
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert_eq!(a.tag(), b.tag());
            if let (Some(ga), Some(gb)) = (a.gamma1(), b.gamma1()) {
                prop_assert!(rel(ga, gb) < 1e-8, "{} {}", ga, gb);
            }
            prop_assert!(rel(a.w0(), b.w0()) < 1e-7, "{} {}", a.w0(), b.w0());
            prop_assert!(rel(a.bstar, b.bstar) < 1e-7, "{} {}", a.bstar, b.bstar);
        }
    }

    #[test]
    fn value_function_shape(p in params()) {
        let Ok(sol) = solve(&p) else { return Ok(()) };
        if sol.is_degenerate() {
            prop_assert_eq!(sol.bstar, 0.0);
            prop_assert!((sol.value_g(2.0) - 2.0 * sol.params.a2).abs() < 1e-12);
            return Ok(());
        }
        let (b, w0, a2) = (sol.bstar, sol.w0(), sol.params.a2);
        prop_assert!(w0 > 0.0 && w0 < b, "w0 {} b* {}", w0, b);
        prop_assert_eq!(sol.value_g(0.0), 0.0);
        prop_assert!(rel(sol.g_prime(b), a2) < 1e-8);
        let n = 400;
        let xs: Vec<f64> = (1..=n).map(|k| 1.5 * b * k as f64 / n as f64).collect();
        let mut prev = 0.0;
        for &x in &xs {
            let (g, gp, gpp) = sol.g_all(x);
            prop_assert!(g > prev, "g not increasing at {}", x);
            prop_assert!(gp >= a2 * (1.0 - 1e-9), "g' = {} below a2 at {}", gp, x);
            prop_assert!(gpp <= 1e-9 * g, "g'' = {} at {}", gpp, x);
            prev = g;
        }
        let s_lo = sol.strategy(0.5 * w0).unwrap();
        let s_lo2 = sol.strategy(0.25 * w0).unwrap();
        prop_assert!(rel(s_lo.entropy_rate, s_lo2.entropy_rate) < 1e-9);
        let s_hi = sol.strategy(0.5 * (w0 + b)).unwrap();
        let s_hi2 = sol.strategy(2.0 * b).unwrap();
        prop_assert_eq!((s_hi.pi1, s_hi.pi2), (s_hi2.pi1, s_hi2.pi2));
        prop_assert!(s_hi.pi1.max(s_hi.pi2) == 1.0 || sol.tag() != RegimeTag::GeneralInteriorNeq);
        for s in [s_lo, s_hi] {
            prop_assert!((0.0..=1.0).contains(&s.pi1) && (0.0..=1.0).contains(&s.pi2));
            prop_assert!(s.entropy_rate >= 0.0);
        }
        prop_assert!(s_hi.entropy_rate >= s_hi2.entropy_rate);
    }
}

#[test]
fn existence_boundary_deflates() {
    // delta exactly at mu1^2/(2 b1 s1^2) + mu2^2/(2 b2 s2^2): psi(1) = 0
    let base = RawParams::base();
    let edge = 16.0 / 4.5 + 2.0;
    let at = RawParams { delta: edge, ..base }.validate().unwrap();
    let psi = build_psi(&at, PsiVariant::General);
    assert!(psi.eval(1.0).abs() <= 1e-12 * psi.scale());
    assert!(!existence_condition(&at));
    assert!(find_gamma1(&at, PsiVariant::General).unwrap().is_empty());
    let inside = RawParams {
        delta: edge * (1.0 - 1e-6),
        ..base
    }
    .validate()
    .unwrap();
    let roots = find_gamma1(&inside, PsiVariant::General).unwrap();
    assert_eq!(roots.len(), 1);
    assert!(roots[0] > 0.99, "{roots:?}");
}
